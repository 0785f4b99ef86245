"""Time-stepped simulation kernel.

One tick runs the hooks in a fixed order: failures, beacons, mobility,
contact detection, re-clustering (when due), message generation, routing,
energy accounting, learning, metric sampling. Every random draw comes from
one of four named streams so that changing one concern (say, traffic) does
not perturb another (mobility).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import ac_learn, clustering, mobility, network, routing
from .ac_learn import AcModel, Experience, NonFiniteGradient, ReplayBuffer, RewardInputs
from .config import Protocol, ScenarioConfig, validate
from .mobility import Bounds, MobilityAgent
from .network import LinkTracker, NeighborTable, Role
from .node_state import EncounterTracker, EnergyLedger, Message, MessageBuffer, drain_energy, recharge
from .routing import BufferRejected, ForwardDecision, Rule

STREAMS = ("mobility", "traffic", "failures", "learning")


class SimulationDiverged(RuntimeError):
    pass


@dataclass
class NodeState:
    id: int
    x: float
    y: float
    agent: MobilityAgent | None
    energy: EnergyLedger
    buffer: MessageBuffer
    encounters: EncounterTracker = field(default_factory=EncounterTracker)
    neighbors: NeighborTable = None  # type: ignore[assignment]
    alive: bool = True
    failed: bool = False
    role: Role = Role.UNCLUSTERED
    own_cluster: int | None = None
    primary_cluster: int | None = None
    primary_head: int | None = None
    cluster_ids: set[int] = field(default_factory=set)
    heads: set[int] = field(default_factory=set)
    known_head: int | None = None
    next_msg_tick: int = 0
    received: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.neighbors is None:
            self.neighbors = NeighborTable(self.id)


@dataclass
class MessageStatus:
    src: int
    dst: int
    size: int
    created_s: float
    status: str = "in_buffer"  # delivered | expired | dropped | in_buffer
    copies: int = 1


@dataclass
class EpochCounters:
    start_tick: int = 0
    generated: int = 0
    delivered: int = 0
    delivered_bytes: int = 0
    delay_sum: float = 0.0


class WorldState:
    def __init__(self, cfg: ScenarioConfig, nodes: list[NodeState], rngs: dict[str, np.random.Generator]):
        self.cfg = cfg
        self.nodes = nodes
        self.rng = rngs
        self.now_ticks = 0
        self.now_s = 0.0
        self.total_ticks = cfg.ticks(cfg.sim_duration_s)
        self.clusters: dict[int, clustering.Cluster] = {}
        self.bridges: dict[int, set[int]] = {}
        self.next_cluster_id = 0
        self.epoch = 0
        self.next_recluster_tick = 0
        self.ledger: dict[int, MessageStatus] = {}
        self.next_msg_id = 0
        self.event_log: list[dict[str, Any]] = []
        self.bounds = Bounds(cfg.area_width_m, cfg.area_height_m)
        n = len(nodes)
        self.adj = np.zeros((n, n), dtype=bool)
        self.contacts = np.zeros((n, n), dtype=bool)
        self.links = LinkTracker(cfg.reliability_horizon_s)
        self.failures_applied = False
        self.budget = np.zeros(n)
        self.sync_marks: dict[tuple[int, int], tuple[int, int]] = {}
        # learning
        self.model: AcModel | None = None
        self.replay = ReplayBuffer(cfg.replay_capacity)
        self.pending: tuple | None = None  # (state, actions, mask) of the running epoch
        self.transition: Experience | None = None
        self.epoch_stats = EpochCounters()
        self.episode_rewards: list[float] = []

    # -- time ---------------------------------------------------------------

    def advance(self) -> None:
        self.now_ticks += 1
        self.now_s = self.t_of(self.now_ticks)

    def t_of(self, ticks: int) -> float:
        return round(ticks * self.cfg.tick_s, 9)

    # -- helpers ------------------------------------------------------------

    def log(self, kind: str, **fields: Any) -> None:
        rec = {"t": self.now_s, "kind": kind}
        rec.update(fields)
        self.event_log.append(rec)

    def positions(self) -> np.ndarray:
        return np.array([[n.x, n.y] for n in self.nodes], dtype=float).reshape(len(self.nodes), 2)

    def alive_mask(self) -> np.ndarray:
        return np.array([n.alive for n in self.nodes], dtype=bool)

    def alive_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.alive]

    def refresh_adjacency(self) -> np.ndarray:
        xy = self.positions()
        ranges = network.effective_ranges(self, self.cfg, xy)
        self.adj = network.reach_matrix(xy, ranges, self.alive_mask())
        return self.adj

    def has_message(self, node_id: int, msg_id: int, dst: int) -> bool:
        node = self.nodes[node_id]
        if msg_id in node.buffer:
            return True
        return node_id == dst and msg_id in node.received

    # -- message lifecycle --------------------------------------------------

    def _lose_copy(self, msg_id: int, reason: str) -> None:
        st = self.ledger[msg_id]
        st.copies -= 1
        if st.copies <= 0 and st.status == "in_buffer":
            st.status = reason
            self.log(reason, msg=msg_id)

    def kill_node(self, node: NodeState, cause: str) -> None:
        if not node.alive:
            return
        node.alive = False
        if cause == "failure":
            node.failed = True
        for m in node.buffer.clear():
            self._lose_copy(m.id, "dropped")
        self.log("death", node=node.id, cause=cause, epoch=self.epoch)

    def transfer(self, d: ForwardDecision, msg: Message, move: bool) -> bool:
        """Apply one physical transfer; ``move`` removes the sender's copy (single-copy routing)."""
        cfg = self.cfg
        snd, rcv = self.nodes[d.frm], self.nodes[d.to]
        if not (snd.alive and rcv.alive) or msg.id not in snd.buffer:
            return False
        if self.has_message(rcv.id, msg.id, msg.dst):
            return False
        if msg.hops >= cfg.hop_limit:
            return False
        size = msg.size_bytes
        if self.budget[snd.id] < size or self.budget[rcv.id] < size:
            return False
        delivered = rcv.id == msg.dst
        new = msg.copy()
        new.hops += 1
        if not delivered:
            if not rcv.buffer.fits(size):
                raise BufferRejected(f"node {rcv.id} buffer full")
            if rcv.role is Role.HEAD and rcv.own_cluster not in new.visited_clusters:
                new.visited_clusters.append(rcv.own_cluster)
            rcv.buffer.enqueue(new)
        self.budget[snd.id] -= size
        self.budget[rcv.id] -= size
        secs = size / cfg.link_rate_Bps
        drain_energy(snd.energy, cfg.tx_drain_per_s, secs)
        drain_energy(rcv.energy, cfg.rx_drain_per_s, secs)
        st = self.ledger[msg.id]
        if move:
            snd.buffer.remove(msg.id)
            if delivered:
                st.copies -= 1
        elif not delivered:
            st.copies += 1
        self.log("xfer", msg=msg.id, frm=snd.id, to=rcv.id, rule=d.rule.value, hops=new.hops)
        if delivered:
            rcv.received.add(msg.id)
            if st.status == "in_buffer":
                st.status = "delivered"
                delay = self.now_s - st.created_s
                self.log("deliver", msg=msg.id, hops=new.hops, delay=delay, size=size)
                self.epoch_stats.delivered += 1
                self.epoch_stats.delivered_bytes += size
                self.epoch_stats.delay_sum += delay
        return True


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def make_rngs(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


def build_world(cfg: ScenarioConfig, positions=None, static: bool = False,
                model: AcModel | None = None) -> WorldState:
    """Fresh world at t=0 (nodes placed, nothing clustered yet)."""
    validate(cfg)
    rngs = make_rngs(cfg.seed)
    n = cfg.node_count
    agents, pos = mobility.assign_mobility(n, cfg, rngs["mobility"])
    if positions is not None:
        pos = [tuple(map(float, p)) for p in positions]
    tr = rngs["traffic"]
    nodes = []
    mean_size = 0.5 * (cfg.msg_size_bytes[0] + cfg.msg_size_bytes[1])
    for i in range(n):
        cap = float(tr.uniform(*cfg.buffer_bytes))
        node = NodeState(
            id=i, x=pos[i][0], y=pos[i][1], agent=None if static else agents[i],
            energy=EnergyLedger.full(cfg.initial_energy),
            buffer=MessageBuffer(cap, mean_size),
        )
        node.next_msg_tick = cfg.ticks(float(tr.uniform(*cfg.msg_interval_s)))
        nodes.append(node)
    world = WorldState(cfg, nodes, rngs)
    if cfg.protocol is Protocol.CRDRL:
        world.model = model if model is not None else AcModel.create(
            n, cfg.hidden_units, rngs["learning"], gamma=cfg.gamma, alpha_actor=cfg.alpha_actor,
            alpha_critic=cfg.alpha_critic, entropy_coeff=cfg.entropy_coeff,
            grad_clip_norm=cfg.grad_clip_norm, lr_window=cfg.lr_window, lr_decay=cfg.lr_decay,
            lr_min=cfg.lr_min)
    return world


def initialize(world: WorldState) -> WorldState:
    """t=0 bookkeeping: first adjacency, first beacons, first clustering."""
    world.log("start", nodes=len(world.nodes), protocol=world.cfg.protocol.value, seed=world.cfg.seed)
    world.refresh_adjacency()
    network.emit_beacons(world, world.cfg, world.adj, True, True)
    if world.cfg.protocol is Protocol.CRDRL:
        recluster(world, cause="initial")
        world.refresh_adjacency()
    else:
        world.next_recluster_tick = world.cfg.ticks(world.cfg.recluster_period_s)
    sample_metrics(world)
    return world


# ---------------------------------------------------------------------------
# hooks
# ---------------------------------------------------------------------------

def apply_failures(world: WorldState, cfg: ScenarioConfig) -> WorldState:
    """Deactivate floor(fraction * N) alive nodes at the first tick inside the failure window."""
    if world.failures_applied:
        return world
    lo, hi = cfg.failure_window_s
    t = world.now_s
    if t < lo - 1e-9 or t > hi + 1e-9:
        return world
    world.failures_applied = True
    k = int(math.floor(cfg.failure_fraction * cfg.node_count + 1e-9))
    alive = world.alive_ids()
    k = min(k, len(alive))
    if k == 0:
        return world
    chosen = world.rng["failures"].choice(np.array(alive), size=k, replace=False)
    for i in sorted(int(c) for c in chosen):
        world.kill_node(world.nodes[i], "failure")
    world.log("failure", nodes=sorted(int(c) for c in chosen))
    return world


def move_nodes(world: WorldState) -> None:
    dt = world.cfg.tick_s
    rng = world.rng["mobility"]
    for node in world.nodes:
        if node.agent is None or not node.alive:
            continue
        node.x, node.y = mobility.update_position(node.agent, (node.x, node.y), dt, rng, world.bounds)


def detect_contacts(world: WorldState) -> np.ndarray:
    """Recompute reachability; count each contact once, at the tick it starts."""
    cfg = world.cfg
    adj = world.refresh_adjacency()
    started = adj & ~world.contacts
    ended = world.contacts & ~adj
    t = world.now_s
    for i, j in zip(*np.nonzero(np.triu(started, 1))):
        world.links.contact_started(int(i), int(j), t)
    for i, j in zip(*np.nonzero(np.triu(ended, 1))):
        world.links.contact_ended(int(i), int(j), t)
    counts = started.sum(axis=1)
    for node in world.nodes:
        if counts[node.id]:
            node.encounters.record_encounter(int(counts[node.id]))
    world.contacts = adj.copy()
    if world.now_ticks % cfg.ticks(cfg.encounter_window_s) == 0:
        for node in world.nodes:
            node.encounters.roll_window(cfg.lambda_, t)
    return started


def inject_message(world: WorldState, src: int, dst: int, size: int) -> Message:
    """Create a message at ``src`` now; it is dropped at once if the source buffer is full."""
    node = world.nodes[src]
    mid = world.next_msg_id
    world.next_msg_id += 1
    msg = Message(mid, src, dst, size, world.now_s, world.cfg.msg_ttl_s)
    e = node.neighbors.entries.get(dst)
    if e is not None:
        msg.dst_hint, msg.dst_hint_s = (e.x, e.y), e.last_beacon_s
    if node.role is Role.HEAD:
        msg.visited_clusters.append(node.own_cluster)
    world.ledger[mid] = MessageStatus(src, dst, size, world.now_s)
    world.epoch_stats.generated += 1
    world.log("gen", msg=mid, src=src, dst=dst, size=size)
    if not node.buffer.enqueue(msg):
        world._lose_copy(mid, "dropped")
    return msg


def generate_messages(world: WorldState) -> None:
    cfg = world.cfg
    rng = world.rng["traffic"]
    n = len(world.nodes)
    for node in world.nodes:
        if not node.alive or world.now_ticks < node.next_msg_tick:
            continue
        node.next_msg_tick = world.now_ticks + cfg.ticks(float(rng.uniform(*cfg.msg_interval_s)))
        if n < 2:
            continue
        dst = int(rng.integers(n - 1))
        dst += dst >= node.id
        size = int(round(rng.uniform(*cfg.msg_size_bytes)))
        inject_message(world, node.id, dst, size)


def route(world: WorldState) -> None:
    for node in world.nodes:
        if node.alive:
            for m in node.buffer.expire_ttl(world.now_s):
                world._lose_copy(m.id, "expired")
    world.budget[:] = world.cfg.link_rate_Bps * world.cfg.tick_s
    if world.cfg.protocol is Protocol.CRDRL:
        routing.route_tick_crdrl(world)
    else:
        routing.route_tick_epidemic(world)


def account_energy(world: WorldState) -> None:
    cfg = world.cfg
    recharged = []
    interval_ticks = cfg.ticks(cfg.recharge_interval_s)
    due = world.now_ticks % interval_ticks == 0
    for node in world.nodes:
        if not node.alive:
            continue
        drain_energy(node.energy, cfg.scan_drain_per_s, cfg.tick_s)
        if node.energy.depleted:
            world.kill_node(node, "energy")
            continue
        if due and recharge(node.energy, world.now_s, cfg.recharge_interval_s - 1e-9):
            recharged.append(node.id)
    if recharged:
        world.log("recharge", nodes=recharged)


# ---------------------------------------------------------------------------
# clustering lifecycle and learning
# ---------------------------------------------------------------------------

def epoch_reward(world: WorldState) -> RewardInputs:
    cfg = world.cfg
    st = world.epoch_stats
    length = max(cfg.tick_s, (world.now_ticks - st.start_tick) * cfg.tick_s)
    if st.generated:
        mu = min(1.0, st.delivered / st.generated)
    else:
        mu = 1.0 if st.delivered else 0.0
    thr = min(1.0, st.delivered_bytes / (cfg.link_rate_Bps * length))
    delay = min(1.0, (st.delay_sum / st.delivered) / cfg.msg_ttl_s) if st.delivered else 1.0
    return RewardInputs(mu, thr, delay, tuple(cfg.reward_weights))


def head_died(world: WorldState) -> bool:
    return any(not world.nodes[c.head].alive for c in world.clusters.values())


def recluster_if_due(world: WorldState, cfg: ScenarioConfig) -> WorldState:
    """Re-elect on the period boundary, or at once when a head has died; never on the final tick."""
    if world.now_ticks >= world.total_ticks:
        return world
    if cfg.protocol is not Protocol.CRDRL:
        # no clusters, but keep the same round clock for the lifetime markers
        if world.now_ticks >= world.next_recluster_tick:
            world.next_recluster_tick = world.now_ticks + cfg.ticks(cfg.recluster_period_s)
            world.log("round", energy=[n.energy.current for n in world.nodes])
        return world
    if world.now_ticks >= world.next_recluster_tick:
        recluster(world, cause="period")
        world.refresh_adjacency()
    elif head_died(world):
        recluster(world, cause="head_death")
        world.refresh_adjacency()
    return world


def _close_epoch(world: WorldState, next_state: np.ndarray, terminal: bool) -> None:
    if world.pending is None:
        return
    s, actions, mask = world.pending
    inputs = epoch_reward(world)
    r = ac_learn.compute_reward(inputs)
    world.transition = Experience(s, tuple(actions), mask, r, next_state, terminal)
    world.log("reward", epoch=world.epoch, reward=r, mu=inputs.delivery_ratio,
              thr=inputs.throughput_norm, delay=inputs.delay_norm,
              generated=world.epoch_stats.generated, delivered=world.epoch_stats.delivered)
    world.pending = None


def install_clusters(world: WorldState, heads: list[int], radius: float,
                     dist: np.ndarray | None = None) -> list[clustering.Cluster]:
    """Form clusters around ``heads`` and set every node's role and memberships."""
    if dist is None:
        dist = network.pairwise_manhattan(world.positions())
    clusters, primary = clustering.form_clusters(heads, world.alive_ids(), dist, radius,
                                                 world.next_cluster_id, world.now_s)
    world.next_cluster_id += len(clusters)
    world.bridges = clustering.identify_common_members(clusters)
    world.clusters = {c.id: c for c in clusters}

    head_of = {c.id: c.head for c in clusters}
    for node in world.nodes:
        node.cluster_ids = set()
        node.heads = set()
        node.role = Role.UNCLUSTERED
        node.own_cluster = node.primary_cluster = node.primary_head = None
    for c in clusters:
        for m in c.members:
            world.nodes[m].cluster_ids.add(c.id)
            world.nodes[m].heads.add(c.head)
        h = world.nodes[c.head]
        h.role, h.own_cluster = Role.HEAD, c.id
        h.cluster_ids, h.heads = {c.id}, {c.head}
        h.primary_cluster, h.primary_head = c.id, c.head
    for v, cid in primary.items():
        node = world.nodes[v]
        if node.role is not Role.HEAD:
            node.role = Role.MEMBER
            node.primary_cluster, node.primary_head = cid, head_of[cid]
    # cluster ids are epoch-scoped: forget where messages have been
    for node in world.nodes:
        for m in node.buffer:
            m.visited_clusters = [node.own_cluster] if node.role is Role.HEAD else []
    return clusters


def recluster(world: WorldState, cause: str) -> None:
    """Close the running epoch and elect a fresh cluster structure."""
    cfg = world.cfg
    state = ac_learn.build_state(world)
    if world.epoch > 0:
        _close_epoch(world, state.values, terminal=False)

    alive = world.alive_ids()
    cands = clustering.candidate_filter(world.nodes, cfg.energy_threshold_frac)
    radius = clustering.cluster_radius(len(alive), cfg)
    xy = world.positions()
    dist = network.pairwise_manhattan(xy)
    greedy = cfg.learning_mode == "eval"
    try:
        heads = clustering.select_cluster_heads(world.model, state, cands, alive, dist, radius,
                                                greedy=greedy, rng=world.rng["learning"])
    except ac_learn.NoCandidates:
        heads = []
    clusters = install_clusters(world, heads, radius, dist)
    world.epoch += 1
    world.next_recluster_tick = world.now_ticks + cfg.ticks(cfg.recluster_period_s)
    world.epoch_stats = EpochCounters(start_tick=world.now_ticks)
    covered = all(any(dist[v, h] <= radius + 1e-9 for h in heads) for v in alive) if alive else True
    exhausted = len(heads) == len(cands)
    world.log(
        "epoch", epoch=world.epoch, cause=cause, radius=radius, heads=list(heads),
        candidates=len(cands), covered=covered, exhausted=exhausted,
        head_energy=[world.nodes[h].energy.current / world.nodes[h].energy.initial for h in heads],
        clusters=[[c.id, c.head, sorted(c.members), sorted(c.common_members)] for c in clusters],
        positions=[[float(p[0]), float(p[1])] for p in xy],
        alive=[int(a) for a in world.alive_mask()],
        primary_head=[n.primary_head for n in world.nodes],
        energy=[n.energy.current for n in world.nodes],
        failed=[n.id for n in world.nodes if n.failed],
    )
    if heads:
        mask = np.zeros(len(world.nodes), dtype=bool)
        mask[cands] = True
        world.pending = (state.values, list(heads), mask)


def learn(world: WorldState) -> None:
    """Consume the transition closed this tick: on-policy step, replayed minibatch, rate schedule."""
    e = world.transition
    if e is None:
        return
    world.transition = None
    world.episode_rewards.append(e.r)
    cfg = world.cfg
    stats = None
    if cfg.learning_mode == "train":
        world.replay.push(e)
        try:
            stats = ac_learn.learn_from(world.model, [e])
            if len(world.replay) >= cfg.replay_batch_size:
                ac_learn.learn_from(world.model, world.replay.sample(cfg.replay_batch_size, world.rng["learning"]))
        except NonFiniteGradient as exc:
            raise SimulationDiverged(str(exc)) from exc
        ac_learn.adapt_learning_rate(world.model.lr, world.episode_rewards)
    else:
        v_s = ac_learn.critic_forward(world.model, e.s)
        v_n = 0.0 if e.terminal else ac_learn.critic_forward(world.model, e.s_next)
        delta = ac_learn.td_error(e.r, v_s, v_n, world.model.gamma, e.terminal)
        loss = ac_learn.actor_loss(world.model, e.s, e.a, e.mask, delta)
        stats = ac_learn.LearnStats(loss, 0.5 * delta * delta, delta)
    if not world.model.all_finite():
        raise SimulationDiverged("non-finite learner parameter")
    world.log("learn", episode=len(world.episode_rewards), reward=e.r,
              policy_loss=stats.policy_loss, value_loss=stats.value_loss, td=stats.td,
              alpha_actor=world.model.alpha_actor, alpha_critic=world.model.alpha_critic,
              terminal=e.terminal)


def sample_metrics(world: WorldState) -> None:
    alive = world.alive_mask()
    phys = world.adj
    logical = network.logical_adjacency(phys, world.clusters.values()) if world.clusters else phys
    n_alive = int(alive.sum())
    rec = {
        "alive": n_alive,
        "energy": float(np.mean([n.energy.current / n.energy.initial for n in world.nodes])),
        "phys_parts": network.partitions(phys, alive),
        "logic_parts": network.partitions(logical, alive),
        "phys_conn": network.connectivity_ratio(phys, alive) if n_alive >= 2 else None,
        "logic_conn": network.connectivity_ratio(logical, alive) if n_alive >= 2 else None,
        "clusters": len(world.clusters),
    }
    world.log("sample", **rec)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def step(world: WorldState, cfg: ScenarioConfig | None = None) -> WorldState:
    cfg = cfg or world.cfg
    world.advance()
    apply_failures(world, cfg)
    node_beacon = world.now_ticks % cfg.ticks(cfg.node_beacon_period_s) == 0
    ch_beacon = world.now_ticks % cfg.ticks(cfg.ch_beacon_period_s) == 0
    network.emit_beacons(world, cfg, world.adj, node_beacon, ch_beacon)
    move_nodes(world)
    detect_contacts(world)
    recluster_if_due(world, cfg)
    generate_messages(world)
    route(world)
    account_energy(world)
    if cfg.protocol is Protocol.CRDRL and head_died(world):
        # keep "every head is alive" true at tick boundaries
        recluster(world, cause="head_death")
        world.refresh_adjacency()
    learn(world)
    if world.now_ticks % cfg.ticks(cfg.sample_period_s) == 0:
        sample_metrics(world)
    return world


def finish(world: WorldState) -> None:
    """Close the final epoch as terminal and write the end-of-run record."""
    cfg = world.cfg
    if cfg.protocol is Protocol.CRDRL and world.pending is not None:
        _close_epoch(world, ac_learn.build_state(world).values, terminal=True)
        learn(world)
    in_buffer = sorted(mid for mid, st in world.ledger.items() if st.status == "in_buffer")
    world.log(
        "end",
        energy=[n.energy.current for n in world.nodes],
        initial=[n.energy.initial for n in world.nodes],
        drained=[n.energy.drained for n in world.nodes],
        recharged=[n.energy.recharged for n in world.nodes],
        in_buffer=in_buffer,
        max_buffer_fill=[n.buffer.used_bytes / n.buffer.capacity_bytes for n in world.nodes],
    )


def simulate(cfg: ScenarioConfig, model: AcModel | None = None) -> WorldState:
    validate(cfg)
    world = build_world(cfg, model=model)
    initialize(world)
    while world.now_ticks < world.total_ticks:
        step(world, cfg)
    finish(world)
    return world


def run_scenario(cfg: ScenarioConfig, model: AcModel | None = None):
    """Simulate ``cfg`` from t=0 to the end and return its MetricsReport."""
    from .metrics import compute_kpis

    world = simulate(cfg, model)
    return compute_kpis(world.event_log, cfg)
