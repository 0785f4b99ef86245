"""Message forwarding: cluster-based single-copy routing and the epidemic store-carry-forward baseline.

Decisions for a tick are planned from the start-of-tick snapshot and then
applied in node-id order. A transfer either completes fully (both buffers,
energy, hop count, event) or not at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .network import Role
from .node_state import Message


class Rule(str, Enum):
    TO_CH = "TO_CH"
    CH_DIRECT_DELIVER = "CH_DIRECT_DELIVER"
    CH_TO_COMMON = "CH_TO_COMMON"
    COMMON_TO_CH = "COMMON_TO_CH"
    SCF_FALLBACK = "SCF_FALLBACK"
    EPIDEMIC_COPY = "EPIDEMIC_COPY"


class NoRoute(Exception):
    """Nothing to do this tick; the holder keeps carrying the message."""


class NoBridge(NoRoute):
    pass


class BufferRejected(Exception):
    pass


@dataclass(frozen=True)
class ForwardDecision:
    msg_id: int
    frm: int
    to: int
    rule: Rule
    at_s: float


def loop_guard(msg: Message, next_cluster: int) -> bool:
    return next_cluster not in msg.visited_clusters


def _dist(world, node_id: int, point) -> float:
    n = world.nodes[node_id]
    return abs(n.x - point[0]) + abs(n.y - point[1])


def refresh_dst_hint(msg: Message, holder, world) -> tuple[float, float]:
    """Best position the holder can attach for the destination.

    A head knows its members' positions; otherwise a fresher neighbor-table
    entry replaces the piggybacked hint; with nothing known, the area centre.
    """
    dst = world.nodes[msg.dst]
    if holder.role is Role.HEAD and msg.dst in world.clusters[holder.own_cluster].members:
        msg.dst_hint, msg.dst_hint_s = (dst.x, dst.y), world.now_s
    else:
        e = holder.neighbors.entries.get(msg.dst)
        if e is not None and e.last_beacon_s > msg.dst_hint_s:
            msg.dst_hint, msg.dst_hint_s = (e.x, e.y), e.last_beacon_s
    if msg.dst_hint is None:
        cfg = world.cfg
        return (cfg.area_width_m / 2.0, cfg.area_height_m / 2.0)
    return msg.dst_hint


def choose_common_member(ch, msg: Message, world) -> int:
    """Common member of ``ch``'s cluster that bridges an unvisited cluster and sits closest to the destination."""
    cluster = world.clusters[ch.own_cluster]
    target = refresh_dst_hint(msg, ch, world)
    best = None
    for m in sorted(cluster.common_members):
        node = world.nodes[m]
        if not node.alive:
            continue
        if not any(c != cluster.id and loop_guard(msg, c) for c in node.cluster_ids):
            continue
        d = _dist(world, m, target)
        if best is None or d < best[0]:
            best = (d, m)
    if best is None:
        raise NoBridge(f"no bridge out of cluster {cluster.id} for message {msg.id}")
    return best[1]


def forward_crdrl(msg: Message, holder: int, world) -> ForwardDecision:
    """Next physical hop for a single-copy message, or NoRoute to keep carrying."""
    cfg, adj = world.cfg, world.adj
    node = world.nodes[holder]
    now = world.now_s
    if msg.hops >= cfg.hop_limit or msg.expired(now):
        raise NoRoute("hop limit or TTL reached")

    if node.role is Role.HEAD:
        if adj[holder, msg.dst]:
            return ForwardDecision(msg.id, holder, msg.dst, Rule.CH_DIRECT_DELIVER, now)
        if msg.dst in world.clusters[node.own_cluster].members:
            raise NoRoute("destination is a member but out of reach")
        bridge = choose_common_member(node, msg, world)
        if adj[holder, bridge]:
            return ForwardDecision(msg.id, holder, bridge, Rule.CH_TO_COMMON, now)
        raise NoRoute("bridge out of reach")

    if node.role is Role.MEMBER:
        open_clusters = [c for c in sorted(node.cluster_ids)
                         if loop_guard(msg, c) and world.nodes[world.clusters[c].head].alive]
        if not open_clusters:
            raise NoRoute("every cluster of this member was already visited")
        common = len(node.cluster_ids) >= 2
        if node.primary_cluster in open_clusters and (not msg.visited_clusters or not common):
            target, rule = node.primary_cluster, Rule.TO_CH
        elif common:
            hint = refresh_dst_hint(msg, node, world)
            target = min(open_clusters, key=lambda c: (_dist(world, world.clusters[c].head, hint),
                                                       world.clusters[c].head))
            rule = Rule.COMMON_TO_CH
        else:
            raise NoRoute("primary cluster already visited")
        head = world.clusters[target].head
        if adj[holder, head]:
            return ForwardDecision(msg.id, holder, head, rule, now)
        raise NoRoute("head out of reach")

    # unclustered: plain store-carry-forward toward the destination
    if adj[holder, msg.dst]:
        return ForwardDecision(msg.id, holder, msg.dst, Rule.SCF_FALLBACK, now)
    hint = refresh_dst_hint(msg, node, world)
    mine = _dist(world, holder, hint)
    best = None
    for nb in np.flatnonzero(adj[holder]).tolist():
        other = world.nodes[nb]
        if other.role is Role.HEAD and not loop_guard(msg, other.own_cluster):
            continue
        d = _dist(world, nb, hint)
        if d < mine and (best is None or d < best[0]):
            best = (d, nb)
    if best is None:
        raise NoRoute("no neighbor closer to the destination")
    return ForwardDecision(msg.id, holder, best[1], Rule.SCF_FALLBACK, now)


def forward_epidemic(msg: Message, holder: int, world) -> list[ForwardDecision]:
    """Copy to every in-range peer that lacks the message."""
    cfg, adj = world.cfg, world.adj
    if msg.hops >= cfg.hop_limit or msg.expired(world.now_s):
        return []
    out = []
    for peer in np.flatnonzero(adj[holder]).tolist():
        if world.has_message(peer, msg.id, msg.dst):
            continue
        out.append(ForwardDecision(msg.id, holder, peer, Rule.EPIDEMIC_COPY, world.now_s))
    return out


# ---------------------------------------------------------------------------
# per-tick drivers
# ---------------------------------------------------------------------------

def route_tick_crdrl(world) -> list[ForwardDecision]:
    plans: list[tuple[ForwardDecision, Message]] = []
    for node in world.nodes:
        if not node.alive or not len(node.buffer):
            continue
        for msg in node.buffer:
            try:
                plans.append((forward_crdrl(msg, node.id, world), msg))
            except NoRoute:
                continue
    applied = []
    for d, msg in plans:
        try:
            world.transfer(d, msg, move=True)
            applied.append(d)
        except BufferRejected:
            continue
    return applied


def route_tick_epidemic(world) -> list[ForwardDecision]:
    """Flood from the start-of-tick buffers.

    A (holder, peer) pair that was fully synchronised earlier is skipped
    until either buffer gains a message; this is what keeps flooding cheap.
    """
    cfg, adj, now = world.cfg, world.adj, world.now_s
    marks = world.sync_marks
    smallest = cfg.msg_size_bytes[0]
    snapshot = [(node, node.buffer.version, dict(node.buffer.slots))
                for node in world.nodes if node.alive and len(node.buffer)]
    applied = []
    for holder, ver, msgs in snapshot:
        for peer in np.flatnonzero(adj[holder.id]).tolist():
            if world.budget[holder.id] < smallest:
                break
            other = world.nodes[peer]
            key = (holder.id, peer)
            if marks.get(key) == (ver, other.buffer.version):
                continue
            missing = msgs.keys() - other.buffer.slots.keys()
            complete = True
            for mid in sorted(missing):
                msg = msgs[mid]
                if msg.hops >= cfg.hop_limit or msg.expired(now) or world.has_message(peer, mid, msg.dst):
                    continue
                if world.budget[peer] < smallest:
                    complete = False
                    break
                d = ForwardDecision(mid, holder.id, peer, Rule.EPIDEMIC_COPY, now)
                try:
                    done = world.transfer(d, msg, move=False)
                except BufferRejected:
                    done = False
                if done:
                    applied.append(d)
                else:
                    complete = False
            if complete:
                marks[key] = (ver, other.buffer.version)
    return applied
