"""KPIs computed purely from a run's event log.

Because the report is a function of the log alone, recomputing it from a
persisted trace reproduces the live report exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1

# flat CSV row; order is part of the schema
SCALAR_COLUMNS = (
    "schema_version", "protocol", "seed", "node_count", "sim_duration_s",
    "generated", "delivered", "expired", "dropped", "in_buffer",
    "delivery_ratio", "mean_e2e_delay_s", "mean_hops", "max_hops", "throughput_bps",
    "mean_residual_energy_frac", "fnd_round", "hnd_round",
    "ch_lifetime_mean_s", "member_lifetime_mean_s", "ch_change_rate",
    "acs", "iccc", "eccc", "mdsr", "epochs",
)

SERIES = (
    "alive_nodes_series", "residual_energy_series", "partitions_series",
    "logical_partitions_series", "connectivity_series", "logical_connectivity_series",
    "episode_rewards", "policy_loss_series", "value_loss_series",
)


class EmptyLog(ValueError):
    pass


@dataclass
class MetricsReport:
    protocol: str
    seed: int
    node_count: int
    sim_duration_s: float
    generated: int
    delivered: int
    expired: int
    dropped: int
    in_buffer: int
    delivery_ratio: float | None
    mean_e2e_delay_s: float | None
    mean_hops: float | None
    max_hops: int
    throughput_bps: float
    mean_residual_energy_frac: float
    fnd_round: int | None
    hnd_round: int | None
    ch_lifetime_mean_s: float | None
    member_lifetime_mean_s: float | None
    ch_change_rate: float | None
    acs: float | None
    iccc: float | None
    eccc: float | None
    mdsr: float | None
    epochs: int
    alive_nodes_series: list = field(default_factory=list)
    residual_energy_series: list = field(default_factory=list)
    partitions_series: list = field(default_factory=list)
    logical_partitions_series: list = field(default_factory=list)
    connectivity_series: list = field(default_factory=list)
    logical_connectivity_series: list = field(default_factory=list)
    episode_rewards: list = field(default_factory=list)
    policy_loss_series: list = field(default_factory=list)
    value_loss_series: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MetricsReport":
        return cls(**dict(d))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False, indent=1) + "\n"

    def csv_row(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCALAR_COLUMNS)
        d = self.to_dict()
        w.writerow(["" if d[c] is None else repr(d[c]) if isinstance(d[c], float) else d[c]
                    for c in SCALAR_COLUMNS])
        return buf.getvalue()

    def series_csv(self, name: str) -> str:
        """Two-column CSV of one series: ``time,value`` (or ``episode,value``)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        data = getattr(self, name)
        if name in ("episode_rewards", "policy_loss_series", "value_loss_series"):
            w.writerow(["episode", "value"])
            rows = [(k + 1, v) for k, v in enumerate(data)]
        else:
            w.writerow(["time", "value"])
            rows = data
        for t, v in rows:
            w.writerow([t, "" if v is None else repr(v) if isinstance(v, float) else v])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# lifetime
# ---------------------------------------------------------------------------

def lifetime_markers(energy_series: Sequence[Sequence[float]], excluded: Iterable[int] = ()):
    """First-node-dies and half-nodes-dead rounds from per-round energy vectors.

    ``energy_series[k]`` holds every node's energy at the end of round k+1.
    Nodes in ``excluded`` (injected failures) never count as dead. Returns
    ``(fnd, hnd, alive_series)``; markers are None when never reached.
    """
    skip = set(excluded)
    fnd = hnd = None
    alive_series = []
    for k, energies in enumerate(energy_series, start=1):
        n = len(energies)
        dead = sum(1 for i, e in enumerate(energies) if e <= 0.0 and i not in skip)
        alive_series.append(n - dead)
        if fnd is None and dead >= 1:
            fnd = k
        if hnd is None and n and dead >= math.ceil(n / 2):
            hnd = k
    return fnd, hnd, alive_series


# ---------------------------------------------------------------------------
# cluster stability and quality
# ---------------------------------------------------------------------------

@dataclass
class StabilitySnapshot:
    epoch: int
    start_s: float
    heads: list[int]
    membership: dict[int, int]  # node -> primary head
    common: dict[int, list[int]] = field(default_factory=dict)  # node -> cluster ids it bridges


def _runs(snapshots: Sequence[StabilitySnapshot], end_s: float, keys_of) -> list[float]:
    """Durations of maximal consecutive-epoch runs of each key."""
    spans: list[float] = []
    open_at: dict[Any, float] = {}
    for k, snap in enumerate(snapshots):
        now = set(keys_of(snap))
        for key in list(open_at):
            if key not in now:
                spans.append(snap.start_s - open_at.pop(key))
        for key in now:
            open_at.setdefault(key, snap.start_s)
    for start in open_at.values():
        spans.append(end_s - start)
    return spans


def cluster_stability(snapshots: Sequence[StabilitySnapshot], end_s: float):
    """``(ch_lifetime, member_lifetime, ch_change_rate)`` over a sequence of epochs.

    Lifetimes are mean durations of uninterrupted head tenures and of
    (node, primary head) associations; the change rate averages, over epoch
    transitions, the share of heads that were not heads in the epoch before.
    """
    if not snapshots:
        return None, None, None
    ch = _runs(snapshots, end_s, lambda s: s.heads)
    mem = _runs(snapshots, end_s, lambda s: [(v, h) for v, h in s.membership.items() if v != h])
    rates = []
    for prev, cur in zip(snapshots, snapshots[1:]):
        if cur.heads:
            fresh = len(set(cur.heads) - set(prev.heads))
            rates.append(fresh / len(cur.heads))
    return (float(np.mean(ch)) if ch else None,
            float(np.mean(mem)) if mem else None,
            float(np.mean(rates)) if rates else (0.0 if len(snapshots) > 1 else None))


def link_ranges(positions, heads, primary_head, cfg) -> np.ndarray:
    """Per-node radio range implied by a clustering snapshot (same rule the simulator uses)."""
    xy = np.asarray(positions, dtype=float)
    r = np.full(len(xy), float(cfg.member_range_m))
    base = min(cfg.member_range_m, cfg.ch_range_m)
    head_set = set(heads)
    for v, h in enumerate(primary_head):
        if v in head_set:
            r[v] = cfg.ch_range_m
        elif h is not None and abs(xy[v, 0] - xy[h, 0]) + abs(xy[v, 1] - xy[h, 1]) > base:
            r[v] = cfg.member_range_m * cfg.range_extension_factor
    return r


def clustering_quality(clusters: Sequence[Sequence], positions: Sequence[Sequence[float]],
                       primary_head: Sequence[int | None], ranges: Sequence[float],
                       alive: Sequence[int] | None = None):
    """``(acs, iccc, eccc)`` for one clustering.

    ``clusters`` holds ``[cluster_id, head, members, common_members]`` rows.
    Edge weights are Manhattan lengths. ICCC sums member-to-head edges inside
    each cluster; ECCC sums the in-range links whose endpoints sit in
    different primary clusters.
    """
    if not clusters:
        return None, 0.0, 0.0
    xy = np.asarray(positions, dtype=float)
    n = len(xy)
    d = np.abs(xy[:, None, 0] - xy[None, :, 0]) + np.abs(xy[:, None, 1] - xy[None, :, 1])

    clustered = set()
    iccc = 0.0
    for _, head, members, _common in clusters:
        clustered.update(members)
        iccc += float(sum(d[m, head] for m in members if m != head))
    acs = len(clustered) / len(clusters)

    r = np.asarray(ranges, dtype=float)
    ok = np.ones(n, dtype=bool) if alive is None else np.asarray(alive, dtype=bool)
    ph = np.array([-1 if h is None else h for h in primary_head])
    link = (d <= np.minimum(r[:, None], r[None, :])) & ok[:, None] & ok[None, :]
    across = (ph[:, None] != ph[None, :]) & (ph[:, None] >= 0) & (ph[None, :] >= 0)
    eccc = float(np.triu(np.where(link & across, d, 0.0), 1).sum())
    return acs, iccc, eccc


def windowed_delivery(gen_times: Mapping[int, float], delivered: set[int], window_s: float) -> float | None:
    """Mean over windows of the share of messages generated in the window that were delivered."""
    buckets: dict[int, list[int]] = {}
    for mid, t in gen_times.items():
        buckets.setdefault(int(math.floor(t / window_s + 1e-9)), []).append(mid)
    ratios = [sum(m in delivered for m in ids) / len(ids) for _, ids in sorted(buckets.items())]
    return float(np.mean(ratios)) if ratios else None


# ---------------------------------------------------------------------------
# the report
# ---------------------------------------------------------------------------

def _mean(xs):
    return float(np.mean(xs)) if xs else None


def compute_kpis(event_log: Sequence[Mapping[str, Any]], config) -> "MetricsReport":
    if not event_log:
        raise EmptyLog("event log is empty")
    by_kind: dict[str, list] = {}
    for ev in event_log:
        by_kind.setdefault(ev["kind"], []).append(ev)
    end = by_kind.get("end")
    if not end:
        raise EmptyLog("event log has no end-of-run record")
    end = end[-1]

    gens = by_kind.get("gen", [])
    dels = by_kind.get("deliver", [])
    generated, delivered = len(gens), len(dels)
    gen_times = {e["msg"]: e["t"] for e in gens}
    delivered_ids = {e["msg"] for e in dels}
    payload = sum(e["size"] for e in dels)
    hops = [e["hops"] for e in by_kind.get("xfer", [])]

    energy_end, initial = end["energy"], end["initial"]
    failed = sorted(n for e in by_kind.get("failure", []) for n in e["nodes"])

    epochs = by_kind.get("epoch", [])
    rounds = [e["energy"] for e in epochs[1:]] + [energy_end] if epochs else \
        [e["energy"] for e in by_kind.get("round", [])] + [energy_end]
    fnd, hnd, _ = lifetime_markers(rounds, failed)

    snaps = []
    quality = []
    for e in epochs:
        membership = {v: h for v, h in enumerate(e["primary_head"]) if h is not None}
        common = {}
        for cid, _head, _members, commons in e["clusters"]:
            for m in commons:
                common.setdefault(m, []).append(cid)
        snaps.append(StabilitySnapshot(e["epoch"], e["t"], list(e["heads"]), membership, common))
        if e["clusters"]:
            ranges = link_ranges(e["positions"], e["heads"], e["primary_head"], config)
            quality.append(clustering_quality(e["clusters"], e["positions"], e["primary_head"], ranges, e["alive"]))
    ch_life, mem_life, change = cluster_stability(snaps, end["t"])

    samples = by_kind.get("sample", [])
    learn = by_kind.get("learn", [])
    return MetricsReport(
        protocol=config.protocol.value,
        seed=int(config.seed),
        node_count=int(config.node_count),
        sim_duration_s=float(config.sim_duration_s),
        generated=generated,
        delivered=delivered,
        expired=len(by_kind.get("expired", [])),
        dropped=len(by_kind.get("dropped", [])),
        in_buffer=len(end["in_buffer"]),
        delivery_ratio=delivered / generated if generated else None,
        mean_e2e_delay_s=_mean([e["delay"] for e in dels]),
        mean_hops=_mean([e["hops"] for e in dels]),
        max_hops=max(hops) if hops else 0,
        throughput_bps=payload * 8.0 / float(config.sim_duration_s),
        mean_residual_energy_frac=float(np.mean([c / i for c, i in zip(energy_end, initial)])),
        fnd_round=fnd,
        hnd_round=hnd,
        ch_lifetime_mean_s=ch_life,
        member_lifetime_mean_s=mem_life,
        ch_change_rate=change,
        acs=_mean([q[0] for q in quality if q[0] is not None]),
        iccc=_mean([q[1] for q in quality]),
        eccc=_mean([q[2] for q in quality]),
        mdsr=windowed_delivery(gen_times, delivered_ids, float(config.recluster_period_s)),
        epochs=len(epochs),
        alive_nodes_series=[[s["t"], s["alive"]] for s in samples],
        residual_energy_series=[[s["t"], s["energy"]] for s in samples],
        partitions_series=[[s["t"], s["phys_parts"]] for s in samples],
        logical_partitions_series=[[s["t"], s["logic_parts"]] for s in samples],
        connectivity_series=[[s["t"], s["phys_conn"]] for s in samples],
        logical_connectivity_series=[[s["t"], s["logic_conn"]] for s in samples],
        episode_rewards=[e["reward"] for e in learn],
        policy_loss_series=[e["policy_loss"] for e in learn],
        value_loss_series=[e["value_loss"] for e in learn],
    )
