"""Radio reachability, beacons and neighbor tables, contact bookkeeping, and graph diagnostics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class Role(str, Enum):
    UNCLUSTERED = "UNCLUSTERED"
    MEMBER = "MEMBER"
    HEAD = "HEAD"


class Degenerate(ValueError):
    """Metric undefined for fewer than two alive nodes."""


# ---------------------------------------------------------------------------
# ranges
# ---------------------------------------------------------------------------

def pairwise_manhattan(xy: np.ndarray) -> np.ndarray:
    return np.abs(xy[:, None, 0] - xy[None, :, 0]) + np.abs(xy[:, None, 1] - xy[None, :, 1])


def effective_range(node, world, cfg) -> float:
    """Base range for the node's role; members out of reach of their head get the extension."""
    if node.role is Role.HEAD:
        return cfg.ch_range_m
    if node.role is Role.MEMBER and node.primary_head is not None:
        head = world.nodes[node.primary_head]
        d = abs(node.x - head.x) + abs(node.y - head.y)
        if d > min(cfg.member_range_m, cfg.ch_range_m):
            return cfg.member_range_m * cfg.range_extension_factor
    return cfg.member_range_m


def effective_ranges(world, cfg, xy: np.ndarray | None = None) -> np.ndarray:
    if xy is None:
        xy = world.positions()
    n = len(world.nodes)
    r = np.full(n, cfg.member_range_m)
    base_link = min(cfg.member_range_m, cfg.ch_range_m)
    for node in world.nodes:
        if node.role is Role.HEAD:
            r[node.id] = cfg.ch_range_m
        elif node.role is Role.MEMBER and node.primary_head is not None:
            h = node.primary_head
            d = abs(xy[node.id, 0] - xy[h, 0]) + abs(xy[node.id, 1] - xy[h, 1])
            if d > base_link:
                r[node.id] = cfg.member_range_m * cfg.range_extension_factor
    return r


def in_range(a, b, world, cfg) -> bool:
    if not (a.alive and b.alive):
        return False
    d = abs(a.x - b.x) + abs(a.y - b.y)
    return d <= min(effective_range(a, world, cfg), effective_range(b, world, cfg))


def reach_matrix(xy: np.ndarray, ranges: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Symmetric boolean adjacency: both alive and distance within the smaller range."""
    d = pairwise_manhattan(xy)
    lim = np.minimum(ranges[:, None], ranges[None, :])
    adj = (d <= lim) & alive[:, None] & alive[None, :]
    np.fill_diagonal(adj, False)
    return adj


# ---------------------------------------------------------------------------
# neighbor tables
# ---------------------------------------------------------------------------

@dataclass
class NeighborEntry:
    last_beacon_s: float
    x: float
    y: float
    role: Role
    cluster_id: int | None = None


@dataclass
class NeighborTable:
    owner: int
    entries: dict[int, NeighborEntry] = field(default_factory=dict)

    def refresh(self, sender: int, entry: NeighborEntry) -> None:
        self.entries[sender] = entry

    def expire(self, now_s: float, max_age_s: float) -> None:
        stale = [k for k, e in self.entries.items() if now_s - e.last_beacon_s > max_age_s + 1e-9]
        for k in stale:
            del self.entries[k]


def emit_beacons(world, cfg, adj: np.ndarray, node_beacon_due: bool, ch_beacon_due: bool) -> None:
    """Refresh neighbor tables of every in-range receiver of each due sender.

    Node beacons (all nodes) fire on the node period; head beacons fire on the
    head period and also carry the cluster id, which is how members learn
    their head.
    """
    now = world.now_s
    max_age = 3 * cfg.node_beacon_period_s
    senders: Iterable[int]
    if node_beacon_due:
        senders = range(len(world.nodes))
    elif ch_beacon_due:
        senders = [n.id for n in world.nodes if n.role is Role.HEAD]
    else:
        return
    for s in senders:
        sender = world.nodes[s]
        if not sender.alive:
            continue
        is_head = sender.role is Role.HEAD
        if not node_beacon_due and not is_head:
            continue
        entry = NeighborEntry(now, sender.x, sender.y, sender.role, sender.own_cluster if is_head else None)
        for r in np.flatnonzero(adj[s]):
            receiver = world.nodes[int(r)]
            receiver.neighbors.refresh(s, entry)
            if is_head and s in receiver.heads:
                receiver.known_head = s
    if node_beacon_due:
        for n in world.nodes:
            n.neighbors.expire(now, max_age)


# ---------------------------------------------------------------------------
# link reliability
# ---------------------------------------------------------------------------

@dataclass
class LinkRecord:
    node_a: int
    node_b: int
    since_s: float
    observed_contacts: int = 0
    observed_contact_time_s: float = 0.0
    reliability_est: float = 0.0


class LinkTracker:
    """Empirical per-link reliability: fraction of the recent horizon spent in contact."""

    def __init__(self, horizon_s: float = 300.0):
        self.horizon_s = horizon_s
        self._open: dict[tuple[int, int], float] = {}
        self._closed: dict[tuple[int, int], deque] = {}
        self._first_seen: dict[tuple[int, int], float] = {}
        self._contacts: dict[tuple[int, int], int] = {}

    @staticmethod
    def key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def contact_started(self, a: int, b: int, t: float) -> None:
        k = self.key(a, b)
        self._open[k] = t
        self._first_seen.setdefault(k, t)
        self._contacts[k] = self._contacts.get(k, 0) + 1

    def contact_ended(self, a: int, b: int, t: float) -> None:
        k = self.key(a, b)
        start = self._open.pop(k, None)
        if start is not None:
            self._closed.setdefault(k, deque()).append((start, t))
            self._prune(k, t)

    def _prune(self, k, now):
        q = self._closed.get(k)
        while q and q[0][1] < now - self.horizon_s:
            q.popleft()

    def record(self, a: int, b: int, now_s: float) -> LinkRecord:
        k = self.key(a, b)
        since = self._first_seen.get(k, now_s)
        lo = max(since, now_s - self.horizon_s)
        elapsed = now_s - lo
        self._prune(k, now_s)
        busy = 0.0
        for s, e in self._closed.get(k, ()):
            busy += max(0.0, min(e, now_s) - max(s, lo))
        if k in self._open:
            busy += max(0.0, now_s - max(self._open[k], lo))
        rel = 0.0 if elapsed <= 0 else min(1.0, max(0.0, busy / elapsed))
        if elapsed <= 0 and k in self._open:
            rel = 1.0
        return LinkRecord(k[0], k[1], since, self._contacts.get(k, 0), busy, rel)


def route_reliability(path: Sequence[LinkRecord] | Sequence[float]) -> float:
    """Product of per-link reliabilities; an empty path is certain."""
    out = 1.0
    for link in path:
        out *= link.reliability_est if isinstance(link, LinkRecord) else float(link)
    return out


# ---------------------------------------------------------------------------
# graph diagnostics
# ---------------------------------------------------------------------------

class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def component_sizes(adj: np.ndarray, alive: np.ndarray) -> list[int]:
    """Sizes of connected components over alive nodes (union-find)."""
    n = adj.shape[0]
    uf = UnionFind(n)
    ii, jj = np.nonzero(np.triu(adj, 1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        if alive[i] and alive[j]:
            uf.union(i, j)
    counts: dict[int, int] = {}
    for i in range(n):
        if alive[i]:
            r = uf.find(i)
            counts[r] = counts.get(r, 0) + 1
    return sorted(counts.values(), reverse=True)


def partitions(adj: np.ndarray, alive: np.ndarray) -> int:
    return len(component_sizes(adj, alive))


def connectivity_ratio(adj: np.ndarray, alive: np.ndarray) -> float:
    """Percent of ordered alive pairs that share a component."""
    n_alive = int(np.count_nonzero(alive))
    if n_alive < 2:
        raise Degenerate("need at least two alive nodes")
    same = sum(s * (s - 1) for s in component_sizes(adj, alive))
    return 100.0 * same / (n_alive * (n_alive - 1))


def logical_adjacency(adj: np.ndarray, clusters) -> np.ndarray:
    """Physical links plus a head-to-member edge for every cluster membership."""
    out = adj.copy()
    for c in clusters:
        for m in c.members:
            if m != c.head:
                out[c.head, m] = out[m, c.head] = True
    return out
