"""Cluster-head election, adaptive distance threshold, cluster formation and common members."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ac_learn
from .ac_learn import AcModel, NoCandidates


class ZeroArea(ValueError):
    pass


class ZeroDensity(ValueError):
    pass


@dataclass
class Cluster:
    id: int
    head: int
    radius_m: float
    members: set[int] = field(default_factory=set)
    common_members: set[int] = field(default_factory=set)
    formed_at_s: float = 0.0


def candidate_filter(nodes, energy_threshold_frac: float = 0.25) -> list[int]:
    """Alive nodes holding at least the threshold share of their initial energy."""
    out = []
    for n in nodes:
        if n.alive and n.energy.current >= energy_threshold_frac * n.energy.initial - 1e-12:
            out.append(n.id)
    return sorted(out)


def node_density(n_count: int, area: float) -> float:
    if area <= 0:
        raise ZeroArea("area must be > 0")
    return n_count / area


def adt(density: float, delta: float) -> float:
    """Adaptive distance threshold: delta times the mean spacing 1/sqrt(density)."""
    if density <= 0:
        raise ZeroDensity("density must be > 0")
    return delta * (1.0 / math.sqrt(density))


def cluster_radius(alive_count: int, cfg) -> float:
    """ADT in metres for the live network, clamped to [member range, 2 x head range]."""
    lo, hi = cfg.member_range_m, 2.0 * cfg.ch_range_m
    try:
        r = adt(node_density(alive_count, cfg.area_m2), cfg.delta_scale)
    except ZeroDensity:
        return hi
    return min(max(r, lo), hi)


def _covered(heads: Sequence[int], alive_ids: Sequence[int], dist: np.ndarray, radius: float) -> bool:
    if not heads:
        return not alive_ids
    sub = dist[np.ix_(list(alive_ids), list(heads))]
    return bool(np.all(sub.min(axis=1) <= radius + 1e-9))


def select_cluster_heads(model: AcModel, state, candidates: Sequence[int], alive_ids: Sequence[int],
                         dist: np.ndarray, radius: float, *, greedy: bool = True,
                         rng: np.random.Generator | None = None) -> list[int]:
    """Pick heads one at a time from the actor's distribution until every alive node is covered.

    ``greedy`` takes the argmax (ties to the lowest node id); otherwise each
    pick is sampled from ``rng``. The returned order is the ranking.
    """
    if not candidates:
        raise NoCandidates("no eligible cluster-head candidates")
    n = dist.shape[0]
    logits = ac_learn.actor_logits(model, state)
    mask = np.zeros(n, dtype=bool)
    mask[list(candidates)] = True
    heads: list[int] = []
    while mask.any():
        p = ac_learn.masked_softmax(logits, mask)
        if greedy:
            a = int(np.flatnonzero(p == p.max())[0])
        else:
            a = int(rng.choice(n, p=p))
        heads.append(a)
        mask[a] = False
        if _covered(heads, alive_ids, dist, radius):
            break
    return heads


def form_clusters(heads: Sequence[int], alive_ids: Sequence[int], dist: np.ndarray, radius: float,
                  first_id: int = 0, now_s: float = 0.0):
    """Build one cluster per head; returns ``(clusters, primary)``.

    A non-head joins every cluster whose head lies within ``radius`` and takes
    the closest head (ties to lowest id) as its primary. Heads belong only to
    their own cluster.
    """
    head_set = set(heads)
    clusters = [Cluster(first_id + k, h, radius, {h}, set(), now_s) for k, h in enumerate(heads)]
    primary: dict[int, int] = {}
    for k, h in enumerate(heads):
        primary[h] = k
    for v in alive_ids:
        if v in head_set:
            continue
        best = None
        for k, h in enumerate(heads):
            d = dist[v, h]
            if d <= radius + 1e-9:
                clusters[k].members.add(v)
                if best is None or d < best[0] or (d == best[0] and h < heads[best[1]]):
                    best = (d, k)
        if best is not None:
            primary[v] = best[1]
    return clusters, {v: clusters[k].id for v, k in primary.items()}


def identify_common_members(clusters: Sequence[Cluster]) -> dict[int, set[int]]:
    """Fill each cluster's common-member set; returns node -> ids of clusters it bridges."""
    heads = {c.head for c in clusters}
    where: dict[int, set[int]] = {}
    for c in clusters:
        for m in c.members:
            if m not in heads:
                where.setdefault(m, set()).add(c.id)
    bridges = {m: cs for m, cs in where.items() if len(cs) >= 2}
    for c in clusters:
        c.common_members = {m for m, cs in bridges.items() if c.id in cs}
    return bridges


def recluster_if_due(world, cfg):
    """Re-elect heads when the period has elapsed or a head has died (see ``engine.recluster_if_due``)."""
    from .engine import recluster_if_due as _due

    return _due(world, cfg)
