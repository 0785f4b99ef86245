"""Shared builders for small, hand-checkable worlds, plus brute-force oracles."""

import itertools
import math
from collections import deque

import numpy as np

from crdrl import engine
from crdrl.config import Protocol, ScenarioConfig

# criterion number -> (passed, title, detail), filled by the acceptance suite
VERDICTS: dict[int, tuple[bool, str, str]] = {}

QUIET = dict(msg_interval_s=(1e9, 1e9), failure_fraction=0.0)


def desk_config(**kw) -> ScenarioConfig:
    """30 nodes on an 800 m square: dense enough for traffic to flow in minutes."""
    base = dict(node_count=30, area_width_m=800.0, area_height_m=800.0, recluster_period_s=12.0,
                sim_duration_s=60.0)
    base.update(kw)
    return ScenarioConfig(**base)


def static_world(positions, protocol=Protocol.CRDRL, **kw) -> engine.WorldState:
    """Motionless world with no background traffic, initialised at t=0."""
    pos = np.asarray(positions, dtype=float)
    base = dict(node_count=len(pos), area_width_m=1000.0, area_height_m=1000.0, sim_duration_s=100.0,
                protocol=protocol, recluster_period_s=1000.0, **QUIET)
    base.update(kw)
    cfg = ScenarioConfig(**base)
    world = engine.build_world(cfg, positions=pos, static=True)
    engine.initialize(world)
    return world


def line_world(xs, **kw):
    return static_world([[x, 500.0] for x in xs], **kw)


def run_events(world, kind):
    return [e for e in world.event_log if e["kind"] == kind]


# -- finite differences ----------------------------------------------------------

def numeric_grad(f, params, h=1e-5):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``params`` (perturbed in place)."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            keep = p[i]
            p[i] = keep + h
            up = f()
            p[i] = keep - h
            down = f()
            p[i] = keep
            g[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def relative_error(analytic, numeric) -> float:
    """Largest per-tensor ``|a - n| / (|a| + |n|)`` in the 2-norm; tensors that are both ~0 count as exact."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = np.linalg.norm(a) + np.linalg.norm(n)
        if scale < 1e-10:
            continue
        worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst


# -- oracles -------------------------------------------------------------------

def bfs_components(adj, alive):
    """Independent oracle: plain breadth-first search."""
    seen, count = set(), 0
    n = len(adj)
    for s in range(n):
        if not alive[s] or s in seen:
            continue
        count += 1
        q = deque([s])
        seen.add(s)
        while q:
            u = q.popleft()
            for v in range(n):
                if adj[u][v] and alive[v] and v not in seen:
                    seen.add(v)
                    q.append(v)
    return count


def brute_force_greedy(logits, cands, alive, d, radius):
    """Most probable full ranking by enumeration, cut at the first covering prefix."""
    def prob(order):
        p, left = 1.0, list(order)
        for a in order:
            z = np.exp([logits[c] for c in left])
            p *= math.exp(logits[a]) / z.sum()
            left.remove(a)
        return p

    best = max(itertools.permutations(sorted(cands)), key=lambda o: (prob(o), [-c for c in o]))
    for k in range(1, len(best) + 1):
        if all(min(d[v, h] for h in best[:k]) <= radius for v in alive):
            return list(best[:k])
    return list(best)
