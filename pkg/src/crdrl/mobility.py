"""Node placement and movement: random waypoint, Gauss-Markov and a hotspot-clustered model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import ScenarioConfig


class Model(str, Enum):
    RWP = "RWP"
    GAUSS_MARKOV = "GAUSS_MARKOV"
    CLUSTERED = "CLUSTERED"


@dataclass(frozen=True)
class Position:
    x_m: float
    y_m: float


def manhattan_distance(a: Position, b: Position) -> float:
    return abs(a.x_m - b.x_m) + abs(a.y_m - b.y_m)


@dataclass
class Bounds:
    width: float
    height: float

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return min(max(x, 0.0), self.width), min(max(y, 0.0), self.height)

    def uniform(self, rng: np.random.Generator) -> tuple[float, float]:
        return float(rng.uniform(0.0, self.width)), float(rng.uniform(0.0, self.height))


@dataclass
class MobilityAgent:
    model: Model
    speed_mps: float
    speed_min: float
    speed_max: float
    heading_rad: float = 0.0
    waypoint: tuple[float, float] | None = None
    # Gauss-Markov
    gm_memory: float = 0.85
    mean_heading: float = 0.0
    speed_noise: float = 0.0
    heading_noise: float = 0.0
    # clustered
    anchor: tuple[float, float] | None = None
    dwell_left_s: float = 0.0
    hotspots: tuple[tuple[float, float], ...] = ()
    hotspot_radius: float = 200.0
    dwell_range: tuple[float, float] = (60.0, 300.0)
    travelling: bool = False


def _floor_counts(fractions, n: int) -> list[int]:
    counts = [int(math.floor(f * n + 1e-9)) for f in fractions]
    counts[0] += n - sum(counts)
    return counts


def partition_counts(mix: tuple[float, float, float], n: int) -> dict[Model, int]:
    """Floor each share; the remainder goes to random waypoint."""
    c = _floor_counts(mix, n)
    return {Model.RWP: c[0], Model.GAUSS_MARKOV: c[1], Model.CLUSTERED: c[2]}


def place_hotspots(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[tuple[float, float], ...]:
    b = Bounds(cfg.area_width_m, cfg.area_height_m)
    return tuple(b.uniform(rng) for _ in range(cfg.hotspot_count))


def assign_mobility(n: int, cfg: ScenarioConfig, rng: np.random.Generator):
    """Return ``(agents, positions)`` for ``n`` nodes.

    Model and vehicle-class group sizes follow the floor rule; which node lands
    in which group is a seeded permutation. Initial positions are uniform.
    """
    bounds = Bounds(cfg.area_width_m, cfg.area_height_m)
    hotspots = place_hotspots(cfg, rng)

    counts = partition_counts(cfg.mobility_mix, n)
    models: list[Model] = []
    for m in (Model.RWP, Model.GAUSS_MARKOV, Model.CLUSTERED):
        models += [m] * counts[m]
    order = rng.permutation(n)
    model_of = [Model.RWP] * n
    for slot, node in enumerate(order):
        model_of[int(node)] = models[slot]

    class_counts = _floor_counts([c.fraction for c in cfg.vehicle_classes], n)
    classes = []
    for ci, k in enumerate(class_counts):
        classes += [cfg.vehicle_classes[ci]] * k
    order = rng.permutation(n)
    class_of = [cfg.vehicle_classes[0]] * n
    for slot, node in enumerate(order):
        class_of[int(node)] = classes[slot]

    agents, positions = [], []
    for i in range(n):
        vc = class_of[i]
        pos = bounds.uniform(rng)
        speed = float(rng.uniform(vc.speed_min_mps, vc.speed_max_mps))
        heading = float(rng.uniform(-math.pi, math.pi))
        agent = MobilityAgent(
            model=model_of[i], speed_mps=speed, speed_min=vc.speed_min_mps,
            speed_max=vc.speed_max_mps, heading_rad=heading, gm_memory=cfg.gm_memory,
            mean_heading=heading,
            speed_noise=0.1 * (vc.speed_max_mps - vc.speed_min_mps),
            heading_noise=cfg.gm_heading_noise_rad,
            hotspots=hotspots, hotspot_radius=cfg.hotspot_radius_m, dwell_range=cfg.dwell_s,
        )
        if agent.model is Model.RWP:
            agent.waypoint = bounds.uniform(rng)
        elif agent.model is Model.CLUSTERED:
            agent.anchor = hotspots[int(rng.integers(len(hotspots)))]
            agent.travelling = True
            agent.waypoint = _near(agent.anchor, agent.hotspot_radius, bounds, rng)
            agent.dwell_left_s = float(rng.uniform(*agent.dwell_range))
        agents.append(agent)
        positions.append(pos)
    return agents, positions


def _near(anchor, radius, bounds: Bounds, rng) -> tuple[float, float]:
    # uniform point in the Manhattan ball around the anchor, clamped into the area
    while True:
        dx, dy = rng.uniform(-radius, radius, size=2)
        if abs(dx) + abs(dy) <= radius:
            break
    return bounds.clamp(anchor[0] + float(dx), anchor[1] + float(dy))


def _step_toward(pos, target, dist_budget):
    dx, dy = target[0] - pos[0], target[1] - pos[1]
    d = math.hypot(dx, dy)
    if d <= dist_budget:
        return target, True
    f = dist_budget / d
    return (pos[0] + dx * f, pos[1] + dy * f), False


def update_position(agent: MobilityAgent, pos, dt: float, rng: np.random.Generator, bounds: Bounds):
    """Advance one node by ``dt`` seconds. Mutates ``agent``; returns the new position."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if agent.model is Model.RWP:
        return _rwp(agent, pos, dt, rng, bounds)
    if agent.model is Model.GAUSS_MARKOV:
        return _gauss_markov(agent, pos, dt, rng, bounds)
    return _clustered(agent, pos, dt, rng, bounds)


def _rwp(agent, pos, dt, rng, bounds):
    if agent.waypoint is None or (abs(pos[0] - agent.waypoint[0]) < 1e-9 and abs(pos[1] - agent.waypoint[1]) < 1e-9):
        # arrival: draw the next leg, stay put for this instant
        agent.waypoint = bounds.uniform(rng)
        agent.speed_mps = float(rng.uniform(agent.speed_min, agent.speed_max))
        return pos
    new, _ = _step_toward(pos, agent.waypoint, agent.speed_mps * dt)
    return new


def _gauss_markov(agent, pos, dt, rng, bounds):
    m = agent.gm_memory ** dt
    spread = math.sqrt(max(0.0, 1.0 - m * m))
    mean_speed = 0.5 * (agent.speed_min + agent.speed_max)
    z_s, z_h = rng.standard_normal(2)
    speed = m * agent.speed_mps + (1 - m) * mean_speed + spread * agent.speed_noise * float(z_s)
    agent.speed_mps = min(max(speed, agent.speed_min), agent.speed_max)
    agent.heading_rad = m * agent.heading_rad + (1 - m) * agent.mean_heading + spread * agent.heading_noise * float(z_h)

    step = agent.speed_mps * dt
    x = pos[0] + step * math.cos(agent.heading_rad)
    y = pos[1] + step * math.sin(agent.heading_rad)
    # reflect off the walls; the mean heading is mirrored too so the drift points back inside
    if x < 0.0 or x > bounds.width:
        x = -x if x < 0.0 else 2 * bounds.width - x
        agent.heading_rad = math.pi - agent.heading_rad
        agent.mean_heading = math.pi - agent.mean_heading
    if y < 0.0 or y > bounds.height:
        y = -y if y < 0.0 else 2 * bounds.height - y
        agent.heading_rad = -agent.heading_rad
        agent.mean_heading = -agent.mean_heading
    return bounds.clamp(x, y)


def _clustered(agent, pos, dt, rng, bounds):
    if not agent.travelling:
        agent.dwell_left_s -= dt
        if agent.dwell_left_s <= 0:
            # relocate to another hotspot
            agent.anchor = agent.hotspots[int(rng.integers(len(agent.hotspots)))]
            agent.dwell_left_s = float(rng.uniform(*agent.dwell_range))
            agent.travelling = True
            agent.waypoint = _near(agent.anchor, agent.hotspot_radius, bounds, rng)
    new, arrived = _step_toward(pos, agent.waypoint, agent.speed_mps * dt)
    if arrived:
        agent.travelling = False
        agent.waypoint = _near(agent.anchor, agent.hotspot_radius, bounds, rng)
        agent.speed_mps = float(rng.uniform(agent.speed_min, agent.speed_max))
    return new
