"""Scenario configuration: the dataclass, its validation, and the flat key-value file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable


class Protocol(str, Enum):
    CRDRL = "CRDRL"
    SCF_EPIDEMIC = "SCF_EPIDEMIC"


class ConfigInvalid(ValueError):
    """A config field failed validation."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


# parse_config reports failed invariants under this name
InvariantViolation = ConfigInvalid


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownKey(KeyError):
    def __init__(self, key: str, line_no: int | None = None):
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"unknown config key {key!r}{where}")
        self.key = key
        self.line_no = line_no


@dataclass(frozen=True)
class VehicleClass:
    fraction: float
    speed_min_mps: float
    speed_max_mps: float


@dataclass(frozen=True)
class ScenarioConfig:
    # scenario
    node_count: int = 50
    sim_duration_s: float = 3600.0
    tick_s: float = 0.1
    seed: int = 0
    protocol: Protocol = Protocol.CRDRL
    # area
    area_width_m: float = 4000.0
    area_height_m: float = 3500.0
    # mobility
    mobility_mix: tuple[float, float, float] = (0.5, 0.3, 0.2)
    vehicle_classes: tuple[VehicleClass, ...] = (
        VehicleClass(0.8, 8.0, 15.0),
        VehicleClass(0.2, 4.0, 8.0),
    )
    gm_memory: float = 0.85
    gm_heading_noise_rad: float = 0.3
    hotspot_count: int = 5
    hotspot_radius_m: float = 200.0
    dwell_s: tuple[float, float] = (60.0, 300.0)
    # failures
    failure_fraction: float = 0.05
    failure_window_s: tuple[float, float] = (1800.0, 2400.0)
    # traffic
    msg_ttl_s: float = 300.0
    hop_limit: int = 10
    msg_interval_s: tuple[float, float] = (5.0, 40.0)
    msg_size_bytes: tuple[float, float] = (250e3, 750e3)
    # node resources
    buffer_bytes: tuple[float, float] = (50e6, 100e6)
    initial_energy: float = 4800.0
    scan_drain_per_s: float = 0.92
    tx_drain_per_s: float = 0.08
    rx_drain_per_s: float = 0.08
    recharge_interval_s: float = 2800.0
    # radio
    member_range_m: float = 100.0
    ch_range_m: float = 300.0
    range_extension_factor: float = 1.2
    node_beacon_period_s: float = 1.0
    ch_beacon_period_s: float = 0.1
    base_rate_Bps: float = 2.5e6
    mimo_rate_multiplier: float = 4.0
    reliability_horizon_s: float = 300.0
    # clustering
    recluster_period_s: float = 30.0
    delta_scale: float = 1.5
    energy_threshold_frac: float = 0.25
    # encounters
    lambda_: float = 0.85
    encounter_window_s: float = 30.0
    # learning
    gamma: float = 0.9
    alpha_actor: float = 0.01
    alpha_critic: float = 0.02
    entropy_coeff: float = 0.05
    reward_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    hidden_units: int = 64
    grad_clip_norm: float = 5.0
    replay_capacity: int = 10_000
    replay_batch_size: int = 32
    lr_window: int = 10
    lr_decay: float = 0.5
    lr_min: float = 1e-4
    learning_mode: str = "train"
    # metrics
    sample_period_s: float = 1.0

    @property
    def link_rate_Bps(self) -> float:
        return self.base_rate_Bps * self.mimo_rate_multiplier

    @property
    def area_m2(self) -> float:
        return self.area_width_m * self.area_height_m

    def ticks(self, seconds: float) -> int:
        """Whole number of ticks in ``seconds`` (rounded, never below 1)."""
        return max(1, int(round(seconds / self.tick_s)))

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Protocol):
                v = v.value
            elif f.name == "vehicle_classes":
                v = [[c.fraction, c.speed_min_mps, c.speed_max_mps] for c in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def _check_fraction(name: str, v: float) -> None:
    if not (0.0 <= v <= 1.0) or math.isnan(v):
        raise ConfigInvalid(name, f"must be in [0, 1], got {v}")


def _check_interval(name: str, iv: tuple[float, float]) -> None:
    if len(iv) != 2 or iv[0] > iv[1]:
        raise ConfigInvalid(name, f"interval needs min <= max, got {iv}")


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Raise ConfigInvalid on the first broken invariant; return cfg unchanged otherwise."""
    if cfg.node_count < 1:
        raise ConfigInvalid("node_count", "need at least one node")
    if cfg.tick_s <= 0:
        raise ConfigInvalid("tick_s", "must be > 0")
    if cfg.sim_duration_s <= 0:
        raise ConfigInvalid("sim_duration_s", "must be > 0")
    n_ticks = cfg.sim_duration_s / cfg.tick_s
    if abs(n_ticks - round(n_ticks)) > 1e-6:
        raise ConfigInvalid("sim_duration_s", "must be a multiple of tick_s")
    if cfg.area_width_m <= 0 or cfg.area_height_m <= 0:
        raise ConfigInvalid("area", "width and height must be > 0")

    if len(cfg.mobility_mix) != 3:
        raise ConfigInvalid("mobility_mix", "need three fractions (rwp, gauss_markov, clustered)")
    for v in cfg.mobility_mix:
        _check_fraction("mobility_mix", v)
    if abs(sum(cfg.mobility_mix) - 1.0) > 1e-9:
        raise ConfigInvalid("mobility_mix", f"must sum to 1, got {sum(cfg.mobility_mix)}")
    if not cfg.vehicle_classes:
        raise ConfigInvalid("vehicle_classes", "need at least one class")
    for c in cfg.vehicle_classes:
        _check_fraction("vehicle_classes", c.fraction)
        if c.speed_min_mps < 0 or c.speed_min_mps > c.speed_max_mps:
            raise ConfigInvalid("vehicle_classes", f"bad speed range {c.speed_min_mps}..{c.speed_max_mps}")
    if abs(sum(c.fraction for c in cfg.vehicle_classes) - 1.0) > 1e-9:
        raise ConfigInvalid("vehicle_classes", "fractions must sum to 1")
    _check_fraction("gm_memory", cfg.gm_memory)

    for name in ("failure_fraction", "energy_threshold_frac", "lambda_"):
        _check_fraction(name, getattr(cfg, name))
    for name in ("failure_window_s", "msg_interval_s", "msg_size_bytes", "buffer_bytes", "dwell_s"):
        _check_interval(name, getattr(cfg, name))
    if cfg.msg_interval_s[0] <= 0:
        raise ConfigInvalid("msg_interval_s", "must be > 0")
    if cfg.msg_size_bytes[0] <= 0:
        raise ConfigInvalid("msg_size_bytes", "must be > 0")

    if not (0.0 < cfg.gamma < 1.0):
        raise ConfigInvalid("gamma", f"must be in (0, 1), got {cfg.gamma}")
    if cfg.alpha_actor <= 0:
        raise ConfigInvalid("alpha_actor", "must be > 0")
    if cfg.alpha_critic <= 0:
        raise ConfigInvalid("alpha_critic", "must be > 0")
    if cfg.delta_scale <= 0:
        raise ConfigInvalid("delta_scale", "must be > 0")
    if cfg.entropy_coeff < 0:
        raise ConfigInvalid("entropy_coeff", "must be >= 0")
    if len(cfg.reward_weights) != 3:
        raise ConfigInvalid("reward_weights", "need (M1, M2, M3)")
    if cfg.learning_mode not in ("train", "eval"):
        raise ConfigInvalid("learning_mode", "must be 'train' or 'eval'")
    if cfg.hidden_units < 0 or cfg.replay_batch_size < 1 or cfg.replay_capacity < 1:
        raise ConfigInvalid("learning", "hidden_units >= 0, replay sizes >= 1")

    for name in (
        "initial_energy", "member_range_m", "ch_range_m", "range_extension_factor",
        "node_beacon_period_s", "ch_beacon_period_s", "recluster_period_s",
        "encounter_window_s", "recharge_interval_s", "msg_ttl_s", "base_rate_Bps",
        "mimo_rate_multiplier", "sample_period_s", "grad_clip_norm",
    ):
        if getattr(cfg, name) <= 0:
            raise ConfigInvalid(name, "must be > 0")
    for name in ("scan_drain_per_s", "tx_drain_per_s", "rx_drain_per_s"):
        if getattr(cfg, name) < 0:
            raise ConfigInvalid(name, "must be >= 0")
    if cfg.hop_limit < 1:
        raise ConfigInvalid("hop_limit", "must be >= 1")
    if cfg.protocol not in (Protocol.CRDRL, Protocol.SCF_EPIDEMIC):
        raise ConfigInvalid("protocol", f"unknown protocol {cfg.protocol}")
    return cfg


# ---------------------------------------------------------------------------
# flat key-value format
# ---------------------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError(f"expected 'min,max', got {text!r}")
    return vals  # type: ignore[return-value]


def _triple(text: str) -> tuple[float, float, float]:
    vals = _floats(text)
    if len(vals) != 3:
        raise ValueError(f"expected three comma-separated values, got {text!r}")
    return vals  # type: ignore[return-value]


def _classes(text: str) -> tuple[VehicleClass, ...]:
    # "0.8:8:15; 0.2:4:8"
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(p) for p in chunk.split(":")]
        if len(parts) != 3:
            raise ValueError(f"vehicle class needs fraction:min:max, got {chunk!r}")
        out.append(VehicleClass(*parts))
    return tuple(out)


def _protocol(text: str) -> Protocol:
    t = text.strip().upper().replace("-", "_")
    aliases = {"SCF": "SCF_EPIDEMIC", "EPIDEMIC": "SCF_EPIDEMIC", "CR_DRL": "CRDRL"}
    return Protocol(aliases.get(t, t))


def _int(text: str) -> int:
    f = float(text)
    if f != int(f):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(f)


def _bool_mode(text: str) -> str:
    return text.strip().lower()


# dotted key -> (field name, parser)
KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "scenario.node_count": ("node_count", _int),
    "scenario.duration_s": ("sim_duration_s", float),
    "scenario.tick_s": ("tick_s", float),
    "scenario.seed": ("seed", _int),
    "scenario.protocol": ("protocol", _protocol),
    "area.width_m": ("area_width_m", float),
    "area.height_m": ("area_height_m", float),
    "mobility.mix": ("mobility_mix", _triple),
    "mobility.vehicle_classes": ("vehicle_classes", _classes),
    "mobility.gm_memory": ("gm_memory", float),
    "mobility.gm_heading_noise_rad": ("gm_heading_noise_rad", float),
    "mobility.hotspot_count": ("hotspot_count", _int),
    "mobility.hotspot_radius_m": ("hotspot_radius_m", float),
    "mobility.dwell_s": ("dwell_s", _pair),
    "failure.fraction": ("failure_fraction", float),
    "failure.window_s": ("failure_window_s", _pair),
    "traffic.ttl_s": ("msg_ttl_s", float),
    "traffic.hop_limit": ("hop_limit", _int),
    "traffic.interval_s": ("msg_interval_s", _pair),
    "traffic.size_bytes": ("msg_size_bytes", _pair),
    "node.buffer_bytes": ("buffer_bytes", _pair),
    "energy.initial": ("initial_energy", float),
    "energy.scan_per_s": ("scan_drain_per_s", float),
    "energy.tx_per_s": ("tx_drain_per_s", float),
    "energy.rx_per_s": ("rx_drain_per_s", float),
    "energy.recharge_interval_s": ("recharge_interval_s", float),
    "radio.member_range_m": ("member_range_m", float),
    "radio.ch_range_m": ("ch_range_m", float),
    "radio.range_extension_factor": ("range_extension_factor", float),
    "radio.node_beacon_period_s": ("node_beacon_period_s", float),
    "radio.ch_beacon_period_s": ("ch_beacon_period_s", float),
    "radio.base_rate_Bps": ("base_rate_Bps", float),
    "radio.mimo_rate_multiplier": ("mimo_rate_multiplier", float),
    "radio.reliability_horizon_s": ("reliability_horizon_s", float),
    "clustering.recluster_period_s": ("recluster_period_s", float),
    "clustering.delta": ("delta_scale", float),
    "clustering.energy_threshold_frac": ("energy_threshold_frac", float),
    "encounter.lambda": ("lambda_", float),
    "encounter.window_s": ("encounter_window_s", float),
    "learning.gamma": ("gamma", float),
    "learning.alpha_actor": ("alpha_actor", float),
    "learning.alpha_critic": ("alpha_critic", float),
    "learning.entropy_coeff": ("entropy_coeff", float),
    "learning.reward_weights": ("reward_weights", _triple),
    "learning.hidden_units": ("hidden_units", _int),
    "learning.grad_clip_norm": ("grad_clip_norm", float),
    "learning.replay_capacity": ("replay_capacity", _int),
    "learning.replay_batch_size": ("replay_batch_size", _int),
    "learning.mode": ("learning_mode", _bool_mode),
    "metrics.sample_period_s": ("sample_period_s", float),
}


def apply_overrides(cfg: ScenarioConfig, pairs: dict[str, str]) -> ScenarioConfig:
    """Apply dotted-key string overrides (same syntax as the file) and validate."""
    changes: dict[str, Any] = {}
    for key, raw in pairs.items():
        if key not in KEYS:
            raise UnknownKey(key)
        name, parse = KEYS[key]
        try:
            changes[name] = parse(raw)
        except ValueError as exc:
            raise ConfigInvalid(name, str(exc)) from None
    return validate(cfg.replace(**changes))


def parse_config_text(text: str) -> ScenarioConfig:
    changes: dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(line_no, f"expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise UnknownKey(key, line_no)
        name, parse = KEYS[key]
        try:
            changes[name] = parse(raw)
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None
    return validate(ScenarioConfig(**changes))


def parse_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return parse_config_text(p.read_text())
