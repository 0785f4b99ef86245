"""Clustered opportunistic-network routing with an actor-critic cluster-head policy, plus an epidemic baseline."""

from .config import ConfigInvalid, Protocol, ScenarioConfig, parse_config, validate
from .engine import SimulationDiverged, run_scenario, simulate
from .metrics import MetricsReport, compute_kpis

__all__ = [
    "ConfigInvalid", "MetricsReport", "Protocol", "ScenarioConfig", "SimulationDiverged",
    "compute_kpis", "parse_config", "run_scenario", "simulate", "validate",
]
__version__ = "0.1.0"
