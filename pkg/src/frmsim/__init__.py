"""Deterministic fatigue-risk-management engine and fleet-shift simulator."""

from .config import ScenarioConfig, Toggles, default_config
from .events import EventLog
from .metrics import Metrics, compute_metrics
from .sim import calibrate_session_length_effect, run_ablation, run_scenario

__version__ = "0.1.0"

__all__ = [
    "EventLog",
    "Metrics",
    "ScenarioConfig",
    "Toggles",
    "__version__",
    "calibrate_session_length_effect",
    "compute_metrics",
    "default_config",
    "run_ablation",
    "run_scenario",
]
