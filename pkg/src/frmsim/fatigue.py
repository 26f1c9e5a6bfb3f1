"""Continuous alertness model for a single specialist.

Tracks three components: sleep pressure that builds while awake and
discharges during sleep, a 24-hour sinusoidal sleepiness rhythm, and
task-related load that accumulates during monotonous supervision and
relaxes during breaks. Composite alertness is the complement of a
weighted sum of the three components, and maps onto the 9-point
self-report sleepiness scale (KSS) and the 5-level observer drowsiness
scale (ORD).

All update equations are exact exponential solutions, so a single step
of length dt equals any subdivision of it under constant context.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "AlertnessState",
    "BreakActivity",
    "FatigueContext",
    "ModelParams",
    "DEFAULT_ORD_EDGES",
    "circadian_dip",
    "compose_alertness",
    "step_alertness",
    "to_kss",
    "to_ord_truth",
]

# Bands on the alertness axis separating ORD levels 1..5 (descending).
DEFAULT_ORD_EDGES = (0.8, 0.6, 0.4, 0.2)


class BreakActivity(str, Enum):
    REST = "rest"
    PHYSICAL = "physical"
    SOCIAL = "social"


# Active breaks recover task load faster than passive rest.
_RECOVERY_TAU_SCALE = {
    BreakActivity.REST: 1.0,
    BreakActivity.PHYSICAL: 0.6,
    BreakActivity.SOCIAL: 0.7,
}


@dataclass(frozen=True)
class ModelParams:
    """Fixed parameters of the alertness model.

    Taus are time constants of the exponential component updates:
    ``homeostat_rise_tau`` and ``homeostat_decay_tau`` in hours,
    ``task_recovery_tau`` in minutes. ``task_load_rate`` is the per-hour
    rate constant of task-load accumulation at full monotony.
    ``component_weights`` weigh (sleep pressure, circadian dip, task
    load) and must sum to 1.
    """

    homeostat_rise_tau: float = 18.0
    homeostat_decay_tau: float = 4.0
    circadian_amplitude: float = 1.0
    circadian_trough_hour: float = 4.0
    task_load_rate: float = 0.3
    task_recovery_tau: float = 20.0
    component_weights: tuple[float, float, float] = (0.4, 0.2, 0.4)
    report_noise_sd: float = 0.05

    def __post_init__(self) -> None:
        for name in ("homeostat_rise_tau", "homeostat_decay_tau", "task_recovery_tau"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.circadian_amplitude <= 1.0:
            raise ValueError("circadian_amplitude must be in [0, 1]")
        if not 0.0 <= self.circadian_trough_hour < 24.0:
            raise ValueError("circadian_trough_hour must be in [0, 24)")
        if self.task_load_rate < 0:
            raise ValueError("task_load_rate must be nonnegative")
        if self.report_noise_sd < 0:
            raise ValueError("report_noise_sd must be nonnegative")
        w = self.component_weights
        if len(w) != 3 or any(x < 0 for x in w):
            raise ValueError("component_weights must be three nonnegative values")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("component_weights must sum to 1")


@dataclass(frozen=True)
class FatigueContext:
    """What the specialist is doing during a model step."""

    on_task: bool
    monotony: float = 0.0
    in_break: bool = False
    asleep: bool = False
    break_activity: BreakActivity = BreakActivity.REST

    def __post_init__(self) -> None:
        if not 0.0 <= self.monotony <= 1.0:
            raise ValueError("monotony must be in [0, 1]")
        if self.asleep and self.on_task:
            raise ValueError("asleep implies not on_task")
        if self.in_break and self.on_task:
            raise ValueError("in_break implies not on_task")


@dataclass(frozen=True)
class AlertnessState:
    """Instantaneous model state; ``alertness`` is derived from the rest."""

    homeostatic_pressure: float
    circadian_phase: float
    task_load: float
    alertness: float

    @classmethod
    def from_components(
        cls,
        homeostatic_pressure: float,
        circadian_phase: float,
        task_load: float,
        params: ModelParams,
    ) -> "AlertnessState":
        return cls(
            homeostatic_pressure=homeostatic_pressure,
            circadian_phase=circadian_phase,
            task_load=task_load,
            alertness=compose_alertness(
                homeostatic_pressure, circadian_phase, task_load, params
            ),
        )

    def __post_init__(self) -> None:
        if not 0.0 <= self.homeostatic_pressure <= 1.0:
            raise ValueError("homeostatic_pressure out of [0, 1]")
        if not 0.0 <= self.circadian_phase < 24.0:
            raise ValueError("circadian_phase out of [0, 24)")
        if not 0.0 <= self.task_load <= 1.0:
            raise ValueError("task_load out of [0, 1]")
        if not 0.0 <= self.alertness <= 1.0:
            raise ValueError("alertness out of [0, 1]")


def circadian_dip(phase: float, params: ModelParams) -> float:
    """Sleepiness contribution of the 24 h rhythm, peaking at the trough hour."""
    angle = 2.0 * math.pi * (phase - params.circadian_trough_hour) / 24.0
    return params.circadian_amplitude * 0.5 * (1.0 + math.cos(angle))


def compose_alertness(
    pressure: float, phase: float, task_load: float, params: ModelParams
) -> float:
    w1, w2, w3 = params.component_weights
    sleepiness = w1 * pressure + w2 * circadian_dip(phase, params) + w3 * task_load
    return 1.0 - min(1.0, max(0.0, sleepiness))


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def advance_components(
    pressure: float,
    phase: float,
    task_load: float,
    dt_s: float,
    ctx: FatigueContext,
    params: ModelParams,
) -> tuple[float, float, float]:
    """Advance the raw components by ``dt_s`` seconds under a constant context.

    Exposed separately from :func:`step_alertness` so callers holding
    plain floats (the simulation hot loop) avoid per-tick dataclass
    construction.
    """
    hours = dt_s / 3600.0
    if ctx.asleep:
        pressure = pressure * math.exp(-hours / params.homeostat_decay_tau)
    else:
        pressure = 1.0 - (1.0 - pressure) * math.exp(-hours / params.homeostat_rise_tau)
    phase = (phase + hours) % 24.0
    if ctx.on_task:
        rate = params.task_load_rate * ctx.monotony
        if rate > 0:
            task_load = 1.0 - (1.0 - task_load) * math.exp(-rate * hours)
    else:
        tau_min = params.task_recovery_tau
        if ctx.in_break:
            tau_min *= _RECOVERY_TAU_SCALE[ctx.break_activity]
        task_load = task_load * math.exp(-(dt_s / 60.0) / tau_min)
    return _clamp01(pressure), phase, _clamp01(task_load)


def step_alertness(
    state: AlertnessState, dt: float, ctx: FatigueContext, params: ModelParams
) -> AlertnessState:
    """Advance ``state`` by ``dt`` seconds under context ``ctx``."""
    if not isinstance(dt, (int, float)) or math.isnan(dt) or math.isinf(dt):
        raise ValueError(f"invalid dt: {dt!r}")
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if dt == 0:
        return state
    pressure, phase, task_load = advance_components(
        state.homeostatic_pressure,
        state.circadian_phase,
        state.task_load,
        dt,
        ctx,
        params,
    )
    return AlertnessState.from_components(pressure, phase, task_load, params)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def to_kss(state: AlertnessState, rng: random.Random, params: ModelParams) -> int:
    """Self-reported sleepiness on the 9-point scale (1 alert .. 9 sleepy).

    Quantizes (1 - alertness) affinely onto 1..9, adds report noise
    clamped at three standard deviations, rounds, and clamps to [1, 9].
    """
    sleepiness = 1.0 - state.alertness
    if params.report_noise_sd > 0:
        limit = 3.0 * params.report_noise_sd
        noise = rng.gauss(0.0, params.report_noise_sd)
        sleepiness += max(-limit, min(limit, noise))
    kss = _round_half_up(1.0 + 8.0 * sleepiness)
    return max(1, min(9, kss))


def to_ord_truth(
    state: AlertnessState, band_edges: tuple[float, ...] = DEFAULT_ORD_EDGES
) -> int:
    """Ground-truth observer drowsiness level 1..5 from alertness bands."""
    if list(band_edges) != sorted(band_edges, reverse=True) or len(band_edges) != 4:
        raise ValueError("band_edges must be four descending values")
    level = 1
    for edge in band_edges:
        if state.alertness < edge:
            level += 1
    return level
