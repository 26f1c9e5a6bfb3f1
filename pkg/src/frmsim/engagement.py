"""Supplemental engagement: interactive cognitive task (ICT) scheduling
and secondary alerts (SA) after automated-to-manual control transitions.

Each specialist owns one ICT state machine: a prompt is issued after an
interactivity gap in time or distance, must be answered before a
deadline, a first miss triggers an immediate follow-up prompt, and a
missed follow-up triggers an intervention. Prompts are voided without
penalty whenever driving demand is high.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

__all__ = [
    "EngagementConfig",
    "IctOutcome",
    "IctPrompt",
    "IctRecord",
    "IctResolution",
    "IctSchedulerState",
    "IctTrigger",
    "Intervention",
    "SaAction",
    "SaConfig",
    "SaDecision",
    "SaDecisionInput",
    "SaResolution",
    "TransitionCause",
    "ict_adapt",
    "ict_tick",
    "ict_resolve",
    "record_interactivity",
    "sa_evaluate",
    "sa_resolve",
]

INTERVENTION_ACTIONS = ("contact_support", "start_video_stream", "hmi_alert")


class IctTrigger(str, Enum):
    GAP_TIME = "gap_time"
    GAP_DISTANCE = "gap_distance"
    FOLLOWUP = "followup"


class IctOutcome(str, Enum):
    COMPLETED = "completed"
    MISSED = "missed"
    VOIDED_BY_DEMAND = "voided_by_demand"


@dataclass(frozen=True)
class EngagementConfig:
    gap_time_s: float = 300.0
    gap_distance_m: float = 3000.0
    jitter: float = 0.2
    response_deadline_s: float = 30.0
    adapt_window: int = 10
    miss_rate_threshold: float = 0.2
    slow_latency_threshold_s: float = 15.0
    multiplier_floor: float = 0.25

    def __post_init__(self) -> None:
        if self.gap_time_s <= 0 or self.gap_distance_m <= 0:
            raise ValueError("gap thresholds must be positive")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError("jitter must be in [0, 1)")
        if self.response_deadline_s <= 0:
            raise ValueError("response_deadline_s must be positive")
        if not 0.0 < self.multiplier_floor <= 1.0:
            raise ValueError("multiplier_floor must be in (0, 1]")


@dataclass(frozen=True)
class IctPrompt:
    prompt_id: str
    issued_at: float
    deadline: float
    trigger: IctTrigger
    is_followup: bool = False
    followup_of: Optional[str] = None


@dataclass(frozen=True)
class IctRecord:
    prompt_id: str
    trigger: IctTrigger
    outcome: IctOutcome
    response_latency: Optional[float] = None
    followup_of: Optional[str] = None

    def __post_init__(self) -> None:
        if self.trigger is IctTrigger.FOLLOWUP and self.followup_of is None:
            raise ValueError("follow-up records must reference the missed prompt")


@dataclass(frozen=True)
class Intervention:
    prompt_id: str
    time: float
    actions: tuple[str, ...] = INTERVENTION_ACTIONS


@dataclass(frozen=True)
class IctResolution:
    record: IctRecord
    followup: Optional[IctPrompt] = None
    intervention: Optional[Intervention] = None
    pull_over_recommended: bool = False


@dataclass
class IctSchedulerState:
    specialist_id: str
    last_interactivity_time: float = 0.0
    last_interactivity_odometer: float = 0.0
    pending: Optional[IctPrompt] = None
    recent_outcomes: deque = field(default_factory=lambda: deque(maxlen=50))
    frequency_multiplier: float = 1.0
    interventions_this_shift: int = 0
    prompt_seq: int = 0

    def __post_init__(self) -> None:
        if self.frequency_multiplier <= 0:
            raise ValueError("frequency_multiplier must be positive")


def record_interactivity(
    state: IctSchedulerState,
    now: float,
    odometer: float,
    demand_high: bool = False,
) -> Optional[IctRecord]:
    """Register specialist/vehicle interaction, resetting gap baselines.

    A pending prompt survives ordinary interaction (only its own response
    completes it) but is voided when driving demand is high. Returns the
    voided record, if any.
    """
    if now < state.last_interactivity_time:
        raise ValueError(
            f"time regression: {now} < {state.last_interactivity_time}"
        )
    if odometer < state.last_interactivity_odometer:
        raise ValueError(
            f"odometer regression: {odometer} < {state.last_interactivity_odometer}"
        )
    state.last_interactivity_time = now
    state.last_interactivity_odometer = odometer
    if state.pending is not None and demand_high:
        record = IctRecord(
            prompt_id=state.pending.prompt_id,
            trigger=state.pending.trigger,
            outcome=IctOutcome.VOIDED_BY_DEMAND,
            followup_of=state.pending.followup_of,
        )
        state.pending = None
        state.recent_outcomes.append(record)
        return record
    return None


def ict_tick(
    state: IctSchedulerState,
    now: float,
    odometer: float,
    demand_high: bool,
    rng: random.Random,
    cfg: EngagementConfig,
) -> Optional[IctPrompt]:
    """Issue a prompt when the interactivity gap crosses its jittered
    threshold; never while one is pending or demand is high."""
    if state.pending is not None or demand_high:
        return None
    time_gap = now - state.last_interactivity_time
    distance_gap = odometer - state.last_interactivity_odometer
    jitter = 1.0
    if cfg.jitter > 0:
        jitter = rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter)
    scale = state.frequency_multiplier * jitter
    if time_gap >= cfg.gap_time_s * scale:
        trigger = IctTrigger.GAP_TIME
    elif distance_gap >= cfg.gap_distance_m * scale:
        trigger = IctTrigger.GAP_DISTANCE
    else:
        return None
    prompt = IctPrompt(
        prompt_id=f"{state.specialist_id}-ict-{state.prompt_seq}",
        issued_at=now,
        deadline=now + cfg.response_deadline_s,
        trigger=trigger,
    )
    state.prompt_seq += 1
    state.pending = prompt
    return prompt


def ict_resolve(
    state: IctSchedulerState,
    signal: str,
    now: float,
    cfg: EngagementConfig,
    latency_s: Optional[float] = None,
) -> IctResolution:
    """Terminate the pending prompt.

    ``signal`` is one of ``responded`` (with ``latency_s``),
    ``deadline_passed``, or ``demand_rose``. A missed first prompt
    spawns an immediate follow-up; a missed follow-up produces exactly
    one intervention, and a second intervention within the shift adds a
    pull-over recommendation.
    """
    pending = state.pending
    if pending is None:
        raise ValueError("no pending prompt to resolve")
    if signal == "deadline_passed" and now <= pending.deadline:
        raise ValueError("deadline has not passed yet")
    if signal == "responded":
        if latency_s is None or latency_s < 0:
            raise ValueError("responded signal requires a nonnegative latency")
        if now > pending.deadline:
            raise ValueError("response arrived after the deadline")
        record = IctRecord(
            prompt_id=pending.prompt_id,
            trigger=pending.trigger,
            outcome=IctOutcome.COMPLETED,
            response_latency=latency_s,
            followup_of=pending.followup_of,
        )
        state.pending = None
        state.recent_outcomes.append(record)
        return IctResolution(record=record)
    if signal == "demand_rose":
        record = IctRecord(
            prompt_id=pending.prompt_id,
            trigger=pending.trigger,
            outcome=IctOutcome.VOIDED_BY_DEMAND,
            followup_of=pending.followup_of,
        )
        state.pending = None
        state.recent_outcomes.append(record)
        return IctResolution(record=record)
    if signal != "deadline_passed":
        raise ValueError(f"unknown outcome signal: {signal!r}")

    record = IctRecord(
        prompt_id=pending.prompt_id,
        trigger=pending.trigger,
        outcome=IctOutcome.MISSED,
        followup_of=pending.followup_of,
    )
    state.recent_outcomes.append(record)
    if not pending.is_followup:
        followup = IctPrompt(
            prompt_id=f"{state.specialist_id}-ict-{state.prompt_seq}",
            issued_at=now,
            deadline=now + cfg.response_deadline_s,
            trigger=IctTrigger.FOLLOWUP,
            is_followup=True,
            followup_of=pending.prompt_id,
        )
        state.prompt_seq += 1
        state.pending = followup
        return IctResolution(record=record, followup=followup)
    state.pending = None
    state.interventions_this_shift += 1
    intervention = Intervention(prompt_id=pending.prompt_id, time=now)
    return IctResolution(
        record=record,
        intervention=intervention,
        pull_over_recommended=state.interventions_this_shift >= 2,
    )


def ict_adapt(state: IctSchedulerState, cfg: EngagementConfig) -> float:
    """Retune prompt frequency from the recent outcome window.

    Misses or slow responses halve the multiplier (more frequent
    prompts); clean windows double it back toward 1.0. Voided prompts
    carry no penalty and are ignored.
    """
    window = list(state.recent_outcomes)[-cfg.adapt_window :]
    considered = [r for r in window if r.outcome is not IctOutcome.VOIDED_BY_DEMAND]
    if not considered:
        return state.frequency_multiplier
    misses = sum(1 for r in considered if r.outcome is IctOutcome.MISSED)
    miss_rate = misses / len(considered)
    latencies = [
        r.response_latency
        for r in considered
        if r.outcome is IctOutcome.COMPLETED and r.response_latency is not None
    ]
    slow = bool(latencies) and (
        sum(latencies) / len(latencies) > cfg.slow_latency_threshold_s
    )
    if miss_rate >= cfg.miss_rate_threshold or slow:
        state.frequency_multiplier = max(
            cfg.multiplier_floor, state.frequency_multiplier * 0.5
        )
    else:
        state.frequency_multiplier = min(1.0, state.frequency_multiplier * 2.0)
    return state.frequency_multiplier


class TransitionCause(str, Enum):
    BUTTON = "button"
    PEDAL = "pedal"
    STEERING = "steering"
    BRAKE = "brake"


class SaAction(str, Enum):
    NONE = "none"
    ISSUE = "issue"
    SUPPRESS_EMERGENCY = "suppress_emergency"


class SaResolution(str, Enum):
    CLEARED = "cleared"
    SUPPORT_ALERTED = "support_alerted"


@dataclass(frozen=True)
class SaConfig:
    cause_weights: tuple[tuple[str, float], ...] = (
        ("pedal", 0.5),
        ("steering", 0.35),
        ("brake", 0.35),
        ("button", 0.1),
    )
    no_input_before_weight: float = 0.2
    no_input_after_weight: float = 0.2
    speed_weight: float = 0.1
    speed_threshold_mps: float = 15.0
    issue_threshold: float = 0.6
    issue_delay_s: float = 5.0
    clear_timeout_s: float = 10.0

    def cause_weight(self, cause: TransitionCause) -> float:
        return dict(self.cause_weights)[cause.value]


@dataclass(frozen=True)
class SaDecisionInput:
    transition_cause: TransitionCause
    speed: float
    input_before: bool
    input_after: bool
    emergency: bool = False


@dataclass(frozen=True)
class SaDecision:
    action: SaAction
    rationale_score: float
    delay_s: Optional[float] = None


def sa_evaluate(inp: SaDecisionInput, cfg: SaConfig) -> SaDecision:
    """Decide whether a control transition warrants a secondary alert.

    The rationale score accumulates evidence that the transition was
    unintentional or unnoticed; emergencies suppress the alert outright.
    """
    score = cfg.cause_weight(inp.transition_cause)
    if not inp.input_before:
        score += cfg.no_input_before_weight
    if not inp.input_after:
        score += cfg.no_input_after_weight
    if inp.speed > cfg.speed_threshold_mps:
        score += cfg.speed_weight
    score = min(1.0, max(0.0, score))
    if inp.emergency:
        return SaDecision(action=SaAction.SUPPRESS_EMERGENCY, rationale_score=score)
    if score >= cfg.issue_threshold:
        return SaDecision(
            action=SaAction.ISSUE, rationale_score=score, delay_s=cfg.issue_delay_s
        )
    return SaDecision(action=SaAction.NONE, rationale_score=score)


def sa_resolve(
    decision: SaDecision, input_latency_s: Optional[float], cfg: SaConfig
) -> SaResolution:
    """Outcome of an issued alert: cleared by timely specialist input,
    otherwise support is alerted exactly once."""
    if decision.action is not SaAction.ISSUE:
        raise ValueError("cannot resolve an alert that was never issued")
    if input_latency_s is not None and input_latency_s <= cfg.clear_timeout_s:
        return SaResolution.CLEARED
    return SaResolution.SUPPORT_ALERTED
