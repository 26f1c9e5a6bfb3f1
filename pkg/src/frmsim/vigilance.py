"""Real-time vigilance assessment.

Covers the automated drowsiness detector (a stochastic stand-in for a
camera-based monitoring system), blinded rating-task assignment to
remote human raters, the two escalation routes, safety-conservative
aggregation of ordinal ratings, rater qualification, and inter-rater
reliability.

Rating tasks deliberately carry no field that reveals whether they were
escalated or drawn by routine periodic sampling; blinding is structural.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

__all__ = [
    "AlertEvent",
    "DmsConfig",
    "DmsFlag",
    "DROWSINESS_INDICATORS",
    "DuplicateFlagError",
    "EscalationCase",
    "Feed",
    "InsufficientRatersError",
    "NoSharedTasksError",
    "OBSERVATION_ITEMS",
    "OrdRating",
    "RaterProfile",
    "RatingTask",
    "Resolution",
    "Route",
    "SupervisorAction",
    "UnqualifiedRaterError",
    "aggregate",
    "assign_rating_tasks",
    "dms_observe",
    "inter_rater_reliability",
    "issue_multimodal_alert",
    "linear_weighted_kappa",
    "qualify_rater",
    "rate",
    "run_route_one",
    "run_route_two",
]

ALERT_MODALITIES = ("tone", "vibration", "light")

# Visible drowsiness mannerisms per level, grouped by body region.
DROWSINESS_INDICATORS: dict[int, dict[str, tuple[str, ...]]] = {
    1: {
        "eyes": ("fast_blinking", "short_glances"),
        "face_head": ("alert_expression",),
        "body": ("occasional_gestures",),
    },
    2: {
        "eyes": ("longer_glances", "slower_blinks"),
        "face_head": ("less_sharp_look",),
        "body": (),
    },
    3: {
        "eyes": ("eye_rubbing", "fixed_stare"),
        "face_head": ("face_rubbing", "facial_contortions", "subdued_expression"),
        "body": ("restless_movements", "scratching"),
    },
    4: {
        "eyes": ("eyelid_closure_2s", "eye_rolling"),
        "face_head": (),
        "body": ("reduced_activity",),
    },
    5: {
        "eyes": ("eyelid_closure_over_4s",),
        "face_head": ("dozing_transitions",),
        "body": ("inactivity_periods", "large_postural_shifts"),
    },
}

# Secondary-task observations; recorded but never part of the drowsiness level.
OBSERVATION_ITEMS = ("device_use", "hands_placement")

_ALL_INDICATOR_NAMES = frozenset(
    name
    for by_cat in DROWSINESS_INDICATORS.values()
    for names in by_cat.values()
    for name in names
)

# Probability a rater marks an indicator belonging to the emitted level,
# and one belonging to an adjacent level.
LEVEL_INDICATOR_P = 0.7
ADJACENT_INDICATOR_P = 0.2
OBSERVATION_P = 0.05


class Route(str, Enum):
    ROUTE_ONE = "route_one"
    ROUTE_TWO = "route_two"


class Resolution(str, Enum):
    CONFIRMED = "confirmed"
    NOT_CONFIRMED = "not_confirmed"


class SupervisorAction(str, Enum):
    CHECK_IN = "check_in"
    INVITE_BREAK = "invite_break"
    RETRIEVE_VEHICLE = "retrieve_vehicle"


class DuplicateFlagError(ValueError):
    pass


class InsufficientRatersError(ValueError):
    pass


class UnqualifiedRaterError(ValueError):
    pass


class NoSharedTasksError(ValueError):
    pass


@dataclass(frozen=True)
class DmsConfig:
    detect_threshold_ord: int = 4
    false_positive_rate: float = 0.01
    false_negative_rate: float = 0.1
    observation_period: float = 60.0

    def __post_init__(self) -> None:
        if not 2 <= self.detect_threshold_ord <= 5:
            raise ValueError("detect_threshold_ord must be in 2..5")
        for name in ("false_positive_rate", "false_negative_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.observation_period <= 0:
            raise ValueError("observation_period must be positive")


@dataclass(frozen=True)
class DmsFlag:
    flag_id: str
    specialist_id: str
    time: float


@dataclass(frozen=True)
class AlertEvent:
    flag_id: str
    specialist_id: str
    time: float
    modalities: tuple[str, ...] = ALERT_MODALITIES


@dataclass(frozen=True)
class Feed:
    """A rateable video window. ``escalated`` steers assignment only and
    is never copied onto the resulting task."""

    specialist_id: str
    window_start: float
    window_end: float
    escalated: bool = False


@dataclass(frozen=True)
class RatingTask:
    task_id: str
    specialist_id: str
    window_start: float
    window_end: float
    assigned_rater_ids: tuple[str, ...]

    def to_record(self) -> dict:
        """Serialized form; identical schema for periodic and escalated."""
        return {
            "task_id": self.task_id,
            "specialist_id": self.specialist_id,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "assigned_rater_ids": list(self.assigned_rater_ids),
        }


@dataclass(frozen=True)
class OrdRating:
    rater_id: str
    task_id: str
    level: int
    indicators: frozenset[str] = frozenset()
    observations: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not 1 <= self.level <= 5:
            raise ValueError("level must be in 1..5")
        unknown = self.indicators - _ALL_INDICATOR_NAMES
        if unknown:
            raise ValueError(f"unknown indicators: {sorted(unknown)}")
        bad_obs = self.observations - set(OBSERVATION_ITEMS)
        if bad_obs:
            raise ValueError(f"unknown observations: {sorted(bad_obs)}")


@dataclass(frozen=True)
class RaterProfile:
    rater_id: str
    bias: float = 0.0
    noise_sd: float = 0.0
    qualified: bool = True


@dataclass(frozen=True)
class EscalationCase:
    case_id: str
    route: Route
    trigger: str
    specialist_id: str
    validation_ratings: tuple[OrdRating, ...]
    validated_level: int
    resolution: Resolution
    supervisor_action: Optional[SupervisorAction] = None


def dms_observe(
    true_ord: int,
    cfg: DmsConfig,
    rng: random.Random,
    *,
    flag_id: str = "flag-0",
    specialist_id: str = "",
    time: float = 0.0,
) -> Optional[DmsFlag]:
    """Single noisy detector observation of the ground-truth level."""
    if not 1 <= true_ord <= 5:
        raise ValueError("true_ord must be in 1..5")
    if true_ord >= cfg.detect_threshold_ord:
        fires = rng.random() >= cfg.false_negative_rate
    else:
        fires = rng.random() < cfg.false_positive_rate
    if not fires:
        return None
    return DmsFlag(flag_id=flag_id, specialist_id=specialist_id, time=time)


def issue_multimodal_alert(flag: DmsFlag, issued_flag_ids: set[str]) -> AlertEvent:
    """In-cabin alert for a detector flag; one alert per flag id, ever."""
    if flag.flag_id in issued_flag_ids:
        raise DuplicateFlagError(f"alert already issued for flag {flag.flag_id}")
    issued_flag_ids.add(flag.flag_id)
    return AlertEvent(flag_id=flag.flag_id, specialist_id=flag.specialist_id, time=flag.time)


def assign_rating_tasks(
    pool: Sequence[RaterProfile],
    feeds: Sequence[Feed],
    k: int,
    rng: random.Random,
    *,
    first_task_index: int = 0,
) -> list[RatingTask]:
    """Assign feeds to raters: k distinct qualified raters per escalated
    feed, one per periodic feed. Task records carry no origin marker."""
    if k < 2:
        raise ValueError("k must be at least 2 for escalated feeds")
    qualified = [r for r in pool if r.qualified]
    tasks = []
    index = first_task_index
    for feed in feeds:
        n = k if feed.escalated else 1
        if len(qualified) < n:
            raise InsufficientRatersError(
                f"need {n} qualified raters, pool has {len(qualified)}"
            )
        chosen = rng.sample(qualified, n)
        tasks.append(
            RatingTask(
                task_id=f"task-{index:06d}",
                specialist_id=feed.specialist_id,
                window_start=feed.window_start,
                window_end=feed.window_end,
                assigned_rater_ids=tuple(r.rater_id for r in chosen),
            )
        )
        index += 1
    return tasks


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _emit_level(rater: RaterProfile, true_ord: int, rng: random.Random) -> int:
    value = float(true_ord) + rater.bias
    if rater.noise_sd > 0:
        value += rng.gauss(0.0, rater.noise_sd)
    return max(1, min(5, _round_half_up(value)))


def _sample_indicators(
    level: int, rng: random.Random
) -> tuple[frozenset[str], frozenset[str]]:
    picked = set()
    own = sorted(
        name for names in DROWSINESS_INDICATORS[level].values() for name in names
    )
    for name in own:
        if rng.random() < LEVEL_INDICATOR_P:
            picked.add(name)
    for adjacent in (level - 1, level + 1):
        if adjacent in DROWSINESS_INDICATORS:
            for names in DROWSINESS_INDICATORS[adjacent].values():
                for name in sorted(names):
                    if rng.random() < ADJACENT_INDICATOR_P:
                        picked.add(name)
    if not picked & set(own):
        # A rating always cites at least one mannerism of its own level.
        picked.add(rng.choice(own))
    observations = frozenset(
        item for item in OBSERVATION_ITEMS if rng.random() < OBSERVATION_P
    )
    return frozenset(picked), observations


def rate(
    rater: RaterProfile, task: RatingTask, true_ord: int, rng: random.Random
) -> OrdRating:
    """One independent blinded rating of a feed with known ground truth."""
    if not rater.qualified:
        raise UnqualifiedRaterError(f"rater {rater.rater_id} is not qualified")
    if not 1 <= true_ord <= 5:
        raise ValueError("true_ord must be in 1..5")
    level = _emit_level(rater, true_ord, rng)
    indicators, observations = _sample_indicators(level, rng)
    return OrdRating(
        rater_id=rater.rater_id,
        task_id=task.task_id,
        level=level,
        indicators=indicators,
        observations=observations,
    )


def aggregate(ratings: Sequence[OrdRating]) -> int:
    """Median rating level; even counts resolve to the drowsier middle."""
    if not ratings:
        raise ValueError("cannot aggregate an empty rating list")
    levels = sorted(r.level for r in ratings)
    return levels[len(levels) // 2]


def _post_validation_action(
    resolution: Resolution, validated_level: int
) -> Optional[SupervisorAction]:
    if resolution is not Resolution.CONFIRMED:
        return None
    if validated_level >= 5:
        return SupervisorAction.RETRIEVE_VEHICLE
    return SupervisorAction.INVITE_BREAK


def _validate(
    pool: Sequence[RaterProfile],
    feed: Feed,
    k: int,
    true_ord: int,
    rng: random.Random,
    first_task_index: int,
) -> tuple[RatingTask, tuple[OrdRating, ...]]:
    task = assign_rating_tasks(
        pool, [feed], k, rng, first_task_index=first_task_index
    )[0]
    by_id = {r.rater_id: r for r in pool}
    ratings = tuple(
        rate(by_id[rater_id], task, true_ord, rng)
        for rater_id in task.assigned_rater_ids
    )
    return task, ratings


def run_route_one(
    flag: DmsFlag,
    pool: Sequence[RaterProfile],
    k: int,
    true_ord: int,
    cfg: DmsConfig,
    rng: random.Random,
    *,
    issued_flag_ids: set[str],
    case_id: str = "case-0",
    first_task_index: int = 0,
) -> tuple[AlertEvent, EscalationCase]:
    """Detector-triggered escalation: alert the specialist first, then
    validate the flag with k independent blinded ratings."""
    alert = issue_multimodal_alert(flag, issued_flag_ids)
    feed = Feed(flag.specialist_id, flag.time - cfg.observation_period, flag.time, True)
    _, ratings = _validate(pool, feed, k, true_ord, rng, first_task_index)
    level = aggregate(ratings)
    resolution = (
        Resolution.CONFIRMED
        if level >= cfg.detect_threshold_ord
        else Resolution.NOT_CONFIRMED
    )
    case = EscalationCase(
        case_id=case_id,
        route=Route.ROUTE_ONE,
        trigger="dms_flag",
        specialist_id=flag.specialist_id,
        validation_ratings=ratings,
        validated_level=level,
        resolution=resolution,
        supervisor_action=_post_validation_action(resolution, level),
    )
    return alert, case


def run_route_two(
    single_rating: OrdRating,
    pool: Sequence[RaterProfile],
    k: int,
    true_ord: int,
    rng: random.Random,
    *,
    specialist_id: str,
    window: tuple[float, float],
    high_threshold: int = 4,
    case_id: str = "case-0",
    first_task_index: int = 0,
) -> EscalationCase:
    """Escalation from a single high periodic rating: the supervisor
    checks in immediately, then k additional raters validate."""
    if single_rating.level < high_threshold:
        raise ValueError(
            f"rating level {single_rating.level} below high threshold {high_threshold}"
        )
    validators = [r for r in pool if r.rater_id != single_rating.rater_id]
    feed = Feed(specialist_id, window[0], window[1], True)
    _, ratings = _validate(validators, feed, k, true_ord, rng, first_task_index)
    level = aggregate(ratings)
    resolution = (
        Resolution.CONFIRMED if level >= high_threshold else Resolution.NOT_CONFIRMED
    )
    action = SupervisorAction.CHECK_IN
    if resolution is Resolution.CONFIRMED and level >= 5:
        action = SupervisorAction.RETRIEVE_VEHICLE
    return EscalationCase(
        case_id=case_id,
        route=Route.ROUTE_TWO,
        trigger="single_high_rating",
        specialist_id=specialist_id,
        validation_ratings=ratings,
        validated_level=level,
        resolution=resolution,
        supervisor_action=action,
    )


def linear_weighted_kappa(pairs: Sequence[tuple[int, int]], n_levels: int = 5) -> float:
    """Linearly weighted kappa for two raters over paired ordinal levels."""
    if not pairs:
        raise ValueError("no paired ratings")
    n = len(pairs)
    span = n_levels - 1
    row = [0.0] * n_levels
    col = [0.0] * n_levels
    observed = 0.0
    for a, b in pairs:
        observed += 1.0 - abs(a - b) / span
        row[a - 1] += 1.0
        col[b - 1] += 1.0
    p_obs = observed / n
    p_exp = 0.0
    for i in range(n_levels):
        for j in range(n_levels):
            weight = 1.0 - abs(i - j) / span
            p_exp += weight * (row[i] / n) * (col[j] / n)
    if p_exp >= 1.0:
        # Degenerate marginals: agreement is complete or undefined.
        return 1.0 if p_obs >= 1.0 else 0.0
    return (p_obs - p_exp) / (1.0 - p_exp)


def inter_rater_reliability(ratings: Iterable[OrdRating]) -> float:
    """Mean pairwise linearly weighted kappa over raters sharing tasks."""
    by_task: dict[str, dict[str, int]] = {}
    for rating in ratings:
        by_task.setdefault(rating.task_id, {})[rating.rater_id] = rating.level
    shared: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for levels_by_rater in by_task.values():
        rater_ids = sorted(levels_by_rater)
        for i, a in enumerate(rater_ids):
            for b in rater_ids[i + 1 :]:
                shared.setdefault((a, b), []).append(
                    (levels_by_rater[a], levels_by_rater[b])
                )
    if not shared:
        raise NoSharedTasksError("no pair of raters shares a task")
    kappas = [linear_weighted_kappa(pairs) for _, pairs in sorted(shared.items())]
    return sum(kappas) / len(kappas)


def qualify_rater(
    rater: RaterProfile,
    test_set: Sequence[tuple[int, frozenset[str]]],
    rng: random.Random,
    *,
    exact_match_threshold: float = 0.8,
    max_mean_abs_error: float = 0.5,
) -> bool:
    """Score a candidate against a vetted test set of known levels."""
    if not test_set:
        raise ValueError("test set must be non-empty")
    matches = 0
    abs_error = 0.0
    for true_ord, _expected_indicators in test_set:
        emitted = _emit_level(rater, true_ord, rng)
        if emitted == true_ord:
            matches += 1
        abs_error += abs(emitted - true_ord)
    n = len(test_set)
    return matches / n >= exact_match_threshold and abs_error / n <= max_mean_abs_error
