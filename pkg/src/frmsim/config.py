"""Scenario configuration: fleet, policies, countermeasure toggles, and
deterministic hashing. Configurations round-trip through a versioned
JSON document; the hash of the canonical form stamps every output."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Optional

from .engagement import EngagementConfig, SaConfig
from .fatigue import ModelParams
from .scheduling import BreakPolicy, Stage
from .vigilance import DmsConfig, RaterProfile

__all__ = [
    "BehaviorConfig",
    "ConfigError",
    "ConfigParseError",
    "HazardConfig",
    "PfsPolicy",
    "ScenarioConfig",
    "ShiftConfig",
    "SpecialistDef",
    "Toggles",
    "VigilancePolicy",
    "default_config",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    """The configuration document is not valid JSON at all."""


@dataclass(frozen=True)
class SpecialistDef:
    specialist_id: str
    susceptibility: float = 1.0
    initial_sleep_pressure: float = 0.1
    stage: Stage = Stage.SINGLE_QUALIFIED
    dual: bool = False

    def __post_init__(self) -> None:
        if self.susceptibility <= 0:
            raise ConfigError("susceptibility must be positive")
        if not 0.0 <= self.initial_sleep_pressure <= 1.0:
            raise ConfigError("initial_sleep_pressure must be in [0, 1]")


@dataclass(frozen=True)
class ShiftConfig:
    start_min: int = 1320  # 22:00, where monotony and the circadian dip overlap
    duration_min: int = 480
    scheduled_breaks: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.start_min < 1440:
            raise ConfigError("start_min must be within one day")
        if not 0 < self.duration_min <= 840:
            raise ConfigError("duration_min must be in (0, 14 h]")
        for offset, length in self.scheduled_breaks:
            if offset < 0 or length <= 0 or offset + length > self.duration_min:
                raise ConfigError("scheduled break outside the shift")


@dataclass(frozen=True)
class Toggles:
    """Independent on/off switches for the five countermeasure blocks."""

    education: bool = True
    awareness: bool = True
    vigilance: bool = True
    engagement: bool = True
    scheduling: bool = True

    @classmethod
    def all_on(cls) -> "Toggles":
        return cls()

    @classmethod
    def all_off(cls) -> "Toggles":
        return cls(
            education=False,
            awareness=False,
            vigilance=False,
            engagement=False,
            scheduling=False,
        )

    def any_on(self) -> bool:
        return any(getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class VigilancePolicy:
    k_validation_raters: int = 3
    periodic_cadence_min: float = 30.0
    route_two_threshold: int = 4
    rating_latency_s: float = 30.0
    flag_cooldown_min: float = 10.0
    reliability_interval_min: float = 240.0
    qualification_items: int = 20
    qualification_match_threshold: float = 0.8
    post_confirm_break_min: float = 15.0

    def __post_init__(self) -> None:
        if self.k_validation_raters < 2:
            raise ConfigError("k_validation_raters must be at least 2")
        if not 1 <= self.route_two_threshold <= 5:
            raise ConfigError("route_two_threshold must be in 1..5")
        if self.rating_latency_s <= 0:
            raise ConfigError("rating_latency_s must be positive")


@dataclass(frozen=True)
class PfsPolicy:
    cadence_min: float = 120.0
    followup_due_min: float = 5.0
    break_compliance: float = 0.9
    followup_compliance: float = 0.9
    outreach_reassign_kss: int = 8

    def __post_init__(self) -> None:
        if self.cadence_min <= 0:
            raise ConfigError("cadence_min must be positive")
        for name in ("break_compliance", "followup_compliance"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class BehaviorConfig:
    """Parameters of the simulated specialist and vehicle behavior."""

    monotony: float = 0.9
    ict_miss_base_p: float = 0.01
    ict_latency_base_s: float = 3.0
    ict_latency_fatigue_s: float = 12.0
    ict_relief: float = 0.004
    alert_relief: float = 0.02
    impromptu_check_min: float = 15.0
    impromptu_kss_threshold: int = 7
    impromptu_p: float = 0.5
    invited_decline_p: float = 0.1
    break_activity_weights: tuple[float, float, float] = (0.6, 0.3, 0.1)
    transition_rate_per_h: float = 1.0
    emergency_p: float = 0.05
    manual_period_s: float = 60.0
    sa_clear_base_p: float = 0.6
    demand_period_min: float = 60.0
    demand_start_min: float = 40.0
    demand_duration_min: float = 5.0
    speed_mps: float = 12.0
    peer_concern_p_per_h: float = 0.05
    education_recovery_bonus: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 <= self.monotony <= 1.0:
            raise ConfigError("monotony must be in [0, 1]")
        for name in (
            "ict_miss_base_p",
            "ict_relief",
            "alert_relief",
            "impromptu_p",
            "invited_decline_p",
            "emergency_p",
            "sa_clear_base_p",
            "peer_concern_p_per_h",
            "education_recovery_bonus",
        ):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class HazardConfig:
    """Per-minute incautious-behavior hazard while driving on task.

    Defaults come from the packaged session-length calibration run
    (see ``calibrate_session_length_effect``); they make long sessions
    several times likelier than short ones to contain an event.
    """

    base_per_min: float = 0.0068037910
    task_load_gain: float = 0.1568490388
    alertness_gain: float = 0.01

    def rate(self, task_load: float, alertness: float) -> float:
        raw = (
            self.base_per_min
            + self.task_load_gain * task_load
            + self.alertness_gain * (1.0 - alertness)
        )
        return min(1.0, max(0.0, raw))

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"{f.name} must be nonnegative")


def _default_raters() -> tuple[RaterProfile, ...]:
    noises = (0.2, 0.25, 0.3, 0.2, 0.25, 0.3)
    return tuple(
        RaterProfile(rater_id=f"rater-{i}", bias=0.0, noise_sd=noise)
        for i, noise in enumerate(noises)
    )


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    horizon_days: int = 2
    fleet: tuple[SpecialistDef, ...] = (SpecialistDef(specialist_id="as-0"),)
    shift: ShiftConfig = ShiftConfig()
    model: ModelParams = ModelParams()
    dms: DmsConfig = DmsConfig()
    raters: tuple[RaterProfile, ...] = ()
    vigilance: VigilancePolicy = VigilancePolicy()
    ict: EngagementConfig = EngagementConfig()
    sa: SaConfig = SaConfig()
    breaks: BreakPolicy = BreakPolicy()
    pfs: PfsPolicy = PfsPolicy()
    behavior: BehaviorConfig = BehaviorConfig()
    hazard: HazardConfig = HazardConfig()
    toggles: Toggles = Toggles()
    sample_period_s: int = 60

    def validate(self) -> None:
        if self.horizon_days < 0:
            raise ConfigError("horizon_days must be nonnegative")
        if self.sample_period_s <= 0:
            raise ConfigError("sample_period_s must be positive")
        ids = [s.specialist_id for s in self.fleet]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate specialist ids")
        rater_ids = [r.rater_id for r in self.raters]
        if len(set(rater_ids)) != len(rater_ids):
            raise ConfigError("duplicate rater ids")
        if self.toggles.vigilance and len(self.raters) <= self.vigilance.k_validation_raters:
            raise ConfigError(
                "vigilance requires more raters than k_validation_raters"
            )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "horizon_days": self.horizon_days,
            "fleet": [
                {
                    "specialist_id": s.specialist_id,
                    "susceptibility": s.susceptibility,
                    "initial_sleep_pressure": s.initial_sleep_pressure,
                    "stage": s.stage.value,
                    "dual": s.dual,
                }
                for s in self.fleet
            ],
            "shift": {
                "start_min": self.shift.start_min,
                "duration_min": self.shift.duration_min,
                "scheduled_breaks": [list(b) for b in self.shift.scheduled_breaks],
            },
            "model": _plain_dict(self.model),
            "dms": _plain_dict(self.dms),
            "raters": [_plain_dict(r) for r in self.raters],
            "vigilance": _plain_dict(self.vigilance),
            "ict": _plain_dict(self.ict),
            "sa": _plain_dict(self.sa),
            "breaks": _plain_dict(self.breaks),
            "pfs": _plain_dict(self.pfs),
            "behavior": _plain_dict(self.behavior),
            "hazard": _plain_dict(self.hazard),
            "toggles": _plain_dict(self.toggles),
            "sample_period_s": self.sample_period_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            version = data["schema_version"]
            if version != SCHEMA_VERSION:
                raise ConfigError(f"unsupported schema_version {version}")
            cfg = cls(
                seed=int(data["seed"]),
                horizon_days=int(data["horizon_days"]),
                fleet=tuple(
                    SpecialistDef(
                        specialist_id=s["specialist_id"],
                        susceptibility=s.get("susceptibility", 1.0),
                        initial_sleep_pressure=s.get("initial_sleep_pressure", 0.1),
                        stage=Stage(s.get("stage", Stage.SINGLE_QUALIFIED.value)),
                        dual=s.get("dual", False),
                    )
                    for s in data["fleet"]
                ),
                shift=ShiftConfig(
                    start_min=data["shift"]["start_min"],
                    duration_min=data["shift"]["duration_min"],
                    scheduled_breaks=tuple(
                        (int(o), int(d))
                        for o, d in data["shift"].get("scheduled_breaks", [])
                    ),
                ),
                model=_build(ModelParams, data["model"]),
                dms=_build(DmsConfig, data["dms"]),
                raters=tuple(_build(RaterProfile, r) for r in data["raters"]),
                vigilance=_build(VigilancePolicy, data["vigilance"]),
                ict=_build(EngagementConfig, data["ict"]),
                sa=_build(SaConfig, data["sa"]),
                breaks=_build(BreakPolicy, data["breaks"]),
                pfs=_build(PfsPolicy, data["pfs"]),
                behavior=_build(BehaviorConfig, data["behavior"]),
                hazard=_build(HazardConfig, data["hazard"]),
                toggles=_build(Toggles, data["toggles"]),
                sample_period_s=int(data.get("sample_period_s", 60)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from exc
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(
                f"configuration is not valid JSON: {exc.msg}"
            ) from exc
        return cls.from_dict(data)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(
        self, seed: Optional[int] = None, toggles: Optional[Toggles] = None
    ) -> "ScenarioConfig":
        data = self.to_dict()
        if seed is not None:
            data["seed"] = seed
        if toggles is not None:
            data["toggles"] = _plain_dict(toggles)
        return ScenarioConfig.from_dict(data)


def _plain_dict(obj: Any) -> dict:
    out = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        out[f.name] = value
    return out


def _build(cls: type, data: dict) -> Any:
    kwargs = {}
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[f.name] = value
    return cls(**kwargs)


def default_config(seed: int = 0, **overrides) -> ScenarioConfig:
    """A one-specialist night-shift scenario with every block enabled."""
    cfg = ScenarioConfig(seed=seed, raters=_default_raters(), **overrides)
    cfg.validate()
    return cfg
