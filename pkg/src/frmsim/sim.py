"""Deterministic fleet-shift simulator.

One scenario is a fixed-step (1 s) event loop over the horizon. All
randomness flows through a single seeded generator in a fixed iteration
order, so identical configurations produce byte-identical event logs.
Idle off-shift periods are bridged with exact exponential jumps, which
consume no randomness and leave logged behavior unchanged.

Also hosts the ablation driver and the session-length hazard
calibration.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from . import awareness as aw
from . import engagement as eng
from . import scheduling as sched
from . import vigilance as vig
from .config import ConfigError, HazardConfig, ScenarioConfig, Toggles
from .events import EventLog
from .fatigue import (
    BreakActivity,
    FatigueContext,
    ModelParams,
    advance_components,
    compose_alertness,
    to_kss,
    to_ord_truth,
)
from .metrics import Metrics, compute_metrics

__all__ = [
    "AblationResult",
    "CalibrationResult",
    "calibrate_session_length_effect",
    "run_ablation",
    "run_scenario",
    "session_length_stats",
]

SHIFT_DRAIN_S = 1800
INVITED_CHECK_S = 300
SIGNAL_RECENCY_S = 1800
PEER_MONOTONY = 0.5
RETRAIN_SHIFTS_OFF = 1

_BREAK_ACTIVITIES = (BreakActivity.REST, BreakActivity.PHYSICAL, BreakActivity.SOCIAL)

_IDLE = FatigueContext(on_task=False)
_ASLEEP = FatigueContext(on_task=False, asleep=True)


def _scaled_params(model: ModelParams, susceptibility: float) -> ModelParams:
    """Per-specialist susceptibility scales fatigue accumulation rates."""
    if susceptibility == 1.0:
        return model
    return ModelParams(
        homeostat_rise_tau=model.homeostat_rise_tau / susceptibility,
        homeostat_decay_tau=model.homeostat_decay_tau,
        circadian_amplitude=model.circadian_amplitude,
        circadian_trough_hour=model.circadian_trough_hour,
        task_load_rate=model.task_load_rate * susceptibility,
        task_recovery_tau=model.task_recovery_tau,
        component_weights=model.component_weights,
        report_noise_sd=model.report_noise_sd,
    )


class _Agent:
    """Mutable per-specialist runtime state."""

    def __init__(self, cfg: ScenarioConfig, spec) -> None:
        self.spec = spec
        self.params = _scaled_params(cfg.model, spec.susceptibility)
        self.pressure = spec.initial_sleep_pressure
        self.phase = 0.0
        self.task_load = 0.0
        self.comp_time = 0
        self.ctx = _IDLE
        self.on_shift = False
        self.driving = False
        self.in_break_until: Optional[int] = None
        self.session_start: Optional[int] = None
        self.session_had_incautious = False
        self.odometer = 0.0
        self.odometer_t = 0
        self.ict = eng.IctSchedulerState(specialist_id=spec.specialist_id)
        self.planned_response: Optional[float] = None
        self.outcomes_since_adapt = 0
        self.next_transition: Optional[int] = None
        self.manual_until: Optional[int] = None
        self.pending_followup_for: Optional[str] = None
        self.last_kss: Optional[tuple[int, int]] = None  # (time, value)
        self.last_confirmed: Optional[tuple[int, int]] = None  # (time, level)
        self.last_invited_offer: Optional[int] = None
        self.declines_this_shift = 0
        self.dms_cooldown_until = 0
        self.lifecycle = sched.SpecialistLifecycle(stage=spec.stage)
        self.shifts_until_return = 0
        self.pfs_seq = 0
        # Dual configuration adds a peer with their own fatigue dynamics.
        self.peer_pressure = spec.initial_sleep_pressure if spec.dual else 0.0
        self.peer_phase = 0.0
        self.peer_task_load = 0.0

    # -- lazy fatigue integration ------------------------------------

    def advance_to(self, t: int) -> None:
        if t > self.comp_time:
            self.pressure, self.phase, self.task_load = advance_components(
                self.pressure,
                self.phase,
                self.task_load,
                t - self.comp_time,
                self.ctx,
                self.params,
            )
            self.comp_time = t

    def set_ctx(self, t: int, ctx: FatigueContext) -> None:
        self.advance_to(t)
        self.ctx = ctx

    def alertness(self, t: int) -> float:
        self.advance_to(t)
        return compose_alertness(self.pressure, self.phase, self.task_load, self.params)

    def state(self, t: int):
        from .fatigue import AlertnessState

        self.advance_to(t)
        return AlertnessState.from_components(
            self.pressure, self.phase, self.task_load, self.params
        )

    def current_odometer(self, t: int, speed: float) -> float:
        if self.driving and not self.in_break(t):
            self.odometer += speed * (t - self.odometer_t)
        self.odometer_t = t
        return self.odometer

    def in_break(self, t: int) -> bool:
        return self.in_break_until is not None and t < self.in_break_until


class ScenarioRunner:
    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.log = EventLog(seed=cfg.seed, config_hash=cfg.config_hash())
        self.agents = [_Agent(cfg, spec) for spec in cfg.fleet]
        self.horizon_s = cfg.horizon_days * 86400
        self._heap: list = []
        self._heap_seq = 0
        self._task_seq = 0
        self._case_seq = 0
        self._flag_seq = 0
        self._sa_seq = 0
        self._ticket_seq = 0
        self._issued_flags: set[str] = set()
        self._validation_ratings: list[vig.OrdRating] = []
        self._qualified_pool: list[vig.RaterProfile] = []
        self._qualified_done = False

    # -- helpers -------------------------------------------------------

    def _schedule(self, time: int, phase: int, kind: str, **payload) -> None:
        heapq.heappush(self._heap, (int(time), phase, self._heap_seq, kind, payload))
        self._heap_seq += 1

    def _pop_due(self, t: int, phase: int) -> list:
        due = []
        while self._heap and self._heap[0][0] == t and self._heap[0][1] == phase:
            due.append(heapq.heappop(self._heap))
        return due

    def _toggles(self) -> Toggles:
        return self.cfg.toggles

    # -- top-level run ---------------------------------------------------

    def run(self) -> tuple[EventLog, Metrics]:
        cfg = self.cfg
        shift_len_s = cfg.shift.duration_min * 60
        for day in range(cfg.horizon_days):
            start = day * 86400 + cfg.shift.start_min * 60
            end = start + shift_len_s
            if end + SHIFT_DRAIN_S > self.horizon_s:
                continue
            self._fast_forward_to(start)
            self._run_shift(start, end)
        return self.log, compute_metrics(self.log)

    def _fast_forward_to(self, shift_start: int) -> None:
        """Jump each agent through idle/sleep segments up to shift start."""
        sleep_start = shift_start - 9 * 3600
        sleep_end = shift_start - 1 * 3600
        for agent in self.agents:
            if agent.comp_time < sleep_start:
                agent.set_ctx(sleep_start, _ASLEEP)
            if agent.comp_time < sleep_end:
                agent.advance_to(sleep_end)
                if self._toggles().education:
                    # Sleep-hygiene training buys a fuller overnight recovery.
                    agent.pressure *= 1.0 - self.cfg.behavior.education_recovery_bonus
                agent.ctx = _IDLE
            if agent.spec.dual and agent.comp_time <= sleep_end:
                # Peer follows the same rest pattern.
                span_h = (sleep_end - sleep_start) / 3600.0
                agent.peer_pressure *= math.exp(
                    -span_h / agent.params.homeostat_decay_tau
                )
            agent.advance_to(shift_start)

    # -- shift loop -------------------------------------------------------

    def _run_shift(self, shift_start: int, shift_end: int) -> None:
        cfg = self.cfg
        self._ensure_rater_pool(shift_start)

        active = []
        for agent in self.agents:
            if agent.lifecycle.stage in (sched.Stage.RETRAINING, sched.Stage.SUSPENDED):
                if (
                    agent.lifecycle.stage is sched.Stage.RETRAINING
                    and agent.shifts_until_return <= 0
                ):
                    agent.lifecycle = sched.lifecycle_step(
                        agent.lifecycle,
                        sched.LifecycleEvent.RETRAINING_COMPLETE,
                        now_days=shift_start / 86400.0,
                    )
                    self.log.append(
                        shift_start,
                        "lifecycle",
                        agent.spec.specialist_id,
                        stage=agent.lifecycle.stage.value,
                        event="retraining_complete",
                    )
                else:
                    agent.shifts_until_return -= 1
                    continue
            active.append(agent)
            self._start_shift(agent, shift_start)

        if not active:
            return

        scheduled_breaks = {
            shift_start + offset * 60: duration
            for offset, duration in cfg.shift.scheduled_breaks
        }

        loop_end = shift_end + SHIFT_DRAIN_S
        t = shift_start
        while t <= loop_end:
            for _, _, _, kind, payload in self._pop_due(t, 0):
                self._handle_item(t, kind, payload)

            if t <= shift_end:
                if t in scheduled_breaks:
                    for agent in active:
                        self._start_break(
                            agent, t, scheduled_breaks[t], "scheduled", "scheduled"
                        )
                for agent in active:
                    self._agent_second(agent, t, shift_start)
                if t == shift_end:
                    for agent in active:
                        self._end_shift(agent, t)

            for _, _, _, kind, payload in self._pop_due(t, 2):
                self._handle_item(t, kind, payload)

            if t > shift_end and not self._heap:
                break
            t += 1

    # -- shift boundaries ---------------------------------------------

    def _start_shift(self, agent: _Agent, t: int) -> None:
        cfg = self.cfg
        agent.on_shift = True
        agent.driving = True
        agent.in_break_until = None
        agent.session_start = t
        agent.session_had_incautious = False
        agent.declines_this_shift = 0
        agent.ict.interventions_this_shift = 0
        agent.odometer_t = t
        agent.set_ctx(
            t, FatigueContext(on_task=True, monotony=cfg.behavior.monotony)
        )
        eng.record_interactivity(agent.ict, t, agent.odometer)
        agent.planned_response = None
        self.log.append(
            t, "shift_start", agent.spec.specialist_id, day=t // 86400, dual=agent.spec.dual
        )
        if cfg.toggles.engagement:
            self._draw_transition(agent, t)
        if cfg.toggles.awareness:
            self._submit_pfs(agent, t, is_followup=False)

    def _end_shift(self, agent: _Agent, t: int) -> None:
        if not agent.on_shift:
            return
        if agent.ict.pending is not None:
            self._void_pending_prompt(agent, t)
        self._end_session(agent, t, "shift_end")
        if self.cfg.toggles.engagement and agent.ict.recent_outcomes:
            multiplier = eng.ict_adapt(agent.ict, self.cfg.ict)
            self.log.append(
                t,
                "ict_adapt",
                agent.spec.specialist_id,
                multiplier=round(multiplier, 6),
            )
        agent.on_shift = False
        agent.driving = False
        agent.in_break_until = None
        agent.manual_until = None
        agent.next_transition = None
        agent.set_ctx(t, _IDLE)
        self.log.append(t, "shift_end", agent.spec.specialist_id)

    # -- per-second agent logic -----------------------------------------

    def _agent_second(self, agent: _Agent, t: int, shift_start: int) -> None:
        cfg = self.cfg
        toggles = cfg.toggles
        if not agent.on_shift:
            return
        in_break = agent.in_break(t)
        driving = agent.driving and not in_break
        manual = agent.manual_until is not None and t < agent.manual_until
        if agent.manual_until is not None and t >= agent.manual_until:
            agent.manual_until = None
            if toggles.engagement:
                eng.record_interactivity(
                    agent.ict, t, agent.current_odometer(t, cfg.behavior.speed_mps)
                )

        elapsed = t - shift_start
        demand_high = driving and self._demand_high(elapsed)

        if toggles.engagement and driving and not manual:
            self._ict_second(agent, t, demand_high)
            if agent.next_transition is not None and t >= agent.next_transition:
                self._control_transition(agent, t)

        if elapsed % 60 == 0:
            self._agent_minute(agent, t, elapsed, driving)

    def _agent_minute(
        self, agent: _Agent, t: int, elapsed: int, driving: bool
    ) -> None:
        cfg = self.cfg
        toggles = cfg.toggles
        who = agent.spec.specialist_id

        if elapsed % cfg.sample_period_s == 0:
            state = agent.state(t)
            self.log.append(
                t,
                "state_sample",
                who,
                alertness=round(state.alertness, 6),
                ord=to_ord_truth(state),
                task_load=round(state.task_load, 6),
                pressure=round(state.homeostatic_pressure, 6),
                on_task=driving,
                period_s=cfg.sample_period_s,
            )

        if driving:
            # Incautious-behavior hazard accrues per driving minute.
            state = agent.state(t)
            if self.rng.random() < cfg.hazard.rate(state.task_load, state.alertness):
                self.log.append(t, "incautious", who)
                agent.session_had_incautious = True

        if toggles.vigilance and driving:
            if (
                elapsed > 0
                and elapsed % int(cfg.dms.observation_period) == 0
                and t >= agent.dms_cooldown_until
            ):
                self._dms_observation(agent, t)
            if elapsed > 0 and elapsed % int(cfg.vigilance.periodic_cadence_min * 60) == 0:
                self._periodic_rating(agent, t)
            if elapsed > 0 and elapsed % int(cfg.vigilance.reliability_interval_min * 60) == 0:
                self._reliability_checkpoint(t)

        if toggles.awareness:
            if elapsed > 0 and elapsed % int(cfg.pfs.cadence_min * 60) == 0 and driving:
                self._submit_pfs(agent, t, is_followup=False)
            if agent.spec.dual and elapsed > 0 and elapsed % 3600 == 0:
                self._peer_checks(agent, t)

        if toggles.scheduling and driving:
            if elapsed % INVITED_CHECK_S == 0 and elapsed > 0:
                self._invited_break_check(agent, t)
            if (
                elapsed > 0
                and elapsed % int(cfg.behavior.impromptu_check_min * 60) == 0
            ):
                self._impromptu_check(agent, t)

    # -- demand pattern --------------------------------------------------

    def _demand_high(self, elapsed_s: int) -> bool:
        b = self.cfg.behavior
        minute = (elapsed_s / 60.0) % b.demand_period_min
        return b.demand_start_min <= minute < b.demand_start_min + b.demand_duration_min

    # -- ICT ---------------------------------------------------------------

    def _ict_second(self, agent: _Agent, t: int, demand_high: bool) -> None:
        cfg = self.cfg
        pending = agent.ict.pending
        if pending is not None:
            if demand_high:
                resolution = eng.ict_resolve(agent.ict, "demand_rose", t, cfg.ict)
                self._log_ict_outcome(agent, t, resolution)
                return
            if agent.planned_response is not None and t >= agent.planned_response:
                latency = agent.planned_response - pending.issued_at
                resolution = eng.ict_resolve(
                    agent.ict, "responded", t, cfg.ict, latency_s=latency
                )
                self._log_ict_outcome(agent, t, resolution)
                # Completing an in-car task is itself engaging.
                agent.advance_to(t)
                agent.task_load *= 1.0 - cfg.behavior.ict_relief
                eng.record_interactivity(
                    agent.ict, t, agent.current_odometer(t, cfg.behavior.speed_mps)
                )
                return
            if t > pending.deadline:
                resolution = eng.ict_resolve(agent.ict, "deadline_passed", t, cfg.ict)
                self._log_ict_outcome(agent, t, resolution)
                return
            return
        if demand_high:
            return
        prompt = eng.ict_tick(
            agent.ict,
            t,
            agent.current_odometer(t, cfg.behavior.speed_mps),
            demand_high,
            self.rng,
            cfg.ict,
        )
        if prompt is not None:
            self._log_ict_prompt(agent, t, prompt)

    def _log_ict_prompt(self, agent: _Agent, t: int, prompt: eng.IctPrompt) -> None:
        self.log.append(
            t,
            "ict_prompt",
            agent.spec.specialist_id,
            prompt_id=prompt.prompt_id,
            trigger=prompt.trigger.value,
            deadline=prompt.deadline,
            is_followup=prompt.is_followup,
            followup_of=prompt.followup_of,
        )
        self._plan_ict_response(agent, t, prompt)

    def _plan_ict_response(self, agent: _Agent, t: int, prompt: eng.IctPrompt) -> None:
        b = self.cfg.behavior
        alertness = agent.alertness(t)
        miss_p = min(0.98, b.ict_miss_base_p + (1.0 - alertness) ** 3)
        if self.rng.random() < miss_p:
            agent.planned_response = None
            return
        latency = (
            b.ict_latency_base_s
            + b.ict_latency_fatigue_s * (1.0 - alertness)
            + self.rng.uniform(0.0, 3.0)
        )
        latency = min(latency, self.cfg.ict.response_deadline_s - 1.0)
        agent.planned_response = prompt.issued_at + max(1.0, latency)

    def _log_ict_outcome(
        self, agent: _Agent, t: int, resolution: eng.IctResolution
    ) -> None:
        cfg = self.cfg
        who = agent.spec.specialist_id
        record = resolution.record
        agent.planned_response = None
        self.log.append(
            t,
            "ict_outcome",
            who,
            prompt_id=record.prompt_id,
            trigger=record.trigger.value,
            outcome=record.outcome.value,
            response_latency=record.response_latency,
            followup_of=record.followup_of,
        )
        agent.outcomes_since_adapt += 1
        if resolution.followup is not None:
            self._log_ict_prompt(agent, t, resolution.followup)
        if resolution.intervention is not None:
            self.log.append(
                t,
                "ict_intervention",
                who,
                prompt_id=resolution.intervention.prompt_id,
                actions=list(resolution.intervention.actions),
            )
            self._record_fatigue_event(agent, t, "severe", "ict_intervention")
            agent.advance_to(t)
            agent.task_load *= 1.0 - cfg.behavior.alert_relief
            eng.record_interactivity(
                agent.ict, t, agent.current_odometer(t, cfg.behavior.speed_mps)
            )
            if resolution.pull_over_recommended:
                self.log.append(t, "pull_over", who, prompt_id=record.prompt_id)
                self._start_break(
                    agent, t, self.cfg.breaks.duration_min, "pull_over", "pull_over"
                )
            elif self.rng.random() < 0.9:
                self._schedule(
                    t + 60,
                    0,
                    "break_start",
                    specialist=who,
                    duration_min=self.cfg.breaks.duration_min,
                    initiator="intervention",
                    reason="ict_intervention",
                )
        if agent.outcomes_since_adapt >= cfg.ict.adapt_window:
            agent.outcomes_since_adapt = 0
            multiplier = eng.ict_adapt(agent.ict, cfg.ict)
            self.log.append(t, "ict_adapt", who, multiplier=round(multiplier, 6))

    def _void_pending_prompt(self, agent: _Agent, t: int) -> None:
        # The driving task went away (break, shift end); no penalty.
        resolution = eng.ict_resolve(agent.ict, "demand_rose", t, self.cfg.ict)
        self._log_ict_outcome(agent, t, resolution)

    # -- control transitions and secondary alerts ----------------------

    def _draw_transition(self, agent: _Agent, t: int) -> None:
        rate_per_s = self.cfg.behavior.transition_rate_per_h / 3600.0
        if rate_per_s <= 0:
            agent.next_transition = None
            return
        agent.next_transition = t + max(1, int(self.rng.expovariate(rate_per_s)))

    def _control_transition(self, agent: _Agent, t: int) -> None:
        cfg = self.cfg
        b = cfg.behavior
        who = agent.spec.specialist_id
        alertness = agent.alertness(t)
        cause = self.rng.choices(
            (
                eng.TransitionCause.PEDAL,
                eng.TransitionCause.BUTTON,
                eng.TransitionCause.STEERING,
                eng.TransitionCause.BRAKE,
            ),
            weights=(0.4, 0.2, 0.2, 0.2),
        )[0]
        responsive_p = min(0.95, max(0.1, alertness + 0.1))
        inp = eng.SaDecisionInput(
            transition_cause=cause,
            speed=b.speed_mps + self.rng.uniform(0.0, 10.0),
            input_before=self.rng.random() < responsive_p,
            input_after=self.rng.random() < responsive_p,
            emergency=self.rng.random() < b.emergency_p,
        )
        self.log.append(
            t,
            "control_transition",
            who,
            cause=cause.value,
            speed=round(inp.speed, 3),
            input_before=inp.input_before,
            input_after=inp.input_after,
            emergency=inp.emergency,
        )
        agent.manual_until = t + int(b.manual_period_s)
        if agent.ict.pending is not None:
            # Taking manual control is peak driving demand.
            self._void_pending_prompt(agent, t)
        eng.record_interactivity(
            agent.ict, t, agent.current_odometer(t, b.speed_mps)
        )
        decision = eng.sa_evaluate(inp, cfg.sa)
        self.log.append(
            t,
            "sa_decision",
            who,
            action=decision.action.value,
            rationale_score=round(decision.rationale_score, 6),
        )
        if decision.action is eng.SaAction.ISSUE:
            sa_id = f"sa-{self._sa_seq}"
            self._sa_seq += 1
            clear_p = min(0.98, b.sa_clear_base_p + 0.4 * alertness)
            if self.rng.random() < clear_p:
                input_latency = self.rng.uniform(1.0, cfg.sa.clear_timeout_s * 0.8)
            else:
                input_latency = None
            self._schedule(
                t + int(decision.delay_s or 0),
                0,
                "sa_issue",
                specialist=who,
                sa_id=sa_id,
                input_latency=input_latency,
            )
        self._draw_transition(agent, t)

    # -- vigilance ---------------------------------------------------------

    def _ensure_rater_pool(self, t: int) -> None:
        if self._qualified_done or not self.cfg.toggles.vigilance:
            return
        self._qualified_done = True
        policy = self.cfg.vigilance
        test_set = [
            (1 + i % 5, frozenset()) for i in range(policy.qualification_items)
        ]
        for rater in self.cfg.raters:
            if not rater.qualified:
                continue
            passed = vig.qualify_rater(
                rater,
                test_set,
                self.rng,
                exact_match_threshold=policy.qualification_match_threshold,
            )
            self.log.append(
                t, "rater_qualification", None, rater_id=rater.rater_id, passed=passed
            )
            if passed:
                self._qualified_pool.append(rater)
        if len(self._qualified_pool) < policy.k_validation_raters + 1:
            raise ConfigError(
                "too few raters passed qualification for validation coverage"
            )

    def _next_task(self, feed: vig.Feed, k: int) -> vig.RatingTask:
        task = vig.assign_rating_tasks(
            self._qualified_pool, [feed], k, self.rng, first_task_index=self._task_seq
        )[0]
        self._task_seq += 1
        self.log.append(
            int(feed.window_end), "rating_task", feed.specialist_id, **task.to_record()
        )
        return task

    def _dms_observation(self, agent: _Agent, t: int) -> None:
        cfg = self.cfg
        who = agent.spec.specialist_id
        true_ord = to_ord_truth(agent.state(t))
        flag = vig.dms_observe(
            true_ord,
            cfg.dms,
            self.rng,
            flag_id=f"flag-{self._flag_seq}",
            specialist_id=who,
            time=t,
        )
        if flag is None:
            return
        self._flag_seq += 1
        self.log.append(t, "dms_flag", who, flag_id=flag.flag_id, true_ord=true_ord)
        alert = vig.issue_multimodal_alert(flag, self._issued_flags)
        self.log.append(
            t, "alert", who, flag_id=flag.flag_id, modalities=list(alert.modalities)
        )
        if cfg.toggles.engagement:
            eng.record_interactivity(
                agent.ict, t, agent.current_odometer(t, cfg.behavior.speed_mps)
            )
        agent.advance_to(t)
        agent.task_load *= 1.0 - cfg.behavior.alert_relief
        case_id = f"case-{self._case_seq}"
        self._case_seq += 1
        feed = vig.Feed(who, t - cfg.dms.observation_period, t, escalated=True)
        task = self._next_task(feed, cfg.vigilance.k_validation_raters)
        self.log.append(
            t,
            "escalation_opened",
            who,
            case_id=case_id,
            route=vig.Route.ROUTE_ONE.value,
            trigger="dms_flag",
        )
        resolve_at = t + int(cfg.vigilance.rating_latency_s)
        self._schedule(
            resolve_at,
            2,
            "escalation_validate",
            specialist=who,
            case_id=case_id,
            route=vig.Route.ROUTE_ONE.value,
            trigger="dms_flag",
            task_id=task.task_id,
            rater_ids=list(task.assigned_rater_ids),
            true_ord=true_ord,
            threshold=cfg.dms.detect_threshold_ord,
        )
        agent.dms_cooldown_until = resolve_at + int(cfg.vigilance.flag_cooldown_min * 60)

    def _periodic_rating(self, agent: _Agent, t: int) -> None:
        cfg = self.cfg
        who = agent.spec.specialist_id
        true_ord = to_ord_truth(agent.state(t))
        feed = vig.Feed(who, t - cfg.vigilance.periodic_cadence_min * 60, t)
        task = self._next_task(feed, cfg.vigilance.k_validation_raters)
        rater = next(
            r for r in self._qualified_pool if r.rater_id == task.assigned_rater_ids[0]
        )
        rating = vig.rate(rater, task, true_ord, self.rng)
        self._log_rating(t, who, rating)
        if rating.level >= cfg.vigilance.route_two_threshold:
            case_id = f"case-{self._case_seq}"
            self._case_seq += 1
            self.log.append(
                t,
                "escalation_opened",
                who,
                case_id=case_id,
                route=vig.Route.ROUTE_TWO.value,
                trigger="single_high_rating",
            )
            # Immediate supervisor action, before any validation rating.
            self.log.append(
                t,
                "supervisor_action",
                who,
                case_id=case_id,
                action=vig.SupervisorAction.CHECK_IN.value,
            )
            validators = [
                r for r in self._qualified_pool if r.rater_id != rating.rater_id
            ]
            vfeed = vig.Feed(who, feed.window_start, t, escalated=True)
            vtask = vig.assign_rating_tasks(
                validators,
                [vfeed],
                cfg.vigilance.k_validation_raters,
                self.rng,
                first_task_index=self._task_seq,
            )[0]
            self._task_seq += 1
            self.log.append(t, "rating_task", who, **vtask.to_record())
            self._schedule(
                t + int(cfg.vigilance.rating_latency_s),
                2,
                "escalation_validate",
                specialist=who,
                case_id=case_id,
                route=vig.Route.ROUTE_TWO.value,
                trigger="single_high_rating",
                task_id=vtask.task_id,
                rater_ids=list(vtask.assigned_rater_ids),
                true_ord=true_ord,
                threshold=cfg.vigilance.route_two_threshold,
            )

    def _log_rating(self, t: int, who: str, rating: vig.OrdRating) -> None:
        self.log.append(
            t,
            "rating",
            who,
            rater_id=rating.rater_id,
            task_id=rating.task_id,
            level=rating.level,
            indicators=sorted(rating.indicators),
            observations=sorted(rating.observations),
        )
        self._validation_ratings.append(rating)

    def _resolve_escalation(self, t: int, payload: dict) -> None:
        cfg = self.cfg
        who = payload["specialist"]
        agent = next(a for a in self.agents if a.spec.specialist_id == who)
        by_id = {r.rater_id: r for r in self._qualified_pool}
        task = vig.RatingTask(
            task_id=payload["task_id"],
            specialist_id=who,
            window_start=0.0,
            window_end=float(t),
            assigned_rater_ids=tuple(payload["rater_ids"]),
        )
        ratings = []
        for rater_id in payload["rater_ids"]:
            rating = vig.rate(by_id[rater_id], task, payload["true_ord"], self.rng)
            self._log_rating(t, who, rating)
            ratings.append(rating)
        level = vig.aggregate(ratings)
        confirmed = level >= payload["threshold"]
        route = payload["route"]
        if route == vig.Route.ROUTE_TWO.value:
            action = vig.SupervisorAction.CHECK_IN
            if confirmed and level >= 5:
                action = vig.SupervisorAction.RETRIEVE_VEHICLE
        else:
            action = None
            if confirmed:
                action = (
                    vig.SupervisorAction.RETRIEVE_VEHICLE
                    if level >= 5
                    else vig.SupervisorAction.INVITE_BREAK
                )
        self.log.append(
            t,
            "escalation_resolved",
            who,
            case_id=payload["case_id"],
            route=route,
            trigger=payload["trigger"],
            validated_level=level,
            resolution="confirmed" if confirmed else "not_confirmed",
            supervisor_action=None if action is None else action.value,
        )
        if not confirmed:
            return
        agent.last_confirmed = (t, level)
        self._record_fatigue_event(
            agent, t, "severe" if level >= 5 else "moderate", "escalation"
        )
        if level >= 5:
            self.log.append(t, "vehicle_retrieved", who, case_id=payload["case_id"])
            if agent.ict.pending is not None:
                self._void_pending_prompt(agent, t)
            self._end_session(agent, t, "vehicle_retrieved")
            agent.driving = False
            agent.set_ctx(t, _IDLE)
        else:
            self._start_break(
                agent,
                t,
                cfg.vigilance.post_confirm_break_min,
                "supervisor",
                "confirmed_escalation",
            )

    def _reliability_checkpoint(self, t: int) -> None:
        try:
            kappa = vig.inter_rater_reliability(self._validation_ratings)
        except vig.NoSharedTasksError:
            return
        self.log.append(
            t,
            "reliability",
            None,
            kappa=round(kappa, 6),
            ratings=len(self._validation_ratings),
        )

    def _record_fatigue_event(
        self, agent: _Agent, t: int, severity: str, source: str
    ) -> None:
        self.log.append(
            t,
            "fatigue_event",
            agent.spec.specialist_id,
            severity=severity,
            source=source,
        )
        if not self.cfg.toggles.education:
            return
        if agent.lifecycle.stage not in (
            sched.Stage.DUAL_QUALIFIED,
            sched.Stage.SINGLE_QUALIFIED,
        ):
            return
        before = agent.lifecycle.stage
        agent.lifecycle = sched.lifecycle_step(
            agent.lifecycle,
            sched.LifecycleEvent.FATIGUE_EVENT,
            now_days=t / 86400.0,
            severity=sched.FatigueSeverity(severity)
            if severity in ("moderate", "severe")
            else sched.FatigueSeverity.MODERATE,
        )
        if agent.lifecycle.stage is not before:
            agent.shifts_until_return = RETRAIN_SHIFTS_OFF
            self.log.append(
                t,
                "lifecycle",
                agent.spec.specialist_id,
                stage=agent.lifecycle.stage.value,
                event="fatigue_threshold",
            )

    # -- awareness -----------------------------------------------------------

    def _submit_pfs(self, agent: _Agent, t: int, is_followup: bool) -> None:
        cfg = self.cfg
        who = agent.spec.specialist_id
        kss = to_kss(agent.state(t), self.rng, agent.params)
        record_id = f"pfs-{who}-{agent.pfs_seq}"
        agent.pfs_seq += 1
        record, outcome = aw.submit_pfs(
            who,
            kss,
            t,
            is_followup=is_followup,
            triggered_by=agent.pending_followup_for if is_followup else None,
            record_id=record_id,
        )
        self.log.append(
            t,
            "pfs",
            who,
            record_id=record.record_id,
            kss=record.kss,
            is_followup=record.is_followup,
            triggered_by=record.triggered_by,
            window_minutes=record.window_minutes,
            action=outcome.action.value,
        )
        agent.last_kss = (t, kss)
        if outcome.action is aw.PfsAction.SUGGEST_BREAK_AND_FOLLOWUP:
            if self.rng.random() < cfg.pfs.break_compliance and agent.driving:
                agent.pending_followup_for = record.record_id
                self._schedule(
                    t + 60,
                    0,
                    "break_start",
                    specialist=who,
                    duration_min=cfg.breaks.duration_min,
                    initiator="pfs",
                    reason="high_kss",
                )
        elif outcome.action is aw.PfsAction.SUPERVISOR_OUTREACH:
            agent.pending_followup_for = None
            self.log.append(
                t,
                "supervisor_outreach",
                who,
                record_id=record.record_id,
                tips=list(outcome.tips or ()),
            )
            if (
                kss >= cfg.pfs.outreach_reassign_kss
                and cfg.toggles.scheduling
                and agent.driving
            ):
                self._reassign_auxiliary(agent, t, "persistent_high_kss")
        else:
            if is_followup:
                agent.pending_followup_for = None

    def _peer_checks(self, agent: _Agent, t: int) -> None:
        # Peer fatigue advances but grants no detection benefit; a peer
        # may raise a concern ticket with small probability.
        b = self.cfg.behavior
        span_h = 1.0
        agent.peer_pressure = 1.0 - (1.0 - agent.peer_pressure) * math.exp(
            -span_h / agent.params.homeostat_rise_tau
        )
        agent.peer_task_load = 1.0 - (1.0 - agent.peer_task_load) * math.exp(
            -agent.params.task_load_rate * PEER_MONOTONY * span_h
        )
        if to_ord_truth(agent.state(t)) >= 4 and self.rng.random() < b.peer_concern_p_per_h:
            channel = (
                aw.ConcernChannel.SUPERVISOR_DIRECT
                if self.rng.random() < 0.7
                else aw.ConcernChannel.ANONYMOUS_SURVEY
            )
            ticket = aw.open_concern(
                channel,
                "peer observed possible drowsiness",
                anonymous=channel is aw.ConcernChannel.ANONYMOUS_SURVEY,
                specialist_id=agent.spec.specialist_id,
                ticket_id=f"ticket-{self._ticket_seq}",
            )
            self._ticket_seq += 1
            self.log.append(t, "concern", ticket.specialist_id, **ticket.to_record())

    # -- scheduling ---------------------------------------------------------

    def _signal_bundle(self, agent: _Agent, t: int) -> sched.BreakSignalBundle:
        toggles = self.cfg.toggles
        kss = None
        if toggles.awareness and agent.last_kss and t - agent.last_kss[0] <= SIGNAL_RECENCY_S:
            kss = agent.last_kss[1]
        rater_level = None
        dms_recent = False
        if toggles.vigilance and agent.last_confirmed:
            when, level = agent.last_confirmed
            if t - when <= SIGNAL_RECENCY_S:
                rater_level = level
                dms_recent = True
        miss_rate = 0.0
        if toggles.engagement:
            recent = [
                r
                for r in list(agent.ict.recent_outcomes)[-10:]
                if r.outcome is not eng.IctOutcome.VOIDED_BY_DEMAND
            ]
            if recent:
                miss_rate = sum(
                    1 for r in recent if r.outcome is eng.IctOutcome.MISSED
                ) / len(recent)
        return sched.BreakSignalBundle(
            latest_pfs_kss=kss,
            dms_flag_recent=dms_recent,
            rater_level_recent=rater_level,
            ict_miss_rate_window=miss_rate,
        )

    def _invited_break_check(self, agent: _Agent, t: int) -> None:
        cfg = self.cfg
        who = agent.spec.specialist_id
        offer = sched.evaluate_break_triggers(
            self._signal_bundle(agent, t),
            cfg.breaks,
            now_min=t / 60.0,
            last_invited_min=None
            if agent.last_invited_offer is None
            else agent.last_invited_offer / 60.0,
        )
        if offer is None:
            return
        agent.last_invited_offer = t
        self.log.append(
            t,
            "invited_break_offer",
            who,
            reason=offer.reason,
            duration_min=offer.duration_min,
        )
        if self.rng.random() < cfg.behavior.invited_decline_p:
            agent.declines_this_shift += 1
            self.log.append(
                t, "invited_break_declined", who, declines=agent.declines_this_shift
            )
            if agent.declines_this_shift == 2:
                self.log.append(t, "decline_outreach", who)
            return
        self._schedule(
            t + 60,
            0,
            "break_start",
            specialist=who,
            duration_min=offer.duration_min,
            initiator="invited",
            reason=offer.reason,
        )

    def _impromptu_check(self, agent: _Agent, t: int) -> None:
        cfg = self.cfg
        perceived = to_kss(agent.state(t), self.rng, agent.params)
        if perceived < cfg.behavior.impromptu_kss_threshold:
            return
        if self.rng.random() >= cfg.behavior.impromptu_p:
            return
        event = sched.request_impromptu_break(
            agent.spec.specialist_id,
            t / 60.0,
            on_shift=agent.on_shift,
            duration_min=cfg.breaks.duration_min,
        )
        self.log.append(
            t,
            "impromptu_break",
            agent.spec.specialist_id,
            perceived_kss=perceived,
            duration_min=event.duration_min,
        )
        self._start_break(
            agent, t, event.duration_min, event.initiator, "self_assessed_fatigue"
        )

    def _reassign_auxiliary(self, agent: _Agent, t: int, reason: str) -> None:
        change = sched.reassign_auxiliary(
            agent.spec.specialist_id, sched.TaskAssignment.DRIVING, reason, t / 60.0
        )
        self.log.append(
            t,
            "assignment_change",
            agent.spec.specialist_id,
            from_assignment=change.from_assignment.value,
            to_assignment=change.to_assignment.value,
            reason=reason,
            restaffed=True,
        )
        if agent.ict.pending is not None:
            self._void_pending_prompt(agent, t)
        self._end_session(agent, t, "reassigned")
        agent.driving = False
        # Auxiliary work is off the vehicle: no monitoring, lighter load.
        agent.set_ctx(t, _IDLE)

    # -- breaks and sessions ---------------------------------------------

    def _start_break(
        self, agent: _Agent, t: int, duration_min: float, initiator: str, reason: str
    ) -> None:
        if not agent.on_shift or not agent.driving or agent.in_break(t):
            return
        if agent.ict.pending is not None:
            self._void_pending_prompt(agent, t)
        self._end_session(agent, t, f"break:{initiator}")
        activity = self.rng.choices(
            _BREAK_ACTIVITIES, weights=self.cfg.behavior.break_activity_weights
        )[0]
        until = t + int(duration_min * 60)
        agent.in_break_until = until
        agent.manual_until = None
        agent.set_ctx(
            t,
            FatigueContext(on_task=False, in_break=True, break_activity=activity),
        )
        self.log.append(
            t,
            "break_start",
            agent.spec.specialist_id,
            initiator=initiator,
            reason=reason,
            duration_min=duration_min,
            activity=activity.value,
        )
        self._schedule(until, 0, "break_end", specialist=agent.spec.specialist_id)

    def _handle_break_end(self, t: int, who: str) -> None:
        agent = next(a for a in self.agents if a.spec.specialist_id == who)
        agent.in_break_until = None
        self.log.append(t, "break_end", who)
        if not agent.on_shift or not agent.driving:
            agent.set_ctx(t, _IDLE)
            return
        agent.session_start = t
        agent.session_had_incautious = False
        agent.set_ctx(
            t, FatigueContext(on_task=True, monotony=self.cfg.behavior.monotony)
        )
        if self.cfg.toggles.engagement:
            eng.record_interactivity(
                agent.ict, t, agent.current_odometer(t, self.cfg.behavior.speed_mps)
            )
        if self.cfg.toggles.awareness:
            if agent.pending_followup_for is not None:
                if self.rng.random() < self.cfg.pfs.followup_compliance:
                    self._schedule(t + 60, 0, "pfs_followup", specialist=who)
                else:
                    self._schedule(
                        t + int(self.cfg.pfs.followup_due_min * 60),
                        0,
                        "pfs_reminder",
                        specialist=who,
                    )
            else:
                self._schedule(t + 60, 0, "pfs_regular", specialist=who)

    def _end_session(self, agent: _Agent, t: int, cause: str) -> None:
        if agent.session_start is None:
            return
        duration_min = (t - agent.session_start) / 60.0
        if duration_min > 0:
            self.log.append(
                t,
                "session_end",
                agent.spec.specialist_id,
                duration_min=round(duration_min, 4),
                had_incautious=agent.session_had_incautious,
                cause=cause,
            )
        agent.session_start = None
        agent.session_had_incautious = False

    # -- scheduled item dispatch ------------------------------------------

    def _handle_item(self, t: int, kind: str, payload: dict) -> None:
        if kind == "break_start":
            agent = next(
                a for a in self.agents if a.spec.specialist_id == payload["specialist"]
            )
            self._start_break(
                agent,
                t,
                payload["duration_min"],
                payload["initiator"],
                payload["reason"],
            )
        elif kind == "break_end":
            self._handle_break_end(t, payload["specialist"])
        elif kind == "pfs_followup":
            agent = next(
                a for a in self.agents if a.spec.specialist_id == payload["specialist"]
            )
            if agent.pending_followup_for is not None:
                self._submit_pfs(agent, t, is_followup=True)
        elif kind == "pfs_regular":
            agent = next(
                a for a in self.agents if a.spec.specialist_id == payload["specialist"]
            )
            if agent.on_shift and agent.driving:
                self._submit_pfs(agent, t, is_followup=False)
        elif kind == "pfs_reminder":
            who = payload["specialist"]
            agent = next(a for a in self.agents if a.spec.specialist_id == who)
            if agent.pending_followup_for is not None:
                self.log.append(
                    t, "pfs_reminder", who, pending=agent.pending_followup_for
                )
                self._schedule(t + 60, 0, "pfs_followup", specialist=who)
        elif kind == "sa_issue":
            who = payload["specialist"]
            self.log.append(t, "sa_issued", who, sa_id=payload["sa_id"])
            latency = payload["input_latency"]
            if latency is not None and latency <= self.cfg.sa.clear_timeout_s:
                resolve_at = t + max(1, int(latency))
                outcome = eng.SaResolution.CLEARED.value
            else:
                resolve_at = t + int(self.cfg.sa.clear_timeout_s)
                outcome = eng.SaResolution.SUPPORT_ALERTED.value
            self._schedule(
                resolve_at,
                0,
                "sa_resolve",
                specialist=who,
                sa_id=payload["sa_id"],
                outcome=outcome,
            )
        elif kind == "sa_resolve":
            self.log.append(
                t,
                "sa_resolved",
                payload["specialist"],
                sa_id=payload["sa_id"],
                outcome=payload["outcome"],
            )
        elif kind == "escalation_validate":
            self._resolve_escalation(t, payload)
        else:  # pragma: no cover - defensive
            raise RuntimeError(f"unknown scheduled item kind {kind!r}")


def run_scenario(cfg: ScenarioConfig) -> tuple[EventLog, Metrics]:
    """Execute one scenario; identical configs yield identical logs."""
    return ScenarioRunner(cfg).run()


# -- ablation -----------------------------------------------------------


@dataclass(frozen=True)
class AblationResult:
    toggle_set_names: tuple[str, ...]
    seeds: tuple[int, ...]
    values: dict  # (set_name, seed) -> {metric: value}
    metric_names: tuple[str, ...] = (
        "time_at_ord_ge4_min",
        "incautious_rate_per_h",
        "incautious_events",
        "fatigue_event_count",
        "interventions",
        "invited_breaks",
        "impromptu_breaks",
    )

    def deltas(self) -> list[dict]:
        """Per-seed deltas of every set against the first set."""
        baseline = self.toggle_set_names[0]
        rows = []
        for name in self.toggle_set_names[1:]:
            for seed in self.seeds:
                for metric in self.metric_names:
                    rows.append(
                        {
                            "toggle_set": name,
                            "seed": seed,
                            "metric": metric,
                            "baseline": self.values[(baseline, seed)][metric],
                            "value": self.values[(name, seed)][metric],
                            "delta": self.values[(name, seed)][metric]
                            - self.values[(baseline, seed)][metric],
                        }
                    )
        return rows

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["toggle_set", "seed", "metric", "baseline", "value", "delta"]
        )
        for row in self.deltas():
            writer.writerow(
                [
                    row["toggle_set"],
                    row["seed"],
                    row["metric"],
                    f"{row['baseline']:.6f}",
                    f"{row['value']:.6f}",
                    f"{row['delta']:.6f}",
                ]
            )
        return out.getvalue()


def _metric_summary(metrics: Metrics) -> dict:
    return {
        "time_at_ord_ge4_min": metrics.time_at_ord_ge4_min,
        "incautious_rate_per_h": metrics.incautious_rate_per_h,
        "incautious_events": float(metrics.incautious_events),
        "fatigue_event_count": float(metrics.fatigue_event_count),
        "interventions": float(metrics.interventions),
        "invited_breaks": float(metrics.invited_breaks),
        "impromptu_breaks": float(metrics.impromptu_breaks),
    }


def run_ablation(
    cfg: ScenarioConfig,
    toggle_sets: Sequence[tuple[str, Toggles]],
    n_seeds: int = 20,
    base_seed: Optional[int] = None,
) -> AblationResult:
    """Run every toggle set on the same seed list and pair the results."""
    if len(toggle_sets) < 2:
        raise ValueError("at least two toggle sets are required")
    if n_seeds < 1:
        raise ValueError("n_seeds must be positive")
    start = cfg.seed if base_seed is None else base_seed
    seeds = tuple(start + i for i in range(n_seeds))
    values = {}
    for name, toggles in toggle_sets:
        for seed in seeds:
            run_cfg = cfg.with_overrides(seed=seed, toggles=toggles)
            _, metrics = run_scenario(run_cfg)
            values[(name, seed)] = _metric_summary(metrics)
    return AblationResult(
        toggle_set_names=tuple(name for name, _ in toggle_sets),
        seeds=seeds,
        values=values,
    )


# -- session-length hazard calibration ---------------------------------


SHORT_SESSION_MIN = (5, 14)
LONG_SESSION_MIN = (31, 60)


@dataclass(frozen=True)
class CalibrationResult:
    hazard: HazardConfig
    exact_short: float
    exact_long: float
    mc_short: float
    mc_long: float
    ratio: float
    converged: bool
    iterations: int
    sessions_per_bucket: int


def _session_trace(cfg: ScenarioConfig, minutes: int) -> list[tuple[float, float]]:
    """Per-minute (task_load, alertness) for a fresh driving session."""
    spec = cfg.fleet[0]
    params = _scaled_params(cfg.model, spec.susceptibility)
    ctx = FatigueContext(on_task=True, monotony=cfg.behavior.monotony)
    pressure = spec.initial_sleep_pressure
    phase = (cfg.shift.start_min / 60.0) % 24.0
    task_load = 0.0
    trace = []
    for _ in range(minutes):
        pressure, phase, task_load = advance_components(
            pressure, phase, task_load, 60.0, ctx, params
        )
        trace.append(
            (task_load, compose_alertness(pressure, phase, task_load, params))
        )
    return trace


def _bucket_probability(
    hazard: HazardConfig, trace: Sequence[tuple[float, float]], bucket: tuple[int, int]
) -> float:
    """Exact P(at least one event) averaged over bucket durations."""
    lo, hi = bucket
    survival = 1.0
    prefix = []
    for task_load, alertness in trace:
        survival *= 1.0 - hazard.rate(task_load, alertness)
        prefix.append(survival)
    values = [1.0 - prefix[d - 1] for d in range(lo, hi + 1)]
    return sum(values) / len(values)


def session_length_stats(
    cfg: ScenarioConfig, hazard: HazardConfig
) -> tuple[float, float, float]:
    """Exact (short probability, long probability, ratio) for a hazard."""
    trace = _session_trace(cfg, LONG_SESSION_MIN[1])
    p_short = _bucket_probability(hazard, trace, SHORT_SESSION_MIN)
    p_long = _bucket_probability(hazard, trace, LONG_SESSION_MIN)
    ratio = p_long / p_short if p_short > 0 else math.inf
    return p_short, p_long, ratio


def _monte_carlo_bucket(
    hazard: HazardConfig,
    trace: Sequence[tuple[float, float]],
    bucket: tuple[int, int],
    sessions: int,
    rng: random.Random,
) -> float:
    hits = 0
    rates = [hazard.rate(tl, al) for tl, al in trace]
    for _ in range(sessions):
        duration = rng.randint(*bucket)
        if any(rng.random() < rates[m] for m in range(duration)):
            hits += 1
    return hits / sessions


def calibrate_session_length_effect(
    cfg: ScenarioConfig,
    target_ratio_range: tuple[float, float] = (5.0, 7.0),
    *,
    target_short: float = 0.11,
    target_long: float = 0.66,
    sessions_per_bucket: int = 5000,
    task_load_gain_override: Optional[float] = None,
    max_iterations: int = 50,
) -> CalibrationResult:
    """Fit the incautious-event hazard so long sessions are several times
    likelier to contain an event than short ones.

    Solves the two hazard coefficients against the exact product-form
    session probabilities with damped Newton steps, then verifies with a
    seeded Monte-Carlo run of ``sessions_per_bucket`` sessions per
    duration bucket. With ``task_load_gain_override`` the time-on-task
    coupling is frozen (e.g. at zero for a flat-hazard null model) and
    only the base rate is fitted, which cannot reach the targets.
    """
    if cfg.toggles.any_on():
        raise ConfigError("calibration requires a baseline with countermeasures off")
    trace = _session_trace(cfg, LONG_SESSION_MIN[1])
    al_gain = cfg.hazard.alertness_gain

    def probabilities(base: float, gain: float) -> tuple[float, float]:
        hz = HazardConfig(
            base_per_min=base, task_load_gain=gain, alertness_gain=al_gain
        )
        return (
            _bucket_probability(hz, trace, SHORT_SESSION_MIN),
            _bucket_probability(hz, trace, LONG_SESSION_MIN),
        )

    base, gain = cfg.hazard.base_per_min, cfg.hazard.task_load_gain
    if task_load_gain_override is not None:
        gain = task_load_gain_override
    iterations = 0
    eps = 1e-7
    for iterations in range(1, max_iterations + 1):
        p_short, p_long = probabilities(base, gain)
        f1 = p_short - target_short
        f2 = p_long - target_long
        if abs(f1) < 1e-9 and abs(f2) < 1e-9:
            break
        if task_load_gain_override is not None:
            # One free parameter: secant step on the short-session target.
            d = (probabilities(base + eps, gain)[0] - p_short) / eps
            if d <= 0:
                break
            base = max(0.0, base - f1 / d)
            continue
        d11 = (probabilities(base + eps, gain)[0] - p_short) / eps
        d12 = (probabilities(base, gain + eps)[0] - p_short) / eps
        d21 = (probabilities(base + eps, gain)[1] - p_long) / eps
        d22 = (probabilities(base, gain + eps)[1] - p_long) / eps
        det = d11 * d22 - d12 * d21
        if abs(det) < 1e-18:
            break
        step_base = (f1 * d22 - f2 * d12) / det
        step_gain = (f2 * d11 - f1 * d21) / det
        base = max(0.0, base - step_base)
        gain = max(0.0, gain - step_gain)

    fitted = HazardConfig(
        base_per_min=base, task_load_gain=gain, alertness_gain=al_gain
    )
    exact_short, exact_long, ratio = session_length_stats(cfg, fitted)
    rng = random.Random(cfg.seed ^ 0x5E5510)
    mc_short = _monte_carlo_bucket(
        fitted, trace, SHORT_SESSION_MIN, sessions_per_bucket, rng
    )
    mc_long = _monte_carlo_bucket(
        fitted, trace, LONG_SESSION_MIN, sessions_per_bucket, rng
    )
    lo, hi = target_ratio_range
    converged = (
        abs(exact_short - target_short) < 1e-6
        and abs(exact_long - target_long) < 1e-6
        and lo <= ratio <= hi
    )
    return CalibrationResult(
        hazard=fitted,
        exact_short=exact_short,
        exact_long=exact_long,
        mc_short=mc_short,
        mc_long=mc_long,
        ratio=ratio,
        converged=converged,
        iterations=iterations,
        sessions_per_bucket=sessions_per_bucket,
    )
