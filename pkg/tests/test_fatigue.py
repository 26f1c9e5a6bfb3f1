import math
import random

import pytest

from frmsim.fatigue import (
    AlertnessState,
    BreakActivity,
    FatigueContext,
    ModelParams,
    circadian_dip,
    compose_alertness,
    step_alertness,
    to_kss,
    to_ord_truth,
)

PARAMS = ModelParams()


def make_state(pressure=0.2, phase=8.0, task_load=0.3, params=PARAMS):
    return AlertnessState.from_components(pressure, phase, task_load, params)


def test_zero_step_is_identity():
    state = make_state()
    ctx = FatigueContext(on_task=True, monotony=0.5)
    assert step_alertness(state, 0, ctx, PARAMS) == state


def test_invalid_dt_rejected():
    state = make_state()
    ctx = FatigueContext(on_task=True, monotony=0.5)
    with pytest.raises(ValueError):
        step_alertness(state, -1.0, ctx, PARAMS)
    with pytest.raises(ValueError):
        step_alertness(state, float("nan"), ctx, PARAMS)
    with pytest.raises(ValueError):
        step_alertness(state, float("inf"), ctx, PARAMS)


def test_break_recovery_matches_closed_form():
    # One recovery-tau of rest decays task load by exactly e^-1.
    state = make_state(task_load=1.0)
    ctx = FatigueContext(on_task=False, in_break=True)
    stepped = step_alertness(state, 20 * 60, ctx, PARAMS)
    expected = 1.0 * math.exp(-1.0)
    assert abs(stepped.task_load - expected) / expected < 1e-9


def test_break_recovery_closed_form_any_duration():
    # Exponential-decay oracle evaluated independently per duration.
    ctx = FatigueContext(on_task=False, in_break=True)
    for minutes in (1, 5, 20, 45, 90):
        state = make_state(task_load=0.7)
        stepped = step_alertness(state, minutes * 60, ctx, PARAMS)
        expected = 0.7 * math.exp(-minutes / PARAMS.task_recovery_tau)
        assert abs(stepped.task_load - expected) <= 1e-9 * max(expected, 1e-12)


def test_eight_hour_monotonous_trace_non_increasing():
    # Overnight window: all three sleepiness components are non-decreasing,
    # so alertness can only fall.
    state = make_state(pressure=0.1, phase=20.0, task_load=0.0)
    ctx = FatigueContext(on_task=True, monotony=1.0)
    previous = state.alertness
    for _ in range(8 * 60):
        state = step_alertness(state, 60, ctx, PARAMS)
        assert state.alertness <= previous + 1e-12
        previous = state.alertness


def test_boundedness_under_random_step_sequences():
    rng = random.Random(1234)
    contexts = [
        FatigueContext(on_task=True, monotony=1.0),
        FatigueContext(on_task=True, monotony=0.2),
        FatigueContext(on_task=False),
        FatigueContext(on_task=False, in_break=True, break_activity=BreakActivity.PHYSICAL),
        FatigueContext(on_task=False, asleep=True),
    ]
    for _ in range(200):
        state = make_state(
            pressure=rng.random(), phase=rng.uniform(0, 24) % 24, task_load=rng.random()
        )
        for _ in range(50):
            state = step_alertness(state, rng.uniform(0, 7200), rng.choice(contexts), PARAMS)
            assert 0.0 <= state.homeostatic_pressure <= 1.0
            assert 0.0 <= state.circadian_phase < 24.0
            assert 0.0 <= state.task_load <= 1.0
            assert 0.0 <= state.alertness <= 1.0


def test_break_strictly_decreases_task_load():
    rng = random.Random(99)
    ctx = FatigueContext(on_task=False, in_break=True)
    for _ in range(100):
        load = rng.uniform(1e-6, 1.0)
        state = make_state(task_load=load)
        stepped = step_alertness(state, rng.uniform(1, 3600), ctx, PARAMS)
        assert stepped.task_load < load


def test_homeostat_direction():
    awake = FatigueContext(on_task=False)
    asleep = FatigueContext(on_task=False, asleep=True)
    state = make_state(pressure=0.5)
    assert step_alertness(state, 3600, awake, PARAMS).homeostatic_pressure > 0.5
    assert step_alertness(state, 3600, asleep, PARAMS).homeostatic_pressure < 0.5


def test_circadian_phase_wraps():
    state = make_state(phase=23.5)
    ctx = FatigueContext(on_task=False)
    stepped = step_alertness(state, 3600, ctx, PARAMS)
    assert 0.0 <= stepped.circadian_phase < 1.0


def _oracle_kss(alertness: float) -> int:
    # Independent quantizer: affine map of sleepiness onto 1..9, half-up.
    value = math.floor(1.0 + 8.0 * (1.0 - alertness) + 0.5)
    return max(1, min(9, value))


def test_kss_endpoints_and_midpoint():
    quiet = ModelParams(report_noise_sd=0.0)
    rng = random.Random(0)
    assert to_kss(AlertnessState(0.0, 0.0, 0.0, 1.0), rng, quiet) == 1
    assert to_kss(AlertnessState(1.0, 4.0, 1.0, 0.0), rng, quiet) == 9
    mid = AlertnessState(0.5, 12.0, 0.5, 0.5)
    assert to_kss(mid, rng, quiet) == _oracle_kss(0.5)


def test_kss_matches_quantizer_oracle_noiseless():
    quiet = ModelParams(report_noise_sd=0.0)
    rng = random.Random(0)
    for i in range(101):
        alertness = i / 100
        state = AlertnessState(0.0, 0.0, 0.0, alertness)
        assert to_kss(state, rng, quiet) == _oracle_kss(alertness)


def test_kss_monotone_noiseless():
    quiet = ModelParams(report_noise_sd=0.0)
    rng = random.Random(0)
    previous = None
    for i in range(101):
        state = AlertnessState(0.0, 0.0, 0.0, 1.0 - i / 100)
        value = to_kss(state, rng, quiet)
        if previous is not None:
            assert value >= previous
        previous = value


def test_kss_noise_is_clamped_and_deterministic():
    state = make_state()
    values_a = [to_kss(state, random.Random(5), PARAMS) for _ in range(3)]
    values_b = [to_kss(state, random.Random(5), PARAMS) for _ in range(3)]
    assert values_a == values_b
    base = _oracle_kss(state.alertness)
    limit = math.ceil(8 * 3 * PARAMS.report_noise_sd) + 1
    rng = random.Random(77)
    for _ in range(500):
        assert abs(to_kss(state, rng, PARAMS) - base) <= limit


def test_ord_endpoints_and_monotone_sweep():
    assert to_ord_truth(AlertnessState(0.0, 0.0, 0.0, 1.0)) == 1
    assert to_ord_truth(AlertnessState(1.0, 4.0, 1.0, 0.0)) == 5
    previous = 0
    for i in range(101):
        level = to_ord_truth(AlertnessState(0.0, 0.0, 0.0, 1.0 - i / 100))
        assert 1 <= level <= 5
        assert level >= previous
        previous = level


def test_additive_components_never_raise_alertness():
    rng = random.Random(7)
    for _ in range(300):
        pressure = rng.uniform(0, 0.7)
        load = rng.uniform(0, 0.7)
        phase = rng.uniform(0, 24) % 24
        bump_p = rng.uniform(0, 1 - pressure)
        bump_l = rng.uniform(0, 1 - load)
        both = compose_alertness(pressure + bump_p, phase, load + bump_l, PARAMS)
        only_pressure = compose_alertness(pressure + bump_p, phase, load, PARAMS)
        only_load = compose_alertness(pressure, phase, load + bump_l, PARAMS)
        assert both <= only_pressure + 1e-12
        assert both <= only_load + 1e-12


def test_circadian_dip_peaks_at_trough_hour():
    assert circadian_dip(PARAMS.circadian_trough_hour, PARAMS) == pytest.approx(
        PARAMS.circadian_amplitude
    )
    assert circadian_dip((PARAMS.circadian_trough_hour + 12) % 24, PARAMS) == pytest.approx(0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(homeostat_rise_tau=0)
    with pytest.raises(ValueError):
        ModelParams(component_weights=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        FatigueContext(on_task=True, asleep=True)
    with pytest.raises(ValueError):
        FatigueContext(on_task=True, in_break=True)


def test_step_determinism():
    state = make_state()
    ctx = FatigueContext(on_task=True, monotony=0.8)
    a = step_alertness(state, 330, ctx, PARAMS)
    b = step_alertness(state, 330, ctx, PARAMS)
    assert a == b
