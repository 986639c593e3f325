import math

import numpy as np
import pytest

from kurasync.integrator import (NoiseModel, PhaseIncrementObserver, PhaseState,
                                 TraceRecorder, measure_mean_frequency,
                                 random_initial_state, run, step, steps_for)
from kurasync.model import TopologySpec, build_network
from kurasync.rng import RngStream

TWO_PI = 2 * math.pi


def two_osc(f1=568e6, f2=572e6, k=4e6, fwhm=0.0, dt=1e-10):
    return build_network(TopologySpec(
        core_frequencies=(f1, f2), input_frequencies=(), k_cc=k,
        noise_fwhm=fwhm, dt=dt))


def test_noiseless_uncoupled_linear_phase():
    net = two_osc(k=0.0)
    state = PhaseState(np.zeros(2), 0.0)
    for _ in range(1000):
        state = step(net, state, RngStream(0))
    expect = np.mod(TWO_PI * net.frequencies * 1000 * net.dt, TWO_PI)
    assert np.allclose(state.phases, expect, atol=1e-9)
    assert state.time == pytest.approx(1000 * net.dt)


def test_step_deterministic_and_noise_draw_count():
    net = two_osc(fwhm=1e6)
    init = PhaseState(np.array([0.1, 0.2]), 0.0)
    a = step(net, init, RngStream(5, 1)).phases
    b = step(net, init, RngStream(5, 1)).phases
    assert np.array_equal(a, b)
    # one normal per oscillator per step: the stream advances by exactly n draws
    rng = RngStream(5, 1)
    step(net, init, rng)
    ref = RngStream(5, 1)
    ref.normals(net.n)
    assert rng.next_u64() == ref.next_u64()


def test_noiseless_draws_nothing():
    net = two_osc(fwhm=0.0)
    rng = RngStream(9, 2)
    step(net, PhaseState(np.zeros(2), 0.0), rng)
    assert rng.next_u64() == RngStream(9, 2).next_u64()


def test_noise_model_sigma():
    assert NoiseModel(1e6).per_step_sigma(1e-10) == pytest.approx(
        math.sqrt(TWO_PI * 1e6 * 1e-10))
    assert NoiseModel(0.0).per_step_sigma(1e-10) == 0.0


def test_phase_increment_variance_matches_noise_model():
    # zero-frequency isolated oscillator: increments are pure noise
    net = build_network(TopologySpec(
        core_frequencies=(1.0, 1.0), input_frequencies=(), k_cc=0.0,
        noise_fwhm=1e6, dt=1e-10))
    rng = RngStream(11, 3)
    state = PhaseState(np.zeros(2), 0.0)
    obs = PhaseIncrementObserver(state.phases)
    n = 20000
    incr = np.empty(n)
    for i in range(n):
        prev = state.phases[0]
        state = step(net, state, rng)
        obs(state.time, state.phases)
        incr[i] = np.mod(state.phases[0] - prev + math.pi, TWO_PI) - math.pi
    sigma2 = TWO_PI * 1e6 * 1e-10
    assert np.var(incr) == pytest.approx(sigma2, rel=0.05)
    assert obs.n_steps == n


def test_random_initial_state_range_and_determinism():
    net = two_osc()
    a = random_initial_state(net, RngStream(1, 0)).phases
    b = random_initial_state(net, RngStream(1, 0)).phases
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < TWO_PI))


def test_steps_for_validation():
    assert steps_for(1e-6, 1e-10) == 10000
    with pytest.raises(ValueError):
        steps_for(1.05e-10, 1e-10)
    with pytest.raises(ValueError):
        steps_for(0.0, 1e-10)


def test_run_observer_contract_and_failure():
    net = two_osc(k=0.0)
    times = []
    run(net, 1e-8, PhaseState(np.zeros(2), 0.0), RngStream(0), observers=[
        lambda t, p: times.append(t)])
    assert len(times) == 100
    assert times[0] == pytest.approx(net.dt)

    def boom(t, p):
        raise KeyError("x")

    with pytest.raises(RuntimeError, match="observer"):
        run(net, 1e-9, PhaseState(np.zeros(2), 0.0), RngStream(0), observers=[boom])
    with pytest.raises(ValueError):
        run(net, 1e-9, PhaseState(np.zeros(3), 0.0), RngStream(0))


def test_trace_recorder_stride():
    rec = TraceRecorder(stride=3)
    for i in range(10):
        rec(i * 1.0, np.array([float(i)]))
    assert rec.times == [2.0, 5.0, 8.0]
    with pytest.raises(ValueError):
        TraceRecorder(stride=0)


def test_mean_frequency_helper():
    assert measure_mean_frequency(TWO_PI * 100.0, 1.0) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        measure_mean_frequency(1.0, 0.0)


def test_locked_pair_common_frequency():
    # |df| = 4 MHz < 2k = 8 MHz: both run at the mean of the naturals
    net = two_osc(568e6, 572e6, k=4e6)
    state = PhaseState(np.zeros(2), 0.0)
    rng = RngStream(0)
    # settle
    state = run(net, 0.5e-6, state, rng)
    obs = PhaseIncrementObserver(state.phases)
    run(net, 0.5e-6, state, rng, observers=[obs])
    f = obs.total / (TWO_PI * 0.5e-6)
    assert f[0] == pytest.approx(570e6, rel=1e-3)
    assert f[1] == pytest.approx(570e6, rel=1e-3)
