import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kurasync.detectors import (DetectorSpec, PairCounterDetector,
                                SchmittState, Scheme, VarianceDetector, core_pairs,
                                digitize_and_detect_edges, direct_counter,
                                flipflop_counter, is_synchronized)


def test_spec_validation():
    DetectorSpec(Scheme.VARIANCE, 0.28)
    DetectorSpec("direct", 6)
    with pytest.raises(ValueError):
        DetectorSpec(Scheme.VARIANCE, 0.6)
    with pytest.raises(ValueError):
        DetectorSpec(Scheme.DIRECT, 2.5)
    with pytest.raises(ValueError):
        DetectorSpec(Scheme.FLIPFLOP, -1)
    assert DetectorSpec.default("variance").threshold == 0.28
    assert DetectorSpec.default("direct").threshold == 6
    assert DetectorSpec.default("flipflop").threshold == 6


def test_decision_is_strict():
    spec = DetectorSpec(Scheme.DIRECT, 6)
    assert is_synchronized(spec, 5)
    assert not is_synchronized(spec, 6)
    # threshold 0 can never fire
    assert not is_synchronized(DetectorSpec(Scheme.FLIPFLOP, 0), 0)


def test_schmitt_basic_hysteresis():
    s = SchmittState()
    assert s.update(0.9) is False  # first sample only initializes
    assert s.level is True
    assert s.update(0.2) is False  # inside the dead band: hold
    assert s.update(-0.6) is False  # falls low, not a rising edge
    assert s.update(0.4) is False
    assert s.update(0.6) is True  # rising edge
    assert s.update(0.7) is False  # already high


def test_schmitt_rejects_small_recrossings():
    s = SchmittState()
    s.update(-0.9)
    edges = sum(s.update(v) for v in [0.4, -0.4, 0.4, -0.4, 0.6])
    assert edges == 1


def test_schmitt_threshold_validation():
    with pytest.raises(ValueError):
        SchmittState(theta_high=-0.5, theta_low=0.5)
    with pytest.raises(ValueError):
        SchmittState(theta_high=1.5, theta_low=-0.5)


def test_digitize_sine_counts_cycles():
    t = np.arange(20000) * 1e-10
    f = 600e6
    samples = zip(t, np.sin(2 * math.pi * f * t))
    edges = digitize_and_detect_edges(samples)
    # 2 us of a 600 MHz tone: one rising edge per cycle
    assert len(edges) == round(f * t[-1])
    # edges lag the true +0.5 upward crossing (cycle phase 1/12) by at most
    # one sample, i.e. f*dt = 0.06 cycles here
    ph = (np.array(edges) * f) % 1.0
    assert np.all((ph >= 1 / 12 - 1e-9) & (ph <= 1 / 12 + 0.06 + 1e-9))


def test_variance_detector_streaming_matches_numpy():
    rng = np.random.default_rng(0)
    phases = rng.uniform(0, 2 * math.pi, size=(500, 3))
    det = VarianceDetector((0, 2))
    for k, row in enumerate(phases):
        det(k * 1e-10, row)
    expect = np.var(np.sin(phases[:, 0] - phases[:, 2]))
    assert det.raw_value == pytest.approx(expect, rel=1e-12)


def test_variance_detector_empty_window():
    with pytest.raises(ValueError):
        VarianceDetector((0, 1)).raw_value


def test_variance_identical_signals_zero():
    det = VarianceDetector((0, 1))
    for k in range(100):
        det(0.0, np.array([0.3 * k, 0.3 * k]))
    assert det.raw_value == 0.0
    res = det.result(DetectorSpec(Scheme.VARIANCE, 0.28))
    assert res.synchronized and res.pair == (0, 1)


def test_direct_counter_signed():
    assert direct_counter([1, 2, 3], [5]) == 2
    assert direct_counter([], [1, 2]) == -2


def test_flipflop_perfect_alternation():
    assert flipflop_counter([1, 5, 9], [3, 7, 11]) == 0


def test_flipflop_counts_violations():
    # n n m m n -> two violations
    assert flipflop_counter([1, 2, 9], [5, 6]) == 2
    # all from one stream: k-1 violations
    assert flipflop_counter([1, 2, 3, 4], []) == 3
    assert flipflop_counter([], []) == 0


def test_flipflop_simultaneous_edges_hold_state():
    # same step: ordering unresolvable, the alternation state is held
    assert flipflop_counter([4], [4]) == 0
    assert flipflop_counter([2, 4], [4]) == 0
    # the held state still catches a later unpaired repeat
    assert flipflop_counter([1, 2, 3], [2]) == 1
    # a genuine order reversal through a tie counts exactly once
    assert flipflop_counter([1, 4, 8], [2, 4, 7]) == 1
    # jitter that only touches coincidence accrues nothing
    assert flipflop_counter([1, 3, 5], [2, 3, 6]) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 50), max_size=20),
       st.lists(st.integers(1, 50), max_size=20))
def test_flipflop_properties(en, em):
    en = sorted(set(en))
    em = sorted(set(em))
    c = flipflop_counter(en, em)
    assert 0 <= c <= max(0, len(en) + len(em) - 1)
    # a slip-free interleaving has |dN| <= 1
    if c == 0 and en and em:
        assert abs(direct_counter(en, em)) <= 1


def test_pair_counter_detector_on_synthetic_tones():
    fa, fb = 600e6, 613e6
    dt = 1e-10
    det = PairCounterDetector((0, 1))
    for k in range(1, 5001):  # 0.5 us
        t = k * dt
        det(t, np.array([2 * math.pi * fa * t, 2 * math.pi * fb * t]))
    # edge counts differ by ~ |df| * tau = 6.5
    assert det.direct_raw() in (6, 7)
    assert det.flipflop_raw() >= 5
    res = det.result(DetectorSpec(Scheme.DIRECT, 6))
    assert res.raw_value == det.direct_raw()
    with pytest.raises(ValueError):
        det.result(DetectorSpec(Scheme.VARIANCE, 0.28))


def test_core_pairs_order():
    assert core_pairs(4) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert core_pairs(2) == [(0, 1)]
