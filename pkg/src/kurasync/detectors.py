"""Pairwise quasi-synchronization detectors over an evaluation window.

Three schemes:
  * variance — Var of sin(phi_n - phi_m) sampled every step; synchronized
    when below eps_v.
  * direct counter — difference between the rising-edge counts of the two
    digitized signals; synchronized when |dN| < eps_d.
  * flip-flop counter — number of alternation violations (two consecutive
    edges from the same signal); synchronized when strictly below eps_f.

The analog signal fed to the Schmitt triggers is the unit-amplitude
waveform sin(phi(t)); the phase model carries no amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Calibrated equivalent thresholds for the default network (tau = 0.5 us).
DEFAULT_EPS_V = 0.28
DEFAULT_EPS_D = 6
DEFAULT_EPS_F = 6

# Hysteresis levels are a free parameter; results are insensitive over a
# wide symmetric band (see tests), +/-0.5 is the documented default.
DEFAULT_THETA_HIGH = 0.5
DEFAULT_THETA_LOW = -0.5


class Scheme(str, Enum):
    VARIANCE = "variance"
    DIRECT = "direct"
    FLIPFLOP = "flipflop"


@dataclass(frozen=True)
class DetectorSpec:
    scheme: Scheme
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.scheme is Scheme.VARIANCE:
            if not 0.0 <= self.threshold <= 0.5:
                raise ValueError(f"variance threshold must be in [0, 0.5], got {self.threshold}")
        else:
            if self.threshold < 0 or self.threshold != int(self.threshold):
                raise ValueError(f"counter threshold must be a non-negative integer, got {self.threshold}")

    @staticmethod
    def default(scheme) -> "DetectorSpec":
        scheme = Scheme(scheme)
        eps = {Scheme.VARIANCE: DEFAULT_EPS_V, Scheme.DIRECT: DEFAULT_EPS_D,
               Scheme.FLIPFLOP: DEFAULT_EPS_F}[scheme]
        return DetectorSpec(scheme, eps)


@dataclass(frozen=True)
class PairReadout:
    pair: tuple[int, int]
    raw_value: float  # variance in [0, 1] or non-negative count
    synchronized: bool


def is_synchronized(spec: DetectorSpec, raw_value: float) -> bool:
    # All three decisions are strict comparisons; eps_f = 0 therefore
    # requires perfect alternation.
    return raw_value < spec.threshold


@dataclass
class SchmittState:
    """Comparator with hysteresis on a signal in [-1, 1]."""

    theta_high: float = DEFAULT_THETA_HIGH
    theta_low: float = DEFAULT_THETA_LOW
    level: bool | None = None  # None until the first sample initializes it

    def __post_init__(self):
        if not (-1.0 < self.theta_low < self.theta_high < 1.0):
            raise ValueError("need -1 < theta_low < theta_high < 1")

    def update(self, value: float) -> bool:
        """Feed one sample; returns True on a rising (low->high) transition."""
        if self.level is None:
            self.level = value > self.theta_high
            return False
        if not self.level and value > self.theta_high:
            self.level = True
            return True
        if self.level and value < self.theta_low:
            self.level = False
        return False


def digitize_and_detect_edges(samples, schmitt: SchmittState | None = None):
    """Rising-edge times of the Schmitt-digitized signal.

    `samples` yields (time, value); the first sample initializes the trigger
    level and never emits an edge.
    """
    if schmitt is None:
        schmitt = SchmittState()
    return [t for t, v in samples if schmitt.update(v)]


class VarianceDetector:
    """Streaming (Welford) variance of sin(phi_n - phi_m) over the window."""

    def __init__(self, pair: tuple[int, int]):
        self.pair = pair
        self._n = 0
        self._mean = 0.0
        self._m2 = 0.0

    def __call__(self, time: float, phases: np.ndarray):
        i, j = self.pair
        x = math.sin(phases[i] - phases[j])
        self._n += 1
        d = x - self._mean
        self._mean += d / self._n
        self._m2 += d * (x - self._mean)

    @property
    def raw_value(self) -> float:
        if self._n == 0:
            raise ValueError("variance detector saw an empty window")
        return self._m2 / self._n

    def result(self, spec: DetectorSpec) -> PairReadout:
        raw = self.raw_value
        return PairReadout(self.pair, raw, is_synchronized(spec, raw))


class EdgeObserver:
    """Schmitt digitization + rising-edge detection on sin(phi_n) per step."""

    def __init__(self, index: int, theta_high: float = DEFAULT_THETA_HIGH,
                 theta_low: float = DEFAULT_THETA_LOW):
        self.index = index
        self.schmitt = SchmittState(theta_high, theta_low)
        self.edge_steps: list[int] = []
        self._step = 0

    def __call__(self, time: float, phases: np.ndarray):
        self._step += 1
        if self.schmitt.update(math.sin(phases[self.index])):
            self.edge_steps.append(self._step)

    @property
    def count(self) -> int:
        return len(self.edge_steps)


def direct_counter(edges_n, edges_m) -> int:
    """Signed edge-count difference dN over the window."""
    return len(edges_n) - len(edges_m)


def flipflop_counter(edges_n, edges_m) -> int:
    """Alternation violations in the merged edge stream.

    Simultaneous edges (same step index) leave the alternation state
    unchanged: their ordering is unresolvable at the sampling resolution,
    and a flip-flop receiving set and reset within one resolution window
    retains its state. A genuine order reversal (phase slip) still yields
    exactly one violation on the next unpaired edge, so the plateau law
    |count| = round(|df| * tau) for free-running pairs is preserved, while
    locked near-in-phase pairs whose edge order merely jitters around
    coincidence accrue no spurious violations.
    """
    steps_n = set(edges_n)
    steps_m = set(edges_m)
    count = 0
    last = -1
    for step in sorted(steps_n | steps_m):
        if step in steps_n and step in steps_m:
            continue
        src = 0 if step in steps_n else 1
        if src == last:
            count += 1
        last = src
    return count


class PairCounterDetector:
    """Both counter schemes for one pair, driven by two edge observers."""

    def __init__(self, pair: tuple[int, int], theta_high: float = DEFAULT_THETA_HIGH,
                 theta_low: float = DEFAULT_THETA_LOW):
        self.pair = pair
        self.obs_n = EdgeObserver(pair[0], theta_high, theta_low)
        self.obs_m = EdgeObserver(pair[1], theta_high, theta_low)

    def __call__(self, time: float, phases: np.ndarray):
        self.obs_n(time, phases)
        self.obs_m(time, phases)

    def direct_raw(self) -> int:
        return abs(direct_counter(self.obs_n.edge_steps, self.obs_m.edge_steps))

    def flipflop_raw(self) -> int:
        return flipflop_counter(self.obs_n.edge_steps, self.obs_m.edge_steps)

    def result(self, spec: DetectorSpec) -> PairReadout:
        if spec.scheme is Scheme.DIRECT:
            raw = self.direct_raw()
        elif spec.scheme is Scheme.FLIPFLOP:
            raw = self.flipflop_raw()
        else:
            raise ValueError("counter detector cannot produce a variance readout")
        return PairReadout(self.pair, raw, is_synchronized(spec, raw))


def core_pairs(n_core: int) -> list[tuple[int, int]]:
    """Lexicographic core pairs; list position = pattern-code bit index."""
    return [(i, j) for i in range(n_core) for j in range(i + 1, n_core)]
