"""Stochastic phase dynamics: phi_n' = 2*pi*f_n + 2*pi*sum_m k_mn*sin(phi_m - phi_n) + noise.

Euler-Maruyama stepping; for this additive (state-independent) noise the
Milstein correction term is identically zero, so the two schemes coincide.
Phases are stored wrapped into [0, 2*pi); observers that need unwrapped
phase accumulate per-step increments instead.

This module is the plain, observer-based reference path used for traces,
validation and cross-checks. Large batch runs go through
:mod:`kurasync.engine`, which computes the same update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import NetworkConfig
from .rng import RngStream

TWO_PI = 2.0 * math.pi


@dataclass
class PhaseState:
    phases: np.ndarray  # radians, wrapped to [0, 2*pi)
    time: float  # s


@dataclass(frozen=True)
class NoiseModel:
    """Per-step phase-increment statistics implied by a Lorentzian FWHM.

    The Langevin noise has standard deviation sqrt(2*pi*FWHM/dt); multiplied
    by dt in the Euler step this gives a per-step increment deviation of
    sqrt(2*pi*FWHM*dt).
    """

    fwhm: float  # Hz

    def per_step_sigma(self, dt: float) -> float:
        return math.sqrt(TWO_PI * self.fwhm * dt)


def random_initial_state(config: NetworkConfig, rng: RngStream) -> PhaseState:
    """Independent uniform phases on [0, 2*pi), one draw per oscillator."""
    phases = np.array([TWO_PI * rng.uniform() for _ in range(config.n)])
    return PhaseState(phases=phases, time=0.0)


def step(config: NetworkConfig, state: PhaseState, rng: RngStream) -> PhaseState:
    """Advance one dt. Draws config.n normals (oscillator order) iff noisy."""
    phi = state.phases
    f = config.frequencies
    k = config.coupling
    sin_phi = np.sin(phi)
    cos_phi = np.cos(phi)
    # sum_m k_nm sin(phi_m - phi_n) = cos(phi_n) (K sin)_n - sin(phi_n) (K cos)_n
    s = k @ sin_phi
    c = k @ cos_phi
    drift = config.dt * TWO_PI * (f + cos_phi * s - sin_phi * c)
    if config.noise_fwhm > 0:
        sigma = NoiseModel(config.noise_fwhm).per_step_sigma(config.dt)
        z = np.array([rng.normal() for _ in range(config.n)])
        drift = drift + sigma * z
    new = np.mod(phi + drift, TWO_PI)
    return PhaseState(phases=new, time=state.time + config.dt)


def steps_for(duration: float, dt: float) -> int:
    n = round(duration / dt)
    if n <= 0 or abs(n * dt - duration) > 1e-6 * dt:
        raise ValueError(f"duration {duration} is not a positive multiple of dt {dt}")
    return n


def run(config: NetworkConfig, duration: float, initial: PhaseState,
        rng: RngStream, observers=()) -> PhaseState:
    """Integrate for `duration`, calling each observer once per step.

    Observers receive (time, phases) for the post-step state and must treat
    the phase array as read-only. An observer exception aborts the run.
    """
    if initial.phases.shape != (config.n,):
        raise ValueError("initial state dimension does not match network")
    n_steps = steps_for(duration, config.dt)
    state = initial
    for i in range(n_steps):
        state = step(config, state, rng)
        for obs in observers:
            try:
                obs(state.time, state.phases)
            except Exception as exc:
                raise RuntimeError(
                    f"observer {obs!r} failed at step {i + 1} (t={state.time:.3e}s)"
                ) from exc
    return state


class PhaseIncrementObserver:
    """Accumulates per-step unwrapped phase increments for each oscillator.

    Wrapped samples are unwrapped step-by-step, valid while every true
    per-step increment stays inside (-pi, pi].
    """

    def __init__(self, initial_phases: np.ndarray):
        self._prev = np.array(initial_phases, dtype=float)
        self.total = np.zeros_like(self._prev)
        self.n_steps = 0

    def __call__(self, time: float, phases: np.ndarray):
        d = np.mod(phases - self._prev + math.pi, TWO_PI) - math.pi
        self.total += d
        self._prev = np.array(phases)
        self.n_steps += 1


class TraceRecorder:
    """Records (t, phases) every `stride` steps."""

    def __init__(self, stride: int = 1):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.stride = stride
        self.times: list[float] = []
        self.rows: list[np.ndarray] = []
        self._count = 0

    def __call__(self, time: float, phases: np.ndarray):
        self._count += 1
        if self._count % self.stride == 0:
            self.times.append(time)
            self.rows.append(np.array(phases))


def measure_mean_frequency(unwrapped_phase_delta: float, window: float) -> float:
    """Mean frequency over a window from the total unwrapped phase advance."""
    if window <= 0:
        raise ValueError("window must be > 0")
    return unwrapped_phase_delta / (TWO_PI * window)


def estimate_linewidth(fwhm_config: float, observation: float, *,
                       dt: float = 1e-10, f0: float = 600e6,
                       segments: int = 20, seed: int = 0) -> float:
    """Estimate the Lorentzian FWHM of one isolated noisy oscillator.

    Simulates the phase, Welch-averages the power spectrum of exp(i*phi)
    over `segments` segments and fits a Lorentzian around the carrier.
    Validation tool for the noise calibration; refuses observations too
    short to resolve the configured linewidth.
    """
    from scipy import optimize, signal

    if observation <= 0 or dt <= 0:
        raise ValueError("observation and dt must be positive")
    if fwhm_config > 0 and fwhm_config * observation < 50:
        raise ValueError(
            f"observation {observation}s too short: need FWHM*observation >= 50, "
            f"got {fwhm_config * observation:.1f}")

    n = steps_for(observation, dt)
    rng = RngStream(seed, stream_id=0xA11A5)
    incr = np.full(n, TWO_PI * f0 * dt)
    if fwhm_config > 0:
        sigma = NoiseModel(fwhm_config).per_step_sigma(dt)
        incr = incr + sigma * rng.normals(n)
    phi = np.cumsum(incr)

    nperseg = n // segments
    fs = 1.0 / dt
    freqs, psd = signal.welch(np.exp(1j * phi), fs=fs, nperseg=nperseg,
                              return_onesided=False, detrend=False)
    freqs = np.fft.fftshift(freqs)
    psd = np.fft.fftshift(psd)
    resolution = fs / nperseg

    peak = int(np.argmax(psd))
    if fwhm_config <= 0:
        # Noiseless tone: report the window-resolution bound.
        return resolution

    # Fit a Lorentzian over a window around the carrier, wide vs the expected line.
    half_window = max(10 * fwhm_config, 5 * resolution)
    sel = np.abs(freqs - freqs[peak]) <= half_window

    def lorentzian(f, amp, fc, w):
        return amp * (w / 2) ** 2 / ((f - fc) ** 2 + (w / 2) ** 2)

    p0 = (float(psd[peak]), float(freqs[peak]), max(fwhm_config, resolution))
    popt, _ = optimize.curve_fit(lorentzian, freqs[sel], psd[sel], p0=p0, maxfev=20000)
    return abs(popt[2])
