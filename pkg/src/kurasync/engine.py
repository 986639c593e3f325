"""Compiled batch engine: many independent simulations with in-loop detectors.

Each batch element integrates the phase dynamics for cooldown + tau and
accumulates, over the evaluation window only, the three detector statistics
for every core pair plus per-oscillator mean frequencies. The RNG (SplitMix64
streams + AS241 inverse-CDF normals) and the sampling conventions mirror the
reference path in :mod:`kurasync.integrator` / :mod:`kurasync.detectors`.

Phase trigonometry is advanced by rotation: per step the small increment's
sin/cos come from a truncated series (|x| <= 0.5, error < 3e-14) and the
(sin, cos) pair of each oscillator is rotated and renormalized. This removes
all per-step libm calls from the hot loop while matching the plain update to
~1e-13 rad per step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * math.pi
_U53 = 1.0 / (1 << 53)

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM_C = np.uint64(0x1D8E4E27C47D124F)
_ONE = np.uint64(1)


@njit(inline="always", cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(inline="always", cache=True)
def _stream_state(master_seed, stream_id):
    state = _mix64(master_seed) ^ _mix64(stream_id * _GOLDEN + _STREAM_C)
    gamma = _mix64(state + _GOLDEN) | _ONE
    return state, gamma


@njit(inline="always", cache=True)
def _ppnd16(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r
                    + 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r
                  + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r
                + 1.3314166789178437745e+2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r
                    + 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r
                  + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r
                + 4.2313330701600911252e+1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True, parallel=True, fastmath={"contract", "arcp", "nsz"}, error_model="numpy")
def _run_batch(freqs, K, sigma, dt, n_cool, n_tau, n_core,
               theta_hi, theta_lo, master_seed, stream_ids,
               var_out, dn_out, ff_out, meanf_out):
    n_sims, N = freqs.shape
    npairs = n_core * (n_core - 1) // 2
    n_total = n_cool + n_tau
    tau = n_tau * dt

    for s in prange(n_sims):
        state, gamma = _stream_state(master_seed, stream_ids[s])

        si = np.empty(N)
        ci = np.empty(N)
        for n in range(N):
            state = state + gamma
            u = (float(_mix64(state) >> np.uint64(11)) + 0.5) * _U53
            phi0 = TWO_PI * u
            si[n] = math.sin(phi0)
            ci[n] = math.cos(phi0)

        sumd = np.zeros(N)
        dphi = np.empty(N)
        mean = np.zeros(npairs)
        m2 = np.zeros(npairs)
        level = np.zeros(n_core, dtype=np.uint8)
        ec = np.zeros(n_core, dtype=np.int64)
        fired = np.zeros(n_core, dtype=np.uint8)
        last = np.full(npairs, -1, dtype=np.int8)
        ffc = np.zeros(npairs, dtype=np.int64)
        nsamp = 0

        for k in range(1, n_total + 1):
            for n in range(N):
                S = 0.0
                C = 0.0
                for m in range(N):
                    S += K[n, m] * si[m]
                    C += K[n, m] * ci[m]
                dphi[n] = dt * TWO_PI * (freqs[s, n] + ci[n] * S - si[n] * C)
            if sigma > 0.0:
                for n in range(N):
                    state = state + gamma
                    u = (float(_mix64(state) >> np.uint64(11)) + 0.5) * _U53
                    dphi[n] += sigma * _ppnd16(u)

            in_win = k > n_cool
            for n in range(N):
                d = dphi[n]
                if in_win:
                    sumd[n] += d
                if -0.5 <= d <= 0.5:
                    x2 = d * d
                    sd = d * (1.0 + x2 * (-1.6666666666666666e-01 + x2 * (
                        8.3333333333333332e-03 + x2 * (-1.9841269841269841e-04 + x2 * (
                            2.7557319223985893e-06 + x2 * -2.5052108385441720e-08)))))
                    cd = 1.0 + x2 * (-0.5 + x2 * (4.1666666666666664e-02 + x2 * (
                        -1.3888888888888889e-03 + x2 * (2.4801587301587302e-05 + x2 * (
                            -2.7557319223985888e-07 + x2 * 2.0876756987868099e-09)))))
                else:
                    sd = math.sin(d)
                    cd = math.cos(d)
                sn = si[n] * cd + ci[n] * sd
                cn = ci[n] * cd - si[n] * sd
                r = 0.5 * (3.0 - (sn * sn + cn * cn))
                si[n] = sn * r
                ci[n] = cn * r

            if in_win:
                nsamp += 1
                p = 0
                for i in range(n_core):
                    for j in range(i + 1, n_core):
                        x = si[i] * ci[j] - ci[i] * si[j]
                        delta = x - mean[p]
                        mean[p] += delta / nsamp
                        m2[p] += delta * (x - mean[p])
                        p += 1
                if nsamp == 1:
                    for i in range(n_core):
                        level[i] = 1 if si[i] > theta_hi else 0
                else:
                    any_edge = False
                    for i in range(n_core):
                        fired[i] = 0
                        v = si[i]
                        if level[i] == 0:
                            if v > theta_hi:
                                level[i] = 1
                                ec[i] += 1
                                fired[i] = 1
                                any_edge = True
                        elif v < theta_lo:
                            level[i] = 0
                    if any_edge:
                        # same-step edges of a pair are order-unresolvable:
                        # the alternation state is held (see flipflop_counter)
                        p = 0
                        for a in range(n_core):
                            for b in range(a + 1, n_core):
                                if fired[a] != fired[b]:
                                    code = 0 if fired[a] == 1 else 1
                                    if last[p] == code:
                                        ffc[p] += 1
                                    last[p] = code
                                p += 1

        p = 0
        for i in range(n_core):
            for j in range(i + 1, n_core):
                var_out[s, p] = m2[p] / nsamp
                dn_out[s, p] = ec[i] - ec[j]
                ff_out[s, p] = ffc[p]
                p += 1
        for n in range(N):
            meanf_out[s, n] = sumd[n] / (TWO_PI * tau)


@dataclass(frozen=True)
class BatchResult:
    """Raw detector outputs per simulation; counters before magnitude/threshold."""

    variance: np.ndarray  # (n_sims, n_pairs) float64
    direct_signed: np.ndarray  # (n_sims, n_pairs) int64, signed dN
    flipflop: np.ndarray  # (n_sims, n_pairs) int64
    mean_freqs: np.ndarray  # (n_sims, N) Hz over the evaluation window


def set_workers(workers: int | None):
    """Cap numba's thread pool; clamped to what the machine exposes."""
    import numba

    if workers is None:
        return
    if workers < 1:
        raise ValueError("workers must be >= 1")
    numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))


def simulate_batch(coupling: np.ndarray, freqs: np.ndarray, *, noise_fwhm: float,
                   dt: float, n_cool: int, n_tau: int, n_core: int,
                   master_seed: int, stream_ids: np.ndarray,
                   theta_high: float = 0.5, theta_low: float = -0.5,
                   workers: int | None = None) -> BatchResult:
    """Run one simulation per row of `freqs`; detectors cover the tau window."""
    freqs = np.ascontiguousarray(freqs, dtype=np.float64)
    coupling = np.ascontiguousarray(coupling, dtype=np.float64)
    n_sims, N = freqs.shape
    if coupling.shape != (N, N):
        raise ValueError("coupling shape does not match frequency rows")
    if n_tau < 1 or n_cool < 0:
        raise ValueError("need n_tau >= 1 and n_cool >= 0")
    if not 2 <= n_core <= N:
        raise ValueError("n_core out of range")
    stream_ids = np.ascontiguousarray(stream_ids, dtype=np.uint64)
    if stream_ids.shape != (n_sims,):
        raise ValueError("one stream id per simulation required")

    set_workers(workers)
    sigma = math.sqrt(TWO_PI * noise_fwhm * dt)
    npairs = n_core * (n_core - 1) // 2
    var_out = np.empty((n_sims, npairs))
    dn_out = np.empty((n_sims, npairs), dtype=np.int64)
    ff_out = np.empty((n_sims, npairs), dtype=np.int64)
    meanf_out = np.empty((n_sims, N))
    _run_batch(freqs, coupling, sigma, dt, n_cool, n_tau, n_core,
               theta_high, theta_low, np.uint64(master_seed), stream_ids,
               var_out, dn_out, ff_out, meanf_out)
    return BatchResult(var_out, dn_out, ff_out, meanf_out)
