"""Robustness studies: coupling, noise and threshold sweeps, tau convergence.

Every sweep point is a full map pipeline (simulate -> consensus -> robustness
filter -> pattern count), deterministic under the master seed; the per-value
seed derivation folds in the sweep index so values stay independent.
Threshold sweeps re-threshold a single set of raw detector outputs, which is
exact because thresholds only enter after the raw statistics.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detectors import (DEFAULT_EPS_D, DEFAULT_EPS_F, DEFAULT_EPS_V,
                        DetectorSpec, Scheme)
from .model import TopologySpec, build_network
from .readout import (DEFAULT_FILTER_RADIUS, GridSpec, SimProtocol,
                      codes_from_raws, compute_map_raws, count_patterns,
                      map_match, robust_filter, ReadoutMap)
from .rng import mix64

ALL_SCHEMES = (Scheme.VARIANCE, Scheme.DIRECT, Scheme.FLIPFLOP)

# Counting sweeps default to a 100x100 grid to bound runtime; the tau sweep
# and its long reference use 50x50.
SWEEP_GRID_STEPS = 100
TAU_GRID_STEPS = 50
REFERENCE_TAU = 100e-6
COUNTER_RATE_PER_US = 12.0


def default_cache_dir() -> Path:
    env = os.environ.get("KURASYNC_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "kurasync"


def derive_seed(master_seed: int, index: int, tag: int = 0) -> int:
    return mix64(master_seed ^ mix64((index + 1) * 0x5851F42D4C957F2D + tag))


def counter_threshold_for_tau(tau: float) -> int:
    """Threshold scaling that keeps eps/tau at 12 per microsecond.

    Round-half-up on 12*tau(us), clamped to at least 1; reproduces eps = 6
    at tau = 0.5 us.
    """
    return max(1, int(math.floor(COUNTER_RATE_PER_US * tau * 1e6 + 0.5)))


def default_detectors(tau: float | None = None) -> dict[Scheme, DetectorSpec]:
    if tau is None:
        eps = {Scheme.DIRECT: DEFAULT_EPS_D, Scheme.FLIPFLOP: DEFAULT_EPS_F}
    else:
        e = counter_threshold_for_tau(tau)
        eps = {Scheme.DIRECT: e, Scheme.FLIPFLOP: e}
    return {
        Scheme.VARIANCE: DetectorSpec(Scheme.VARIANCE, DEFAULT_EPS_V),
        Scheme.DIRECT: DetectorSpec(Scheme.DIRECT, eps[Scheme.DIRECT]),
        Scheme.FLIPFLOP: DetectorSpec(Scheme.FLIPFLOP, eps[Scheme.FLIPFLOP]),
    }


@dataclass(frozen=True)
class SweepSpec:
    parameter: str  # k_ic | k_cc | fwhm | epsilon_v | epsilon_counter | tau
    values: tuple[float, ...]
    topology: TopologySpec
    protocol: SimProtocol = SimProtocol()
    grid: GridSpec = None  # defaulted per sweep kind when None
    master_seed: int = 0
    filter_radius: float = DEFAULT_FILTER_RADIUS

    def __post_init__(self):
        valid = {"k_ic", "k_cc", "fwhm", "epsilon_v", "epsilon_counter", "tau"}
        if self.parameter not in valid:
            raise ValueError(f"unknown swept parameter {self.parameter!r}")
        vals = tuple(float(v) for v in self.values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", vals)


@dataclass
class SweepResult:
    parameter: str
    records: list[dict]  # {"param_value", "scheme", "pattern_count" | "matching_pct"}
    metadata: dict

    def by_scheme(self, scheme, key: str = "pattern_count") -> dict[float, float]:
        scheme = Scheme(scheme).value
        return {r["param_value"]: r[key] for r in self.records
                if r["scheme"] == scheme and key in r}


def _sweep_grid(spec: SweepSpec, steps: int) -> GridSpec:
    return spec.grid if spec.grid is not None else GridSpec(
        fa_steps=steps, fb_steps=steps)


def _count_for_raws(raws, grid, detector, radius) -> tuple[int, ReadoutMap]:
    codes = codes_from_raws(raws, detector)
    rmap = ReadoutMap(grid, codes, {})
    filtered = robust_filter(rmap, radius)
    n, _ = count_patterns(filtered)
    return n, filtered


def sweep_coupling(spec: SweepSpec, *, workers=None, cache_dir=None) -> SweepResult:
    """Pattern counts per scheme while one coupling strength sweeps."""
    if spec.parameter not in ("k_ic", "k_cc"):
        raise ValueError("sweep_coupling expects parameter k_ic or k_cc")
    if any(v < 0 for v in spec.values):
        raise ValueError("couplings must be non-negative")
    grid = _sweep_grid(spec, SWEEP_GRID_STEPS)
    detectors = default_detectors()
    records = []
    for i, value in enumerate(spec.values):
        topo = TopologySpec(
            core_frequencies=spec.topology.core_frequencies,
            input_frequencies=spec.topology.input_frequencies,
            k_cc=value if spec.parameter == "k_cc" else spec.topology.k_cc,
            k_ic=value if spec.parameter == "k_ic" else spec.topology.k_ic,
            noise_fwhm=spec.topology.noise_fwhm, dt=spec.topology.dt)
        network = build_network(topo)
        seed = derive_seed(spec.master_seed, i)
        raws = compute_map_raws(network, spec.protocol, grid, seed,
                                workers=workers, cache_dir=cache_dir)
        for scheme in ALL_SCHEMES:
            n, _ = _count_for_raws(raws, grid, detectors[scheme], spec.filter_radius)
            records.append({"param_value": value, "scheme": scheme.value,
                            "pattern_count": n})
    return SweepResult(spec.parameter, records, _meta(spec, grid))


def sweep_noise(spec: SweepSpec, *, workers=None, cache_dir=None) -> SweepResult:
    """Pattern counts per scheme as the oscillator FWHM increases."""
    if spec.parameter != "fwhm":
        raise ValueError("sweep_noise expects parameter 'fwhm'")
    grid = _sweep_grid(spec, SWEEP_GRID_STEPS)
    detectors = default_detectors()
    records = []
    for i, fwhm in enumerate(spec.values):
        topo = TopologySpec(
            core_frequencies=spec.topology.core_frequencies,
            input_frequencies=spec.topology.input_frequencies,
            k_cc=spec.topology.k_cc, k_ic=spec.topology.k_ic,
            noise_fwhm=fwhm, dt=spec.topology.dt)
        network = build_network(topo)
        seed = derive_seed(spec.master_seed, i)
        raws = compute_map_raws(network, spec.protocol, grid, seed,
                                workers=workers, cache_dir=cache_dir)
        for scheme in ALL_SCHEMES:
            n, _ = _count_for_raws(raws, grid, detectors[scheme], spec.filter_radius)
            records.append({"param_value": fwhm, "scheme": scheme.value,
                            "pattern_count": n})
    return SweepResult("fwhm", records, _meta(spec, grid))


def sweep_threshold(topology: TopologySpec, *,
                    variance_thresholds, counter_thresholds,
                    protocol: SimProtocol = SimProtocol(),
                    grid: GridSpec | None = None, master_seed: int = 0,
                    filter_radius: float = DEFAULT_FILTER_RADIUS,
                    workers=None, cache_dir=None) -> SweepResult:
    """Pattern counts vs threshold; one simulation pass, thresholds applied after."""
    variance_thresholds = [float(v) for v in variance_thresholds]
    for v in variance_thresholds:
        if not 0.0 <= v <= 0.5:
            raise ValueError(f"variance threshold {v} outside [0, 0.5]")
    counter_thresholds = [int(v) for v in counter_thresholds]
    grid = grid if grid is not None else GridSpec(fa_steps=SWEEP_GRID_STEPS,
                                                  fb_steps=SWEEP_GRID_STEPS)
    network = build_network(topology)
    raws = compute_map_raws(network, protocol, grid, master_seed,
                            workers=workers, cache_dir=cache_dir)
    records = []
    for v in variance_thresholds:
        n, _ = _count_for_raws(raws, grid, DetectorSpec(Scheme.VARIANCE, v), filter_radius)
        records.append({"param_value": v, "scheme": Scheme.VARIANCE.value,
                        "pattern_count": n})
    for e in counter_thresholds:
        for scheme in (Scheme.DIRECT, Scheme.FLIPFLOP):
            n, _ = _count_for_raws(raws, grid, DetectorSpec(scheme, e), filter_radius)
            records.append({"param_value": float(e), "scheme": scheme.value,
                            "pattern_count": n})
    meta = {"parameter": "threshold", "grid": grid.to_dict(),
            "protocol": protocol.to_dict(), "master_seed": master_seed,
            "topology": topology.to_dict(), "filter_radius_hz": filter_radius}
    return SweepResult("threshold", records, meta)


def reference_map_raws(topology: TopologySpec, *, grid: GridSpec,
                       cooldown: float = 0.5e-6, reps: int = 10,
                       master_seed: int = 0, ref_tau: float = REFERENCE_TAU,
                       workers=None, cache_dir=None):
    """Long-evaluation (stationary) raw outputs, cached on disk by default.

    The full-length reference is ~1000x the cost of a standard map, so it is
    computed once per configuration and reused.
    """
    if cache_dir is None:
        cache_dir = default_cache_dir()
    network = build_network(topology)
    protocol = SimProtocol(total_time=cooldown + ref_tau, cooldown=cooldown,
                           tau=ref_tau, repetitions=reps)
    seed = derive_seed(master_seed, 0, tag=0x7EF)
    raws = compute_map_raws(network, protocol, grid, seed,
                            workers=workers, cache_dir=cache_dir)
    return raws, protocol, seed


def sweep_tau(spec: SweepSpec, *, ref_tau: float = REFERENCE_TAU,
              workers=None, cache_dir=None) -> SweepResult:
    """Map matching vs a long-evaluation reference, and counts, as tau varies.

    Counter thresholds scale with tau (12 per microsecond); the variance
    threshold stays fixed. Matching is computed per scheme against that
    scheme's reference map on the same grid.
    """
    if spec.parameter != "tau":
        raise ValueError("sweep_tau expects parameter 'tau'")
    grid = _sweep_grid(spec, TAU_GRID_STEPS)
    dt = spec.topology.dt
    for tau in spec.values:
        if abs(round(tau / dt) * dt - tau) > 1e-6 * dt or tau <= 0:
            raise ValueError(f"tau {tau} is not a positive multiple of dt {dt}")

    ref_raws, _, _ = reference_map_raws(
        spec.topology, grid=grid, cooldown=spec.protocol.cooldown,
        reps=spec.protocol.repetitions, master_seed=spec.master_seed,
        ref_tau=ref_tau, workers=workers, cache_dir=cache_dir)
    ref_detectors = default_detectors(ref_tau)
    ref_maps = {s: ReadoutMap(grid, codes_from_raws(ref_raws, ref_detectors[s]), {})
                for s in ALL_SCHEMES}

    network_base = build_network(spec.topology)
    records = []
    for i, tau in enumerate(spec.values):
        protocol = SimProtocol(total_time=spec.protocol.cooldown + tau,
                               cooldown=spec.protocol.cooldown, tau=tau,
                               repetitions=spec.protocol.repetitions)
        seed = derive_seed(spec.master_seed, i, tag=0x7A0)
        raws = compute_map_raws(network_base, protocol, grid, seed,
                                workers=workers, cache_dir=cache_dir)
        detectors = default_detectors(tau)
        for scheme in ALL_SCHEMES:
            codes = codes_from_raws(raws, detectors[scheme])
            rmap = ReadoutMap(grid, codes, {})
            pct = map_match(rmap, ref_maps[scheme])
            filtered = robust_filter(rmap, spec.filter_radius)
            n, _ = count_patterns(filtered)
            records.append({"param_value": tau, "scheme": scheme.value,
                            "matching_pct": pct, "pattern_count": n})
    meta = _meta(spec, grid)
    meta["ref_tau_s"] = ref_tau
    return SweepResult("tau", records, meta)


def sweep_input_frequency(topology: TopologySpec, fa_values, *,
                          protocol: SimProtocol | None = None,
                          master_seed: int = 0, repetitions: int = 1,
                          workers=None):
    """Calibration sweep on the reduced system: raw outputs vs one input frequency.

    Returns (fa_values, mean_freqs[n_pts, N], var_raw, direct_raw, flipflop_raw)
    for the core pair (0, 1); repetitions > 1 average the raw outputs.
    """
    if len(topology.input_frequencies) != 1:
        raise ValueError("the calibration sweep uses exactly one input oscillator")
    protocol = protocol or SimProtocol(repetitions=repetitions)
    network = build_network(topology)
    n_cool, n_tau = protocol.steps(network.dt)
    fa_values = np.asarray(fa_values, dtype=float)
    reps = protocol.repetitions
    n_pts = len(fa_values)
    freqs = np.tile(network.frequencies, (n_pts * reps, 1))
    (in_a,) = network.input_indices
    freqs[:, in_a] = np.repeat(fa_values, reps)
    stream_ids = np.arange(n_pts * reps, dtype=np.uint64)

    from . import engine

    res = engine.simulate_batch(network.coupling, freqs,
                                noise_fwhm=network.noise_fwhm, dt=network.dt,
                                n_cool=n_cool, n_tau=n_tau, n_core=network.n_core,
                                master_seed=master_seed, stream_ids=stream_ids,
                                workers=workers)
    npairs = res.variance.shape[1]
    shape = (n_pts, reps)
    meanf = res.mean_freqs.reshape(n_pts, reps, network.n).mean(axis=1)
    var = res.variance.reshape(*shape, npairs)[:, :, 0].mean(axis=1)
    direct = np.abs(res.direct_signed.reshape(*shape, npairs)[:, :, 0]).mean(axis=1)
    ff = res.flipflop.reshape(*shape, npairs)[:, :, 0].mean(axis=1)
    return fa_values, meanf, var, direct, ff


def _meta(spec: SweepSpec, grid: GridSpec) -> dict:
    return {"parameter": spec.parameter, "values": list(spec.values),
            "grid": grid.to_dict(), "protocol": spec.protocol.to_dict(),
            "master_seed": spec.master_seed, "topology": spec.topology.to_dict(),
            "filter_radius_hz": spec.filter_radius}


def write_sweep_csv(path, result: SweepResult):
    keys = ["matching_pct", "pattern_count"] if result.parameter == "tau" else ["pattern_count"]
    with open(path, "w") as fh:
        fh.write("param_value,scheme," + ",".join(keys) + "\n")
        for r in result.records:
            vals = ",".join(f"{r[k]:.17g}" if isinstance(r[k], float) else str(r[k])
                            for k in keys)
            fh.write(f"{r['param_value']:.17g},{r['scheme']},{vals}\n")
