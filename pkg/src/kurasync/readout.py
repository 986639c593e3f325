"""Recognition protocol: repetitions, consensus codes, readout maps, filtering.

A readout map is a grid over the two input natural frequencies. Each cell is
simulated `repetitions` times with fresh random initial phases; the active
detector judges every core pair per run and the per-run results are packed
into a pattern code (bit k = k-th lexicographic core pair synchronized).
A cell's consensus is the common code, or INCONSISTENT (-1) if any repetition
disagrees. Before counting discriminated classes, a robustness filter keeps
only cells whose whole radius-neighborhood carries the same code.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import engine
from .detectors import DetectorSpec, Scheme, core_pairs
from .model import NetworkConfig

INCONSISTENT = -1
SCHEMA_VERSION = 1

DEFAULT_FA_RANGE = (470e6, 670e6)
DEFAULT_FB_RANGE = (470e6, 670e6)
DEFAULT_GRID_STEPS = 200
DEFAULT_FILTER_RADIUS = 3e6


@dataclass(frozen=True)
class SimProtocol:
    """Timing and repetition protocol for one map point."""

    total_time: float = 1e-6  # s
    cooldown: float = 0.5e-6  # s
    tau: float = 0.5e-6  # s
    repetitions: int = 10

    def __post_init__(self):
        if self.cooldown < 0 or self.tau <= 0:
            raise ValueError("cooldown must be >= 0 and tau > 0")
        if self.cooldown + self.tau > self.total_time * (1 + 1e-9):
            raise ValueError("cooldown + tau exceeds total_time")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def steps(self, dt: float) -> tuple[int, int]:
        """(cooldown steps, evaluation-window steps); both must divide evenly."""
        n_cool = round(self.cooldown / dt)
        n_tau = round(self.tau / dt)
        if abs(n_cool * dt - self.cooldown) > 1e-6 * dt:
            raise ValueError(f"cooldown {self.cooldown} is not a multiple of dt {dt}")
        if n_tau <= 0 or abs(n_tau * dt - self.tau) > 1e-6 * dt:
            raise ValueError(f"tau {self.tau} is not a positive multiple of dt {dt}")
        return n_cool, n_tau

    def to_dict(self) -> dict:
        return {"total_time_s": self.total_time, "cooldown_s": self.cooldown,
                "tau_s": self.tau, "repetitions": self.repetitions}

    @staticmethod
    def from_dict(d: dict) -> "SimProtocol":
        return SimProtocol(d["total_time_s"], d["cooldown_s"], d["tau_s"], d["repetitions"])


@dataclass(frozen=True)
class GridSpec:
    fa_min: float = DEFAULT_FA_RANGE[0]
    fa_max: float = DEFAULT_FA_RANGE[1]
    fa_steps: int = DEFAULT_GRID_STEPS
    fb_min: float = DEFAULT_FB_RANGE[0]
    fb_max: float = DEFAULT_FB_RANGE[1]
    fb_steps: int = DEFAULT_GRID_STEPS

    def __post_init__(self):
        if self.fa_steps < 1 or self.fb_steps < 1:
            raise ValueError("grid steps must be >= 1")
        if self.fa_min <= 0 or self.fb_min <= 0 or self.fa_max < self.fa_min or self.fb_max < self.fb_min:
            raise ValueError("invalid frequency ranges")

    @property
    def fa_values(self) -> np.ndarray:
        return np.linspace(self.fa_min, self.fa_max, self.fa_steps)

    @property
    def fb_values(self) -> np.ndarray:
        return np.linspace(self.fb_min, self.fb_max, self.fb_steps)

    @property
    def n_cells(self) -> int:
        return self.fa_steps * self.fb_steps

    def cell_freqs(self, idx: int) -> tuple[float, float]:
        ia, ib = divmod(idx, self.fb_steps)
        return float(self.fa_values[ia]), float(self.fb_values[ib])

    def pitches(self) -> tuple[float, float]:
        pa = (self.fa_max - self.fa_min) / (self.fa_steps - 1) if self.fa_steps > 1 else math.inf
        pb = (self.fb_max - self.fb_min) / (self.fb_steps - 1) if self.fb_steps > 1 else math.inf
        return pa, pb

    def to_dict(self) -> dict:
        return {"fa_min_hz": self.fa_min, "fa_max_hz": self.fa_max, "fa_steps": self.fa_steps,
                "fb_min_hz": self.fb_min, "fb_max_hz": self.fb_max, "fb_steps": self.fb_steps}

    @staticmethod
    def from_dict(d: dict) -> "GridSpec":
        return GridSpec(d["fa_min_hz"], d["fa_max_hz"], d["fa_steps"],
                        d["fb_min_hz"], d["fb_max_hz"], d["fb_steps"])


@dataclass(frozen=True)
class MapCell:
    input_frequencies: tuple[float, float]
    consensus: int  # pattern code, or INCONSISTENT


@dataclass
class ReadoutMap:
    grid: GridSpec
    codes: np.ndarray  # (n_cells,) int32, row-major fA outer, fB inner
    metadata: dict
    kept: np.ndarray | None = None  # set by robust_filter

    def cell(self, idx: int) -> MapCell:
        return MapCell(self.grid.cell_freqs(idx), int(self.codes[idx]))

    @property
    def consistent_fraction(self) -> float:
        return float(np.mean(self.codes != INCONSISTENT))


@dataclass(frozen=True)
class MapRaws:
    """Pre-threshold detector outputs for every (cell, repetition, pair)."""

    variance: np.ndarray  # (n_cells, reps, n_pairs) float64
    direct_signed: np.ndarray  # int32
    flipflop: np.ndarray  # int32


def pattern_code(sync_flags) -> int:
    code = 0
    for bit, flag in enumerate(sync_flags):
        if flag:
            code |= 1 << bit
    return code


def consensus_codes(codes_per_rep: np.ndarray) -> np.ndarray:
    """(n_cells, reps) per-run codes -> (n_cells,) consensus or INCONSISTENT."""
    first = codes_per_rep[:, 0]
    agree = np.all(codes_per_rep == first[:, None], axis=1)
    return np.where(agree, first, INCONSISTENT).astype(np.int32)


def _raws_digest(network: NetworkConfig, protocol: SimProtocol, grid: GridSpec,
                 master_seed: int, theta_high: float, theta_low: float) -> str:
    payload = {
        "network": network.digest(),
        "protocol": protocol.to_dict(),
        "grid": grid.to_dict(),
        "master_seed": master_seed,
        "theta": [theta_high, theta_low],
        "schema": SCHEMA_VERSION,
        # bump when detector/counter semantics change: cached raw values
        # embed the counter outputs, not just the trajectories
        "counter_semantics": 2,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:24]


def compute_map_raws(network: NetworkConfig, protocol: SimProtocol, grid: GridSpec,
                     master_seed: int, *, workers: int | None = None,
                     theta_high: float = 0.5, theta_low: float = -0.5,
                     cache_dir=None) -> MapRaws:
    """Simulate every (cell, repetition) once; all three schemes share the runs.

    Deterministic in master_seed regardless of worker count: repetition r of
    cell c always uses stream id c*repetitions + r. Results are optionally
    cached on disk keyed by the full metadata digest.
    """
    if len(network.input_indices) != 2:
        raise ValueError("readout maps require exactly two input oscillators")
    cache_path = None
    if cache_dir is not None:
        from pathlib import Path

        digest = _raws_digest(network, protocol, grid, master_seed, theta_high, theta_low)
        cache_path = Path(cache_dir) / f"raws_{digest}.npz"
        if cache_path.exists():
            with np.load(cache_path) as z:
                return MapRaws(z["variance"], z["direct_signed"], z["flipflop"])

    n_cool, n_tau = protocol.steps(network.dt)
    reps = protocol.repetitions
    n_cells = grid.n_cells
    base = network.frequencies
    freqs = np.tile(base, (n_cells * reps, 1))
    ia_idx, ib_idx = np.divmod(np.arange(n_cells), grid.fb_steps)
    in_a, in_b = network.input_indices
    freqs[:, in_a] = np.repeat(grid.fa_values[ia_idx], reps)
    freqs[:, in_b] = np.repeat(grid.fb_values[ib_idx], reps)
    stream_ids = np.arange(n_cells * reps, dtype=np.uint64)

    res = engine.simulate_batch(
        network.coupling, freqs, noise_fwhm=network.noise_fwhm, dt=network.dt,
        n_cool=n_cool, n_tau=n_tau, n_core=network.n_core,
        master_seed=master_seed, stream_ids=stream_ids,
        theta_high=theta_high, theta_low=theta_low, workers=workers)

    npairs = len(core_pairs(network.n_core))
    raws = MapRaws(
        variance=res.variance.reshape(n_cells, reps, npairs),
        direct_signed=res.direct_signed.reshape(n_cells, reps, npairs).astype(np.int32),
        flipflop=res.flipflop.reshape(n_cells, reps, npairs).astype(np.int32),
    )
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache_path.with_suffix(".tmp.npz")
        np.savez_compressed(tmp, variance=raws.variance,
                            direct_signed=raws.direct_signed, flipflop=raws.flipflop)
        tmp.replace(cache_path)
    return raws


def codes_from_raws(raws: MapRaws, detector: DetectorSpec) -> np.ndarray:
    """Threshold one scheme's raw values into (n_cells,) consensus codes."""
    if detector.scheme is Scheme.VARIANCE:
        sync = raws.variance < detector.threshold
    elif detector.scheme is Scheme.DIRECT:
        sync = np.abs(raws.direct_signed) < detector.threshold
    else:
        sync = raws.flipflop < detector.threshold
    npairs = sync.shape[2]
    weights = (1 << np.arange(npairs)).astype(np.int64)
    codes_per_rep = (sync * weights).sum(axis=2)
    return consensus_codes(codes_per_rep)


def map_metadata(network: NetworkConfig, protocol: SimProtocol, grid: GridSpec,
                 detector: DetectorSpec, master_seed: int) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "readout_map",
        "detector": {"scheme": detector.scheme.value, "threshold": detector.threshold},
        "protocol": protocol.to_dict(),
        "grid": grid.to_dict(),
        "master_seed": master_seed,
        "network_digest": network.digest(),
        "network": {
            "frequencies_hz": [o.natural_frequency for o in network.oscillators],
            "roles": [o.role for o in network.oscillators],
            "noise_fwhm_hz": network.noise_fwhm,
            "dt_s": network.dt,
        },
    }


def classify_point(network: NetworkConfig, protocol: SimProtocol, detector: DetectorSpec,
                   point: tuple[float, float], master_seed: int,
                   cell_index: int = 0) -> MapCell:
    """Consensus pattern code for one input point (or INCONSISTENT)."""
    grid = GridSpec(point[0], point[0], 1, point[1], point[1], 1)
    raws = compute_map_raws(network, protocol, grid, master_seed)
    # stream ids for a 1x1 grid start at cell 0; shift to the requested cell
    if cell_index != 0:
        n_cool, n_tau = protocol.steps(network.dt)
        reps = protocol.repetitions
        freqs = np.tile(network.frequencies, (reps, 1))
        in_a, in_b = network.input_indices
        freqs[:, in_a] = point[0]
        freqs[:, in_b] = point[1]
        sids = (np.arange(reps) + cell_index * reps).astype(np.uint64)
        res = engine.simulate_batch(network.coupling, freqs, noise_fwhm=network.noise_fwhm,
                                    dt=network.dt, n_cool=n_cool, n_tau=n_tau,
                                    n_core=network.n_core, master_seed=master_seed,
                                    stream_ids=sids)
        npairs = len(core_pairs(network.n_core))
        raws = MapRaws(res.variance.reshape(reps, 1, npairs).swapaxes(0, 1),
                       res.direct_signed.reshape(1, reps, npairs).astype(np.int32),
                       res.flipflop.reshape(1, reps, npairs).astype(np.int32))
    codes = codes_from_raws(raws, detector)
    return MapCell((point[0], point[1]), int(codes[0]))


def build_map(network: NetworkConfig, protocol: SimProtocol, detector: DetectorSpec,
              grid: GridSpec, master_seed: int, *, workers: int | None = None,
              cache_dir=None) -> ReadoutMap:
    raws = compute_map_raws(network, protocol, grid, master_seed,
                            workers=workers, cache_dir=cache_dir)
    codes = codes_from_raws(raws, detector)
    return ReadoutMap(grid, codes, map_metadata(network, protocol, grid, detector, master_seed))


def robust_filter(rmap: ReadoutMap, radius: float = DEFAULT_FILTER_RADIUS) -> ReadoutMap:
    """Keep a cell iff every cell center within `radius` shares its code.

    The disk is clipped at map boundaries (frequencies do not wrap). A cell
    must itself be consistent to be kept.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    grid = rmap.grid
    pa, pb = grid.pitches()
    if radius > 0 and radius < min(pa, pb):
        warnings.warn(
            f"filter radius {radius:.3g} Hz is below the grid pitch "
            f"({min(pa, pb):.3g} Hz); keeping all consistent cells", stacklevel=2)

    codes = rmap.codes.reshape(grid.fa_steps, grid.fb_steps)
    da_max = 0 if not math.isfinite(pa) else int(radius // pa)
    db_max = 0 if not math.isfinite(pb) else int(radius // pb)
    offsets = [(da, db)
               for da in range(-da_max, da_max + 1)
               for db in range(-db_max, db_max + 1)
               if ((da * pa if da else 0.0) ** 2 + (db * pb if db else 0.0) ** 2
                   <= radius ** 2 * (1 + 1e-12))]

    kept = np.ones_like(codes, dtype=bool)
    for da, db in offsets:
        shifted = np.full_like(codes, INCONSISTENT - 1)  # sentinel never matches
        a_src = slice(max(0, da), codes.shape[0] + min(0, da))
        a_dst = slice(max(0, -da), codes.shape[0] + min(0, -da))
        b_src = slice(max(0, db), codes.shape[1] + min(0, db))
        b_dst = slice(max(0, -db), codes.shape[1] + min(0, -db))
        shifted[a_dst, b_dst] = codes[a_src, b_src]
        in_range = np.zeros_like(codes, dtype=bool)
        in_range[a_dst, b_dst] = True
        # out-of-range neighbors are clipped; in-range ones must match
        kept &= ~in_range | (shifted == codes)
    kept &= codes != INCONSISTENT

    out = ReadoutMap(grid, rmap.codes.copy(), dict(rmap.metadata), kept.reshape(-1))
    out.metadata["filter_radius_hz"] = radius
    return out


def count_patterns(rmap: ReadoutMap) -> tuple[int, list[int]]:
    """Distinct pattern codes among kept cells of a filtered map."""
    if rmap.kept is None:
        raise ValueError("count_patterns requires a filtered map (run robust_filter first)")
    codes = np.unique(rmap.codes[rmap.kept])
    codes = [int(c) for c in codes if c != INCONSISTENT]
    return len(codes), codes


def map_match(map_a: ReadoutMap, map_b: ReadoutMap, *,
              include_inconsistent: bool = True) -> float:
    """Percentage of grid cells with equal consensus values.

    Inconsistent-vs-inconsistent counts as a match by default; with
    include_inconsistent=False those cells are excluded from the comparison.
    """
    if map_a.grid != map_b.grid:
        raise ValueError("maps have different grids")
    a, b = map_a.codes, map_b.codes
    if include_inconsistent:
        return float(np.mean(a == b) * 100.0)
    mask = ~((a == INCONSISTENT) & (b == INCONSISTENT))
    if not mask.any():
        return 100.0
    return float(np.mean(a[mask] == b[mask]) * 100.0)


# ---------------------------------------------------------------------------
# Serialization

def write_map_csv(path, rmap: ReadoutMap):
    grid = rmap.grid
    kept = rmap.kept if rmap.kept is not None else np.ones(grid.n_cells, dtype=bool)
    with open(path, "w") as fh:
        fh.write("fA_Hz,fB_Hz,pattern_code,kept\n")
        fa = grid.fa_values
        fb = grid.fb_values
        for idx in range(grid.n_cells):
            ia, ib = divmod(idx, grid.fb_steps)
            fh.write(f"{fa[ia]:.17g},{fb[ib]:.17g},{int(rmap.codes[idx])},{int(kept[idx])}\n")


def read_map_csv(path, metadata: dict | None = None) -> ReadoutMap:
    fa_vals, fb_vals, codes, kept = [], [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header.split(",")[:3] != ["fA_Hz", "fB_Hz", "pattern_code"]:
            raise ValueError(f"{path}: not a readout-map CSV (header {header!r})")
        for line in fh:
            parts = line.strip().split(",")
            fa_vals.append(float(parts[0]))
            fb_vals.append(float(parts[1]))
            codes.append(int(parts[2]))
            kept.append(int(parts[3]) if len(parts) > 3 else 1)
    fa_u = sorted(set(fa_vals))
    fb_u = sorted(set(fb_vals))
    if len(fa_u) * len(fb_u) != len(codes):
        raise ValueError(f"{path}: rows do not form a complete grid")
    if metadata and "grid" in metadata:
        grid = GridSpec.from_dict(metadata["grid"])
    else:
        grid = GridSpec(fa_u[0], fa_u[-1], len(fa_u), fb_u[0], fb_u[-1], len(fb_u))
    order = np.lexsort((fb_vals, fa_vals))
    codes_arr = np.array(codes, dtype=np.int32)[order]
    kept_arr = np.array(kept, dtype=bool)[order]
    return ReadoutMap(grid, codes_arr, metadata or {}, kept_arr)


def write_manifest(path, metadata: dict):
    with open(path, "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
