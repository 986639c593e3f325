"""CSV and manifest parsing for the simulator's documented output schemas."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import SCHEMA_VERSION


class SchemaError(ValueError):
    pass


def check_manifest(path) -> dict:
    with open(path) as fh:
        meta = json.load(fh)
    version = meta.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: manifest schema version {version!r}, expected {SCHEMA_VERSION}")
    return meta


def _read_rows(path, expected_prefix: list[str]) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if header[:len(expected_prefix)] != expected_prefix:
        raise SchemaError(f"{path}: header {header!r} does not start with "
                          f"{expected_prefix!r}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return header, rows


@dataclass
class MapData:
    fa_mhz: np.ndarray  # sorted unique fA values
    fb_mhz: np.ndarray
    codes: np.ndarray  # (n_fa, n_fb) int
    kept: np.ndarray  # (n_fa, n_fb) bool


def read_map(path) -> MapData:
    _, rows = _read_rows(path, ["fA_Hz", "fB_Hz", "pattern_code"])
    fa = np.array([float(r[0]) for r in rows])
    fb = np.array([float(r[1]) for r in rows])
    codes = np.array([int(r[2]) for r in rows])
    kept = np.array([bool(int(r[3])) if len(r) > 3 else True for r in rows])
    fa_u = np.unique(fa)
    fb_u = np.unique(fb)
    if len(fa_u) * len(fb_u) != len(rows):
        raise SchemaError(f"{path}: rows do not form a complete fA x fB grid")
    ia = np.searchsorted(fa_u, fa)
    ib = np.searchsorted(fb_u, fb)
    code_grid = np.full((len(fa_u), len(fb_u)), -1, dtype=int)
    kept_grid = np.zeros((len(fa_u), len(fb_u)), dtype=bool)
    code_grid[ia, ib] = codes
    kept_grid[ia, ib] = kept
    return MapData(fa_u / 1e6, fb_u / 1e6, code_grid, kept_grid)


@dataclass
class SweepData:
    values: np.ndarray  # per scheme, same order
    series: dict[str, dict[str, np.ndarray]]  # scheme -> column -> values
    columns: list[str]  # data columns present (pattern_count, matching_pct)


def read_sweep(path) -> SweepData:
    header, rows = _read_rows(path, ["param_value", "scheme"])
    columns = header[2:]
    if not columns:
        raise SchemaError(f"{path}: sweep CSV has no data columns")
    series: dict[str, dict[str, list[float]]] = {}
    for r in rows:
        entry = series.setdefault(r[1], {c: [] for c in ["param_value"] + columns})
        entry["param_value"].append(float(r[0]))
        for c, v in zip(columns, r[2:]):
            entry[c].append(float(v))
    out = {s: {c: np.array(v) for c, v in cols.items()} for s, cols in series.items()}
    any_scheme = next(iter(out.values()))
    return SweepData(any_scheme["param_value"], out, columns)


@dataclass
class CalibrationData:
    fa_mhz: np.ndarray
    mean_freqs_mhz: np.ndarray  # (n_points, n_oscillators) incl. the input
    osc_labels: list[str]
    var_raw: np.ndarray
    direct_raw: np.ndarray
    flipflop_raw: np.ndarray


def read_calibration(path) -> CalibrationData:
    header, rows = _read_rows(path, ["fA_Hz"])
    tail = ["var_raw", "direct_raw", "flipflop_raw"]
    if header[-3:] != tail or not all(h.startswith("meanf_") for h in header[1:-3]):
        raise SchemaError(f"{path}: not a calibration-sweep CSV (header {header!r})")
    data = np.array([[float(v) for v in r] for r in rows])
    return CalibrationData(
        fa_mhz=data[:, 0] / 1e6,
        mean_freqs_mhz=data[:, 1:-3] / 1e6,
        osc_labels=[h[len("meanf_"):] for h in header[1:-3]],
        var_raw=data[:, -3],
        direct_raw=data[:, -2],
        flipflop_raw=data[:, -1],
    )
