"""Figure rendering. Values are plotted as-is: no smoothing, no rescaling
beyond unit conversion to MHz / us for the axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from . import io  # noqa: E402
from .palette import color_for_code, desaturated  # noqa: E402

DPI = 100

SCHEME_STYLE = {
    "variance": {"color": "#4477aa", "marker": "o", "label": "variance"},
    "direct": {"color": "#ee6677", "marker": "s", "label": "direct counter"},
    "flipflop": {"color": "#228833", "marker": "^", "label": "flip-flop counter"},
}


class Kind(str, Enum):
    READOUT_MAP = "readout_map"
    CALIBRATION_CURVES = "calibration_curves"
    SWEEP_CURVE = "sweep_curve"
    TAU_CONVERGENCE = "tau_convergence"


@dataclass(frozen=True)
class FigureJob:
    kind: Kind
    csv_path: str
    output_path: str
    manifest_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))


def render(job: FigureJob) -> str:
    """Render one figure; returns the output path."""
    meta = io.check_manifest(job.manifest_path) if job.manifest_path else {}
    fig = _RENDERERS[job.kind](job.csv_path, meta)
    fig.savefig(job.output_path, dpi=DPI)
    plt.close(fig)
    return job.output_path


def _render_map(csv_path, meta):
    data = io.read_map(csv_path)
    na, nb = data.codes.shape
    rgb = np.empty((na, nb, 3))
    for i in range(na):
        for j in range(nb):
            c = color_for_code(int(data.codes[i, j]))
            if data.codes[i, j] >= 0 and not data.kept[i, j]:
                c = desaturated(c)
            rgb[i, j] = c

    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    # transpose so fA runs along x; origin lower-left
    half_a = (data.fa_mhz[-1] - data.fa_mhz[0]) / max(na - 1, 1) / 2 or 0.5
    half_b = (data.fb_mhz[-1] - data.fb_mhz[0]) / max(nb - 1, 1) / 2 or 0.5
    ax.imshow(np.transpose(rgb, (1, 0, 2)), origin="lower",
              extent=(data.fa_mhz[0] - half_a, data.fa_mhz[-1] + half_a,
                      data.fb_mhz[0] - half_b, data.fb_mhz[-1] + half_b),
              aspect="auto", interpolation="nearest")
    ax.set_xlabel(r"$f_0^{(A)}$ (MHz)")
    ax.set_ylabel(r"$f_0^{(B)}$ (MHz)")
    title = meta.get("detector", {}).get("scheme", "")
    if title:
        ax.set_title(f"{title} scheme")

    present = sorted(c for c in np.unique(data.codes) if c >= 0)
    handles = [Patch(facecolor=color_for_code(c), edgecolor="0.3", label=str(c))
               for c in present]
    if handles:
        ax.legend(handles=handles, title="pattern code", loc="center left",
                  bbox_to_anchor=(1.02, 0.5), fontsize=8)
    fig.tight_layout()
    return fig


def _render_calibration(csv_path, meta):
    data = io.read_calibration(csv_path)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    for i, label in enumerate(data.osc_labels):
        name = "input" if label == "A" else f"osc {label}"
        ax1.plot(data.fa_mhz, data.mean_freqs_mhz[:, i], label=name, lw=1.2)
    ax1.set_ylabel("mean frequency (MHz)")
    ax1.legend(fontsize=8)

    ax2.plot(data.fa_mhz, data.var_raw, **_ls("variance"))
    ax2.set_ylabel("variance", color=SCHEME_STYLE["variance"]["color"])
    ax2.set_ylim(bottom=0)
    ax3 = ax2.twinx()
    ax3.plot(data.fa_mhz, data.direct_raw, **_ls("direct"))
    ax3.plot(data.fa_mhz, data.flipflop_raw, **_ls("flipflop"))
    ax3.set_ylabel("counter output")
    ax3.set_ylim(bottom=0)
    lines = ax2.get_lines() + ax3.get_lines()
    ax2.legend(lines, [ln.get_label() for ln in lines], fontsize=8)
    ax2.set_xlabel(r"input $f_0^{(A)}$ (MHz)")
    fig.tight_layout()
    return fig


def _ls(scheme):
    s = SCHEME_STYLE[scheme]
    return {"color": s["color"], "label": s["label"], "lw": 1.2}


def _param_axis(values, meta):
    parameter = meta.get("parameter", "")
    if parameter in ("k_ic", "k_cc", "fwhm") or values.max() > 1e5:
        return values / 1e6, f"{parameter or 'parameter'} (MHz)"
    return values, parameter or "threshold"


def _render_sweep(csv_path, meta):
    data = io.read_sweep(csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for scheme, cols in sorted(data.series.items()):
        style = SCHEME_STYLE.get(scheme, {"label": scheme})
        x, xlabel = _param_axis(cols["param_value"], meta)
        ax.plot(x, cols["pattern_count"], ms=4, lw=1.2, **style)
        ax.set_xlabel(xlabel)
    ax.set_ylabel("patterns discriminated")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _render_tau(csv_path, meta):
    data = io.read_sweep(csv_path)
    if "matching_pct" not in data.columns:
        raise io.SchemaError(f"{csv_path}: tau_convergence needs a matching_pct column")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    for scheme, cols in sorted(data.series.items()):
        style = SCHEME_STYLE.get(scheme, {"label": scheme})
        tau_us = cols["param_value"] * 1e6
        ax1.plot(tau_us, cols["matching_pct"], ms=4, lw=1.2, **style)
        ax2.plot(tau_us, cols["pattern_count"], ms=4, lw=1.2, **style)
    ax1.set_ylabel("matching with reference (%)")
    ax1.legend(fontsize=8)
    ax2.set_ylabel("patterns discriminated")
    ax2.set_ylim(bottom=0)
    ax2.set_xlabel(r"evaluation time $\tau$ ($\mu$s)")
    fig.tight_layout()
    return fig


_RENDERERS = {
    Kind.READOUT_MAP: _render_map,
    Kind.CALIBRATION_CURVES: _render_calibration,
    Kind.SWEEP_CURVE: _render_sweep,
    Kind.TAU_CONVERGENCE: _render_tau,
}
