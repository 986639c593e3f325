"""Fixed categorical palette keyed by pattern code.

The mapping code -> color is a pure function so the same pattern gets the
same color on every map, independent of which codes happen to occur.
Inconsistent cells (code -1) render blank; cells dropped by the robustness
filter are desaturated toward white.
"""
from __future__ import annotations

# 24 visually distinct colors; codes beyond that wrap around (a 4-core
# network has at most 2^6 = 64 codes, in practice far fewer survive).
_PALETTE = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377",
    "#bbbbbb", "#e69f00", "#56b4e9", "#009e73", "#f0e442", "#0072b2",
    "#d55e00", "#cc79a7", "#332288", "#88ccee", "#44aa99", "#117733",
    "#999933", "#ddcc77", "#661100", "#cc6677", "#882255", "#aa4499",
]

BLANK = (1.0, 1.0, 1.0)  # inconsistent cells
DESATURATION = 0.75  # how far filtered-out cells move toward white


def _hex_to_rgb(h: str) -> tuple[float, float, float]:
    return tuple(int(h[i:i + 2], 16) / 255.0 for i in (1, 3, 5))


def color_for_code(code: int) -> tuple[float, float, float]:
    """Color of a consensus pattern code; blank for inconsistent (-1)."""
    if code < 0:
        return BLANK
    return _hex_to_rgb(_PALETTE[code % len(_PALETTE)])


def desaturated(rgb: tuple[float, float, float],
                amount: float = DESATURATION) -> tuple[float, float, float]:
    return tuple(c + (1.0 - c) * amount for c in rgb)
