"""Figure renderer for the oscillator-network simulator's CSV outputs."""

__version__ = "0.1.0"

SCHEMA_VERSION = 1

from .render import FigureJob, Kind, render  # noqa: E402,F401
