"""Weakly coupled Kuramoto oscillator networks with pairwise synchronization readout."""

__version__ = "0.1.0"

from .detectors import DetectorSpec, Scheme
from .model import NetworkConfig, OscillatorParams, TopologySpec, build_network
from .readout import GridSpec, ReadoutMap, SimProtocol, build_map, count_patterns, map_match, robust_filter

__all__ = [
    "DetectorSpec", "Scheme", "NetworkConfig", "OscillatorParams",
    "TopologySpec", "build_network", "GridSpec", "ReadoutMap",
    "SimProtocol", "build_map", "count_patterns", "map_match", "robust_filter",
    "__version__",
]
