"""Network description for the coupled-oscillator recognition architecture.

Oscillators split into a fully coupled clique of *core* oscillators (whose
synchronization pattern is the output) and *input* oscillators coupled to
every core but not to each other. Units are SI throughout (Hz, seconds).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

# Default network parameters used throughout unless overridden.
DEFAULT_CORE_FREQS = (560e6, 580e6, 600e6, 620e6)
DEFAULT_K_CC = 4e6
DEFAULT_K_IC = 12e6
DEFAULT_DT = 1e-10

ROLE_CORE = "core"
ROLE_INPUT = "input"


@dataclass(frozen=True)
class OscillatorParams:
    natural_frequency: float  # Hz
    role: str  # "core" or "input"

    def __post_init__(self):
        if self.natural_frequency <= 0:
            raise ValueError(f"natural_frequency must be > 0, got {self.natural_frequency}")
        if self.role not in (ROLE_CORE, ROLE_INPUT):
            raise ValueError(f"role must be 'core' or 'input', got {self.role!r}")


@dataclass(frozen=True)
class NetworkConfig:
    """Immutable network: oscillators, symmetric coupling matrix, noise, step.

    Oscillator ordering is cores first then inputs, so pattern-code bit
    positions stay stable across runs.
    """

    oscillators: tuple[OscillatorParams, ...]
    coupling: np.ndarray  # (N, N) Hz, symmetric, zero diagonal
    noise_fwhm: float  # Hz
    dt: float  # s

    def __post_init__(self):
        k = np.array(self.coupling, dtype=np.float64)
        k.flags.writeable = False
        object.__setattr__(self, "coupling", k)
        n = len(self.oscillators)
        if k.shape != (n, n):
            raise ValueError(f"coupling shape {k.shape} does not match {n} oscillators")
        if not np.array_equal(k, k.T):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(k) != 0.0):
            raise ValueError("coupling diagonal must be zero")
        if np.any(k < 0.0):
            raise ValueError("couplings must be non-negative")
        inputs = self.input_indices
        for i in inputs:
            for j in inputs:
                if i != j and k[i, j] != 0.0:
                    raise ValueError("input oscillators must not couple to each other")
        if self.noise_fwhm < 0:
            raise ValueError("noise_fwhm must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")

    @property
    def n(self) -> int:
        return len(self.oscillators)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([o.natural_frequency for o in self.oscillators])

    @property
    def core_indices(self) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.oscillators) if o.role == ROLE_CORE)

    @property
    def input_indices(self) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.oscillators) if o.role == ROLE_INPUT)

    @property
    def n_core(self) -> int:
        return len(self.core_indices)

    def with_input_frequencies(self, freqs) -> "NetworkConfig":
        """Copy of this network with the input natural frequencies replaced."""
        idx = self.input_indices
        if len(freqs) != len(idx):
            raise ValueError(f"expected {len(idx)} input frequencies, got {len(freqs)}")
        osc = list(self.oscillators)
        for i, f in zip(idx, freqs):
            osc[i] = OscillatorParams(float(f), ROLE_INPUT)
        return NetworkConfig(tuple(osc), self.coupling, self.noise_fwhm, self.dt)

    def digest(self) -> str:
        payload = {
            "frequencies": [o.natural_frequency for o in self.oscillators],
            "roles": [o.role for o in self.oscillators],
            "coupling": self.coupling.tolist(),
            "noise_fwhm": self.noise_fwhm,
            "dt": self.dt,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TopologySpec:
    """Uniform-coupling topology: core clique at k_cc, input-core links at k_ic."""

    core_frequencies: tuple[float, ...] = DEFAULT_CORE_FREQS
    input_frequencies: tuple[float, ...] = ()
    k_cc: float = DEFAULT_K_CC
    k_ic: float = DEFAULT_K_IC
    noise_fwhm: float = 0.0
    dt: float = DEFAULT_DT

    @staticmethod
    def from_json(path_or_dict) -> "TopologySpec":
        if isinstance(path_or_dict, dict):
            d = path_or_dict
        else:
            with open(path_or_dict) as fh:
                d = json.load(fh)
        return TopologySpec(
            core_frequencies=tuple(d["core_frequencies_hz"]),
            input_frequencies=tuple(d.get("input_frequencies_hz", ())),
            k_cc=float(d["k_cc_hz"]),
            k_ic=float(d["k_ic_hz"]),
            noise_fwhm=float(d.get("noise_fwhm_hz", 0.0)),
            dt=float(d.get("dt_s", DEFAULT_DT)),
        )

    def to_dict(self) -> dict:
        return {
            "core_frequencies_hz": list(self.core_frequencies),
            "input_frequencies_hz": list(self.input_frequencies),
            "k_cc_hz": self.k_cc,
            "k_ic_hz": self.k_ic,
            "noise_fwhm_hz": self.noise_fwhm,
            "dt_s": self.dt,
        }


def build_network(spec: TopologySpec) -> NetworkConfig:
    """Build the clique-plus-inputs network from a uniform-coupling spec.

    Cores first (declaration order), then inputs. Every core-core pair gets
    k_cc, every input-core pair k_ic, input-input pairs stay at zero.
    """
    n_core = len(spec.core_frequencies)
    n_in = len(spec.input_frequencies)
    if n_core < 2:
        raise ValueError("need at least 2 core oscillators")
    if spec.k_cc < 0 or spec.k_ic < 0:
        raise ValueError("couplings must be non-negative")
    for f in list(spec.core_frequencies) + list(spec.input_frequencies):
        if f <= 0:
            raise ValueError(f"natural frequencies must be positive, got {f}")

    n = n_core + n_in
    k = np.zeros((n, n))
    k[:n_core, :n_core] = spec.k_cc
    np.fill_diagonal(k, 0.0)
    for i in range(n_core, n):
        k[i, :n_core] = spec.k_ic
        k[:n_core, i] = spec.k_ic

    osc = tuple(
        [OscillatorParams(f, ROLE_CORE) for f in spec.core_frequencies]
        + [OscillatorParams(f, ROLE_INPUT) for f in spec.input_frequencies]
    )
    return NetworkConfig(osc, k, spec.noise_fwhm, spec.dt)
