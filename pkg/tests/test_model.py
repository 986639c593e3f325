import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kurasync.model import (NetworkConfig, OscillatorParams, TopologySpec,
                            build_network)

MHZ = 1e6


def test_default_network_matrix():
    spec = TopologySpec(input_frequencies=(600e6, 610e6))
    net = build_network(spec)
    k = net.coupling
    assert k.shape == (6, 6)
    core = k[:4, :4]
    assert np.all(core[~np.eye(4, dtype=bool)] == 4 * MHZ)
    assert np.all(np.diag(k) == 0)
    assert np.all(k[4, :4] == 12 * MHZ)
    assert np.all(k[:4, 5] == 12 * MHZ)
    assert k[4, 5] == 0 and k[5, 4] == 0
    assert net.core_indices == (0, 1, 2, 3)
    assert net.input_indices == (4, 5)


def test_two_core_clique():
    net = build_network(TopologySpec(core_frequencies=(560e6, 580e6),
                                                input_frequencies=(), k_cc=4e6))
    assert np.array_equal(net.coupling, np.array([[0, 4e6], [4e6, 0]]))


def test_reduced_system_input_row():
    net = build_network(TopologySpec(core_frequencies=(560e6, 580e6),
                                                input_frequencies=(600e6,), k_ic=12e6))
    assert np.array_equal(net.coupling[2], np.array([12e6, 12e6, 0.0]))
    assert np.array_equal(net.coupling[:, 2], np.array([12e6, 12e6, 0.0]))


def test_rejects_bad_specs():
    with pytest.raises(ValueError):
        build_network(TopologySpec(core_frequencies=(560e6,)))
    with pytest.raises(ValueError):
        build_network(TopologySpec(core_frequencies=(560e6, -1.0)))
    with pytest.raises(ValueError):
        build_network(TopologySpec(k_cc=-1.0))
    with pytest.raises(ValueError):
        OscillatorParams(0.0, "core")
    with pytest.raises(ValueError):
        OscillatorParams(1e6, "extra")


def test_network_config_validation():
    osc = (OscillatorParams(1e6, "core"), OscillatorParams(2e6, "core"))
    with pytest.raises(ValueError):
        NetworkConfig(osc, np.array([[0.0, 1.0], [2.0, 0.0]]), 0.0, 1e-10)
    with pytest.raises(ValueError):
        NetworkConfig(osc, np.array([[1.0, 0.0], [0.0, 0.0]]), 0.0, 1e-10)
    with pytest.raises(ValueError):
        NetworkConfig(osc, np.zeros((2, 2)), -1.0, 1e-10)
    with pytest.raises(ValueError):
        NetworkConfig(osc, np.zeros((2, 2)), 0.0, 0.0)
    # input-input coupling forbidden
    osc2 = (OscillatorParams(1e6, "core"), OscillatorParams(1e6, "input"),
            OscillatorParams(1e6, "input"))
    k = np.zeros((3, 3))
    k[1, 2] = k[2, 1] = 1.0
    with pytest.raises(ValueError):
        NetworkConfig(osc2, k, 0.0, 1e-10)


freqs = st.lists(st.floats(1e5, 1e9), min_size=2, max_size=6)
inputs = st.lists(st.floats(1e5, 1e9), min_size=0, max_size=3)


@settings(max_examples=60, deadline=None)
@given(freqs, inputs, st.floats(0, 1e8), st.floats(0, 1e8), st.floats(0, 1e7))
def test_build_network_invariants(cores, ins, k_cc, k_ic, fwhm):
    spec = TopologySpec(tuple(cores), tuple(ins), k_cc, k_ic, fwhm)
    net = build_network(spec)  # NetworkConfig validates its own invariants
    k = net.coupling
    assert np.array_equal(k, k.T)
    assert np.all(np.diag(k) == 0)
    nc = len(cores)
    off = ~np.eye(nc, dtype=bool)
    assert np.all(k[:nc, :nc][off] == k_cc)
    if ins:
        assert np.all(k[nc:, :nc] == k_ic)
        assert np.all(k[nc:, nc:] == 0)
    assert [o.natural_frequency for o in net.oscillators] == list(cores) + list(ins)


def test_coupling_immutable():
    net = build_network(TopologySpec(input_frequencies=(600e6,)))
    with pytest.raises(ValueError):
        net.coupling[0, 1] = 5.0


def test_with_input_frequencies():
    net = build_network(TopologySpec(input_frequencies=(600e6, 610e6)))
    net2 = net.with_input_frequencies((500e6, 510e6))
    assert net2.frequencies[4] == 500e6 and net2.frequencies[5] == 510e6
    assert np.array_equal(net.coupling, net2.coupling)
    assert net.frequencies[4] == 600e6  # original untouched


def test_json_roundtrip(tmp_path):
    spec = TopologySpec(input_frequencies=(600e6, 610e6), noise_fwhm=1e6)
    path = tmp_path / "net.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert TopologySpec.from_json(str(path)) == spec


def test_digest_stability():
    a = build_network(TopologySpec(input_frequencies=(600e6,)))
    b = build_network(TopologySpec(input_frequencies=(600e6,)))
    c = build_network(TopologySpec(input_frequencies=(601e6,)))
    assert a.digest() == b.digest() != c.digest()
