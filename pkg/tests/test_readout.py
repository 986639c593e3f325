import numpy as np
import pytest

from kurasync.detectors import DetectorSpec, Scheme
from kurasync.model import TopologySpec, build_network
from kurasync.readout import (GridSpec, INCONSISTENT, MapRaws, ReadoutMap,
                              SimProtocol, build_map, classify_point,
                              codes_from_raws, compute_map_raws, consensus_codes,
                              count_patterns, map_match, map_metadata,
                              pattern_code, read_map_csv, read_manifest,
                              robust_filter, write_manifest, write_map_csv)


def test_pattern_code_bit_order():
    assert pattern_code([True, False, True]) == 0b101
    assert pattern_code([False] * 6) == 0
    assert pattern_code([True] * 6) == 63


def test_consensus_codes():
    per_rep = np.array([[3, 3, 3], [3, 2, 3], [0, 0, 0]])
    out = consensus_codes(per_rep)
    assert out.tolist() == [3, INCONSISTENT, 0]


def test_sim_protocol_validation():
    SimProtocol()
    with pytest.raises(ValueError):
        SimProtocol(tau=0.0)
    with pytest.raises(ValueError):
        SimProtocol(total_time=1e-6, cooldown=0.8e-6, tau=0.5e-6)
    with pytest.raises(ValueError):
        SimProtocol(repetitions=0)
    assert SimProtocol().steps(1e-10) == (5000, 5000)
    with pytest.raises(ValueError):
        SimProtocol(total_time=1e-6, cooldown=0.25e-9, tau=0.5e-6).steps(1e-9)


def test_grid_spec_cells_row_major():
    g = GridSpec(470e6, 670e6, 3, 500e6, 600e6, 2)
    assert g.n_cells == 6
    assert g.cell_freqs(0) == (470e6, 500e6)
    assert g.cell_freqs(1) == (470e6, 600e6)
    assert g.cell_freqs(2) == (570e6, 500e6)
    pa, pb = g.pitches()
    assert pa == 100e6 and pb == 100e6
    with pytest.raises(ValueError):
        GridSpec(fa_steps=0)
    with pytest.raises(ValueError):
        GridSpec(fa_min=-1.0)


def test_codes_from_raws_thresholding():
    var = np.zeros((1, 1, 3))
    var[0, 0] = [0.1, 0.28, 0.4]
    dn = np.array([[[-5, 6, 0]]], dtype=np.int32)
    ff = np.array([[[5, 6, 7]]], dtype=np.int32)
    raws = MapRaws(var, dn, ff)
    assert codes_from_raws(raws, DetectorSpec(Scheme.VARIANCE, 0.28))[0] == 0b001
    # |dN| < 6 strictly: pair0 (|-5|) and pair2 (0) pass
    assert codes_from_raws(raws, DetectorSpec(Scheme.DIRECT, 6))[0] == 0b101
    assert codes_from_raws(raws, DetectorSpec(Scheme.FLIPFLOP, 6))[0] == 0b001


def make_map(codes_2d, fa=(470e6, 670e6), fb=(470e6, 670e6)):
    codes = np.asarray(codes_2d, dtype=np.int32)
    g = GridSpec(fa[0], fa[1], codes.shape[0], fb[0], fb[1], codes.shape[1])
    return ReadoutMap(g, codes.reshape(-1), {})


def test_robust_filter_removes_boundary_cells():
    codes = np.zeros((9, 9), dtype=np.int32)
    codes[4:, :] = 5
    rmap = make_map(codes, fa=(500e6, 508e6), fb=(500e6, 508e6))  # pitch 1 MHz
    out = robust_filter(rmap, radius=2e6)
    kept = out.kept.reshape(9, 9)
    # rows within 2 cells of the 0|5 boundary are dropped
    assert not kept[2:6, :].any()
    assert kept[0:2, :].all() and kept[6:, :].all()
    # boundary clipping: corner cells survive inside a uniform region
    assert kept[0, 0] and kept[8, 8]


def test_robust_filter_drops_inconsistent_and_neighbors():
    codes = np.zeros((7, 7), dtype=np.int32)
    codes[3, 3] = INCONSISTENT
    rmap = make_map(codes, fa=(500e6, 506e6), fb=(500e6, 506e6))
    kept = robust_filter(rmap, radius=1e6).kept.reshape(7, 7)
    assert not kept[3, 3]
    assert not kept[2, 3] and not kept[3, 2] and not kept[4, 3] and not kept[3, 4]
    assert kept[2, 2]  # diagonal at sqrt(2) MHz > 1 MHz radius


def test_robust_filter_zero_radius_keeps_consistent_only():
    codes = np.array([[1, 2], [INCONSISTENT, 2]], dtype=np.int32)
    kept = robust_filter(make_map(codes), radius=0.0).kept.reshape(2, 2)
    assert kept.tolist() == [[True, True], [False, True]]


def test_robust_filter_subpitch_radius_warns():
    rmap = make_map(np.zeros((4, 4), dtype=np.int32))  # pitch ~66 MHz
    with pytest.warns(UserWarning, match="below the grid pitch"):
        out = robust_filter(rmap, radius=1e6)
    assert out.kept.all()
    with pytest.raises(ValueError):
        robust_filter(rmap, radius=-1.0)


def test_count_patterns():
    codes = np.array([[1, 1], [2, INCONSISTENT]], dtype=np.int32)
    rmap = make_map(codes)
    with pytest.raises(ValueError):
        count_patterns(rmap)  # unfiltered
    n, found = count_patterns(robust_filter(rmap, 0.0))
    assert n == 2 and found == [1, 2]


def test_map_match():
    a = make_map([[1, 2], [INCONSISTENT, 3]])
    b = make_map([[1, 2], [INCONSISTENT, 4]])
    assert map_match(a, b) == 75.0
    assert map_match(a, b, include_inconsistent=False) == pytest.approx(200 / 3)
    assert map_match(a, a) == 100.0
    with pytest.raises(ValueError):
        map_match(a, make_map([[1]]))


@pytest.fixture(scope="module")
def small_map_setup():
    topo = TopologySpec(input_frequencies=(600e6, 600e6))
    network = build_network(topo)
    protocol = SimProtocol(repetitions=2)
    grid = GridSpec(470e6, 670e6, 5, 470e6, 670e6, 5)
    return network, protocol, grid


def test_map_raws_deterministic_and_cached(small_map_setup, tmp_path):
    network, protocol, grid = small_map_setup
    r1 = compute_map_raws(network, protocol, grid, 42, cache_dir=tmp_path)
    assert len(list(tmp_path.glob("raws_*.npz"))) == 1
    r2 = compute_map_raws(network, protocol, grid, 42, cache_dir=tmp_path)  # cache hit
    r3 = compute_map_raws(network, protocol, grid, 42)  # no cache
    for a, b in [(r1, r2), (r1, r3)]:
        assert np.array_equal(a.variance, b.variance)
        assert np.array_equal(a.direct_signed, b.direct_signed)
        assert np.array_equal(a.flipflop, b.flipflop)
    r4 = compute_map_raws(network, protocol, grid, 43)
    assert not np.array_equal(r1.variance, r4.variance)
    assert r1.variance.shape == (25, 2, 6)


def test_classify_point_matches_map_cell(small_map_setup):
    network, protocol, grid = small_map_setup
    raws = compute_map_raws(network, protocol, grid, 42)
    det = DetectorSpec.default(Scheme.DIRECT)
    codes = codes_from_raws(raws, det)
    idx = 12  # center cell (570, 570)
    cell = classify_point(network, protocol, det, grid.cell_freqs(idx), 42,
                          cell_index=idx)
    assert cell.consensus == codes[idx]


def test_build_map_and_identical_inputs_synchronize(small_map_setup):
    network, protocol, grid = small_map_setup
    rmap = build_map(network, protocol, DetectorSpec.default(Scheme.DIRECT),
                     grid, 42)
    assert rmap.codes.shape == (25,)
    assert rmap.metadata["detector"]["scheme"] == "direct"
    # center cell (both inputs at 570 MHz, inside the core band): the strong
    # symmetric drive pulls at least the lower-frequency core pairs together
    center = rmap.cell(12)
    assert center.input_frequencies == (570e6, 570e6)
    assert center.consensus > 0  # consistent and non-trivial
    assert center.consensus & 1  # pair (0, 1) synchronized


def test_map_csv_roundtrip(tmp_path, small_map_setup):
    network, protocol, grid = small_map_setup
    det = DetectorSpec.default(Scheme.FLIPFLOP)
    rmap = robust_filter(build_map(network, protocol, det, grid, 1), 0.0)
    path = tmp_path / "map.csv"
    write_map_csv(path, rmap)
    meta = map_metadata(network, protocol, grid, det, 1)
    write_manifest(tmp_path / "map.manifest.json", meta)
    back = read_map_csv(path, read_manifest(tmp_path / "map.manifest.json"))
    assert back.grid == grid
    assert np.array_equal(back.codes, rmap.codes)
    assert np.array_equal(back.kept, rmap.kept)
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n1,2\n")
        read_map_csv(bad)


def test_map_requires_two_inputs():
    net = build_network(TopologySpec(input_frequencies=(600e6,)))
    with pytest.raises(ValueError):
        compute_map_raws(net, SimProtocol(), GridSpec(fa_steps=2, fb_steps=2), 0)
