from __future__ import annotations

import numpy as np
import pytest

from conftest import charge_data
from topocharge.decode import (
    InvalidSyndrome,
    MatchingDecoder,
    NoiseModel,
    extract_syndrome,
    greedy_pairs,
    logical_failure,
    run_trials,
    sample_error,
    trial_rng,
    wilson_interval,
)
from topocharge.gf2 import commutation_matrix
from topocharge.groups import span_contains
from topocharge.torus import build_torus_code


def toric_decoder(L):
    ca, canon, _ = charge_data("toric")
    return MatchingDecoder(ca, build_torus_code(ca, canon, L))


def straight_loops(L):
    """Independent oracle: the four straight toric loops, built by hand."""
    n = 2 * L * L
    idx = lambda x, y, k: ((x % L) * L + (y % L)) * 2 + k  # noqa: E731
    loops = []
    for qubit, along_x, z_type in ((0, True, True), (1, False, True), (0, False, False), (1, True, False)):
        v = np.zeros(2 * n, dtype=np.uint8)
        for t in range(L):
            i = idx(t, 0, qubit) if along_x else idx(0, t, qubit)
            v[n + i if z_type else i] = 1
        loops.append(v)
    return np.array(loops)


def test_noise_extremes():
    rng = np.random.default_rng(0)
    assert not sample_error(NoiseModel("xz", 0.0), 50, rng).any()
    assert sample_error(NoiseModel("xz", 1.0), 50, rng).all()
    e = sample_error(NoiseModel("depolarizing", 1.0), 50, rng)
    assert (e[:50] | e[50:]).all()


def test_flip_frequency():
    e = sample_error(NoiseModel("xz", 0.1), 50_000, np.random.default_rng(3))
    sigma = np.sqrt(0.1 * 0.9 / e.size)
    assert abs(e.mean() - 0.1) < 3 * sigma


def test_bad_noise_rejected():
    with pytest.raises(ValueError):
        NoiseModel("xz", 1.5)
    with pytest.raises(ValueError):
        NoiseModel("amplitude", 0.1)


def test_single_edge_gives_adjacent_pair():
    dec = toric_decoder(8)
    e = np.zeros(2 * dec.n, dtype=np.uint8)
    e[dec.lat.index(3, 3, 0)] = 1
    bits = extract_syndrome(e, dec.stab)[0]
    hits = [dec.tc.stab_index[i] for i in np.flatnonzero(bits)]
    assert len(hits) == 2
    (r1, x1, y1), (r2, x2, y2) = hits
    assert r1 == r2 and dec.ca.code.stabilizer_recipes[r1].label == "SZ"
    assert abs(x1 - x2) + abs(y1 - y2) == 1
    corr = dec.decode(bits)
    assert span_contains(dec.stab, (e ^ corr)[None, :]).all()


def test_stabilizer_error_has_empty_syndrome():
    dec = toric_decoder(4)
    assert not extract_syndrome(dec.stab[5], dec.stab).any()
    assert not dec.decode(np.zeros(dec.stab.shape[0], np.uint8)).any()


def test_rectangle_matching_takes_short_sides():
    pts = [(0, 0, 0), (0, 0, 1), (0, 3, 0), (0, 3, 1)]
    pairs, rest = greedy_pairs(pts, 8)
    assert sorted(pairs) == [(0, 1), (2, 3)] and rest == []


def test_logical_loop_is_a_failure():
    dec = toric_decoder(4)
    z1 = dec.tc.cycles.z1[0]
    flags = logical_failure(z1, np.zeros_like(z1), dec)
    assert flags.tolist() == [True, False]


def test_inconsistent_syndrome_raises():
    dec = toric_decoder(4)
    bits = np.zeros(dec.stab.shape[0], np.uint8)
    bits[0] = 1
    with pytest.raises(InvalidSyndrome):
        dec.decode(bits)


def test_failure_matches_winding_oracle():
    L = 8
    dec = toric_decoder(L)
    loops = straight_loops(L)
    assert not commutation_matrix(loops, dec.stab).any()
    noise = NoiseModel("xz", 0.06)
    seen = 0
    for t in range(300):
        e = sample_error(noise, dec.n, trial_rng(11, L, t))
        corr = dec.decode(extract_syndrome(e, dec.stab)[0])
        flags = logical_failure(e, corr, dec)
        winding = commutation_matrix((e ^ corr)[None, :], loops).any()
        assert flags.any() == winding
        seen += winding
    assert seen > 0


def test_zero_noise_and_determinism():
    dec = toric_decoder(4)
    st = run_trials(dec, NoiseModel("xz", 0.0), 50, seed=1)
    assert st.failures == 0 and st.any_failures == 0
    a = run_trials(dec, NoiseModel("xz", 0.05), 300, seed=5, batch=64)
    b = run_trials(toric_decoder(4), NoiseModel("xz", 0.05), 300, seed=5, batch=300)
    assert a.row() == b.row() and a.failed_trials == b.failed_trials


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and abs((lo + hi) / 2 - 0.5) < 1e-12
    assert wilson_interval(100, 100)[1] == 1.0
