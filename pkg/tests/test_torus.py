from __future__ import annotations

import numpy as np
import pytest

from conftest import charge_data
from topocharge.charges import comm
from topocharge.groups import gauge_code_identity, span_contains
from topocharge.lattice import TorusLattice, fixture, instantiate
from topocharge.charges import StringSolver
from topocharge.torus import (
    _loop,
    build_torus_code,
    cycle_relations,
    extract_cycles,
    homology_adjust,
    min_torus_size,
)


def test_min_torus_size():
    assert min_torus_size(fixture("toric")) == (4, 4)
    assert min_torus_size(fixture("trivial")) == (4, 4)
    assert min_torus_size(fixture("color"), 3) == (6, 6)


def test_toric_loops_are_straight_single_type():
    ca, canon, _ = charge_data("toric")
    tc = build_torus_code(ca, canon, 8)
    n = tc.n
    for v in tc.logicals.x_bar + tc.logicals.z_bar:
        x, z = v[:n], v[n:]
        assert not (x.any() and z.any())
        assert (x | z).sum() == 8
    assert comm(tc.cycles.z1[0], tc.cycles.z1_star[0]) == -1
    assert comm(tc.cycles.z1[0], tc.cycles.z2_star[0]) == 1


@pytest.mark.parametrize("spec, k", [("toric", 2), ("toric+toric", 4), ("color", 2), ("honeycomb", 0)])
def test_k_equals_twice_alpha(spec, k):
    ca, canon, ch = charge_data(spec)
    side = min_torus_size(ca.code, ca.period)[0]
    tc = build_torus_code(ca, canon, side)
    assert tc.k == 2 * ch.alpha == k
    assert tc.logicals.k == k


def test_translated_loop_differs_by_stabilizers():
    ca, canon, _ = charge_data("toric")
    lat = TorusLattice(8, 8, 2)
    inst = instantiate(ca.code, lat)
    s = StringSolver(ca.code.gauge_generators, 2, lat)
    a = _loop(s, ca.gauge_table, canon.c[0], (0, 0), "h", 8, 1)
    b = _loop(s, ca.gauge_table, canon.c[0], (0, 3), "h", 8, 1)
    assert span_contains(inst.stab, (a ^ b)[None, :]).all()


@pytest.mark.parametrize("mode", ["stab", "gauge"])
def test_subsystem_toric_adjustment_modes(mode):
    ca, canon, _ = charge_data("subsystem_toric")
    lat = TorusLattice(6, 6, 2)
    inst = instantiate(ca.code, lat)
    assert not gauge_code_identity(inst.gauge, inst.stab, lat.n)
    cyc = extract_cycles(ca, canon, lat)
    assert cycle_relations(cyc) == []
    adj = homology_adjust(inst.stab, inst.gauge, cyc, lat.n, mode)
    grown = adj.stab if mode == "stab" else adj.gauge
    base = inst.stab if mode == "stab" else inst.gauge
    assert grown.shape[0] == base.shape[0] + 2
    assert gauge_code_identity(adj.gauge, adj.stab, lat.n)


def test_toric_adjustment_is_noop():
    ca, canon, _ = charge_data("toric")
    tc = build_torus_code(ca, canon, 4)
    assert tc.adjusted.stab.shape == tc.stab.shape


def test_trivial_code_has_no_cycles():
    ca, canon, _ = charge_data("trivial")
    cyc = extract_cycles(ca, canon, TorusLattice(4, 4, 1))
    assert cyc.z1 == cyc.z1_star == []


def test_both_modes_share_logicals():
    ca, canon, _ = charge_data("toric+honeycomb")
    a = build_torus_code(ca, canon, 4, "stab")
    b = build_torus_code(ca, canon, 4, "gauge")
    for u, v in zip(a.logicals.x_bar + a.logicals.z_bar, b.logicals.x_bar + b.logicals.z_bar):
        assert np.array_equal(u, v)
    assert a.k == b.k == 2
    assert np.array_equal(
        np.array([[comm(x, z) for z in b.logicals.z_bar] for x in a.logicals.x_bar]),
        np.array([[-1, 1], [1, -1]]),
    )
