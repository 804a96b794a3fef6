from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import EXPECTED, charge_data
from topocharge.charges import (
    Characteristic,
    StringSolver,
    boson_count_formula,
    charge_table,
    compose_characteristics,
    constraint_dims,
    line_sites,
    same_charge_structure,
    thicken,
    verify_framework_commutation,
)
from topocharge.lattice import TorusLattice, coarse_grain, fixture

NONTRIVIAL = ["toric", "subsystem_toric", "honeycomb", "color"]


@pytest.mark.parametrize("name", list(EXPECTED))
def test_characteristic(name):
    _, _, ch = charge_data(name)
    assert ch.as_tuple() == EXPECTED[name]


def test_color_code_period_and_constraints():
    code = fixture("color")
    dims = constraint_dims(code.gauge_generators, 6, range(4, 10))
    assert dims == {4: 0, 5: 0, 6: 2, 7: 0, 8: 0, 9: 2}
    ca, _, _ = charge_data("color")
    assert ca.period == 3


def test_tables_agree_across_sizes():
    code = fixture("toric")
    a = charge_table(code.stabilizer_recipes, 2, 8, "stabilizer")
    b = charge_table(code.stabilizer_recipes, 2, 11, "stabilizer")
    assert a.dim == b.dim == 2
    assert same_charge_structure(a, b)
    # canonical coordinates do not depend on the torus
    assert np.array_equal(a.table, b.table)


def test_toric_charges_are_generator_types():
    ca, _, _ = charge_data("toric")
    t = ca.stab_table.table[:, 0, 0]
    assert sorted(map(tuple, t)) == [(0, 1), (1, 0)]


def test_iota_examples():
    ca, _, _ = charge_data("toric")
    assert np.array_equal(ca.iota_matrix, np.eye(2, dtype=np.uint8))
    ca, _, _ = charge_data("subsystem_toric")
    assert not ca.iota_matrix.any()


def test_morphism_rejects_off_period_endpoint():
    ca, _, _ = charge_data("color")
    with pytest.raises(ValueError):
        ca.gauge_table.morphism([1, 0], (1, 0))


@pytest.mark.parametrize("name", NONTRIVIAL)
def test_string_has_exactly_the_endpoint_syndrome(name):
    ca, canon, _ = charge_data(name)
    c = canon.gauge_basis()[0]
    P = ca.period
    a, b = (0, 0), (4 * P, 2 * P)
    vec = ca.gauge_string(c, a, b)
    flips = set(ca.gauge_table.morphism(c, a)) ^ set(ca.gauge_table.morphism(c, b))
    region = thicken(line_sites(a, b), ca.r_max + ca.code.range + 1)
    insts = sorted({(r, x, y) for r in range(len(ca.code.gauge_generators)) for x, y in region})
    synd = ca.g_solver.syndrome(vec, insts)
    assert {i for i, s in zip(insts, synd) if s} == flips


@pytest.mark.parametrize("name", NONTRIVIAL)
def test_statistics_are_translation_and_geometry_invariant(name):
    ca, canon, _ = charge_data(name)
    P = ca.period
    for c in canon.gauge_basis():
        ref = ca.theta(c)
        assert ca.theta_at(c, origin=(2 * P, P)) == ref
        assert ca.theta_at(c, leg=ca.leg + P) == ref
        for d in canon.gauge_basis():
            assert ca.kappa_at(c, d, origin=(-P, 3 * P)) == ca.kappa(c, d)


@pytest.mark.parametrize("name", ["toric", "honeycomb"])
def test_coarse_graining_preserves_statistics(name):
    ca, _, ch = charge_data(name)
    cg = charge_data_for(coarse_grain(fixture(name), 2))
    assert cg[2] == ch
    assert cg[0].dim_g == ca.dim_g
    spins = sorted(ca.theta(c) for c in ca.all_charges())
    assert sorted(cg[0].theta(c) for c in cg[0].all_charges()) == spins


def charge_data_for(code):
    from topocharge.charges import build_charge_analysis, canonical_generators

    ca = build_charge_analysis(code)
    return (ca, *canonical_generators(ca))


@pytest.mark.parametrize("name", list(EXPECTED))
def test_boson_count_formula_matches_enumeration(name):
    ca, _, ch = charge_data(name)
    assert sum(ca.theta(c) == 1 for c in ca.all_charges()) == boson_count_formula(ch)


def test_boson_formula_small_cases():
    assert boson_count_formula(Characteristic(0, 0, 1, 1)) == 1
    assert boson_count_formula(Characteristic(1, 0, 1, 1)) == 3
    assert boson_count_formula(Characteristic(1, 0, -1, 1)) == 1
    assert boson_count_formula(Characteristic(0, 1, 1, -1)) == 1


characteristics = st.builds(
    lambda a, b, f1, f2: Characteristic(a, b, f1 if a else 1, f2 if b else 1),
    st.integers(0, 3),
    st.integers(0, 3),
    st.sampled_from([1, -1]),
    st.sampled_from([1, -1]),
)


@given(characteristics, characteristics, characteristics)
def test_composition_is_commutative_monoid(a, b, c):
    e = Characteristic(0, 0, 1, 1)
    assert compose_characteristics(a, e) == a
    assert compose_characteristics(a, b) == compose_characteristics(b, a)
    assert compose_characteristics(compose_characteristics(a, b), c) == compose_characteristics(
        a, compose_characteristics(b, c)
    )


@given(characteristics, characteristics)
def test_composition_multiplies_boson_structure(a, b):
    # bosons of a product group: pairs with equal spin
    ab = compose_characteristics(a, b)
    size = lambda ch: 2 ** (2 * ch.alpha + ch.beta)  # noqa: E731
    ba, bb = boson_count_formula(a), boson_count_formula(b)
    assert boson_count_formula(ab) == ba * bb + (size(a) - ba) * (size(b) - bb)


def test_composition_examples():
    toric = Characteristic(1, 0, 1, 1)
    assert compose_characteristics(toric, toric).as_tuple() == (2, 0, 1, 1)
    hc, st_ = Characteristic(0, 1, 1, -1), Characteristic(0, 1, 1, 1)
    assert compose_characteristics(hc, st_).as_tuple() == (0, 2, 1, -1)


@pytest.mark.parametrize("name", NONTRIVIAL + ["trivial"])
def test_framework_table(name):
    ca, canon, ch = charge_data(name)
    rep = verify_framework_commutation(ca, canon, ch)
    assert rep.passed, rep.failures
    if ch.alpha == ch.beta == 0:
        assert rep.checks == []


def test_exhaustive_spin_identity_color():
    ca, _, _ = charge_data("color")
    for c, d in itertools.product(list(ca.all_charges()), repeat=2):
        assert ca.theta(c ^ d) == ca.theta(c) * ca.theta(d) * ca.kappa(c, d)


def test_solver_reports_missing_string():
    code = fixture("toric")
    lat = TorusLattice(30, 30, 2)
    s = StringSolver(code.stabilizer_recipes, 2, lat, r_max=1)
    # a lone endpoint carries a nontrivial charge: no Pauli has that syndrome locally
    assert s.solve_region({(0, 0, 0)}, thicken([(0, 0)], 2)) is None
