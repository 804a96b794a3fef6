from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from topocharge.gf2 import BitMatrix, same_row_space
from topocharge.lattice import (
    FIXTURES,
    CodeFormatError,
    GeneratorRecipe,
    PauliTerm,
    TorusLattice,
    TorusTooSmall,
    coarse_grain,
    coarse_grain_perm,
    compose,
    fixture,
    fixture_text,
    instantiate,
    normalize,
    parse_code_file,
    permute_rows,
    recipe_rows,
    resolve_code,
    translate_rows,
)


def test_fixtures_parse_and_round_trip():
    for name in FIXTURES:
        code = fixture(name)
        assert code.name == name
        again = parse_code_file(code.to_text())
        assert again == code


@pytest.mark.parametrize(
    "text, line",
    [
        ("qubits 1\n", 1),
        ("code a\nqubits x\n", 2),
        ("code a\nstab S: Z(0,0,0)\n", 2),
        ("code a\nqubits 1\nstab S: Z(0,0,1)\n", 3),
        ("code a\nqubits 1\nstab S: Z(0,0,0) X(0,0,0)\n", 3),
        ("code a\nqubits 1\nstab S: Q(0,0,0)\n", 3),
        ("code a\nqubits 1\nstab S:\n", 3),
        ("code a\nqubits 1\nfoo bar\n", 3),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(CodeFormatError) as exc:
        parse_code_file(text)
    assert exc.value.line == line


def test_range_is_bounding_square_side():
    assert GeneratorRecipe("a", (PauliTerm(0, 0, 0, "Z"),)).range == 1
    assert fixture("toric").range == 2
    assert fixture("color").range == 2
    assert fixture("empty").range == 1


def test_instantiate_counts():
    toric = instantiate(fixture("toric"), TorusLattice(4, 4, 2))
    assert toric.stab.shape == (32, 64)
    hc = instantiate(fixture("honeycomb"), TorusLattice(6, 6, 2))
    assert hc.stab.shape[0] == 36 and hc.gauge.shape[0] == 108


def test_torus_lower_bound():
    with pytest.raises(TorusTooSmall):
        instantiate(fixture("toric"), TorusLattice(3, 3, 2))
    instantiate(fixture("trivial"), TorusLattice(3, 3, 1))


@settings(max_examples=25, deadline=None)
@given(dx=st.integers(-6, 6), dy=st.integers(-6, 6), name=st.sampled_from(["toric", "honeycomb", "color"]))
def test_translation_maps_generator_set_to_itself(dx, dy, name):
    code = fixture(name)
    lat = TorusLattice(6, 6, code.qubits_per_site)
    rows, _ = recipe_rows(code.all_recipes(), lat)
    moved = translate_rows(rows, lat, dx, dy)
    assert {r.tobytes() for r in moved} == {r.tobytes() for r in rows}


@pytest.mark.parametrize("name", ["toric", "honeycomb", "subsystem_toric"])
def test_coarse_grain_preserves_generated_group(name):
    code = fixture(name)
    fine = TorusLattice(8, 8, code.qubits_per_site)
    cg = coarse_grain(code, 2)
    coarse = TorusLattice(4, 4, cg.qubits_per_site)
    perm = coarse_grain_perm(fine, 2)
    for a, b in ((code.stabilizer_recipes, cg.stabilizer_recipes), (code.gauge_generators, cg.gauge_generators)):
        fr, _ = recipe_rows(a, fine)
        cr, _ = recipe_rows(b, coarse)
        assert same_row_space(BitMatrix.from_dense(permute_rows(fr, perm)), BitMatrix.from_dense(cr))


def test_normalize_reaches_range_two():
    wide = parse_code_file("code w\nqubits 1\nstab S: Z(0,0,0) Z(3,0,0) Z(0,3,0)\n")
    assert wide.range == 4
    norm, l = normalize(wide)
    assert l == 3 and norm.range <= 2


def test_compose_shifts_qubits_and_keeps_gauge():
    c = compose(fixture("toric"), fixture("honeycomb"))
    assert c.qubits_per_site == 4
    assert c.is_subsystem
    assert len(c.stabilizer_recipes) == 3
    assert all(t.qubit >= 2 for t in c.stabilizer_recipes[-1].terms)
    # subspace factor contributes its stabilizers as gauge generators
    assert len(c.gauge_generators) == 2 + 3


def test_resolve_composition_and_files(tmp_path):
    assert resolve_code("toric+trivial").qubits_per_site == 3
    p = tmp_path / "t.code"
    p.write_text(fixture_text("toric"))
    assert resolve_code(str(p)) == fixture("toric")
