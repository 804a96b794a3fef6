"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

from __future__ import annotations

import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import EXPECTED, charge_data, record
from test_gf2 import check_against_brute
from topocharge.charges import (
    build_charge_analysis,
    canonical_generators,
    check_canonical,
    compose_characteristics,
    statistics_identities,
    verify_framework_commutation,
)
from topocharge.decode import MatchingDecoder, NoiseModel, run_trials, wilson_interval
from topocharge.gf2 import BitMatrix, rank
from topocharge.groups import count_logical_qubits, gauge_code_identity
from topocharge.lattice import (
    FIXTURES,
    TorusLattice,
    compose,
    fixture,
    instantiate,
    recipe_rows,
    resolve_code,
)
from topocharge.pipeline import Config, analyze, equivalence
from topocharge.torus import build_torus_code, cycle_relations, extract_cycles, homology_adjust


def test_criterion_01_characteristic_table():
    bad, slowest = [], 0.0
    for name in FIXTURES:
        t = time.perf_counter()
        an = analyze(fixture(name), Config())
        dt = time.perf_counter() - t
        slowest = max(slowest, dt)
        if an.characteristic.as_tuple() != EXPECTED[name] or dt > 60:
            bad.append((name, str(an.characteristic), round(dt, 1)))
    record(1, not bad, f"7 fixtures reproduce the characteristic table; slowest analysis {slowest:.1f}s {bad or ''}")
    assert not bad


def test_criterion_02_k_equals_two_alpha():
    rows = []
    for spec in ["empty", "trivial", "toric", "toric+toric"]:
        ca, canon, ch = charge_data(spec)
        code = ca.code
        lat = TorusLattice(8, 8, code.qubits_per_site)
        inst = instantiate(code, lat)
        k = count_logical_qubits(inst.stab, inst.gauge, lat.n)
        rows.append((spec, k, 2 * ch.alpha))
    ok = all(k == a for _, k, a in rows)
    record(2, ok, "rank-based k vs 2α: " + ", ".join(f"{s} {k}={a}" for s, k, a in rows))
    assert ok


def test_criterion_03_charge_group_law():
    rows, ok = [], True
    for name in FIXTURES:
        ca, _, _ = charge_data(name)
        code = ca.code
        q = max(code.qubits_per_site, 1)
        L1 = ca.gauge_table.torus
        L2 = L1 + 2 * ca.period
        for recipes, dim in ((code.gauge_generators, ca.dim_g), (code.stabilizer_recipes, ca.dim_s)):
            counts = []
            for L in (L1, L2):
                rows_, _ = recipe_rows(recipes, TorusLattice(L, L, q))
                r = rank(BitMatrix.from_dense(rows_)) if rows_.shape[0] else 0
                counts.append(rows_.shape[0] - r)
            ok &= counts[0] == counts[1] == dim
        ok &= ca.dim_g == ca.dim_s
        rows.append(f"{name} 2^{ca.dim_g}")
    record(3, ok, "|λG| = |λS| = 2^(#global constraints), stable across two tori: " + ", ".join(rows))
    assert ok


def _boson_counts():
    rows = []
    for name in FIXTURES:
        ca, _, ch = charge_data(name)
        bosons = sum(ca.theta(c) == 1 for c in ca.all_charges())
        a, b, f1, f2 = ch.as_tuple()
        stated = 2 ** (a + b - 1) * (2 ** (a + 1) + f1 + f1 * f2)
        rows.append((name, bosons, stated))
    return rows


def test_criterion_04_statistics_identities():
    failures = []
    for name in FIXTURES:
        ca, _, ch = charge_data(name)
        res = statistics_identities(ca, ch)
        failures += [(name, k) for k, v in res.items() if not v]
    rows = _boson_counts()
    literal = all(bosons == stated for _, bosons, stated in rows)
    doubled = all(stated == 2 * bosons for _, bosons, stated in rows)
    record(
        4,
        not failures and literal,
        "θ/κ identities hold exhaustively on all fixtures"
        + (f" except {failures}" if failures else "")
        + "; stated boson count 2^(α+β-1)(...) vs enumeration: "
        + ", ".join(f"{n} {s:g}/{b}" for n, b, s in rows)
        + (" (exactly 2x on every fixture; the count with exponent α+β-2 matches)" if doubled else ""),
    )
    # the identities and the corrected count are hard requirements
    assert not failures and doubled


@pytest.mark.xfail(strict=True, reason="stated boson-count exponent is one too large; see the decisions ledger")
def test_criterion_04_stated_boson_formula():
    assert all(bosons == stated for _, bosons, stated in _boson_counts())


def test_criterion_05_canonical_relations():
    bad = {}
    for name in FIXTURES:
        ca, canon, ch = charge_data(name)
        errs = check_canonical(ca, canon, ch)
        if errs:
            bad[name] = errs
    record(5, not bad, f"canonical relations recomputed with fresh strings on all fixtures {bad or ''}")
    assert not bad


def test_criterion_06_framework_table():
    rows, ok = [], True
    t = time.perf_counter()
    for name in ["toric", "subsystem_toric", "honeycomb", "color"]:
        ca, canon, ch = charge_data(name)
        rep = verify_framework_commutation(ca, canon, ch)
        ok &= rep.passed and rep.unit >= 12 and rep.unit % ca.period == 0
        rows.append(f"{name} {len(rep.checks)} checks (unit {rep.unit}, step {ca.period})")
    dt = time.perf_counter() - t
    ok &= dt < 300
    record(6, ok, "segment commutation tables: " + "; ".join(rows) + f" in {dt:.1f}s")
    assert ok


def test_criterion_07_torus_logicals():
    notes, ok = [], True
    for spec, L in (("toric", 8), ("toric+toric", 8)):
        ca, canon, ch = charge_data(spec)
        tc = build_torus_code(ca, canon, L)
        bad = cycle_relations(tc.cycles)
        ok &= not bad and tc.k == 2 * ch.alpha
        notes.append(f"{spec} {L}x{L} k={tc.k}")
    ca, canon, _ = charge_data("subsystem_toric")
    lat = TorusLattice(8, 8, 2)
    inst = instantiate(ca.code, lat)
    cyc = extract_cycles(ca, canon, lat)
    for mode in ("stab", "gauge"):
        adj = homology_adjust(inst.stab, inst.gauge, cyc, lat.n, mode)
        good = gauge_code_identity(adj.gauge, adj.stab, lat.n)
        ok &= good
        notes.append(f"subsystem_toric {mode}-adjusted identity {good}")
    record(7, ok, "loop commutation table exact; " + ", ".join(notes))
    assert ok


def test_criterion_08_composition():
    chars = {n: charge_data(n)[2] for n in FIXTURES}
    bad = []
    pairs = list(itertools.combinations(FIXTURES, 2))
    for a, b in pairs:
        ca = build_charge_analysis(compose(fixture(a), fixture(b)))
        _, ch = canonical_generators(ca)
        if ch != compose_characteristics(chars[a], chars[b]):
            bad.append((a, b, str(ch)))
    record(8, not bad and len(pairs) == 21, f"{len(pairs)} composed pairs match the composition rule {bad or ''}")
    assert not bad and len(pairs) == 21


def test_criterion_09_equivalence():
    cfg = Config(framework=False)
    an = {s: analyze(resolve_code(s), cfg) for s in ("toric", "toric+trivial", "trivial", "honeycomb", "subsystem_toric")}
    v1 = equivalence(an["toric"], an["toric+trivial"])["verdict"]
    v2 = equivalence(an["toric"], an["trivial"])["verdict"]
    v3 = equivalence(an["honeycomb"], an["subsystem_toric"])
    ok = v1 == "equivalent" and v2.startswith("not equivalent") and not v3["charges_isomorphic"]
    record(9, ok, f"toric~toric+trivial: {v1}; toric~trivial: {v2}; honeycomb~subsystem_toric: {v3['verdict']}")
    assert ok


def test_criterion_10_decoding():
    ca, canon, _ = charge_data("toric")
    t = time.perf_counter()
    stats = {L: run_trials(MatchingDecoder(ca, build_torus_code(ca, canon, L)), NoiseModel("xz", 0.03), 10_000, 7)
             for L in (4, 8)}
    zero = [run_trials(MatchingDecoder(ca, build_torus_code(ca, canon, L)), NoiseModel("xz", 0.0), 500, 7)
            for L in (4, 8)]
    dt = time.perf_counter() - t
    s4, s8 = stats[4], stats[8]
    ok = (
        s8.rate < s4.rate
        and s8.interval[1] < s4.interval[0]
        and wilson_interval(s8.any_failures, s8.trials)[1] < wilson_interval(s4.any_failures, s4.trials)[0]
        and all(z.failures == 0 and z.any_failures == 0 for z in zero)
        and dt < 120
    )
    record(
        10,
        ok,
        f"p=0.03: L=4 {s4.rate:.4f} [{s4.interval[0]:.4f},{s4.interval[1]:.4f}], "
        f"L=8 {s8.rate:.4f} [{s8.interval[0]:.4f},{s8.interval[1]:.4f}] (worst logical qubit; "
        f"any-qubit {s4.any_failures / s4.trials:.4f} vs {s8.any_failures / s8.trials:.4f}); p=0 no failures; "
        f"every correction cancelled its syndrome; {dt:.0f}s",
    )
    assert ok


def test_criterion_11_gf2_oracle():
    t = time.perf_counter()
    count = 0
    for rows in range(1, 5):
        for cols in range(1, 5):
            for flat in itertools.product([0, 1], repeat=rows * cols):
                check_against_brute(np.array(flat, dtype=np.uint8).reshape(rows, cols))
                count += 1
    rng = np.random.default_rng(2024)
    for _ in range(200):
        r, c = rng.integers(1, 13, size=2)
        check_against_brute((rng.random((r, c)) < rng.uniform(0.1, 0.9)).astype(np.uint8))
    record(11, True, f"{count} exhaustive matrices up to 4x4 and 200 random up to width 12 ({time.perf_counter() - t:.0f}s)")


def _cli(*args) -> bytes:
    return subprocess.run(
        [sys.executable, "-m", "topocharge", *args], check=True, capture_output=True
    ).stdout


def test_criterion_12_determinism():
    a1, a2 = _cli("analyze", "color", "--json"), _cli("analyze", "color", "--json")
    d = ("decode", "toric", "--seed", "7", "--trials", "2000", "--json")
    d1, d2 = _cli(*d), _cli(*d)
    ok = a1 == a2 and d1 == d2 and len(a1) > 0 and len(d1) > 0
    record(12, ok, "analyze --json and decode --seed 7 byte-identical across separate processes")
    assert ok
