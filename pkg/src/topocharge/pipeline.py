"""End-to-end analysis of a code, producing a JSON-ready report."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .charges import (
    CanonicalGenerators,
    ChargeAnalysis,
    Characteristic,
    StatisticsError,
    StringError,
    build_charge_analysis,
    canonical_generators,
    check_canonical,
    statistics_identities,
    verify_framework_commutation,
)
from .gf2 import commutation_matrix
from .groups import (
    GroupBasis,
    StructureError,
    _rank,
    check_stabilizer,
    check_topological_window,
    check_tssg_window,
    default_window,
    local_independence_check,
    window_torus,
)
from .lattice import CodeDefinition, TorusLattice, coarse_grain, instantiate, normalize
from .torus import TorusCode, build_torus_code, min_torus_size


class StageFailure(Exception):
    """A pipeline stage rejected the code; ``stage`` selects the exit code."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


EXIT_CODES = {
    "ok": 0,
    "usage": 2,
    "input": 3,
    "stabilizer": 4,
    "independence": 5,
    "window": 6,
    "charges": 7,
    "strings": 8,
    "statistics": 9,
    "torus": 10,
    "no-logicals": 11,
    "decode": 12,
}


@dataclass
class Config:
    torus: int | None = None
    window: int | None = None
    coarse_max: int = 4
    adjust: str = "stab"
    framework: bool = True

    def as_dict(self) -> dict:
        return {
            "torus": self.torus,
            "window": self.window,
            "coarse_max": self.coarse_max,
            "adjust": self.adjust,
            "framework": self.framework,
        }


@dataclass
class Analysis:
    code: CodeDefinition
    working: CodeDefinition
    coarse: int
    charges: ChargeAnalysis
    canon: CanonicalGenerators
    characteristic: Characteristic
    torus: TorusCode
    report: dict
    timings: dict = field(default_factory=dict)


def _bits(v) -> str:
    return "".join(str(int(b)) for b in v)


def _stabilizer_stage(code: CodeDefinition) -> dict:
    side = max(4, 2 * code.range)
    lat = TorusLattice(side, side, code.qubits_per_site)
    inst = instantiate(code, lat)
    prov = [(code.stabilizer_recipes[r].label, x, y) for r, x, y in inst.stab_index]
    verdict = check_stabilizer(GroupBasis(inst.stab, prov))
    if not verdict.commuting:
        raise StageFailure("stabilizer", f"stabilizer generators {verdict.anticommuting_pair} anticommute")
    if not verdict.passed:
        raise StageFailure(
            "stabilizer",
            f"{verdict.negative_constraints} global constraint(s) multiply to -1; sign fix {verdict.sign_fix}",
        )
    if code.is_subsystem and inst.gauge.size and inst.stab.size:
        if commutation_matrix(inst.stab, inst.gauge).any():
            raise StageFailure("stabilizer", "a stabilizer generator anticommutes with a gauge generator")
    return {"commuting": True, "sign_ok": True}


def _window_stage(code: CodeDefinition, window: int) -> dict:
    ind = local_independence_check(code, window)
    if not ind.passed:
        raise StageFailure(
            "independence", f"local constraint among {ind.group} generators inside a {window}-window: {ind.witness}"
        )
    lat = window_torus(code, window)
    check = check_tssg_window if code.is_subsystem else check_topological_window
    rep = check(code, lat, window)
    if not rep.passed:
        sup = np.flatnonzero(rep.witness[: lat.n] | rep.witness[lat.n :]).tolist()
        raise StageFailure("window", f"undetectable operator on qubits {sup} is not generated locally")
    return {"local_independence": True, "windowed_check": "tssg" if code.is_subsystem else "tsg", "window": window}


def _charges_stage(code: CodeDefinition, coarse_max: int):
    """Charge analysis, coarse-graining further whenever strings cannot be found."""
    last = None
    for l in range(1, coarse_max + 1):
        work = code if l == 1 else coarse_grain(code, l)
        try:
            ca = build_charge_analysis(work)
            canon, ch = canonical_generators(ca)
            return work, l, ca, canon, ch
        except StringError as exc:
            last = exc
    raise StageFailure("strings", f"string operators not found up to coarse-graining {coarse_max}: {last}")


def analyze(code: CodeDefinition, config: Config | None = None) -> Analysis:
    config = config or Config()
    timings = {}
    t0 = time.perf_counter()
    norm, step = normalize(code) if code.range > 2 else (code, 1)
    verdicts = _stabilizer_stage(norm)
    window = config.window or default_window(norm)
    verdicts.update(_window_stage(norm, window))
    timings["checks"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    try:
        work, level, ca, canon, ch = _charges_stage(norm, config.coarse_max)
        bad = check_canonical(ca, canon, ch)
        if bad:
            raise StageFailure("statistics", "canonical relations violated: " + ", ".join(bad))
        identities = statistics_identities(ca, ch)
        if not all(identities.values()):
            raise StageFailure("statistics", f"statistics identities failed: {identities}")
        framework = verify_framework_commutation(ca, canon, ch) if config.framework else None
        if framework is not None and not framework.passed:
            raise StageFailure("statistics", f"segment framework table failed: {framework.failures[:3]}")
    except StatisticsError as exc:
        raise StageFailure("statistics", str(exc)) from exc
    except StructureError as exc:
        raise StageFailure("charges", str(exc)) from exc
    timings["charges"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    side = config.torus or min_torus_size(work, ca.period)[0]
    if side % ca.period:
        raise StageFailure("torus", f"torus side {side} is not a multiple of the period {ca.period}")
    try:
        tc = build_torus_code(ca, canon, side, config.adjust)
    except (StructureError, StringError) as exc:
        raise StageFailure("torus", str(exc)) from exc
    timings["torus"] = time.perf_counter() - t2
    timings["total"] = time.perf_counter() - t0

    gens = [("c", canon.c), ("d", canon.d), ("e", canon.e)]
    named = [(f"{p}{i + 1}", v) for p, vs in gens for i, v in enumerate(vs)]
    report = {
        "tool": {"name": "topocharge", "version": __version__},
        "config": config.as_dict(),
        "code": {
            "name": code.name,
            "qubits_per_site": code.qubits_per_site,
            "stabilizer_recipes": len(code.stabilizer_recipes),
            "gauge_recipes": len(code.gauge_recipes or ()),
            "subsystem": code.is_subsystem,
            "range": code.range,
        },
        "normalization": {"step": step, "coarse_grain": level, "period": ca.period, "range": work.range},
        "verdicts": verdicts,
        "torus": {
            "size": [side, side],
            "n": tc.n,
            "rank_stabilizer": _rank(tc.stab),
            "rank_gauge": _rank(tc.gauge),
            "k_raw": tc.k_raw,
            "k": tc.k,
            "adjust": config.adjust,
            "extra_generators": int(tc.adjusted.stab.shape[0] - tc.stab.shape[0])
            + int(tc.adjusted.gauge.shape[0] - tc.gauge.shape[0]),
        },
        "charges": {
            "gauge_dim": ca.dim_g,
            "stabilizer_dim": ca.dim_s,
            "string_thickness": ca.max_thickness,
            "generators": {name: _bits(v) for name, v in named},
            "iota": {name: _bits(ca.iota(v)) for name, v in named},
            "theta": {name: ca.theta(v) for name, v in named},
            "kappa": {f"{a},{b}": ca.kappa(u, v) for a, u in named for b, v in named},
            "identities": identities,
        },
        "characteristic": {"alpha": ch.alpha, "beta": ch.beta, "f1": ch.f1, "f2": ch.f2},
        "framework": None
        if framework is None
        else {"unit": framework.unit, "checks": len(framework.checks), "passed": framework.passed},
        "logicals": {
            "count": tc.logicals.k,
            "x_weights": [int((v[: tc.n] | v[tc.n :]).sum()) for v in tc.logicals.x_bar],
            "z_weights": [int((v[: tc.n] | v[tc.n :]).sum()) for v in tc.logicals.z_bar],
        },
    }
    if ch.alpha and ch.f1 == -1 and not code.is_subsystem:
        report["notice"] = "subspace code with a fermionic hyperbolic pair (f1 = -1)"
    return Analysis(code, work, level, ca, canon, ch, tc, report, timings)


def equivalence(a: Analysis, b: Analysis) -> dict:
    ca, cb = a.characteristic, b.characteristic
    subspace = not a.code.is_subsystem and not b.code.is_subsystem
    iso = ca == cb
    if not iso:
        verdict = "not equivalent: topological charges not isomorphic"
    elif subspace:
        verdict = "equivalent"
    else:
        verdict = "topological charges isomorphic"
    return {
        "a": {"name": a.code.name, "characteristic": str(ca), "subsystem": a.code.is_subsystem},
        "b": {"name": b.code.name, "characteristic": str(cb), "subsystem": b.code.is_subsystem},
        "charges_isomorphic": iso,
        "verdict": verdict,
    }
