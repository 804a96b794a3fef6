from __future__ import annotations

from functools import lru_cache

from topocharge.charges import build_charge_analysis, canonical_generators
from topocharge.lattice import resolve_code

EXPECTED = {
    "empty": (0, 0, 1, 1),
    "trivial": (0, 0, 1, 1),
    "subsystem_trivial": (0, 0, 1, 1),
    "toric": (1, 0, 1, 1),
    "subsystem_toric": (0, 1, 1, 1),
    "color": (1, 0, -1, 1),
    "honeycomb": (0, 1, 1, -1),
}


@lru_cache(maxsize=None)
def charge_data(spec: str):
    """(ChargeAnalysis, CanonicalGenerators, Characteristic) for a code spec, computed once per session."""
    ca = build_charge_analysis(resolve_code(spec))
    canon, ch = canonical_generators(ca)
    return ca, canon, ch


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store and print one acceptance line; the test still asserts ``ok`` itself."""
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
