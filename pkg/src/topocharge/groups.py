"""Group-level checks on instantiated codes.

Everything here works on dense symplectic rows (``uint8`` arrays of width
``2n``) and delegates elimination to :mod:`topocharge.gf2`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2 import (
    BitMatrix,
    Solver,
    commutation_matrix,
    gf2_matmul,
    kernel_basis,
    left_kernel_basis,
    rank,
    row_reduce,
    symplectic_flip,
)
from .lattice import CodeDefinition, TorusLattice, instantiate, recipe_rows


class StructureError(RuntimeError):
    """The input does not have the algebraic structure the analysis needs."""


@dataclass
class GroupBasis:
    """Generator rows plus a human-readable origin for each row."""

    rows: np.ndarray
    provenance: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.rows.shape[1] // 2

    def __len__(self) -> int:
        return self.rows.shape[0]

    def matrix(self) -> BitMatrix:
        return BitMatrix.from_dense(self.rows)

    def rank(self) -> int:
        return _rank(self.rows)


def _rank(rows: np.ndarray) -> int:
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.size == 0:
        return 0
    return rank(BitMatrix.from_dense(rows))


def centralizer(gens: np.ndarray, n: int) -> np.ndarray:
    """Basis rows of every Pauli (mod phase) commuting with all of ``gens``."""
    gens = np.asarray(gens, dtype=np.uint8).reshape(-1, 2 * n)
    if gens.shape[0] == 0:
        return np.eye(2 * n, dtype=np.uint8)
    return kernel_basis(BitMatrix.from_dense(symplectic_flip(gens))).to_dense()


def span_contains(rows: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Flags: which of ``vecs`` lie in the row span of ``rows``."""
    vecs = np.atleast_2d(np.asarray(vecs, dtype=np.uint8))
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.shape[0] == 0:
        return ~vecs.any(axis=1)
    solver = Solver(BitMatrix.from_dense(rows.T))
    return solver.consistent(vecs)


def intersect_spans(a: np.ndarray, b: np.ndarray) -> int:
    """Dimension of span(a) ∩ span(b)."""
    return _rank(a) + _rank(b) - _rank(np.vstack([a, b]))


def same_span(a: np.ndarray, b: np.ndarray) -> bool:
    ra, rb = _rank(a), _rank(b)
    return ra == rb and (ra == 0 or _rank(np.vstack([a, b])) == ra)


# ------------------------------------------------------------ sign tracking


def y_count(rows: np.ndarray) -> np.ndarray:
    n = rows.shape[-1] // 2
    return (rows[..., :n] & rows[..., n:]).sum(axis=-1)


def product_phase(rows: np.ndarray) -> tuple[int, np.ndarray]:
    """Multiply Hermitian Paulis left to right.

    Each row stands for the Hermitian operator with +1 sign (Y letters as
    ``i X Z``).  Returns ``(k, bits)`` with the product equal to
    ``i**k X**x Z**z``.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.uint8))
    n = rows.shape[1] // 2
    k = 0
    acc = np.zeros(2 * n, dtype=np.uint8)
    for r in rows:
        k += int(y_count(r)) + 2 * int(np.dot(acc[n:].astype(np.int64), r[:n]))
        acc ^= r
    return k % 4, acc


@dataclass
class StabilizerVerdict:
    passed: bool
    commuting: bool
    anticommuting_pair: tuple | None = None
    negative_constraints: int = 0
    sign_fix: list[int] | None = None

    @property
    def sign_fixable(self) -> bool:
        return self.commuting and self.sign_fix is not None


def check_stabilizer(gens: GroupBasis) -> StabilizerVerdict:
    """Abelian and free of -1 (with all generator signs +1)."""
    rows = gens.rows
    if len(rows) == 0:
        return StabilizerVerdict(True, True, sign_fix=[])
    comm = commutation_matrix(rows, rows)
    bad = np.argwhere(np.triu(comm, 1))
    if bad.size:
        i, j = (int(v) for v in bad[0])
        prov = gens.provenance
        pair = (prov[i] if prov else i, prov[j] if prov else j)
        return StabilizerVerdict(False, False, anticommuting_pair=pair)
    cons = left_kernel_basis(BitMatrix.from_dense(rows)).to_dense()
    signs = []
    for u in cons:
        k, acc = product_phase(rows[np.flatnonzero(u)])
        assert not acc.any() and k % 2 == 0
        signs.append(k // 2)
    signs = np.array(signs, dtype=np.uint8)
    if not signs.any():
        return StabilizerVerdict(True, True, sign_fix=[])
    fix = Solver(BitMatrix.from_dense(cons)).solve_bits(signs)
    return StabilizerVerdict(
        False,
        True,
        negative_constraints=int(signs.sum()),
        sign_fix=None if fix is None else np.flatnonzero(fix).tolist(),
    )


# ------------------------------------------------------------ windowed checks


def window_sites(w: int, x0: int = 0, y0: int = 0, thicken: int = 0) -> set[tuple[int, int]]:
    return {
        (x, y)
        for x in range(x0 - thicken, x0 + w + thicken)
        for y in range(y0 - thicken, y0 + w + thicken)
    }


def site_qubit_columns(lat: TorusLattice, sites) -> np.ndarray:
    """Symplectic column indices (x then z) of all qubits on the given sites."""
    q = lat.qubits_per_site
    idx = sorted({int(lat.site_index(x, y)) * q + k for x, y in sites for k in range(q)})
    idx = np.array(idx, dtype=np.int64)
    return np.concatenate([idx, idx + lat.n])


def row_support_sites(rows: np.ndarray, lat: TorusLattice) -> list[set[int]]:
    n = lat.n
    q = lat.qubits_per_site
    occ = (rows[:, :n] | rows[:, n:]).reshape(len(rows), n // q if q else 0, q).any(axis=2)
    return [set(np.flatnonzero(r).tolist()) for r in occ]


@dataclass
class WindowReport:
    window_size: int
    passed: bool
    witness: np.ndarray | None = None
    position: tuple[int, int] = (0, 0)


def _window_check(
    check_rows: np.ndarray, span_rows: np.ndarray, lat: TorusLattice, w: int, m: int, x0: int, y0: int
) -> WindowReport:
    n = lat.n
    inner = {int(lat.site_index(x, y)) for x, y in window_sites(w, x0, y0)}
    thick = {int(lat.site_index(x, y)) for x, y in window_sites(w, x0, y0, thicken=m)}
    cols = site_qubit_columns(lat, window_sites(w, x0, y0))
    sup_c = row_support_sites(check_rows, lat) if len(check_rows) else []
    meet = [i for i, s in enumerate(sup_c) if s & inner]
    sub = symplectic_flip(check_rows[meet])[:, cols] if meet else np.zeros((0, cols.size), np.uint8)
    if sub.shape[0]:
        kern = kernel_basis(BitMatrix.from_dense(sub)).to_dense()
    else:
        kern = np.eye(cols.size, dtype=np.uint8)
    if kern.shape[0] == 0:
        return WindowReport(w, True, position=(x0, y0))
    full = np.zeros((kern.shape[0], 2 * n), dtype=np.uint8)
    full[:, cols] = kern
    sup_s = row_support_sites(span_rows, lat) if len(span_rows) else []
    near = [i for i, s in enumerate(sup_s) if s & thick]
    ok = span_contains(span_rows[near] if near else np.zeros((0, 2 * n), np.uint8), full)
    if ok.all():
        return WindowReport(w, True, position=(x0, y0))
    return WindowReport(w, False, witness=full[int(np.flatnonzero(~ok)[0])], position=(x0, y0))


def default_window(code: CodeDefinition) -> int:
    return 2 * code.range + 2


def window_torus(code: CodeDefinition, w: int) -> TorusLattice:
    side = max(12, w + 4 * code.range + 2)
    return TorusLattice(side, side, code.qubits_per_site)


def check_topological_window(code: CodeDefinition, lat: TorusLattice, w: int, at=(0, 0)) -> WindowReport:
    """Paulis in a w×w window commuting with the stabilizers must be stabilizers nearby."""
    m = code.range
    if w > min(lat.lx, lat.ly) - 2 * m:
        raise ValueError(f"window {w} too large for a {lat.lx}x{lat.ly} torus")
    stab, _ = recipe_rows(code.stabilizer_recipes, lat)
    return _window_check(stab, stab, lat, w, m, *at)


def check_tssg_window(code: CodeDefinition, lat: TorusLattice, w: int, at=(0, 0)) -> WindowReport:
    """Paulis in a w×w window commuting with the gauge group must be stabilizers nearby."""
    m = code.range
    if w > min(lat.lx, lat.ly) - 2 * m:
        raise ValueError(f"window {w} too large for a {lat.lx}x{lat.ly} torus")
    stab, _ = recipe_rows(code.stabilizer_recipes, lat)
    gauge, _ = recipe_rows(code.gauge_generators, lat)
    return _window_check(gauge, stab, lat, w, m, *at)


# ------------------------------------------------------------ constraints


@dataclass
class ConstraintSpace:
    basis: np.ndarray
    generator_index: list

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


def constraint_space(rows: np.ndarray, index: list | None = None) -> ConstraintSpace:
    """Subsets of generator rows whose product is proportional to the identity."""
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.shape[0] == 0:
        return ConstraintSpace(np.zeros((0, 0), np.uint8), list(index or []))
    return ConstraintSpace(left_kernel_basis(BitMatrix.from_dense(rows)).to_dense(), list(index or []))


@dataclass
class IndependenceVerdict:
    passed: bool
    window_size: int
    witness: list | None = None
    group: str | None = None


def local_independence_check(code: CodeDefinition, window_size: int) -> IndependenceVerdict:
    """No product of generators supported inside a window equals the identity."""
    if code.qubits_per_site == 0:
        return IndependenceVerdict(True, window_size)
    m = code.range
    side = window_size + 2 * m + 2
    lat = TorusLattice(side, side, code.qubits_per_site)
    inside = {int(lat.site_index(x, y)) for x, y in window_sites(window_size)}
    groups = [("stabilizer", code.stabilizer_recipes)]
    if code.is_subsystem:
        groups.append(("gauge", code.gauge_recipes))
    for name, recipes in groups:
        rows, index = recipe_rows(recipes, lat)
        if not len(rows):
            continue
        sup = row_support_sites(rows, lat)
        keep = [i for i, s in enumerate(sup) if s and s <= inside]
        if not keep:
            continue
        cons = left_kernel_basis(BitMatrix.from_dense(rows[keep])).to_dense()
        if cons.shape[0]:
            labels = []
            for j in np.flatnonzero(cons[0]):
                r, x, y = index[keep[j]]
                labels.append((recipes[r].label, x, y))
            return IndependenceVerdict(False, window_size, witness=labels, group=name)
    return IndependenceVerdict(True, window_size)


def count_logical_qubits(stab: np.ndarray, gauge: np.ndarray, n: int) -> int:
    rs = _rank(stab)
    rg = _rank(gauge)
    if (rg - rs) % 2:
        raise StructureError(f"gauge rank {rg} and stabilizer rank {rs} differ by an odd number")
    return n - (rg + rs) // 2


def _as_rows(a, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    if a.size == 0:
        return np.zeros((0, 2 * n), dtype=np.uint8)
    return a.reshape(-1, 2 * n)


def center_rows(gauge: np.ndarray, n: int) -> np.ndarray:
    """Basis of span(gauge) ∩ C(gauge)."""
    gauge = _as_rows(gauge, n)
    if gauge.shape[0] == 0:
        return np.zeros((0, 2 * n), np.uint8)
    # u @ gauge commutes with every gauge row iff u @ (gauge J gauge^T) == 0
    gram = commutation_matrix(gauge, gauge)
    coeffs = left_kernel_basis(BitMatrix.from_dense(gram)).to_dense()
    if coeffs.shape[0] == 0:
        return np.zeros((0, 2 * n), np.uint8)
    return row_reduce(BitMatrix.from_dense(gf2_matmul(coeffs, gauge))).to_dense()


def gauge_code_identity(gauge: np.ndarray, stab: np.ndarray, n: int) -> bool:
    """Whether the center of span(gauge) is exactly span(stab)."""
    return same_span(center_rows(gauge, n), _as_rows(stab, n))


def analyze_torus_groups(code: CodeDefinition, lat: TorusLattice):
    """Convenience bundle used by reports: ranks, constraints and k on one torus."""
    inst = instantiate(code, lat)
    rs = _rank(inst.stab)
    rg = _rank(inst.gauge)
    return {
        "n": lat.n,
        "stab_rows": int(len(inst.stab)),
        "gauge_rows": int(len(inst.gauge)),
        "rank_stab": rs,
        "rank_gauge": rg,
        "k_raw": count_logical_qubits(inst.stab, inst.gauge, lat.n),
    }
