"""Topological charges, string operators and their statistics.

Charges are read off the torus: a set of flipped generators (a morphism) is
the syndrome of some Pauli exactly when it has even overlap with every
global constraint, so the overlap parities with a constraint basis are the
charge coordinates.  Coordinates are then re-expressed in a canonical basis
made of the charges of individual generators, picked in lexicographic order
of (recipe, x, y) inside one period block.  That makes them independent of
the torus used to find them.

String operators live on a large auxiliary torus (the "canvas") and are
solved locally: unknowns are the Pauli bits on a thickened path, equations
are the commutation values with every generator touching that region.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .gf2 import BitMatrix, Solver, gf2_matmul, left_kernel_basis, rank
from .groups import StructureError
from .lattice import LETTER_BITS, CodeDefinition, TorusLattice, recipe_rows

Instance = tuple[int, int, int]  # (recipe index, anchor x, anchor y)


class StringError(RuntimeError):
    """No string operator found within the allowed thickness."""


class StatisticsError(RuntimeError):
    """Alternative geometries disagree; the statistic is not well defined here."""


@dataclass(frozen=True)
class Characteristic:
    alpha: int
    beta: int
    f1: int
    f2: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.alpha, self.beta, self.f1, self.f2)

    def __str__(self) -> str:
        return f"({self.alpha}, {self.beta}, {self.f1:+d}, {self.f2:+d})"


def compose_characteristics(a: Characteristic, b: Characteristic) -> Characteristic:
    return Characteristic(
        a.alpha + b.alpha,
        a.beta + b.beta,
        a.f1 * b.f1,
        (1 + a.f2) * (1 + b.f2) // 2 - 1,
    )


# ------------------------------------------------------------ charge tables


def _constraint_columns(rows: np.ndarray) -> np.ndarray:
    """Constraint basis as columns: entry (i, j) = membership of row i in constraint j."""
    if rows.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.uint8)
    return left_kernel_basis(BitMatrix.from_dense(rows)).to_dense().T.copy()


def _detect_period(mem: np.ndarray, n_rec: int, L: int) -> int:
    grid = mem.reshape(n_rec, L, L, -1)
    for p in sorted(d for d in range(1, L + 1) if L % d == 0):
        if np.array_equal(grid, np.roll(grid, p, axis=1)) and np.array_equal(grid, np.roll(grid, p, axis=2)):
            return p
    return L


@dataclass
class ChargeTable:
    """Charges of single generators, periodic with period ``period``.

    ``table[r, x, y]`` is the charge (canonical coordinates) of recipe ``r``
    anchored at any site congruent to ``(x, y)`` mod the period.
    ``basis_instances`` lists the generator classes whose charges form the
    coordinate basis.
    """

    which: str
    period: int
    table: np.ndarray
    basis_instances: list[Instance]
    torus: int

    @property
    def dim(self) -> int:
        return self.table.shape[-1]

    @property
    def n_recipes(self) -> int:
        return self.table.shape[0]

    def charge_of(self, instances) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.uint8)
        P = self.period
        for r, x, y in instances:
            out ^= self.table[r, x % P, y % P]
        return out

    def morphism(self, c, sigma=(0, 0)) -> list[Instance]:
        """A set of generators anchored in the period block at ``sigma`` with charge ``c``."""
        sx, sy = sigma
        P = self.period
        if sx % P or sy % P:
            raise ValueError(f"endpoint {sigma} is not on the period-{P} sublattice")
        c = np.asarray(c, dtype=np.uint8)
        return [(r, x + sx, y + sy) for j, (r, x, y) in enumerate(self.basis_instances) if c[j]]

    def relation_matrix(self) -> np.ndarray:
        return self.table.reshape(self.n_recipes * self.period**2, self.dim)


def _canonicalize(mem_block: np.ndarray, n_rec: int, P: int) -> tuple[np.ndarray, list[Instance]]:
    """Re-express charges in the basis of the first independent generator classes."""
    dim = mem_block.shape[1]
    if dim == 0:
        return mem_block.reshape(n_rec, P, P, 0), []
    pivots: list[int] = []
    cur = np.zeros((0, dim), dtype=np.uint8)
    for i, row in enumerate(mem_block):
        trial = np.vstack([cur, row[None, :]])
        if rank(BitMatrix.from_dense(trial)) > len(pivots):
            pivots.append(i)
            cur = trial
            if len(pivots) == dim:
                break
    if len(pivots) < dim:
        raise StructureError("generator charges do not span the charge group")
    B = mem_block[pivots]  # dim x dim, invertible
    # coordinates: v = w @ B  =>  w = v @ B^-1
    Binv = np.zeros((dim, dim), dtype=np.uint8)
    solver = Solver(BitMatrix.from_dense(B.T))
    for j in range(dim):
        e = np.zeros(dim, dtype=np.uint8)
        e[j] = 1
        Binv[:, j] = solver.solve_bits(e)
    canon = gf2_matmul(mem_block, Binv)
    basis = []
    for i in pivots:
        r, rem = divmod(i, P * P)
        x, y = divmod(rem, P)
        basis.append((r, x, y))
    return canon.reshape(n_rec, P, P, dim), basis


def raw_charge_data(recipes, q: int, L: int) -> tuple[int, int, np.ndarray]:
    """(constraint dimension, period, membership grid) on an L×L torus."""
    lat = TorusLattice(L, L, q)
    rows, _ = recipe_rows(recipes, lat)
    mem = _constraint_columns(rows)
    n_rec = len(recipes)
    if mem.size == 0:
        return 0, 1, np.zeros((n_rec, L, L, 0), np.uint8)
    P = _detect_period(mem, n_rec, L)
    return mem.shape[1], P, mem.reshape(n_rec, L, L, -1)


def charge_table(recipes, q: int, L: int, which: str) -> ChargeTable:
    recipes = tuple(recipes)
    dim, P, grid = raw_charge_data(recipes, q, L)
    n_rec = len(recipes)
    block = grid[:, :P, :P].reshape(n_rec * P * P, dim)
    table, basis = _canonicalize(block, n_rec, P)
    return ChargeTable(which, P, table, basis, L)


def with_period(t: ChargeTable, P: int) -> ChargeTable:
    """Same table viewed with a larger (multiple) period."""
    if P == t.period:
        return t
    assert P % t.period == 0
    reps = P // t.period
    table = np.tile(t.table, (1, reps, reps, 1))
    return ChargeTable(t.which, P, table, t.basis_instances, t.torus)


def constraint_dims(recipes, q: int, sizes) -> dict[int, int]:
    out = {}
    for L in sizes:
        lat = TorusLattice(L, L, q)
        rows, _ = recipe_rows(recipes, lat)
        out[L] = rows.shape[0] - (rank(BitMatrix.from_dense(rows)) if rows.shape[0] else 0)
    return out


def same_charge_structure(a: ChargeTable, b: ChargeTable) -> bool:
    """Tables describe the same group: equal dimension and the same relations."""
    if a.dim != b.dim:
        return False
    if a.dim == 0:
        return True
    P = max(a.period, b.period)
    P = P * min(a.period, b.period) // np.gcd(a.period, b.period)
    ma = with_period(a, P).relation_matrix()
    mb = with_period(b, P).relation_matrix()
    ra = rank(BitMatrix.from_dense(ma))
    return ra == rank(BitMatrix.from_dense(mb)) == rank(BitMatrix.from_dense(np.hstack([ma, mb])))


# ------------------------------------------------------------ strings


def line_sites(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """Sites of an L-shaped lattice path from a to b (x first, then y)."""
    (x0, y0), (x1, y1) = a, b
    out = []
    sx = 1 if x1 >= x0 else -1
    for x in range(x0, x1 + sx, sx):
        out.append((x, y0))
    sy = 1 if y1 >= y0 else -1
    for y in range(y0, y1 + sy, sy):
        out.append((x1, y))
    return out


def thicken(sites, r: int) -> set[tuple[int, int]]:
    out = set()
    for x, y in sites:
        for dx in range(-r, r + 1):
            for dy in range(-r, r + 1):
                out.add((x + dx, y + dy))
    return out


class StringSolver:
    """Finds Paulis with a prescribed local syndrome on a given generator set."""

    def __init__(self, recipes, q: int, lattice: TorusLattice, r_max: int = 4):
        self.recipes = tuple(recipes)
        self.q = q
        self.lat = lattice
        self.r_max = r_max
        self._terms = [
            [(t.dx, t.dy, t.qubit, *LETTER_BITS[t.letter]) for t in rec.terms] for rec in self.recipes
        ]

    def instance_sites(self, inst: Instance) -> set[tuple[int, int]]:
        r, x, y = inst
        return {(x + dx, y + dy) for dx, dy, *_ in self._terms[r]}

    def instance_row(self, inst: Instance) -> np.ndarray:
        r, x, y = inst
        n = self.lat.n
        row = np.zeros(2 * n, dtype=np.uint8)
        for dx, dy, k, bx, bz in self._terms[r]:
            i = self.lat.index(x + dx, y + dy, k)
            row[i] ^= bx
            row[n + i] ^= bz
        return row

    def solve_region(self, flips, region) -> np.ndarray | None:
        """Pauli supported on ``region`` whose syndrome on every generator touching it is ``flips``."""
        lx, ly = self.lat.lx, self.lat.ly
        flip_set: set[Instance] = set()
        for r, x, y in flips:
            flip_set ^= {(r, x % lx, y % ly)}
        region = {(x % lx, y % ly) for x, y in region}
        for f in flip_set:
            region |= {(x % lx, y % ly) for x, y in self.instance_sites(f)}
        sites = sorted(region)
        loc = {s: i for i, s in enumerate(sites)}
        nq = len(sites) * self.q
        anchors: set[Instance] = set()
        for r, terms in enumerate(self._terms):
            for dx, dy, *_ in terms:
                for sx, sy in sites:
                    anchors.add((r, (sx - dx) % lx, (sy - dy) % ly))
        insts = sorted(anchors)
        rows = np.zeros((len(insts), 2 * nq), dtype=np.uint8)
        rhs = np.zeros(len(insts), dtype=np.uint8)
        for e, (r, ax, ay) in enumerate(insts):
            for dx, dy, k, bx, bz in self._terms[r]:
                j = loc.get(((ax + dx) % lx, (ay + dy) % ly))
                if j is None:
                    continue
                col = j * self.q + k
                # generator (bx, bz) vs unknown (px, pz): bx*pz + bz*px
                rows[e, col] ^= bz
                rows[e, nq + col] ^= bx
            if (r, ax, ay) in flip_set:
                rhs[e] = 1
        x = Solver(BitMatrix.from_dense(rows)).solve_bits(rhs)
        if x is None:
            return None
        n = self.lat.n
        vec = np.zeros(2 * n, dtype=np.uint8)
        xs = np.array([s[0] for s in sites for _ in range(self.q)], dtype=np.int64)
        ys = np.array([s[1] for s in sites for _ in range(self.q)], dtype=np.int64)
        ks = np.tile(np.arange(self.q), len(sites))
        idx = self.lat.index(xs, ys, ks)
        np.bitwise_xor.at(vec, idx, x[:nq])
        np.bitwise_xor.at(vec, n + idx, x[nq:])
        return vec

    def string(self, flips, path, r_min: int = 1) -> tuple[np.ndarray, int]:
        for r in range(r_min, self.r_max + 1):
            vec = self.solve_region(flips, thicken(path, r))
            if vec is not None:
                return vec, r
        raise StringError(f"no string along a path of {len(path)} sites up to thickness {self.r_max}")

    def syndrome(self, vec: np.ndarray, insts) -> np.ndarray:
        n = self.lat.n
        out = []
        for inst in insts:
            row = self.instance_row(inst)
            out.append(int(row[:n] @ vec[n:] + row[n:] @ vec[:n]) & 1)
        return np.array(out, dtype=np.uint8)


def comm(p: np.ndarray, q: np.ndarray) -> int:
    """+1 if the Paulis commute, -1 otherwise."""
    n = p.size // 2
    v = (int(p[:n].astype(np.int64) @ q[n:]) + int(p[n:].astype(np.int64) @ q[:n])) & 1
    return -1 if v else 1


def xor_sets(*sets) -> set:
    out: set = set()
    for s in sets:
        out ^= set(s)
    return out


# ------------------------------------------------------------ analysis object


@dataclass
class ChargeAnalysis:
    """Charge groups, statistics and the ι map for one code."""

    code: CodeDefinition
    gauge_table: ChargeTable
    stab_table: ChargeTable
    period: int
    r_max: int = 4
    leg: int = 0
    canvas: TorusLattice = field(init=False)
    iota_decomp: list = field(init=False, default_factory=list)
    _theta: dict = field(init=False, default_factory=dict, repr=False)
    _kappa: dict = field(init=False, default_factory=dict, repr=False)
    _mixed: dict = field(init=False, default_factory=dict, repr=False)
    max_thickness: int = field(init=False, default=0)

    def __post_init__(self):
        P = self.period
        self.gauge_table = with_period(self.gauge_table, P)
        self.stab_table = with_period(self.stab_table, P)
        if not self.leg:
            self.leg = P * max(3, -(-(2 * self.r_max + 4) // P))
        side = 2 * self.leg + 6 * P + 4 * self.r_max + 8
        self.canvas = TorusLattice(side, side, max(self.code.qubits_per_site, 1))
        q = self.code.qubits_per_site
        self.g_solver = StringSolver(self.code.gauge_generators, q, self.canvas, self.r_max)
        self.s_solver = StringSolver(self.code.stabilizer_recipes, q, self.canvas, self.r_max)
        self.iota_decomp = self._decompose_stabilizers()
        self.iota_matrix = np.array(
            [self.iota(np.eye(self.dim_g, dtype=np.uint8)[j]) for j in range(self.dim_g)], dtype=np.uint8
        ).reshape(self.dim_g, self.dim_s)

    # ---- basic data

    @property
    def dim_g(self) -> int:
        return self.gauge_table.dim

    @property
    def dim_s(self) -> int:
        return self.stab_table.dim

    def all_charges(self, which: str = "gauge"):
        d = self.dim_g if which == "gauge" else self.dim_s
        for bits in itertools.product((0, 1), repeat=d):
            yield np.array(bits, dtype=np.uint8)

    # ---- ι map

    def _decompose_stabilizers(self) -> list[list[Instance]]:
        """Each stabilizer recipe at the origin as a product of nearby gauge generators."""
        if not self.code.is_subsystem:
            return [[(r, 0, 0)] for r in range(len(self.code.stabilizer_recipes))]
        out = []
        for r in range(len(self.code.stabilizer_recipes)):
            target = self.s_solver.instance_row((r, 0, 0))
            sup = self.s_solver.instance_sites((r, 0, 0))
            for t in range(1, self.r_max + 2):
                zone = thicken(sup, t)
                cands = []
                for gr, terms in enumerate(self.g_solver._terms):
                    offs = [(dx, dy) for dx, dy, *_ in terms]
                    anchors = {(sx - dx, sy - dy) for sx, sy in zone for dx, dy in offs}
                    for ax, ay in sorted(anchors):
                        if all((ax + dx, ay + dy) in zone for dx, dy in offs):
                            cands.append((gr, ax, ay))
                if not cands:
                    continue
                mat = np.array([self.g_solver.instance_row(c) for c in cands], dtype=np.uint8)
                cols = np.flatnonzero(mat.any(axis=0) | target.astype(bool))
                x = Solver(BitMatrix.from_dense(mat[:, cols].T)).solve_bits(target[cols])
                if x is not None:
                    out.append([cands[i] for i in np.flatnonzero(x)])
                    break
            else:
                raise StructureError(
                    f"stabilizer {self.code.stabilizer_recipes[r].label!r} is not a product of nearby gauge generators"
                )
        return out

    def restrict(self, gauge_flips) -> list[Instance]:
        """Stabilizer generators flipped by a gauge morphism."""
        counts: dict[Instance, int] = {}
        for gr, gx, gy in gauge_flips:
            for s, dec in enumerate(self.iota_decomp):
                for dr, dx, dy in dec:
                    if dr == gr:
                        key = (s, gx - dx, gy - dy)
                        counts[key] = counts.get(key, 0) ^ 1
        return sorted(k for k, v in counts.items() if v)

    def iota(self, c) -> np.ndarray:
        return self.stab_table.charge_of(self.restrict(self.gauge_table.morphism(c)))

    # ---- strings

    def gauge_string(self, c, a, b) -> np.ndarray:
        t = self.gauge_table
        flips = xor_sets(t.morphism(c, a), t.morphism(c, b))
        vec, r = self.g_solver.string(flips, line_sites(a, b))
        self.max_thickness = max(self.max_thickness, r)
        return vec

    def stab_string(self, c, a, b) -> np.ndarray:
        t = self.stab_table
        flips = xor_sets(t.morphism(c, a), t.morphism(c, b))
        vec, r = self.s_solver.string(flips, line_sites(a, b))
        self.max_thickness = max(self.max_thickness, r)
        return vec

    # ---- statistics

    def theta(self, c) -> int:
        key = tuple(int(v) for v in c)
        if key not in self._theta:
            self._theta[key] = self._theta_direct(np.array(key, dtype=np.uint8))
        return self._theta[key]

    def theta_at(self, c, origin=(0, 0), leg: int | None = None) -> int:
        """Spin evaluated with a specific geometry (uncached)."""
        return self._theta_direct(np.asarray(c, np.uint8), origin, leg)

    def kappa_at(self, c, d, origin=(0, 0), leg: int | None = None) -> int:
        """Mutual statistics evaluated with a specific crossing point (uncached)."""
        c, d = np.asarray(c, np.uint8), np.asarray(d, np.uint8)
        if not c.any() or not d.any():
            return 1
        return self._crossing(self.gauge_string, self.gauge_string, c, d, origin, leg)

    def _theta_direct(self, c, origin=(0, 0), leg: int | None = None) -> int:
        if not c.any():
            return 1
        A = leg or self.leg
        o = ox, oy = origin
        legs = [(ox - A, oy), (ox + A, oy), (ox, oy - A), (ox, oy + A)]
        ps = [self.gauge_string(c, o, e) for e in legs]
        vals = set()
        for i, j, k in itertools.combinations(range(4), 3):
            vals.add(comm(ps[i], ps[j]) * comm(ps[i], ps[k]) * comm(ps[j], ps[k]))
        if len(vals) != 1:
            raise StatisticsError(f"topological spin of {c.tolist()} depends on the geometry")
        return vals.pop()

    def kappa(self, c, d) -> int:
        key = (tuple(int(v) for v in c), tuple(int(v) for v in d))
        if key not in self._kappa:
            self._kappa[key] = self._kappa_direct(np.asarray(c, np.uint8), np.asarray(d, np.uint8))
        return self._kappa[key]

    def _crossing(self, h_fn, v_fn, c, d, shift=(0, 0), leg: int | None = None) -> int:
        A = leg or self.leg
        sx, sy = shift
        p = h_fn(c, (sx - A, sy), (sx + A, sy))
        q = v_fn(d, (sx, sy - A), (sx, sy + A))
        return comm(p, q)

    def _kappa_direct(self, c, d) -> int:
        if not c.any() or not d.any():
            return 1
        P = self.period
        v1 = self._crossing(self.gauge_string, self.gauge_string, c, d)
        v2 = self._crossing(self.gauge_string, self.gauge_string, c, d, shift=(P, 2 * P))
        if v1 != v2:
            raise StatisticsError(f"mutual statistics of {c.tolist()}, {d.tolist()} depend on position")
        return v1

    def kappa_mixed(self, cg, cs) -> int:
        key = (tuple(int(v) for v in cg), tuple(int(v) for v in cs))
        if key not in self._mixed:
            cg = np.asarray(cg, np.uint8)
            cs = np.asarray(cs, np.uint8)
            if not cg.any() or not cs.any():
                val = 1
            else:
                P = self.period
                v1 = self._crossing(self.gauge_string, self.stab_string, cg, cs)
                v2 = self._crossing(self.gauge_string, self.stab_string, cg, cs, shift=(P, 2 * P))
                if v1 != v2:
                    raise StatisticsError("mixed mutual statistics depend on position")
                val = v1
            self._mixed[key] = val
        return self._mixed[key]

    def kappa_matrix(self) -> np.ndarray:
        """Bits: entry (i, j) = 1 iff κ(basis_i, basis_j) = -1."""
        eye = np.eye(self.dim_g, dtype=np.uint8)
        m = np.zeros((self.dim_g, self.dim_g), dtype=np.uint8)
        for i in range(self.dim_g):
            for j in range(i, self.dim_g):
                m[i, j] = m[j, i] = self.kappa(eye[i], eye[j]) == -1
        return m

    def mixed_matrix(self) -> np.ndarray:
        eg = np.eye(self.dim_g, dtype=np.uint8)
        es = np.eye(self.dim_s, dtype=np.uint8)
        m = np.zeros((self.dim_g, self.dim_s), dtype=np.uint8)
        for i in range(self.dim_g):
            for j in range(self.dim_s):
                m[i, j] = self.kappa_mixed(eg[i], es[j]) == -1
        return m


# ------------------------------------------------------------ canonical form


@dataclass
class CanonicalGenerators:
    c: list[np.ndarray]
    d: list[np.ndarray]
    e: list[np.ndarray]
    e_tilde: list[np.ndarray]
    c_tilde: list[np.ndarray]
    d_tilde: list[np.ndarray]

    def gauge_basis(self) -> list[np.ndarray]:
        return list(self.c) + list(self.d) + list(self.e)

    def stab_basis(self) -> list[np.ndarray]:
        return list(self.c_tilde) + list(self.d_tilde) + list(self.e_tilde)


def _bil(u, M, v) -> int:
    return int(u.astype(np.int64) @ M.astype(np.int64) @ v.astype(np.int64)) & 1


def canonical_generators(ca: ChargeAnalysis) -> tuple[CanonicalGenerators, Characteristic]:
    dim = ca.dim_g
    if ca.dim_s != dim:
        raise StructureError(f"|λG| = 2^{dim} but |λS| = 2^{ca.dim_s}")
    K = ca.kappa_matrix()
    I = ca.iota_matrix
    th = ca.theta

    # step 1: kernel of ι
    if dim:
        kern = left_kernel_basis(BitMatrix.from_dense(I)).to_dense() if I.size else np.eye(dim, dtype=np.uint8)
    else:
        kern = np.zeros((0, 0), np.uint8)
    e = [row.copy() for row in kern]
    f2 = 1
    ferm = [k for k, v in enumerate(e) if th(v) == -1]
    if ferm:
        f2 = -1
        first = ferm[0]
        e[0], e[first] = e[first], e[0]
        for k in range(1, len(e)):
            if th(e[k]) == -1:
                e[k] = e[k] ^ e[0]

    # step 2: symplectic pairs on a complement of the kernel
    span = [v for v in e]
    pool = []
    for j in range(dim):
        v = np.zeros(dim, dtype=np.uint8)
        v[j] = 1
        cand = span + [v]
        if rank(BitMatrix.from_dense(np.array(cand))) == len(cand):
            span.append(v)
            pool.append(v)
    pairs: list[list[np.ndarray]] = []
    while pool:
        c = pool.pop(0)
        idx = next((i for i, w in enumerate(pool) if _bil(c, K, w)), None)
        if idx is None:
            raise StructureError(f"charge {c.tolist()} outside the ι kernel braids trivially with everything")
        d = pool.pop(idx)
        pool = [w ^ (c * _bil(w, K, d)) ^ (d * _bil(w, K, c)) for w in pool]
        pairs.append([c, d])
    for pr in pairs:
        c, d = pr
        if th(c) == 1 and th(d) == -1:
            pr[1] = c ^ d
        elif th(c) == -1 and th(d) == 1:
            pr[0] = c ^ d
    while True:
        fp = [i for i, (c, _) in enumerate(pairs) if th(c) == -1]
        if len(fp) < 2:
            break
        i, j = fp[0], fp[1]
        ci, di = pairs[i]
        cj, dj = pairs[j]
        pairs[i] = [ci ^ cj, di ^ cj]
        pairs[j] = [ci ^ di ^ dj, ci ^ di ^ cj ^ dj]
    fp = [i for i, (c, _) in enumerate(pairs) if th(c) == -1]
    if fp and fp[0] != 0:
        pairs.insert(0, pairs.pop(fp[0]))
    alpha = len(pairs)
    f1 = th(pairs[0][0]) if alpha else 1
    cs = [p[0] for p in pairs]
    ds = [p[1] for p in pairs]

    # step 3: duals of the kernel charges inside λS
    M = ca.mixed_matrix()
    basis = cs + ds + e
    e_tilde = []
    if e:
        C = np.array(basis, dtype=np.uint8)
        solver = Solver(BitMatrix.from_dense(gf2_matmul(C, M)))
        for k in range(len(e)):
            target = np.zeros(len(basis), dtype=np.uint8)
            target[2 * alpha + k] = 1
            y = solver.solve_bits(target)
            if y is None:
                raise StructureError("mixed statistics pairing is degenerate")
            e_tilde.append(y)
    canon = CanonicalGenerators(
        c=cs,
        d=ds,
        e=e,
        e_tilde=e_tilde,
        c_tilde=[ca.iota(c) for c in cs],
        d_tilde=[ca.iota(d) for d in ds],
    )
    return canon, Characteristic(alpha, len(e), f1, f2)


def check_canonical(ca: ChargeAnalysis, canon: CanonicalGenerators, ch: Characteristic) -> list[str]:
    """Recompute every canonical relation with fresh strings; returns failures."""
    bad = []
    a = ch.alpha
    for i in range(a):
        if not np.array_equal(ca.iota(canon.c[i]), canon.c_tilde[i]):
            bad.append(f"iota(c{i + 1})")
        if not np.array_equal(ca.iota(canon.d[i]), canon.d_tilde[i]):
            bad.append(f"iota(d{i + 1})")
    for k, e in enumerate(canon.e):
        if ca.iota(e).any():
            bad.append(f"iota(e{k + 1}) != 1")
    for i in range(a):
        for j in range(a):
            if ca.kappa(canon.c[i], canon.c[j]) != 1:
                bad.append(f"kappa(c{i + 1},c{j + 1})")
            if ca.kappa(canon.d[i], canon.d[j]) != 1:
                bad.append(f"kappa(d{i + 1},d{j + 1})")
            if ca.kappa(canon.c[i], canon.d[j]) != (-1 if i == j else 1):
                bad.append(f"kappa(c{i + 1},d{j + 1})")
    for k, et in enumerate(canon.e_tilde):
        for i in range(a):
            if ca.kappa_mixed(canon.c[i], et) != 1 or ca.kappa_mixed(canon.d[i], et) != 1:
                bad.append(f"kappa(c/d{i + 1}, e~{k + 1})")
        for l, e in enumerate(canon.e):
            if ca.kappa_mixed(e, et) != (-1 if k == l else 1):
                bad.append(f"kappa(e{l + 1}, e~{k + 1})")
    for i in range(a):
        want = ch.f1 if i == 0 else 1
        if ca.theta(canon.c[i]) != want or ca.theta(canon.d[i]) != want:
            bad.append(f"theta(c/d{i + 1})")
    for k, e in enumerate(canon.e):
        want = ch.f2 if k == 0 else 1
        if ca.theta(e) != want:
            bad.append(f"theta(e{k + 1})")
    gb = canon.gauge_basis()
    if gb and rank(BitMatrix.from_dense(np.array(gb))) != ca.dim_g:
        bad.append("gauge generators not independent")
    sb = canon.stab_basis()
    if sb and rank(BitMatrix.from_dense(np.array(sb))) != ca.dim_s:
        bad.append("stabilizer generators not independent")
    return bad


def boson_count_formula(ch: Characteristic) -> int:
    """Number of charges with trivial spin in a group with characteristic ``ch``.

    Equals 2^(α+β-2) (2^(α+1) + f1 + f1 f2).  The hyperbolic part contributes
    2^(α-1)(2^α + f1) bosons; a fermionic kernel halves the remaining freedom.
    """
    a, b, f1, f2 = ch.as_tuple()
    return (2 ** (a + 1) + f1 + f1 * f2) * 2 ** (a + b) // 4


def statistics_identities(ca: ChargeAnalysis, ch: Characteristic) -> dict[str, bool]:
    """Exhaustive checks over the whole gauge charge group."""
    charges = list(ca.all_charges())
    zero = np.zeros(ca.dim_g, dtype=np.uint8)
    res = {
        "spin_product": True,
        "kappa_symmetric": True,
        "kappa_bilinear": True,
        "kappa_self": True,
        "kappa_iota": True,
        "iota_kernel": True,
        "boson_count": True,
    }
    for c in charges:
        if ca.kappa(c, c) != 1:
            res["kappa_self"] = False
        trivial_everywhere = all(ca.kappa(c, d) == 1 for d in charges)
        if trivial_everywhere != (not ca.iota(c).any()):
            res["iota_kernel"] = False
        if ca.kappa(c, zero) != 1:
            res["kappa_bilinear"] = False
        for d in charges:
            k = ca.kappa(c, d)
            if k != ca.kappa(d, c):
                res["kappa_symmetric"] = False
            if ca.theta(c ^ d) != ca.theta(c) * ca.theta(d) * k:
                res["spin_product"] = False
            if k != ca.kappa_mixed(c, ca.iota(d)):
                res["kappa_iota"] = False
    for c, d, e in itertools.product(charges, repeat=3):
        if ca.kappa(c ^ d, e) != ca.kappa(c, e) * ca.kappa(d, e):
            res["kappa_bilinear"] = False
            break
    bosons = sum(ca.theta(c) == 1 for c in charges)
    res["boson_count"] = bosons == boson_count_formula(ch)
    return res


# ------------------------------------------------------------ entry point


def analysis_torus(code: CodeDefinition, scan_max: int = 12) -> int:
    """Torus side on which the constraint count has saturated, at least ``scan_max``."""
    lo = max(4, 2 * code.range)
    sizes = range(lo, max(scan_max, lo) + 1)
    best = lo
    top = -1
    for recipes in (code.stabilizer_recipes, code.gauge_generators):
        dims = constraint_dims(recipes, code.qubits_per_site, sizes)
        m = max(dims.values())
        if m > top:
            top = m
        first = min(L for L, v in dims.items() if v == m)
        best = best * first // int(np.gcd(best, first))
    return best * -(-max(scan_max, lo) // best)


def build_charge_analysis(code: CodeDefinition, r_max: int = 4, torus: int | None = None) -> ChargeAnalysis:
    """Charge tables for G and S, checked for stability on a second torus."""
    q = max(code.qubits_per_site, 1)
    L = torus or analysis_torus(code)
    tg = charge_table(code.gauge_generators, q, L, "gauge")
    ts = charge_table(code.stabilizer_recipes, q, L, "stabilizer")
    P = tg.period * ts.period // int(np.gcd(tg.period, ts.period))
    if L % P:
        raise StructureError(f"charge period {P} does not divide the analysis torus {L}")
    L2 = L + 2 * P
    for t, recipes in ((tg, code.gauge_generators), (ts, code.stabilizer_recipes)):
        t2 = charge_table(recipes, q, L2, t.which)
        if not same_charge_structure(t, t2):
            raise StructureError(
                f"{t.which} charge group differs between tori {L} and {L2} (dims {t.dim}, {t2.dim})"
            )
    return ChargeAnalysis(code, tg, ts, P, r_max=r_max)


# ------------------------------------------------------------ segment framework


@dataclass
class FrameworkReport:
    unit: int
    checks: list[tuple[str, int, int]]

    @property
    def passed(self) -> bool:
        return all(want == got for _, want, got in self.checks)

    @property
    def failures(self) -> list[tuple[str, int, int]]:
        return [c for c in self.checks if c[1] != c[2]]


def verify_framework_commutation(ca: ChargeAnalysis, canon: CanonicalGenerators, ch: Characteristic) -> FrameworkReport:
    """Commutation table of unit segments carrying the canonical charges.

    Primal segments join lattice vertices (multiples of the unit u); dual
    segments join the shifted vertices (u/2, u/2) + uZ^2.  Each canonical
    gauge charge gets the four segments around the origin plus one disjoint
    parallel copy; each charge also gets two dual segments.  Kernel duals ẽ
    are carried by stabilizer strings.
    """
    P = ca.period
    u = 2 * P * -(-ca.leg // (2 * P))
    h = u // 2
    if 2 * u + 2 * (ca.r_max + ca.code.range) + 2 > ca.canvas.lx:
        raise StructureError("canvas too small for the segment framework")
    named: list[tuple[str, np.ndarray, str]] = []
    named += [(f"c{i + 1}", c, "g") for i, c in enumerate(canon.c)]
    named += [(f"d{i + 1}", d, "g") for i, d in enumerate(canon.d)]
    named += [(f"e{i + 1}", e, "g") for i, e in enumerate(canon.e)]
    duals = named + [(f"e~{i + 1}", e, "s") for i, e in enumerate(canon.e_tilde)]

    def seg(kind, c, a, b):
        return ca.gauge_string(c, a, b) if kind == "g" else ca.stab_string(c, a, b)

    def expected(n1, c1, k1, n2, c2, k2) -> int:
        if k1 == "g" and k2 == "g":
            pair = {n1[1:], n2[1:]} if {n1[0], n2[0]} == {"c", "d"} else None
            return -1 if pair is not None and len(pair) == 1 else 1
        g_name, s_name = (n1, n2) if k1 == "g" else (n2, n1)
        return -1 if g_name[0] == "e" and g_name[1:] == s_name[2:] else 1

    checks: list[tuple[str, int, int]] = []
    prim = {}
    for name, c, kind in named:
        legs = {
            "h-": seg(kind, c, (-u, 0), (0, 0)),
            "h+": seg(kind, c, (0, 0), (u, 0)),
            "v-": seg(kind, c, (0, -u), (0, 0)),
            "v+": seg(kind, c, (0, 0), (0, u)),
            "top": seg(kind, c, (-u, u), (0, u)),
        }
        prim[name] = legs
        want = {"c1": ch.f1, "d1": ch.f1, "e1": ch.f2}.get(name, 1)
        keys = ["h-", "h+", "v-", "v+"]
        for i, j, k in itertools.combinations(keys, 3):
            got = comm(legs[i], legs[j]) * comm(legs[i], legs[k]) * comm(legs[j], legs[k])
            checks.append((f"spin {name} at shared vertex ({i},{j},{k})", want, got))
        checks.append((f"{name} h+ vs parallel {name}", 1, comm(legs["h+"], legs["top"])))
    for name, c, kind in duals:
        dv = seg(kind, c, (h, -h), (h, h))
        dh = seg(kind, c, (-h, h), (h, h))
        for pname, pc, pkind in named:
            legs = prim[pname]
            want = expected(pname, pc, pkind, name, c, kind)
            checks.append((f"{pname} h+ crosses dual {name}", want, comm(legs["h+"], dv)))
            checks.append((f"{pname} v+ crosses dual {name}", want, comm(legs["v+"], dh)))
            checks.append((f"{pname} h- apart from dual {name}", 1, comm(legs["h-"], dv)))
            checks.append((f"{pname} v- apart from dual {name}", 1, comm(legs["v-"], dh)))
    return FrameworkReport(u, checks)
