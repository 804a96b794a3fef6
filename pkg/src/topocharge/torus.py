"""Finite-torus assembly: homology cycles, adjusted groups and logical operators.

Closed strings are built piecewise: a loop of charge ``c`` around the torus
is the product of short strings between consecutive endpoint blocks, all
solved against the same endpoint morphisms, so their product has an empty
syndrome.  Loops of the kernel charges are added to the stabilizer group (or
their stabilizer duals to the gauge group) to make the pair a gauge code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charges import CanonicalGenerators, ChargeAnalysis, StringError, StringSolver, comm, line_sites
from .gf2 import commutation_matrix
from .groups import StructureError, _rank, count_logical_qubits, gauge_code_identity
from .lattice import CodeDefinition, TorusLattice, instantiate


def min_torus_size(code: CodeDefinition, period: int = 1) -> tuple[int, int]:
    """Smallest side that is a multiple of ``period`` and at least max(4, 2m)."""
    lo = max(4, 2 * code.range)
    side = period * -(-lo // period)
    return side, side


@dataclass
class HomologyCycles:
    """Loops per canonical charge.

    ``z1[q]``/``z2[q]`` wind horizontally/vertically and carry c_q (then e_q);
    ``z1_star[q]`` winds vertically and ``z2_star[q]`` horizontally, carrying
    d_q (then ẽ_q, as stabilizer strings).
    """

    alpha: int
    beta: int
    z1: list[np.ndarray] = field(default_factory=list)
    z2: list[np.ndarray] = field(default_factory=list)
    z1_star: list[np.ndarray] = field(default_factory=list)
    z2_star: list[np.ndarray] = field(default_factory=list)


@dataclass
class AdjustedCode:
    stab: np.ndarray
    gauge: np.ndarray
    mode: str


@dataclass
class LogicalOperatorSet:
    x_bar: list[np.ndarray]
    z_bar: list[np.ndarray]

    @property
    def k(self) -> int:
        return len(self.x_bar)


def _segment_region(solver: StringSolver, flips, a, b, r: int, direction: str, L: int):
    """Band around the segment a-b that never closes around the torus."""
    path = line_sites(a, b)
    along = 0 if direction == "h" else 1
    fixed = set()
    for f in flips:
        fixed |= solver.instance_sites(f)
    for rp in range(r, -1, -1):
        region = set()
        for x, y in path:
            for u in range(-rp, rp + 1):
                for v in range(-r, r + 1):
                    region.add((x + u, y + v) if along == 0 else (x + v, y + u))
        coords = [p[along] for p in region | fixed]
        if max(coords) - min(coords) + 1 < L:
            return region
    raise StructureError(f"torus side {L} too small to hold a loop segment")


def _loop(solver: StringSolver, table, c, start: tuple[int, int], direction: str, L: int, P: int) -> np.ndarray:
    """Closed string of charge ``c`` winding once through ``start``."""
    x0, y0 = start
    vec = np.zeros(2 * solver.lat.n, dtype=np.uint8)
    for i in range(L // P):
        if direction == "h":
            a, b = (x0 + i * P, y0), (x0 + (i + 1) * P, y0)
        else:
            a, b = (x0, y0 + i * P), (x0, y0 + (i + 1) * P)
        flips = set(table.morphism(c, a)) ^ set(table.morphism(c, b))
        # the bare path first: keeps loops straight whenever the code allows it
        for r in range(0, solver.r_max + 1):
            piece = solver.solve_region(flips, _segment_region(solver, flips, a, b, r, direction, L))
            if piece is not None:
                break
        else:
            raise StringError(f"no loop segment from {a} to {b}")
        vec ^= piece
    return vec


def extract_cycles(ca: ChargeAnalysis, canon: CanonicalGenerators, lat: TorusLattice) -> HomologyCycles:
    P = ca.period
    if lat.lx != lat.ly or lat.lx % P:
        raise StructureError(f"torus {lat.lx}x{lat.ly} must be square with side a multiple of {P}")
    L = lat.lx
    q = ca.code.qubits_per_site
    gs = StringSolver(ca.code.gauge_generators, q, lat, ca.r_max)
    ss = StringSolver(ca.code.stabilizer_recipes, q, lat, ca.r_max)
    half = P * ((L // 2) // P)
    cyc = HomologyCycles(len(canon.c), len(canon.e))
    g, s = ca.gauge_table, ca.stab_table
    for c, d in zip(canon.c, canon.d):
        cyc.z1.append(_loop(gs, g, c, (0, 0), "h", L, P))
        cyc.z2.append(_loop(gs, g, c, (0, 0), "v", L, P))
        cyc.z1_star.append(_loop(gs, g, d, (half, 0), "v", L, P))
        cyc.z2_star.append(_loop(gs, g, d, (0, half), "h", L, P))
    for e, et in zip(canon.e, canon.e_tilde):
        cyc.z1.append(_loop(gs, g, e, (0, 0), "h", L, P))
        cyc.z2.append(_loop(gs, g, e, (0, 0), "v", L, P))
        cyc.z1_star.append(_loop(ss, s, et, (half, 0), "v", L, P))
        cyc.z2_star.append(_loop(ss, s, et, (0, half), "h", L, P))
    return cyc


def cycle_relations(cyc: HomologyCycles) -> list[str]:
    """Check the loop commutation table; returns violated entries."""
    bad = []
    nq = cyc.alpha + cyc.beta
    for i, zi in enumerate((cyc.z1, cyc.z2)):
        for j, zj in enumerate((cyc.z1_star, cyc.z2_star)):
            for q in range(nq):
                for q2 in range(nq):
                    want = -1 if (i == j and q == q2) else 1
                    if comm(zi[q], zj[q2]) != want:
                        bad.append(f"[z{i + 1},{q}, z*{j + 1},{q2}]")
    for za in (cyc.z1, cyc.z2):
        for zb in (cyc.z1, cyc.z2):
            for q in range(nq):
                for q2 in range(nq):
                    if comm(za[q], zb[q2]) != 1:
                        bad.append(f"[z,{q}, z,{q2}]")
    for za in (cyc.z1_star, cyc.z2_star):
        for zb in (cyc.z1_star, cyc.z2_star):
            for q in range(nq):
                for q2 in range(cyc.alpha):
                    if comm(za[q], zb[q2]) != 1:
                        bad.append(f"[z*,{q}, z*,{q2}]")
    return bad


def homology_adjust(
    stab: np.ndarray, gauge: np.ndarray, cyc: HomologyCycles, n: int, mode: str = "stab"
) -> AdjustedCode:
    """Add kernel-charge loops to S (mode "stab") or their duals to G (mode "gauge")."""
    a = cyc.alpha
    if mode == "stab":
        extra = cyc.z1[a:] + cyc.z2[a:]
        adj = AdjustedCode(np.vstack([stab, *extra]) if extra else stab, gauge, mode)
    elif mode == "gauge":
        extra = cyc.z1_star[a:] + cyc.z2_star[a:]
        adj = AdjustedCode(stab, np.vstack([gauge, *extra]) if extra else gauge, mode)
    else:
        raise ValueError(f"unknown adjustment mode {mode!r}")
    if not gauge_code_identity(adj.gauge, adj.stab, n):
        raise StructureError(f"center of the gauge group differs from the stabilizer group after {mode} adjustment")
    return adj


def extract_logicals(cyc: HomologyCycles) -> LogicalOperatorSet:
    a = cyc.alpha
    return LogicalOperatorSet(
        x_bar=cyc.z1[:a] + cyc.z2[:a],
        z_bar=cyc.z1_star[:a] + cyc.z2_star[:a],
    )


def logical_relations(logs: LogicalOperatorSet, gauge: np.ndarray) -> list[str]:
    bad = []
    k = logs.k
    for i in range(k):
        for j in range(k):
            if comm(logs.x_bar[i], logs.z_bar[j]) != (-1 if i == j else 1):
                bad.append(f"[X{i}, Z{j}]")
            if comm(logs.x_bar[i], logs.x_bar[j]) != 1:
                bad.append(f"[X{i}, X{j}]")
            if comm(logs.z_bar[i], logs.z_bar[j]) != 1:
                bad.append(f"[Z{i}, Z{j}]")
    if k and gauge.size:
        ops = np.array(logs.x_bar + logs.z_bar, dtype=np.uint8)
        if commutation_matrix(ops, gauge).any():
            bad.append("logical anticommutes with a gauge generator")
    return bad


@dataclass
class TorusCode:
    lattice: TorusLattice
    stab: np.ndarray
    gauge: np.ndarray
    cycles: HomologyCycles
    adjusted: AdjustedCode
    logicals: LogicalOperatorSet
    k_raw: int
    k: int
    stab_index: list[tuple[int, int, int]] = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.lattice.n


def build_torus_code(ca: ChargeAnalysis, canon: CanonicalGenerators, side: int, mode: str = "stab") -> TorusCode:
    """Instantiate on a side×side torus and assemble logicals; checks k = 2α."""
    code = ca.code
    lat = TorusLattice(side, side, code.qubits_per_site)
    inst = instantiate(code, lat)
    cyc = extract_cycles(ca, canon, lat)
    bad = cycle_relations(cyc)
    if bad:
        raise StructureError("loop commutation table violated: " + ", ".join(bad[:5]))
    adj = homology_adjust(inst.stab, inst.gauge, cyc, lat.n, mode)
    logs = extract_logicals(cyc)
    bad = logical_relations(logs, adj.gauge)
    if bad:
        raise StructureError("logical operator relations violated: " + ", ".join(bad[:5]))
    k_raw = count_logical_qubits(inst.stab, inst.gauge, lat.n)
    k = count_logical_qubits(adj.stab, adj.gauge, lat.n)
    if k != 2 * len(canon.c):
        raise StructureError(f"rank count gives k = {k} but the charges give 2α = {2 * len(canon.c)}")
    return TorusCode(lat, inst.stab, inst.gauge, cyc, adj, logs, k_raw, k, inst.stab_index)


def stabilizer_rank(rows: np.ndarray) -> int:
    return _rank(rows)
