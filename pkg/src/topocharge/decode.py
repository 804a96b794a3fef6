"""Code-capacity decoding: noise sampling, syndromes, greedy matching, Monte Carlo.

Defects are flipped stabilizer generators.  Each defect carries the charge
of its generator; defects of equal charge are paired greedily by torus
distance and joined by a string solved on the stabilizer generators.
Whatever the pairing cannot explain is handed to a global GF(2) solve.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .charges import ChargeAnalysis, StringSolver, line_sites
from .gf2 import BitMatrix, Solver, commutation_matrix, gf2_matmul, symplectic_flip
from .lattice import TorusLattice
from .torus import TorusCode

RNG_ALGORITHM = "numpy PCG64, SeedSequence([seed, size, trial])"


class InvalidSyndrome(ValueError):
    pass


class DecodingError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "xz"
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in ("xz", "depolarizing"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p = {self.p} outside [0, 1]")


def trial_rng(seed: int, size: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, size, trial])))


def sample_error(noise: NoiseModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Symplectic error vector of length 2n."""
    if noise.kind == "xz":
        return (rng.random(2 * n) < noise.p).astype(np.uint8)
    u = rng.random(n)
    third = noise.p / 3
    x = (u < 2 * third).astype(np.uint8)  # X or Y
    z = ((u >= third) & (u < noise.p)).astype(np.uint8)  # Y or Z
    return np.concatenate([x, z])


def extract_syndrome(errors: np.ndarray, stab: np.ndarray) -> np.ndarray:
    """Syndrome bits, one per stabilizer row; works on a single error or a batch."""
    return commutation_matrix(np.atleast_2d(errors), stab)


@dataclass
class SyndromeSample:
    defects: dict[tuple[int, ...], list[tuple[int, int, int]]]

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.defects.values())


def bucket_defects(bits: np.ndarray, stab_index, ca: ChargeAnalysis) -> SyndromeSample:
    out: dict[tuple[int, ...], list[tuple[int, int, int]]] = {}
    for i in np.flatnonzero(bits):
        inst = stab_index[i]
        key = tuple(int(v) for v in ca.stab_table.charge_of([inst]))
        out.setdefault(key, []).append(inst)
    return SyndromeSample(out)


def torus_delta(a: int, b: int, L: int) -> int:
    """Signed shortest displacement from a to b on a ring of length L."""
    d = (b - a) % L
    return d - L if d > L // 2 else d


def greedy_pairs(points: list[tuple[int, int, int]], L: int) -> tuple[list[tuple[int, int]], list[int]]:
    """Greedy pairing by L1 torus distance; ties broken lexicographically by site."""
    cand = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            (_, x1, y1), (_, x2, y2) = points[i], points[j]
            dist = abs(torus_delta(x1, x2, L)) + abs(torus_delta(y1, y2, L))
            key_i, key_j = (x1, y1, points[i][0]), (x2, y2, points[j][0])
            cand.append((dist, min(key_i, key_j), max(key_i, key_j), i, j))
    cand.sort()
    used = [False] * len(points)
    pairs = []
    for _, _, _, i, j in cand:
        if not used[i] and not used[j]:
            used[i] = used[j] = True
            pairs.append((i, j))
    return pairs, [i for i, u in enumerate(used) if not u]


class MatchingDecoder:
    """Per-charge greedy matching with cached connecting strings."""

    def __init__(self, ca: ChargeAnalysis, tc: TorusCode):
        self.ca = ca
        self.tc = tc
        self.lat = tc.lattice
        self.L = self.lat.lx
        self.q = self.lat.qubits_per_site
        self.n = self.lat.n
        # strings are solved on an unwrapped canvas and folded onto the torus,
        # so a connecting string can never pick up a winding loop
        side = self.L + 2 * (ca.r_max + ca.code.range) + 6
        self.canvas = TorusLattice(side, side, self.q)
        self.solver = StringSolver(ca.code.stabilizer_recipes, self.q, self.canvas, ca.r_max)
        self.stab = tc.stab
        self._stab_flip = symplectic_flip(self.stab)
        self._cache: dict = {}
        self._global: Solver | None = None
        self._logicals = (
            np.array(tc.logicals.x_bar + tc.logicals.z_bar, dtype=np.uint8)
            if tc.logicals.k
            else np.zeros((0, 2 * self.n), np.uint8)
        )

    def _pair_string(self, a: tuple[int, int, int], b: tuple[int, int, int]) -> np.ndarray:
        P = self.ca.period
        ra, xa, ya = a
        rb, xb, yb = b
        dx, dy = torus_delta(xa, xb, self.L), torus_delta(ya, yb, self.L)
        ox, oy = xa % P, ya % P
        key = (ra, rb, ox, oy, dx, dy)
        if key not in self._cache:
            s = (ox, oy)
            e = (ox + dx, oy + dy)
            flips = {(ra, *s), (rb, *e)}
            vec, _ = self.solver.string(flips, line_sites(s, e))
            W, nc = self.canvas.lx, self.canvas.n
            idx = np.flatnonzero(vec[:nc] | vec[nc:])
            sites = idx // self.q
            cx, cy = sites // W, sites % W
            cx = np.where(cx > W // 2, cx - W, cx)
            cy = np.where(cy > W // 2, cy - W, cy)
            self._cache[key] = (cx, cy, idx % self.q, vec[idx], vec[nc + idx])
        xs, ys, ks, bx, bz = self._cache[key]
        sx, sy = xa - ox, ya - oy
        out = np.zeros(2 * self.n, dtype=np.uint8)
        i = self.lat.index(xs + sx, ys + sy, ks)
        np.bitwise_xor.at(out, i, bx)
        np.bitwise_xor.at(out, self.n + i, bz)
        return out

    def _global_fix(self, bits: np.ndarray) -> np.ndarray:
        if self._global is None:
            self._global = Solver(BitMatrix.from_dense(self._stab_flip))
        x = self._global.solve_bits(bits)
        if x is None:
            raise InvalidSyndrome("syndrome is not produced by any Pauli")
        return x

    def decode(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        corr = np.zeros(2 * self.n, dtype=np.uint8)
        if not bits.any():
            return corr
        sample = bucket_defects(bits, self.tc.stab_index, self.ca)
        for key in sorted(sample.defects):
            pts = sorted(sample.defects[key], key=lambda t: (t[1], t[2], t[0]))
            pairs, _ = greedy_pairs(pts, self.L)
            for i, j in pairs:
                corr ^= self._pair_string(pts[i], pts[j])
        rest = bits ^ extract_syndrome(corr, self.stab)[0]
        if rest.any():
            corr ^= self._global_fix(rest)
        return corr

    def failures(self, residual: np.ndarray) -> np.ndarray:
        """Per-logical-qubit flags: residual anticommutes with X̄_i or Z̄_i."""
        k = self.tc.logicals.k
        if k == 0:
            return np.zeros(0, dtype=bool)
        m = commutation_matrix(np.atleast_2d(residual), self._logicals)[0]
        return (m[:k] | m[k:]).astype(bool)


def logical_failure(error: np.ndarray, correction: np.ndarray, decoder: MatchingDecoder) -> np.ndarray:
    residual = error ^ correction
    if extract_syndrome(residual, decoder.stab).any():
        raise DecodingError("correction does not cancel the syndrome")
    return decoder.failures(residual)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


@dataclass
class TrialStats:
    size: int
    p: float
    noise: str
    trials: int
    seed: int
    failures_per_logical: list[int]
    any_failures: int
    failed_trials: list[int] = field(repr=False)
    wall_time: float = 0.0

    @property
    def failures(self) -> int:
        return max(self.failures_per_logical, default=0)

    @property
    def rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)

    def row(self) -> dict:
        lo, hi = self.interval
        return {
            "size": self.size,
            "p": self.p,
            "noise": self.noise,
            "trials": self.trials,
            "failures": self.failures,
            "rate": self.rate,
            "ci_low": lo,
            "ci_high": hi,
            "failures_per_logical": list(self.failures_per_logical),
            "any_failures": self.any_failures,
            "any_rate": self.any_failures / self.trials if self.trials else 0.0,
            "seed": self.seed,
        }


def run_trials(decoder: MatchingDecoder, noise: NoiseModel, trials: int, seed: int, batch: int = 512) -> TrialStats:
    """Monte Carlo at one size.  Every trial asserts that its correction cancels the syndrome."""
    t0 = time.perf_counter()
    L, n = decoder.L, decoder.n
    k = decoder.tc.logicals.k
    per = np.zeros(k, dtype=np.int64)
    any_fail = 0
    failed = []
    for start in range(0, trials, batch):
        ids = range(start, min(trials, start + batch))
        errs = np.array([sample_error(noise, n, trial_rng(seed, L, t)) for t in ids], dtype=np.uint8)
        errs = errs.reshape(len(ids), 2 * n)
        synd = extract_syndrome(errs, decoder.stab)
        corrs = np.array([decoder.decode(s) for s in synd], dtype=np.uint8).reshape(len(ids), 2 * n)
        resid = errs ^ corrs
        if extract_syndrome(resid, decoder.stab).any():
            raise DecodingError("a correction failed to cancel its syndrome")
        if k:
            m = gf2_matmul(symplectic_flip(resid), decoder._logicals.T)
            flags = (m[:, :k] | m[:, k:]).astype(bool)
            per += flags.sum(axis=0)
            hit = flags.any(axis=1)
            any_fail += int(hit.sum())
            failed.extend(t for t, h in zip(ids, hit) if h)
    return TrialStats(
        L, noise.p, noise.kind, trials, seed, per.tolist(), any_fail, failed, time.perf_counter() - t0
    )


def monte_carlo(ca: ChargeAnalysis, torus_codes: dict[int, TorusCode], noise: NoiseModel, trials: int, seed: int):
    return [run_trials(MatchingDecoder(ca, torus_codes[L]), noise, trials, seed) for L in sorted(torus_codes)]
