"""Translation-invariant code recipes and their instantiation on tori.

A code is described per unit cell: each recipe is a Pauli written as letters
at site offsets relative to an anchor site, and the generated group contains
every translate of every recipe.  Qubits on an ``lx`` by ``ly`` torus are
numbered row-major as ``(x * ly + y) * q + qubit``; Pauli vectors are stored
as ``[x-bits | z-bits]`` of length ``2n``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .gf2 import BitMatrix, SymplecticVector

LETTER_BITS = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
BITS_LETTER = {v: k for k, v in LETTER_BITS.items()}


class CodeFormatError(ValueError):
    """Malformed code-definition text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TorusTooSmall(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PauliTerm:
    dx: int
    dy: int
    qubit: int
    letter: str

    def __str__(self) -> str:
        return f"{self.letter}({self.dx},{self.dy},{self.qubit})"


@dataclass(frozen=True)
class GeneratorRecipe:
    label: str
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise CodeFormatError(f"generator {self.label!r} has no terms")
        keys = [(t.dx, t.dy, t.qubit) for t in self.terms]
        if len(set(keys)) != len(keys):
            raise CodeFormatError(f"generator {self.label!r} repeats a qubit")

    @property
    def range(self) -> int:
        """Side of the smallest square block holding the support."""
        xs = [t.dx for t in self.terms]
        ys = [t.dy for t in self.terms]
        return max(max(xs) - min(xs), max(ys) - min(ys)) + 1

    @classmethod
    def from_bits(cls, label: str, bits: dict[tuple[int, int, int], tuple[int, int]]) -> GeneratorRecipe:
        """Build from a map (dx, dy, qubit) -> (x-bit, z-bit); identity entries dropped."""
        terms = tuple(
            PauliTerm(dx, dy, q, BITS_LETTER[b]) for (dx, dy, q), b in sorted(bits.items()) if b != (0, 0)
        )
        return cls(label, terms)

    def bit_map(self) -> dict[tuple[int, int, int], tuple[int, int]]:
        return {(t.dx, t.dy, t.qubit): LETTER_BITS[t.letter] for t in self.terms}

    def __str__(self) -> str:
        return f"{self.label}: " + " ".join(str(t) for t in self.terms)


@dataclass(frozen=True)
class CodeDefinition:
    name: str
    qubits_per_site: int
    stabilizer_recipes: tuple[GeneratorRecipe, ...]
    gauge_recipes: tuple[GeneratorRecipe, ...] | None = None

    def __post_init__(self):
        for r in self.all_recipes():
            for t in r.terms:
                if not 0 <= t.qubit < self.qubits_per_site:
                    raise CodeFormatError(
                        f"qubit {t.qubit} out of range in {r.label!r} (qubits per site: {self.qubits_per_site})"
                    )

    @property
    def is_subsystem(self) -> bool:
        return self.gauge_recipes is not None

    @property
    def gauge_generators(self) -> tuple[GeneratorRecipe, ...]:
        """Gauge recipes, or the stabilizer recipes for a subspace code."""
        return self.gauge_recipes if self.gauge_recipes is not None else self.stabilizer_recipes

    def all_recipes(self) -> tuple[GeneratorRecipe, ...]:
        return self.stabilizer_recipes + (self.gauge_recipes or ())

    @property
    def range(self) -> int:
        rs = [r.range for r in self.all_recipes()]
        return max(rs) if rs else 1

    def to_text(self) -> str:
        lines = [f"code {self.name}", f"qubits {self.qubits_per_site}"]
        lines += [f"stab {r}" for r in self.stabilizer_recipes]
        lines += [f"gauge {r}" for r in self.gauge_recipes or ()]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TorusLattice:
    lx: int
    ly: int
    qubits_per_site: int

    def __post_init__(self):
        if self.lx < 1 or self.ly < 1:
            raise TorusTooSmall(f"torus {self.lx}x{self.ly} is empty")

    @property
    def n(self) -> int:
        return self.lx * self.ly * self.qubits_per_site

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    def site_index(self, x, y):
        return (np.mod(x, self.lx) * self.ly + np.mod(y, self.ly))

    def index(self, x, y, qubit):
        return self.site_index(x, y) * self.qubits_per_site + qubit

    def sites(self) -> np.ndarray:
        """All sites in row-major order, shape (lx*ly, 2)."""
        xs, ys = np.meshgrid(np.arange(self.lx), np.arange(self.ly), indexing="ij")
        return np.stack([xs.ravel(), ys.ravel()], axis=1)

    def qubit_sites(self) -> np.ndarray:
        """Site coordinates of every qubit index, shape (n, 2)."""
        return np.repeat(self.sites(), self.qubits_per_site, axis=0)

    def translation_perm(self, dx: int, dy: int) -> np.ndarray:
        """perm[i] is the index that qubit i moves to under translation by (dx, dy)."""
        q = self.qubits_per_site
        s = self.sites()
        tgt = self.site_index(s[:, 0] + dx, s[:, 1] + dy)
        return (np.repeat(tgt, q) * q + np.tile(np.arange(q), len(s))).astype(np.int64)


def translate_rows(rows: np.ndarray, lat: TorusLattice, dx: int, dy: int) -> np.ndarray:
    """Translate symplectic row vectors by (dx, dy) on the torus."""
    rows = np.asarray(rows, dtype=np.uint8)
    n = lat.n
    perm = lat.translation_perm(dx, dy)
    out = np.zeros_like(rows)
    out[..., perm] = rows[..., :n]
    out[..., n + perm] = rows[..., n:]
    return out


@dataclass(frozen=True)
class LatticePauli:
    """A Pauli operator (mod phase) on a torus."""

    vec: SymplecticVector
    lattice: TorusLattice

    @classmethod
    def from_bits(cls, bits, lattice: TorusLattice) -> LatticePauli:
        return cls(SymplecticVector.from_bits(bits), lattice)

    def bits(self) -> np.ndarray:
        return self.vec.bits()

    def support_sites(self) -> set[tuple[int, int]]:
        b = self.bits()
        n = self.lattice.n
        on = np.flatnonzero(b[:n] | b[n:])
        xy = self.lattice.qubit_sites()[on]
        return {(int(a), int(c)) for a, c in xy}


def translate(p: LatticePauli, dx: int, dy: int) -> LatticePauli:
    return LatticePauli.from_bits(translate_rows(p.bits(), p.lattice, dx, dy), p.lattice)


def recipe_row(recipe: GeneratorRecipe, lat: TorusLattice, x: int = 0, y: int = 0) -> np.ndarray:
    """Symplectic vector of one recipe anchored at site (x, y)."""
    n = lat.n
    row = np.zeros(2 * n, dtype=np.uint8)
    for t in recipe.terms:
        i = lat.index(x + t.dx, y + t.dy, t.qubit)
        bx, bz = LETTER_BITS[t.letter]
        row[i] ^= bx
        row[n + i] ^= bz
    return row


def recipe_rows(recipes, lat: TorusLattice) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    """One row per (recipe, site), recipe-major, sites row-major.

    Returns the rows and an index list of (recipe, x, y).
    """
    recipes = list(recipes)
    sites = lat.sites()
    n = lat.n
    rows = np.zeros((len(recipes) * len(sites), 2 * n), dtype=np.uint8)
    index: list[tuple[int, int, int]] = []
    for r, rec in enumerate(recipes):
        block = rows[r * len(sites) : (r + 1) * len(sites)]
        for t in rec.terms:
            cols = lat.index(sites[:, 0] + t.dx, sites[:, 1] + t.dy, t.qubit)
            bx, bz = LETTER_BITS[t.letter]
            ar = np.arange(len(sites))
            if bx:
                block[ar, cols] ^= 1
            if bz:
                block[ar, n + cols] ^= 1
        index.extend((r, int(x), int(y)) for x, y in sites)
    return rows, index


@dataclass
class InstantiatedGroups:
    """Generator rows of a code on a specific torus."""

    code: CodeDefinition
    lattice: TorusLattice
    stab: np.ndarray
    gauge: np.ndarray
    stab_index: list[tuple[int, int, int]] = field(repr=False)
    gauge_index: list[tuple[int, int, int]] = field(repr=False)

    @property
    def n(self) -> int:
        return self.lattice.n

    def stab_matrix(self) -> BitMatrix:
        return BitMatrix.from_dense(self.stab.reshape(-1, 2 * self.n))

    def gauge_matrix(self) -> BitMatrix:
        return BitMatrix.from_dense(self.gauge.reshape(-1, 2 * self.n))


def check_torus(code: CodeDefinition, lx: int, ly: int) -> None:
    m = code.range
    if lx < 2 * m or ly < 2 * m:
        raise TorusTooSmall(f"torus {lx}x{ly} too small for generator range {m}; need at least {2 * m}x{2 * m}")


def instantiate(code: CodeDefinition, lat: TorusLattice) -> InstantiatedGroups:
    if lat.qubits_per_site != code.qubits_per_site:
        raise ValueError("lattice and code disagree on qubits per site")
    check_torus(code, lat.lx, lat.ly)
    stab, sidx = recipe_rows(code.stabilizer_recipes, lat)
    gauge, gidx = recipe_rows(code.gauge_generators, lat)
    return InstantiatedGroups(code, lat, stab, gauge, sidx, gidx)


# ---------------------------------------------------------------- transforms


def _block_split(v: int, l: int) -> tuple[int, int]:
    return v // l, v % l


def coarse_index(ox: int, oy: int, q: int, l: int, q0: int) -> int:
    """Qubit label inside a block for original in-block position (ox, oy)."""
    return (ox * l + oy) * q0 + q


def coarse_grain(code: CodeDefinition, l: int) -> CodeDefinition:
    if l < 1:
        raise ValueError("coarse-graining factor must be positive")
    if l == 1:
        return code
    q0 = code.qubits_per_site

    def grain(recipes):
        out = []
        for rec in recipes:
            for a in range(l):
                for b in range(l):
                    bits = {}
                    for t in rec.terms:
                        bx, ox = _block_split(a + t.dx, l)
                        by, oy = _block_split(b + t.dy, l)
                        bits[(bx, by, coarse_index(ox, oy, t.qubit, l, q0))] = LETTER_BITS[t.letter]
                    out.append(GeneratorRecipe.from_bits(f"{rec.label}@{a},{b}", bits))
        return tuple(out)

    return CodeDefinition(
        name=f"{code.name}/cg{l}",
        qubits_per_site=q0 * l * l,
        stabilizer_recipes=grain(code.stabilizer_recipes),
        gauge_recipes=None if code.gauge_recipes is None else grain(code.gauge_recipes),
    )


def coarse_grain_perm(fine: TorusLattice, l: int) -> np.ndarray:
    """perm[i] = coarse-lattice qubit index of fine-lattice qubit i."""
    if fine.lx % l or fine.ly % l:
        raise ValueError("torus dimensions must be divisible by the coarse-graining factor")
    q0 = fine.qubits_per_site
    coarse = TorusLattice(fine.lx // l, fine.ly // l, q0 * l * l)
    perm = np.empty(fine.n, dtype=np.int64)
    for x in range(fine.lx):
        for y in range(fine.ly):
            for q in range(q0):
                i = fine.index(x, y, q)
                perm[i] = coarse.index(x // l, y // l, coarse_index(x % l, y % l, q, l, q0))
    return perm


def permute_rows(rows: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Relabel qubits of symplectic rows: qubit i goes to perm[i]."""
    n = perm.size
    out = np.zeros_like(rows)
    out[..., perm] = rows[..., :n]
    out[..., n + perm] = rows[..., n:]
    return out


def compose(a: CodeDefinition, b: CodeDefinition) -> CodeDefinition:
    """Side-by-side union: b's qubits are relabelled after a's."""
    qa = a.qubits_per_site

    def shift(rec: GeneratorRecipe, taken: set[str]) -> GeneratorRecipe:
        label = rec.label
        while label in taken:
            label += "'"
        terms = tuple(PauliTerm(t.dx, t.dy, t.qubit + qa, t.letter) for t in rec.terms)
        return GeneratorRecipe(label, terms)

    taken_s = {r.label for r in a.stabilizer_recipes}
    stab = a.stabilizer_recipes + tuple(shift(r, taken_s) for r in b.stabilizer_recipes)
    if a.is_subsystem or b.is_subsystem:
        taken_g = {r.label for r in a.gauge_generators}
        gauge = a.gauge_generators + tuple(shift(r, taken_g) for r in b.gauge_generators)
    else:
        gauge = None
    return CodeDefinition(f"{a.name}+{b.name}", qa + b.qubits_per_site, stab, gauge)


def normalize(code: CodeDefinition) -> tuple[CodeDefinition, int]:
    """Coarse-grain until every generator has range at most 2.

    Blocking by ``l`` maps a range-``k`` generator onto at most
    ``ceil((k - 1) / l) + 1`` blocks per axis, so ``l = k - 1`` suffices.
    """
    l = max(1, code.range - 1)
    return coarse_grain(code, l), l


def empty_code() -> CodeDefinition:
    return CodeDefinition("empty", 0, ())


# ------------------------------------------------------------------ parsing

_TERM = re.compile(r"^([XYZ])\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(\d+)\s*\)$")
_GEN = re.compile(r"^(stab|gauge)\s+([^\s:]+)\s*:(.*)$")


def parse_code_file(text: str) -> CodeDefinition:
    name = None
    q = None
    stab: list[GeneratorRecipe] = []
    gauge: list[GeneratorRecipe] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        if name is None:
            if head != "code" or len(line.split()) != 2:
                raise CodeFormatError("expected 'code <name>' first", lineno)
            name = line.split()[1]
            continue
        if head == "qubits":
            parts = line.split()
            if q is not None or len(parts) != 2 or not parts[1].isdigit():
                raise CodeFormatError("expected a single 'qubits <count>'", lineno)
            q = int(parts[1])
            continue
        m = _GEN.match(line)
        if not m:
            raise CodeFormatError(f"unrecognized line {line!r}", lineno)
        if q is None:
            raise CodeFormatError("'qubits' must precede generators", lineno)
        kind, label, body = m.groups()
        terms = []
        seen = set()
        for tok in body.split():
            tm = _TERM.match(tok)
            if not tm:
                raise CodeFormatError(f"bad term {tok!r}", lineno)
            letter, dx, dy, qu = tm.groups()
            t = PauliTerm(int(dx), int(dy), int(qu), letter)
            if not 0 <= t.qubit < q:
                raise CodeFormatError(f"qubit {t.qubit} out of range 0..{q - 1}", lineno)
            key = (t.dx, t.dy, t.qubit)
            if key in seen:
                raise CodeFormatError(f"duplicate term at {key}", lineno)
            seen.add(key)
            terms.append(t)
        if not terms:
            raise CodeFormatError(f"generator {label!r} has no terms", lineno)
        (stab if kind == "stab" else gauge).append(GeneratorRecipe(label, tuple(terms)))
    if name is None:
        raise CodeFormatError("missing 'code <name>' line")
    if q is None:
        raise CodeFormatError("missing 'qubits <count>' line")
    return CodeDefinition(name, q, tuple(stab), tuple(gauge) if gauge else None)


def load_code(path: str | Path) -> CodeDefinition:
    return parse_code_file(Path(path).read_text(encoding="utf-8"))


FIXTURES = (
    "empty",
    "trivial",
    "subsystem_trivial",
    "toric",
    "subsystem_toric",
    "honeycomb",
    "color",
)
EXTRA_FIXTURES = ("zz_links",)


def fixture_text(name: str) -> str:
    if name not in FIXTURES + EXTRA_FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    return resources.files("topocharge.fixtures").joinpath(f"{name}.code").read_text(encoding="utf-8")


def fixture(name: str) -> CodeDefinition:
    return parse_code_file(fixture_text(name))


def resolve_code(spec: str) -> CodeDefinition:
    """A fixture name, a path to a code file, or ``a+b`` for their composition."""
    if spec in FIXTURES + EXTRA_FIXTURES:
        return fixture(spec)
    if "+" in spec and not Path(spec).exists():
        parts = [resolve_code(p) for p in spec.split("+")]
        out = parts[0]
        for p in parts[1:]:
            out = compose(out, p)
        return out
    return load_code(spec)
