"""Bit-packed linear algebra over GF(2).

Rows are stored as arrays of 64-bit words; bit ``j`` of word ``w`` holds
column ``64 * w + j``.  Elimination always pivots on the leftmost available
column and the topmost available row, so bases come out in a reproducible
reduced row-echelon form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WORD = 64
_ONE = np.uint64(1)


class DimensionError(ValueError):
    """Operand shapes do not agree."""


def _n_words(n: int) -> int:
    return (n + WORD - 1) // WORD


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 array of shape (..., n) into uint64 words of shape (..., ceil(n/64))."""
    bits = np.asarray(bits, dtype=np.uint8) & 1
    n = bits.shape[-1]
    nw = _n_words(n)
    padded = np.zeros(bits.shape[:-1] + (nw * WORD,), dtype=np.uint8)
    padded[..., :n] = bits
    by = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(by).view(np.uint64).reshape(bits.shape[:-1] + (nw,))


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    by = words.view(np.uint8).reshape(words.shape[:-1] + (words.shape[-1] * 8,))
    return np.unpackbits(by, axis=-1, count=n, bitorder="little")


class BitVector:
    """Fixed-length vector over GF(2); ``^`` is vector addition."""

    __slots__ = ("words", "n")

    def __init__(self, words: np.ndarray, n: int):
        self.words = words
        self.n = n

    @classmethod
    def zeros(cls, n: int) -> BitVector:
        return cls(np.zeros(_n_words(n), dtype=np.uint64), n)

    @classmethod
    def from_bits(cls, bits) -> BitVector:
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        return cls(pack_bits(bits), bits.size)

    @classmethod
    def from_support(cls, n: int, support) -> BitVector:
        bits = np.zeros(n, dtype=np.uint8)
        bits[list(support)] = 1
        return cls.from_bits(bits)

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.n)

    def support(self) -> list[int]:
        return np.flatnonzero(self.bits()).tolist()

    def weight(self) -> int:
        return int(sum(bin(int(w)).count("1") for w in self.words))

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if not -self.n <= i < self.n:
            raise IndexError(i)
        i %= self.n
        return int((self.words[i // WORD] >> np.uint64(i % WORD)) & _ONE)

    def __xor__(self, other: BitVector) -> BitVector:
        if self.n != other.n:
            raise DimensionError(f"length {self.n} != {other.n}")
        return BitVector(self.words ^ other.words, self.n)

    __add__ = __xor__

    def dot(self, other: BitVector) -> int:
        if self.n != other.n:
            raise DimensionError(f"length {self.n} != {other.n}")
        return sum(bin(int(w)).count("1") for w in self.words & other.words) & 1

    def any(self) -> bool:
        return bool(self.words.any())

    def __eq__(self, other) -> bool:
        return isinstance(other, BitVector) and self.n == other.n and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def __repr__(self) -> str:
        return "BitVector('" + "".join(map(str, self.bits())) + "')"


class BitMatrix:
    """Dense GF(2) matrix with packed rows."""

    __slots__ = ("words", "n_rows", "n_cols")

    def __init__(self, words: np.ndarray, n_cols: int):
        words = np.asarray(words, dtype=np.uint64)
        if words.ndim != 2:
            words = words.reshape(-1, _n_words(n_cols))
        self.words = words
        self.n_rows = words.shape[0]
        self.n_cols = n_cols

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> BitMatrix:
        return cls(np.zeros((n_rows, _n_words(n_cols)), dtype=np.uint64), n_cols)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_dense(cls, a) -> BitMatrix:
        a = np.asarray(a, dtype=np.uint8)
        if a.ndim != 2:
            raise DimensionError("expected a 2-d array")
        return cls(pack_bits(a), a.shape[1])

    @classmethod
    def from_rows(cls, rows: list[BitVector], n_cols: int | None = None) -> BitMatrix:
        if not rows:
            if n_cols is None:
                raise DimensionError("cannot infer width of an empty row list")
            return cls.zeros(0, n_cols)
        n = rows[0].n
        if any(r.n != n for r in rows):
            raise DimensionError("rows of unequal length")
        return cls(np.stack([r.words for r in rows]), n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.words, self.n_cols).reshape(self.n_rows, self.n_cols)

    def row(self, i: int) -> BitVector:
        return BitVector(self.words[i].copy(), self.n_cols)

    def rows(self) -> list[BitVector]:
        return [self.row(i) for i in range(self.n_rows)]

    def copy(self) -> BitMatrix:
        return BitMatrix(self.words.copy(), self.n_cols)

    @property
    def T(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense().T)

    def vstack(self, other: BitMatrix) -> BitMatrix:
        if self.n_cols != other.n_cols:
            raise DimensionError(f"width {self.n_cols} != {other.n_cols}")
        return BitMatrix(np.vstack([self.words, other.words]), self.n_cols)

    def __matmul__(self, v):
        """Matrix-vector product; ``v`` may be a BitVector or a 0/1 array."""
        if isinstance(v, BitVector):
            if v.n != self.n_cols:
                raise DimensionError(f"width {self.n_cols} != {v.n}")
            prod = self.words & v.words[None, :]
            bits = np.array([_parity_words(r) for r in prod], dtype=np.uint8)
            return BitVector.from_bits(bits)
        if isinstance(v, BitMatrix):
            if v.n_rows != self.n_cols:
                raise DimensionError(f"{self.shape} @ {v.shape}")
            return BitMatrix.from_dense(gf2_matmul(self.to_dense(), v.to_dense()))
        v = np.asarray(v, dtype=np.uint8)
        if v.shape[0] != self.n_cols:
            raise DimensionError(f"width {self.n_cols} != {v.shape[0]}")
        return gf2_matmul(self.to_dense(), v)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.shape == other.shape
            and bool(np.array_equal(self.words, other.words))
        )

    def __repr__(self) -> str:
        return f"BitMatrix({self.n_rows}x{self.n_cols})"


def _parity_words(ws: np.ndarray) -> int:
    return sum(bin(int(w)).count("1") for w in ws) & 1


def gf2_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of dense 0/1 arrays mod 2, via float BLAS (exact below 2**24 terms)."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape[-1] == 0:
        out_shape = a.shape[:-1] + b.shape[1:]
        return np.zeros(out_shape, dtype=np.uint8)
    dtype = np.float32 if a.shape[-1] < (1 << 24) else np.float64
    prod = a.astype(dtype) @ b.astype(dtype)
    return (prod.astype(np.int64) & 1).astype(np.uint8)


@dataclass
class Echelon:
    """Reduced row-echelon form of a packed matrix.

    ``words`` holds the reduced rows (nonzero rows first, then zero rows),
    ``pivots`` the pivot column of each nonzero row, and ``transform`` (when
    requested) the row operations applied, so that
    ``transform @ original == reduced``.
    """

    words: np.ndarray
    n_cols: int
    pivots: list[int]
    transform: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return len(self.pivots)


def echelon(m: BitMatrix, track: bool = False, stop_col: int | None = None) -> Echelon:
    """Gauss-Jordan elimination, leftmost pivot first.

    With ``track`` the row operations are recorded in an identity block
    appended to the right, which yields left-kernel vectors for free.
    ``stop_col`` limits pivot search to columns ``< stop_col``.
    """
    n_rows, n_cols = m.shape
    if track:
        full = pack_bits(np.hstack([m.to_dense(), np.eye(n_rows, dtype=np.uint8)]))
    else:
        full = m.words.copy()
    limit = n_cols if stop_col is None else min(stop_col, n_cols)
    pivots = _eliminate(full, limit)
    if track:
        dense = unpack_bits(full, n_cols + n_rows)
        reduced = pack_bits(dense[:, :n_cols])
        return Echelon(reduced, n_cols, pivots, dense[:, n_cols:].copy())
    return Echelon(full, n_cols, pivots)


_SMALL_ROWS = 160


def _eliminate(w: np.ndarray, n_cols: int) -> list[int]:
    """In-place Gauss-Jordan on packed rows over the first ``n_cols`` columns."""
    n_rows = w.shape[0]
    if n_rows <= _SMALL_ROWS:
        return _eliminate_small(w, n_cols)
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        wi = c >> 6
        sh = np.uint64(c & 63)
        col = (w[r:, wi] >> sh) & _ONE
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            w[[r, p]] = w[[p, r]]
        hit = np.flatnonzero((w[:, wi] >> sh) & _ONE)
        hit = hit[hit != r]
        if hit.size:
            w[hit] ^= w[r]
        pivots.append(c)
        r += 1
    return pivots


def _eliminate_small(w: np.ndarray, n_cols: int) -> list[int]:
    # Few rows: Python integers beat per-pivot numpy dispatch.
    nw = w.shape[1]
    rows = [int.from_bytes(r.tobytes(), "little") for r in w]
    n_rows = len(rows)
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        bit = 1 << c
        p = next((i for i in range(r, n_rows) if rows[i] & bit), -1)
        if p < 0:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pr = rows[r]
        for i in range(n_rows):
            if i != r and rows[i] & bit:
                rows[i] ^= pr
        pivots.append(c)
        r += 1
    nbytes = nw * 8
    w[:] = np.frombuffer(b"".join(x.to_bytes(nbytes, "little") for x in rows), dtype=np.uint64).reshape(n_rows, nw)
    return pivots


def rank(m: BitMatrix) -> int:
    """GF(2) row rank."""
    if m.n_rows == 0 or m.n_cols == 0:
        return 0
    return echelon(m).rank


def row_reduce(m: BitMatrix) -> BitMatrix:
    """Independent rows spanning the row space of ``m`` (in RREF)."""
    e = echelon(m)
    return BitMatrix(e.words[: e.rank].copy(), m.n_cols)


def kernel_basis(m: BitMatrix) -> BitMatrix:
    """Basis of ``{v : m @ v == 0}``, one basis vector per row."""
    n = m.n_cols
    if m.n_rows == 0:
        return BitMatrix.identity(n)
    e = echelon(m)
    return _kernel_from_echelon(e)


def _kernel_from_echelon(e: Echelon) -> BitMatrix:
    n = e.n_cols
    pivots = e.pivots
    free = sorted(set(range(n)) - set(pivots))
    if not free:
        return BitMatrix.zeros(0, n)
    reduced = unpack_bits(e.words[: e.rank], n) if e.rank else np.zeros((0, n), np.uint8)
    basis = np.zeros((len(free), n), dtype=np.uint8)
    free_idx = np.array(free)
    basis[np.arange(len(free)), free_idx] = 1
    if e.rank:
        # x[pivot_i] = sum over free f of reduced[i, f] * x[f]
        basis[:, pivots] = reduced[:, free_idx].T
    return BitMatrix.from_dense(basis)


def left_kernel_basis(m: BitMatrix) -> BitMatrix:
    """Basis of ``{u : u @ m == 0}``: which row subsets sum to zero."""
    if m.n_rows == 0:
        return BitMatrix.zeros(0, 0)
    e = echelon(m, track=True)
    null_rows = e.transform[e.rank :]
    if null_rows.shape[0] == 0:
        return BitMatrix.zeros(0, m.n_rows)
    return row_reduce(BitMatrix.from_dense(null_rows))


class Solver:
    """Factor ``m`` once, then solve ``m @ x == b`` for many right-hand sides."""

    def __init__(self, m: BitMatrix):
        self.shape = m.shape
        if m.n_rows == 0:
            self.rank = 0
            self.pivots: list[int] = []
            self._t = np.zeros((0, 0), dtype=np.uint8)
            self._kern = BitMatrix.identity(m.n_cols)
            return
        e = echelon(m, track=True)
        self.rank = e.rank
        self.pivots = e.pivots
        self._t = e.transform
        self._kern = _kernel_from_echelon(e)

    @property
    def kernel(self) -> BitMatrix:
        return self._kern

    def solve_bits(self, b: np.ndarray) -> np.ndarray | None:
        """Particular solution as a 0/1 array, or None if inconsistent."""
        b = np.asarray(b, dtype=np.uint8) & 1
        if b.shape[-1] != self.shape[0]:
            raise DimensionError(f"rhs length {b.shape[-1]} != {self.shape[0]} rows")
        x = np.zeros(self.shape[1], dtype=np.uint8)
        if self.shape[0] == 0:
            return x
        tb = gf2_matmul(self._t, b)
        if tb[self.rank :].any():
            return None
        x[self.pivots] = tb[: self.rank]
        return x

    def consistent(self, b: np.ndarray) -> np.ndarray:
        """Row-wise consistency flags for a stack of right-hand sides (shape (k, rows))."""
        b = np.atleast_2d(np.asarray(b, dtype=np.uint8))
        if self.shape[0] == 0:
            return np.ones(b.shape[0], dtype=bool)
        tb = gf2_matmul(b, self._t.T)
        return ~tb[:, self.rank :].any(axis=1)

    def solve_many(self, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve for a stack of right-hand sides; returns (solutions, consistent)."""
        b = np.atleast_2d(np.asarray(b, dtype=np.uint8))
        x = np.zeros((b.shape[0], self.shape[1]), dtype=np.uint8)
        if self.shape[0] == 0:
            return x, np.ones(b.shape[0], dtype=bool)
        tb = gf2_matmul(b, self._t.T)
        x[:, self.pivots] = tb[:, : self.rank]
        return x, ~tb[:, self.rank :].any(axis=1)

    def __call__(self, b) -> tuple[BitVector, BitMatrix] | None:
        bits = b.bits() if isinstance(b, BitVector) else b
        x = self.solve_bits(bits)
        if x is None:
            return None
        return BitVector.from_bits(x), self._kern


def solve(m: BitMatrix, b) -> tuple[BitVector, BitMatrix] | None:
    """Solve ``m @ x == b``.

    Returns ``(particular, kernel)`` with free variables set to zero in the
    particular solution, or ``None`` when the system is inconsistent.
    """
    return Solver(m)(b)


def solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Particular solution of ``a @ x == b`` for dense 0/1 arrays, or None."""
    a = np.asarray(a, dtype=np.uint8)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1], dtype=np.uint8)
    out = solve(BitMatrix.from_dense(a), b)
    if out is None:
        return None
    return out[0].bits()


def in_row_space(m: BitMatrix, v) -> bool:
    """Whether ``v`` lies in the row span of ``m``."""
    bits = v.bits() if isinstance(v, BitVector) else np.asarray(v, dtype=np.uint8)
    if not bits.any():
        return True
    if m.n_rows == 0:
        return False
    return rank(m.vstack(BitMatrix.from_dense(bits[None, :]))) == rank(m)


def same_row_space(a: BitMatrix, b: BitMatrix) -> bool:
    ra, rb = rank(a), rank(b)
    if ra != rb:
        return False
    if a.n_rows == 0 or b.n_rows == 0:
        return ra == rb == 0
    return rank(a.vstack(b)) == ra


@dataclass(frozen=True)
class SymplecticVector:
    """Pauli operator modulo phases: X-part and Z-part bit vectors."""

    x_part: BitVector
    z_part: BitVector

    def __post_init__(self):
        if self.x_part.n != self.z_part.n:
            raise DimensionError("x and z parts differ in length")

    @property
    def n(self) -> int:
        return self.x_part.n

    @classmethod
    def from_bits(cls, xz) -> SymplecticVector:
        xz = np.asarray(xz, dtype=np.uint8).reshape(-1)
        n = xz.size // 2
        return cls(BitVector.from_bits(xz[:n]), BitVector.from_bits(xz[n:]))

    def bits(self) -> np.ndarray:
        return np.concatenate([self.x_part.bits(), self.z_part.bits()])

    def __xor__(self, other: SymplecticVector) -> SymplecticVector:
        return SymplecticVector(self.x_part ^ other.x_part, self.z_part ^ other.z_part)

    __add__ = __xor__


def symplectic_product(u: SymplecticVector, v: SymplecticVector) -> int:
    """1 when the two Paulis anticommute, 0 when they commute."""
    if u.n != v.n:
        raise DimensionError(f"{u.n} qubits vs {v.n} qubits")
    return u.x_part.dot(v.z_part) ^ u.z_part.dot(v.x_part)


def symplectic_flip(a: np.ndarray) -> np.ndarray:
    """Swap the X and Z halves of the last axis."""
    n = a.shape[-1] // 2
    return np.concatenate([a[..., n:], a[..., :n]], axis=-1)


def commutation_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entry (i, j) is 1 iff row i of ``a`` anticommutes with row j of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.uint8))
    b = np.atleast_2d(np.asarray(b, dtype=np.uint8))
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"{a.shape[-1] // 2} qubits vs {b.shape[-1] // 2} qubits")
    return gf2_matmul(a, symplectic_flip(b).T)
