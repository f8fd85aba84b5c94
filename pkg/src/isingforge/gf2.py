"""Bit-packed dense linear algebra over GF(2).

Vectors and matrices store 64 bits per machine word, LSB-first within
each word, row-major.  Serialization uses the same order: bit j lives
at (byte[j // 8] >> (j % 8)) & 1.
"""

from __future__ import annotations

import numpy as np

WORD = 64


def _nwords(nbits: int) -> int:
    return (nbits + WORD - 1) // WORD


def _tail_mask(nbits: int) -> np.uint64:
    """Mask keeping the valid bits of the last word."""
    r = nbits % WORD
    if r == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << r) - 1)


class BitVector:
    """Packed bit string of fixed length.

    Invariant: bits at positions >= n are zero in the backing words.
    """

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray | None = None):
        if n <= 0:
            raise ValueError("BitVector length must be positive")
        self.n = n
        if words is None:
            self.words = np.zeros(_nwords(n), dtype=np.uint64)
        else:
            if words.shape != (_nwords(n),) or words.dtype != np.uint64:
                raise ValueError("backing words have wrong shape or dtype")
            self.words = words
            self._clip()

    def _clip(self):
        self.words[-1] &= _tail_mask(self.n)

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n)

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        arr = np.asarray(bits, dtype=np.uint8) & 1
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("need a nonempty 1-d bit sequence")
        return cls(arr.size, _pack_bits(arr))

    @classmethod
    def from_indices(cls, n: int, idx) -> "BitVector":
        v = cls(n)
        for j in idx:
            v.set(int(j), 1)
        return v

    def to_bits(self) -> np.ndarray:
        return _unpack_bits(self.words, self.n)

    def get(self, j: int) -> int:
        if not 0 <= j < self.n:
            raise IndexError(j)
        return int((self.words[j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def set(self, j: int, bit: int):
        if not 0 <= j < self.n:
            raise IndexError(j)
        m = np.uint64(1) << np.uint64(j & 63)
        if bit & 1:
            self.words[j >> 6] |= m
        else:
            self.words[j >> 6] &= ~m

    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def support(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.to_bits())]

    def copy(self) -> "BitVector":
        return BitVector(self.n, self.words.copy())

    def is_zero(self) -> bool:
        return not self.words.any()

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError("length mismatch")
        return BitVector(self.n, self.words ^ other.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.n == other.n
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __len__(self) -> int:
        return self.n

    def __repr__(self):
        return f"BitVector({self.n}, weight={self.weight()})"

    def to_hex(self) -> str:
        nbytes = (self.n + 7) // 8
        return self.words.astype("<u8").tobytes()[:nbytes].hex()

    @classmethod
    def from_hex(cls, s: str, n: int) -> "BitVector":
        raw = bytes.fromhex(s)
        if len(raw) != (n + 7) // 8:
            raise ValueError("hex length inconsistent with bit count")
        raw = raw.ljust(_nwords(n) * 8, b"\x00")
        words = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
        return cls(n, words)


class BitMatrix:
    """Row-major packed binary matrix."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows <= 0 or cols <= 0:
            raise ValueError("BitMatrix dimensions must be positive")
        self.rows = rows
        self.cols = cols
        nw = _nwords(cols)
        if words is None:
            self.words = np.zeros((rows, nw), dtype=np.uint64)
        else:
            if words.shape != (rows, nw) or words.dtype != np.uint64:
                raise ValueError("backing words have wrong shape or dtype")
            self.words = words
            self.words[:, -1] &= _tail_mask(cols)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, k: int) -> "BitMatrix":
        M = cls(k, k)
        for i in range(k):
            M.words[i, i >> 6] = np.uint64(1) << np.uint64(i & 63)
        return M

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        a = np.asarray(arr, dtype=np.uint8) & 1
        if a.ndim != 2 or a.size == 0:
            raise ValueError("need a nonempty 2-d bit array")
        rows, cols = a.shape
        nw = _nwords(cols)
        packed = np.zeros((rows, nw), dtype=np.uint64)
        for i in range(rows):
            packed[i] = _pack_bits(a[i])
        return cls(rows, cols, packed)

    @classmethod
    def from_rows(cls, rows: list[BitVector]) -> "BitMatrix":
        if not rows:
            raise ValueError("need at least one row")
        n = rows[0].n
        M = cls(len(rows), n)
        for i, r in enumerate(rows):
            if r.n != n:
                raise ValueError("ragged rows")
            M.words[i] = r.words
        return M

    def to_array(self) -> np.ndarray:
        byts = self.words.astype("<u8").view(np.uint8).reshape(self.rows, -1)
        bits = np.unpackbits(byts, axis=1, bitorder="little")
        return bits[:, : self.cols]

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.words[i].copy())

    def get(self, i: int, j: int) -> int:
        return int((self.words[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def set(self, i: int, j: int, bit: int):
        m = np.uint64(1) << np.uint64(j & 63)
        if bit & 1:
            self.words[i, j >> 6] |= m
        else:
            self.words[i, j >> 6] &= ~m

    def column_bits(self, j: int) -> np.ndarray:
        """All rows' bits of column j as a uint64 0/1 array."""
        return (self.words[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array().T)

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if other.rows != self.rows:
            raise ValueError("row count mismatch")
        return BitMatrix.from_array(
            np.hstack([self.to_array(), other.to_array()])
        )

    def submatrix_cols(self, cols) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array()[:, list(cols)])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols})"

    def to_hex_rows(self) -> list[str]:
        nbytes = (self.cols + 7) // 8
        return [
            self.words[i].astype("<u8").tobytes()[:nbytes].hex()
            for i in range(self.rows)
        ]

    @classmethod
    def from_hex_rows(cls, rows: list[str], cols: int) -> "BitMatrix":
        vecs = [BitVector.from_hex(s, cols) for s in rows]
        return cls.from_rows(vecs)


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    byts = np.packbits(bits, bitorder="little")
    byts = np.pad(byts, (0, _nwords(bits.size) * 8 - byts.size))
    return np.frombuffer(byts.tobytes(), dtype="<u8").astype(np.uint64)


def _unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    byts = words.astype("<u8").view(np.uint8)
    return np.unpackbits(byts, bitorder="little")[:n]


def matvec(M: BitMatrix, v: BitVector) -> BitVector:
    """M @ v over GF(2): bit i = parity of AND(row i, v)."""
    if v.n != M.cols:
        raise ValueError("dimension mismatch")
    par = np.bitwise_count(M.words & v.words).sum(axis=1) & 1
    return BitVector.from_bits(par.astype(np.uint8))


def vecmat(v: BitVector, M: BitMatrix) -> BitVector:
    """Row-vector product v @ M: XOR of the rows selected by v."""
    if v.n != M.rows:
        raise ValueError("dimension mismatch")
    sel = _unpack_bits(v.words, v.n).astype(bool)
    acc = np.zeros(M.words.shape[1], dtype=np.uint64)
    for w in M.words[sel]:
        acc ^= w
    return BitVector(M.cols, acc)


def mat_mul(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    """A @ B over GF(2), row-accumulation formulation."""
    if A.cols != B.rows:
        raise ValueError("dimension mismatch")
    out = np.zeros((A.rows, B.words.shape[1]), dtype=np.uint64)
    abits = A.to_array()
    for i in range(A.rows):
        sel = abits[i].astype(bool)
        if sel.any():
            out[i] = np.bitwise_xor.reduce(B.words[sel], axis=0)
    return BitMatrix(A.rows, B.cols, out)


def gauss_jordan(A: BitMatrix, pivot_cols) -> tuple[BitMatrix, bool]:
    """Gauss-Jordan elimination restricted to the given pivot columns.

    Processes pivot_cols in order, assigning pivot rows 0, 1, 2, ...
    Row operations hit the full row width, augmented columns included.
    Pivot row choice: lowest row index with a 1 at or below the cursor.
    Returns (reduced copy, full_rank flag); aborts early when a pivot
    column has no available 1, leaving the matrix partially reduced.
    """
    cols = list(pivot_cols)
    if len(cols) > A.rows:
        raise ValueError("more pivots than rows")
    if len(set(cols)) != len(cols):
        raise ValueError("duplicate pivot columns")
    if any(not 0 <= c < A.cols for c in cols):
        raise ValueError("pivot column out of range")

    R = A.copy()
    w = R.words
    for r, c in enumerate(cols):
        colbits = (w[:, c >> 6] >> np.uint64(c & 63)) & np.uint64(1)
        cand = np.flatnonzero(colbits[r:])
        if cand.size == 0:
            return R, False
        p = r + int(cand[0])
        if p != r:
            w[[r, p]] = w[[p, r]]
            colbits[[r, p]] = colbits[[p, r]]
        elim = colbits.astype(bool)
        elim[r] = False
        w[elim] ^= w[r]
    return R, True


def rref(M: BitMatrix) -> tuple[BitMatrix, list[int]]:
    """Reduced row echelon form with natural column pivot order."""
    R = M.copy()
    w = R.words
    pivots: list[int] = []
    r = 0
    for c in range(M.cols):
        if r >= M.rows:
            break
        colbits = (w[:, c >> 6] >> np.uint64(c & 63)) & np.uint64(1)
        cand = np.flatnonzero(colbits[r:])
        if cand.size == 0:
            continue
        p = r + int(cand[0])
        if p != r:
            w[[r, p]] = w[[p, r]]
            colbits[[r, p]] = colbits[[p, r]]
        elim = colbits.astype(bool)
        elim[r] = False
        w[elim] ^= w[r]
        pivots.append(c)
        r += 1
    return R, pivots


def kernel_from_rref(R: BitMatrix, pivots: list[int]) -> list[BitVector]:
    """Kernel basis read off an RREF: one vector per free column."""
    w = R.words
    rank = len(pivots)
    pivset = set(pivots)
    basis = []
    for f in range(R.cols):
        if f in pivset:
            continue
        v = BitVector(R.cols)
        v.set(f, 1)
        fbits = (w[:rank, f >> 6] >> np.uint64(f & 63)) & np.uint64(1)
        for i, pc in enumerate(pivots):
            if fbits[i]:
                v.set(pc, 1)
        basis.append(v)
    return basis


def rank_and_kernel(M: BitMatrix) -> tuple[int, list[BitVector]]:
    """GF(2) rank and a kernel basis via full RREF."""
    R, pivots = rref(M)
    return len(pivots), kernel_from_rref(R, pivots)


def rank(M: BitMatrix) -> int:
    """Rank only, skipping kernel construction."""
    w = M.words.copy()
    r = 0
    for c in range(M.cols):
        if r >= M.rows:
            break
        colbits = (w[:, c >> 6] >> np.uint64(c & 63)) & np.uint64(1)
        cand = np.flatnonzero(colbits[r:])
        if cand.size == 0:
            continue
        p = r + int(cand[0])
        if p != r:
            w[[r, p]] = w[[p, r]]
            colbits[[r, p]] = colbits[[p, r]]
        elim = colbits.astype(bool)
        elim[r] = False
        w[elim] ^= w[r]
        r += 1
    return r


def solve(A: BitMatrix, b: BitVector) -> BitVector | None:
    """One solution x of A @ x = b, or None if inconsistent.

    Free variables are set to zero.
    """
    if b.n != A.rows:
        raise ValueError("dimension mismatch")
    aug = A.hstack(BitMatrix.from_rows([b]).transpose())
    red, pivots = rref(aug)
    if A.cols in pivots:
        return None
    x = BitVector.zeros(A.cols)
    for i, pc in enumerate(pivots):
        x.set(pc, red.get(i, A.cols))
    return x


def invert(M: BitMatrix) -> BitMatrix:
    """Inverse of a square invertible matrix; raises on singular input."""
    if M.rows != M.cols:
        raise ValueError("inverse needs a square matrix")
    k = M.rows
    aug = M.hstack(BitMatrix.identity(k))
    red, ok = gauss_jordan(aug, range(k))
    if not ok:
        raise ValueError("matrix is singular")
    return red.submatrix_cols(range(k, 2 * k))


def sample_matrix(rows: int, cols: int, rng: np.random.Generator) -> BitMatrix:
    """Uniform random matrix: i.i.d. fair bits."""
    nw = _nwords(cols)
    words = rng.integers(0, 1 << 64, size=(rows, nw), dtype=np.uint64)
    return BitMatrix(rows, cols, words)


SAMPLE_INVERTIBLE_CAP = 1000


def sample_invertible(k: int, rng: np.random.Generator) -> BitMatrix:
    """Rejection-sample an invertible k x k matrix.

    The acceptance probability is ~0.2888 independent of k, so the cap
    only fires if the rng is broken.
    """
    for _ in range(SAMPLE_INVERTIBLE_CAP):
        M = sample_matrix(k, k, rng)
        if rank(M) == k:
            return M
    raise RuntimeError("sample_invertible: rejection cap exceeded (rng broken?)")


def sample_permutation(N: int, rng: np.random.Generator) -> BitMatrix:
    """Random permutation matrix: row i = e_{perm[i]}."""
    perm = rng.permutation(N)
    M = BitMatrix(N, N)
    for i, j in enumerate(perm):
        M.set(i, int(j), 1)
    return M
