"""Exact GF(2) arithmetic: bit strings, packed bit matrices, rank and
random matrix generation.

Bits are addressed logically (bit 0 = first column); the packed uint64
word layout is an implementation detail.  All values are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import sys
from typing import Iterable, Sequence

import numpy as np

# All randomness in this package goes through numpy's default generator.
# The identifier is persisted next to seeds in every output so runs can
# be replayed bit-for-bit.
RNG_ALGORITHM = "numpy-pcg64"

# Above this many total rows, cross_independent falls back to the
# sufficient full-row-rank check instead of exact enumeration.
CROSS_INDEPENDENT_EXACT_LIMIT = 24

_WORD = 64

if sys.byteorder != "little":  # pragma: no cover - packed layout assumes LE
    raise ImportError("netpad.gf2 requires a little-endian platform")


def _as_bit_array(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d bit sequence, got shape {arr.shape}")
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return arr


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 uint8 array into little-endian uint64 words."""
    n_words = max(1, -(-bits.size // _WORD)) if bits.size else 0
    packed = np.packbits(bits, bitorder="little")
    out = np.zeros(n_words * 8, dtype=np.uint8)
    out[: packed.size] = packed
    return out.view(np.uint64)


def _unpack_bits(words: np.ndarray, n_bits: int) -> np.ndarray:
    if n_bits == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.unpackbits(words.view(np.uint8), bitorder="little", count=n_bits)


class BitString:
    """Immutable sequence of bits with XOR and popcount."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = _as_bit_array(bits).copy()
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitString":
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))

    @classmethod
    def from01(cls, text: str) -> "BitString":
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, i):
        return int(self._bits[i]) if np.isscalar(i) or isinstance(i, int) else BitString(self._bits[i])

    def __xor__(self, other: "BitString") -> "BitString":
        if len(self) != len(other):
            raise ValueError(f"length mismatch: {len(self)} vs {len(other)}")
        return BitString(self._bits ^ other._bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._bits.shape == other._bits.shape and bool(
            np.array_equal(self._bits, other._bits)
        )

    def __hash__(self):
        return hash((self._bits.size, self._bits.tobytes()))

    def weight(self) -> int:
        return int(self._bits.sum())

    def to01(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        s = self.to01()
        if len(s) > 64:
            s = s[:61] + "..."
        return f"BitString({s!r})"


class BitMatrix:
    """Dense bit matrix over GF(2), rows packed into uint64 words."""

    __slots__ = ("n_rows", "n_cols", "_words")

    def __init__(self, n_rows: int, n_cols: int, words: np.ndarray):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self._words = words
        self._words.setflags(write=False)

    # -- constructors ---------------------------------------------------

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "BitMatrix":
        n_words = -(-n_cols // _WORD) if n_cols else 0
        return cls(n_rows, n_cols, np.zeros((n_rows, n_words), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        dense = np.eye(n, dtype=np.uint8)
        return cls.from_dense(dense)

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        arr = np.asarray(dense, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
        if arr.size and arr.max() > 1:
            raise ValueError("matrix entries must be 0 or 1")
        n_rows, n_cols = arr.shape
        n_words = -(-n_cols // _WORD) if n_cols else 0
        words = np.zeros((n_rows, n_words), dtype=np.uint64)
        for i in range(n_rows):
            words[i] = _pack_bits(arr[i])
        return cls(n_rows, n_cols, words)

    @classmethod
    def from_rows(cls, rows: Sequence) -> "BitMatrix":
        dense = np.array([_as_bit_array(getattr(r, "bits", r)) for r in rows], dtype=np.uint8)
        return cls.from_dense(dense)

    @classmethod
    def vstack(cls, blocks: Sequence["BitMatrix"]) -> "BitMatrix":
        if not blocks:
            raise ValueError("vstack of an empty block list")
        n_cols = blocks[0].n_cols
        if any(b.n_cols != n_cols for b in blocks):
            raise ValueError("vstack blocks must share a column count")
        words = np.concatenate([b._words for b in blocks], axis=0)
        return cls(sum(b.n_rows for b in blocks), n_cols, words)

    # -- accessors ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for i in range(self.n_rows):
            out[i] = _unpack_bits(self._words[i], self.n_cols)
        return out

    def row(self, i: int) -> BitString:
        return BitString(_unpack_bits(self._words[i], self.n_cols))

    def get(self, i: int, j: int) -> int:
        w, b = divmod(j, _WORD)
        return int((self._words[i, w] >> np.uint64(b)) & np.uint64(1))

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self._words).sum(axis=1).astype(np.int64)

    def take_columns(self, indices) -> "BitMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_cols):
            raise ValueError("column index out of range")
        return BitMatrix.from_dense(self.to_dense()[:, idx])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._words, other._words))

    def __hash__(self):
        return hash((self.shape, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.n_rows}x{self.n_cols})"

    # -- linear algebra -------------------------------------------------

    def rank(self) -> int:
        """GF(2) row rank via in-place elimination on a private copy."""
        words = self._words.copy()
        r = 0
        for col in range(self.n_cols):
            if r == self.n_rows:
                break
            w, b = divmod(col, _WORD)
            mask = np.uint64(1 << b)
            hits = np.nonzero(words[r:, w] & mask)[0]
            if hits.size == 0:
                continue
            pivot = r + int(hits[0])
            if pivot != r:
                words[[r, pivot]] = words[[pivot, r]]
            rest = hits[1:] + r
            if rest.size:
                words[rest] ^= words[r]
            r += 1
        return r

    def mul(self, v: BitString) -> BitString:
        """Matrix-vector product over GF(2)."""
        if len(v) != self.n_cols:
            raise ValueError(
                f"dimension mismatch: matrix has {self.n_cols} columns, vector has {len(v)} bits"
            )
        if self.n_cols == 0:
            return BitString.zeros(self.n_rows)
        vwords = _pack_bits(np.asarray(v.bits, dtype=np.uint8))
        parities = np.bitwise_count(self._words & vwords[None, :]).sum(axis=1) & 1
        return BitString(parities.astype(np.uint8))

    def left_nullspace_masks(self) -> list[int]:
        """Basis of {c : c.M = 0}, each vector as a row-index bitmask."""
        n_words = self._words.shape[1]
        words = np.concatenate(
            [self._words, BitMatrix.identity(max(self.n_rows, 1))._words[: self.n_rows]],
            axis=1,
        )
        r = 0
        for col in range(self.n_cols):
            if r == self.n_rows:
                break
            w, b = divmod(col, _WORD)
            mask = np.uint64(1 << b)
            hits = np.nonzero(words[r:, w] & mask)[0]
            if hits.size == 0:
                continue
            pivot = r + int(hits[0])
            if pivot != r:
                words[[r, pivot]] = words[[pivot, r]]
            rest = hits[1:] + r
            if rest.size:
                words[rest] ^= words[r]
            r += 1
        masks = []
        track_words = words[:, n_words:]
        for i in range(r, self.n_rows):
            mask = 0
            for w in range(track_words.shape[1]):
                mask |= int(track_words[i, w]) << (w * _WORD)
            masks.append(mask)
        return masks


def rank(m: BitMatrix) -> int:
    return m.rank()


def mul(m: BitMatrix, v: BitString) -> BitString:
    return m.mul(v)


def random_bernoulli_matrix(
    n_rows: int, n_cols: int, density: float, seed
) -> BitMatrix:
    """Each entry is 1 independently with probability *density*."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    dense = (rng.random((n_rows, n_cols)) < density).astype(np.uint8)
    return BitMatrix.from_dense(dense)


def random_fixed_weight_matrix(
    n_rows: int, n_cols: int, weight_d: int, seed
) -> BitMatrix:
    """Every row has exactly *weight_d* ones, sampled without replacement."""
    if weight_d > n_cols:
        raise ValueError(f"row weight {weight_d} exceeds column count {n_cols}")
    if weight_d < 0:
        raise ValueError("row weight must be non-negative")
    rng = np.random.default_rng(seed)
    dense = np.zeros((n_rows, n_cols), dtype=np.uint8)
    if weight_d and n_rows:
        keys = rng.random((n_rows, n_cols))
        idx = np.argpartition(keys, weight_d - 1, axis=1)[:, :weight_d]
        np.put_along_axis(dense, idx, 1, axis=1)
    return BitMatrix.from_dense(dense)


def cross_independent(
    blocks: Sequence[BitMatrix], exact_limit: int = CROSS_INDEPENDENT_EXACT_LIMIT
) -> bool:
    """True iff no row selection taking at least one row from every block
    XORs to zero.

    Exact for total rows <= *exact_limit* (enumeration over the left
    nullspace of the stacked blocks, equivalent to the full subset scan).
    Beyond the limit, falls back to the sufficient condition that the
    stacked blocks have full row rank.
    """
    if not blocks:
        raise ValueError("cross_independent needs at least one block")
    if any(b.n_rows == 0 for b in blocks):
        raise ValueError("every block must have at least one row")
    n_cols = blocks[0].n_cols
    if any(b.n_cols != n_cols for b in blocks):
        raise ValueError("blocks must share a column count")

    stacked = BitMatrix.vstack(blocks)
    if stacked.n_rows > exact_limit:
        return stacked.rank() == stacked.n_rows

    basis = stacked.left_nullspace_masks()
    if not basis:
        return True

    # Every zero-sum row selection is a nonzero element of the left
    # nullspace; enumerate them all and test block coverage.
    combos = np.zeros(1, dtype=np.uint64)
    for mask in basis:
        combos = np.concatenate([combos, combos ^ np.uint64(mask)])
    combos = combos[1:]

    block_masks = []
    offset = 0
    for b in blocks:
        block_masks.append(np.uint64(((1 << b.n_rows) - 1) << offset))
        offset += b.n_rows

    touches_all = np.ones(combos.size, dtype=bool)
    for bm in block_masks:
        touches_all &= (combos & bm) != 0
    return not bool(touches_all.any())
