"""Seedable per-node bijections on {1..u} used by the random key scheme.

A 4-round keyed Feistel network over the smallest even-bit-width domain
covering u, restricted to the target range by cycle walking.  Not a
cryptographic primitive: the mapping is public anyway, it only needs to
be a reproducible bijection.
"""

from __future__ import annotations

import numpy as np

_ROUNDS = 4
_MASK32 = 0xFFFFFFFF


def _mix32(x: int, key: int) -> int:
    # xxhash-style avalanche on a 32-bit lane.
    x = (374761397 + key + x * 3266489917) & _MASK32
    x = ((x << 17 | x >> 15) * 668265263) & _MASK32
    x ^= x >> 15
    x = (x * 2246822519) & _MASK32
    x ^= x >> 13
    x = (x * 3266489917) & _MASK32
    return x ^ (x >> 16)


class PermutationFamily:
    """For each node i, F(., i) is a bijection on {1..u} (1-based)."""

    def __init__(self, u: int, n: int, master_seed):
        if u < 1:
            raise ValueError("domain size must be at least 1")
        if n < 1:
            raise ValueError("node count must be at least 1")
        self.u = u
        self.n = n
        self.master_seed = master_seed
        # Even bit width >= bit length of u-1, at least 2.
        half = max(1, -(-(max(u - 1, 1)).bit_length() // 2))
        self._half_bits = half
        self._half_mask = (1 << half) - 1
        self._domain = 1 << (2 * half)
        self._round_keys = {}

    def _keys(self, node: int) -> list[int]:
        keys = self._round_keys.get(node)
        if keys is None:
            rng = np.random.default_rng([_seed_int(self.master_seed), node])
            keys = [int(k) for k in rng.integers(0, 1 << 32, size=_ROUNDS, dtype=np.uint64)]
            self._round_keys[node] = keys
        return keys

    def _feistel(self, x: int, keys) -> int:
        left, right = x >> self._half_bits, x & self._half_mask
        for key in keys:
            left, right = right, left ^ (_mix32(right, key) & self._half_mask)
        return (left << self._half_bits) | right

    def _feistel_inv(self, x: int, keys) -> int:
        left, right = x >> self._half_bits, x & self._half_mask
        for key in reversed(keys):
            left, right = right ^ (_mix32(left, key) & self._half_mask), left
        return (left << self._half_bits) | right

    def _check(self, k: int, i: int) -> None:
        if not 1 <= k <= self.u:
            raise ValueError(f"index {k} outside 1..{self.u}")
        if not 1 <= i <= self.n:
            raise ValueError(f"node {i} outside 1..{self.n}")

    def permute(self, k: int, i: int) -> int:
        self._check(k, i)
        keys = self._keys(i)
        x = k - 1
        while True:
            x = self._feistel(x, keys)
            if x < self.u:
                return x + 1

    def invert(self, s: int, i: int) -> int:
        self._check(s, i)
        keys = self._keys(i)
        x = s - 1
        while True:
            x = self._feistel_inv(x, keys)
            if x < self.u:
                return x + 1


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed) & (2**63 - 1)
    # Fold arbitrary seed material into one integer deterministically.
    return int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0])
