"""Communication phase: derive secret-key bits as XOR of d sampled common
bits, apply the one-time pad, and account for consumed channel budget.

Sampling seeds are public and travel in the ciphertext header: secrecy
rests on the pool bits, not on the sampler.  The exact sampling matrix is
reconstructible from the header, so an auditor can rebuild the linear
system bit-for-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .gf2 import BitMatrix, BitString, random_fixed_weight_matrix
from .permutation import _seed_int

DEFAULT_WEIGHT = 128

MAGIC = b"NPCT"
VERSION = 1


class BudgetError(Exception):
    """Channel would exceed its per-node secret-bit budget (rate > 1)."""


class ReplayError(Exception):
    """Message counter reuse on a channel."""


@dataclass
class ChannelCipherState:
    """Per-endpoint state of one channel.  Single writer per endpoint."""

    i: int
    j: int
    d: int = DEFAULT_WEIGHT
    consumed: int = 0
    counter: int = 0
    seen_counters: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("a channel needs two distinct endpoints")
        if self.i > self.j:
            self.i, self.j = self.j, self.i

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


@dataclass(frozen=True)
class CipherText:
    i: int
    j: int
    counter: int
    sampling_seed: bytes  # 16 bytes, public
    body: BitString

    def to_bytes(self) -> bytes:
        out = bytearray()
        out += MAGIC
        out += struct.pack("<HIIQ", VERSION, self.i, self.j, self.counter)
        out += self.sampling_seed
        out += struct.pack("<Q", len(self.body))
        out += np.packbits(self.body.bits, bitorder="little").tobytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "CipherText":
        if raw[:4] != MAGIC:
            raise ValueError("not a ciphertext (bad magic)")
        version, i, j, counter = struct.unpack("<HIIQ", raw[4:22])
        if version != VERSION:
            raise ValueError(f"unsupported ciphertext version {version}")
        seed = raw[22:38]
        (n_bits,) = struct.unpack("<Q", raw[38:46])
        n_bytes = -(-n_bits // 8)
        body_raw = raw[46:46 + n_bytes]
        if len(body_raw) != n_bytes:
            raise ValueError("truncated ciphertext body")
        bits = np.unpackbits(np.frombuffer(body_raw, dtype=np.uint8),
                             bitorder="little", count=n_bits)
        return cls(i=i, j=j, counter=counter, sampling_seed=seed, body=BitString(bits))


def seed_to_int(sampling_seed: bytes) -> int:
    if len(sampling_seed) != 16:
        raise ValueError("sampling seeds are 16 bytes")
    return int.from_bytes(sampling_seed, "little")


def sampling_matrix(n_key_bits: int, n_common: int, d: int,
                    sampling_seed: bytes) -> BitMatrix:
    """The exact fixed-weight sampling matrix for one message."""
    return random_fixed_weight_matrix(n_key_bits, n_common, d,
                                      seed_to_int(sampling_seed))


def derive_key(ks, state: ChannelCipherState, n_bits: int,
               sampling_seed: bytes) -> BitString:
    """Secret key = M . u_ij with M the fixed-weight-d sampling matrix.

    Deterministic: both endpoints derive identical keys from the same
    keystore views and header.
    """
    common = ks.common_bits(state.i, state.j)
    if not common:
        raise ValueError(f"nodes {state.i} and {state.j} share no secret bits")
    if state.d > len(common):
        raise ValueError(
            f"sampling weight d={state.d} exceeds |u_ij|={len(common)}"
        )
    matrix = sampling_matrix(n_bits, len(common), state.d, sampling_seed)
    return matrix.mul(ks.bit_values(common))


def _derive_sampling_seed(seed, counter: int) -> bytes:
    rng = np.random.default_rng([_seed_int(seed), counter])
    return rng.bytes(16)


def encrypt(ks, state: ChannelCipherState, plaintext: BitString, seed) -> CipherText:
    if state.consumed + len(plaintext) > ks.l:
        raise BudgetError(
            f"channel {state.pair} would consume {state.consumed + len(plaintext)} "
            f"of {ks.l} budget bits (rate bound r_ij <= 1)"
        )
    counter = state.counter + 1
    sampling_seed = _derive_sampling_seed(seed, counter)
    key = derive_key(ks, state, len(plaintext), sampling_seed)
    state.counter = counter
    state.consumed += len(plaintext)
    return CipherText(i=state.i, j=state.j, counter=counter,
                      sampling_seed=sampling_seed, body=plaintext ^ key)


def decrypt(ks, state: ChannelCipherState, ct: CipherText) -> BitString:
    if (ct.i, ct.j) != state.pair:
        raise ValueError(f"ciphertext for channel ({ct.i},{ct.j}), state is {state.pair}")
    if ct.counter in state.seen_counters:
        raise ReplayError(f"counter {ct.counter} already seen on channel {state.pair}")
    key = derive_key(ks, state, len(ct.body), ct.sampling_seed)
    state.seen_counters.add(ct.counter)
    return ct.body ^ key
