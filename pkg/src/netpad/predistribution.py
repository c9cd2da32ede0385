"""Key pre-distribution: global secret pool generation, per-node
assignment under each scheme, and common-bit / group queries.

Node ids are 1-based; pool-bit indices are 0-based.  Storage locations
within a node's l slots are 1-based to match the permutation domain.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .gf2 import BitString
from .permutation import PermutationFamily, _seed_int

KINDS = ("pairwise", "same", "combinational", "sampled_combinational", "random", "hybrid")


@dataclass(frozen=True)
class SchemeSpec:
    """Declarative description of a pre-distribution scheme."""

    kind: str
    a: int | None = None
    m: int | None = None
    p: Fraction | None = None
    lam: Fraction | None = None
    parts: tuple["SchemeSpec", "SchemeSpec"] | None = None

    def validate(self, n: int) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind in ("combinational", "sampled_combinational"):
            if self.a is None or not 2 <= self.a <= n:
                raise ValueError(f"group size a={self.a} must satisfy 2 <= a <= n={n}")
        if self.kind == "sampled_combinational":
            if self.m is None or self.m < 1:
                raise ValueError("sampled scheme needs a group count m >= 1")
            if (self.a * self.m) % n != 0:
                raise ValueError(f"a*m = {self.a * self.m} must be divisible by n = {n}")
            if self.m > comb(n, self.a):
                raise ValueError(f"m = {self.m} exceeds C({n},{self.a}) distinct groups")
        if self.kind == "random":
            if self.p is None or not 0 < self.p <= 1:
                raise ValueError(f"distribution probability p={self.p} must be in (0, 1]")
        if self.kind == "hybrid":
            if self.lam is None or not 0 <= self.lam <= 1:
                raise ValueError(f"hybrid fraction lambda={self.lam} must be in [0, 1]")
            if self.parts is None or len(self.parts) != 2:
                raise ValueError("hybrid scheme needs exactly two child schemes")
            for part in self.parts:
                if part.kind == "hybrid":
                    raise ValueError("hybrid children must be non-hybrid")
                part.validate(n)

    @property
    def effective_a(self) -> int:
        """Group size for the combinational family (pairwise = 2)."""
        if self.kind == "pairwise":
            return 2
        if self.kind in ("combinational", "sampled_combinational"):
            return self.a
        raise ValueError(f"scheme {self.kind!r} has no group-size parameter")

    def is_symmetric(self) -> bool:
        if self.kind == "sampled_combinational":
            return False
        if self.kind == "hybrid":
            return all(part.is_symmetric() for part in self.parts)
        return True

    def canonical(self) -> str:
        if self.kind == "pairwise":
            return "pairwise"
        if self.kind == "same":
            return "same"
        if self.kind == "combinational":
            return f"comb:a={self.a}"
        if self.kind == "sampled_combinational":
            return f"sampled:a={self.a},m={self.m}"
        if self.kind == "random":
            return f"random:p={self.p}"
        return (
            f"hybrid:lambda={self.lam},"
            f"({self.parts[0].canonical()}),({self.parts[1].canonical()})"
        )

    @classmethod
    def parse(cls, text: str) -> "SchemeSpec":
        text = text.strip()
        if text == "pairwise":
            return cls("pairwise")
        if text == "same":
            return cls("same")
        if text.startswith("comb:"):
            return cls("combinational", a=int(_param(text[5:], "a")))
        if text.startswith("sampled:"):
            params = dict(kv.split("=") for kv in text[8:].split(","))
            return cls("sampled_combinational", a=int(params["a"]), m=int(params["m"]))
        if text.startswith("random:"):
            return cls("random", p=Fraction(_param(text[7:], "p")))
        if text.startswith("hybrid:"):
            match = re.fullmatch(r"lambda=([^,]+),\((.*)\),\((.*)\)", text[7:])
            if not match:
                raise ValueError(f"malformed hybrid scheme {text!r}")
            return cls(
                "hybrid",
                lam=Fraction(match.group(1)),
                parts=(cls.parse(match.group(2)), cls.parse(match.group(3))),
            )
        raise ValueError(f"unrecognized scheme {text!r}")


def _param(text: str, name: str) -> str:
    key, _, value = text.partition("=")
    if key != name or not value:
        raise ValueError(f"expected {name}=<value>, got {text!r}")
    return value


@dataclass
class KeyStore:
    """Global pool of secret bits plus per-node assignments and groups.

    groups maps a sorted node tuple G to the pool-bit indices distributed
    to exactly the nodes of G; only non-empty groups are stored, and the
    groups partition the assigned pool bits.
    """

    n: int
    l: int
    scheme: SchemeSpec
    seed: int
    pool: BitString
    groups: dict[tuple[int, ...], list[int]]
    locations: dict[int, dict[int, int]] = field(repr=False)
    perm: PermutationFamily | None = None
    parts: list["KeyStore"] | None = None
    part_offsets: list[int] | None = None

    @property
    def u(self) -> int:
        return len(self.pool)

    def _check_node(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise ValueError(f"node {i} outside 1..{self.n}")

    def node_bits(self, i: int) -> list[int]:
        """Pool indices held by node i, ascending."""
        self._check_node(i)
        out: list[int] = []
        for nodes, idx in self.groups.items():
            if i in nodes:
                out.extend(idx)
        return sorted(out)

    def common_bits(self, i: int, j: int) -> list[int]:
        """Pool indices held by both i and j, ascending."""
        self._check_node(i)
        self._check_node(j)
        if i == j:
            raise ValueError("common_bits needs two distinct nodes")
        out: list[int] = []
        for nodes, idx in self.groups.items():
            if i in nodes and j in nodes:
                out.extend(idx)
        return sorted(out)

    def hacked_bits(self, hacked) -> list[int]:
        """Pool indices known to the eavesdropper, ascending."""
        hacked = set(hacked)
        for h in hacked:
            self._check_node(h)
        out: list[int] = []
        for nodes, idx in self.groups.items():
            if hacked.intersection(nodes):
                out.extend(idx)
        return sorted(out)

    def unhacked_common_indices(self, channels, hacked) -> list[int]:
        """Pool indices in the union of u_ij over channels, minus u_h."""
        hacked = set(hacked)
        channels = [tuple(sorted(c)) for c in channels]
        for i, j in channels:
            self._check_node(i)
            self._check_node(j)
            if i in hacked or j in hacked:
                raise ValueError(f"channel ({i},{j}) touches a hacked node")
        out: list[int] = []
        for nodes, idx in self.groups.items():
            if hacked.intersection(nodes):
                continue
            members = set(nodes)
            if any(i in members and j in members for i, j in channels):
                out.extend(idx)
        return sorted(out)

    def unhacked_union_size(self, channels, hacked) -> int:
        """|union of u_ij over channels, minus u_h| from group metadata."""
        return len(self.unhacked_common_indices(channels, hacked))

    def bit_values(self, indices) -> BitString:
        return BitString(self.pool.bits[np.asarray(list(indices), dtype=np.int64)])


def generate(spec: SchemeSpec, n: int, l: int, seed, strict: bool = False) -> KeyStore:
    """Run the key pre-distribution phase for one scheme."""
    if n < 2:
        raise ValueError("need at least two nodes")
    if l < 1:
        raise ValueError("per-node budget must be at least one bit")
    spec.validate(n)
    seed = _seed_int(seed)

    if spec.kind == "hybrid":
        return _generate_hybrid(spec, n, l, seed, strict)

    if spec.kind in ("pairwise", "same", "combinational", "sampled_combinational"):
        if spec.kind == "same":
            node_sets = [tuple(range(1, n + 1))]
            quota = 1
        elif spec.kind == "sampled_combinational":
            node_sets = random_regular_groups(n, spec.a, spec.m, [seed, 0])
            quota = spec.a * spec.m // n
        else:
            a = spec.effective_a
            node_sets = [tuple(c) for c in itertools.combinations(range(1, n + 1), a)]
            quota = comb(n - 1, a - 1)
        group_size, remainder = divmod(l, quota)
        if strict and remainder:
            raise ValueError(
                f"strict mode: per-node quota {quota} does not divide budget l={l}"
            )
        groups: dict[tuple[int, ...], list[int]] = {}
        next_idx = 0
        for nodes in node_sets:
            if group_size == 0:
                continue
            groups[nodes] = list(range(next_idx, next_idx + group_size))
            next_idx += group_size
        locations = _sequential_locations(n, groups)
        pool = BitString.random(next_idx, np.random.default_rng([seed, 1]))
        return KeyStore(n=n, l=l, scheme=spec, seed=seed, pool=pool,
                        groups=groups, locations=locations)

    # random scheme: pool of u = round(l/p) bits, bit k held by node i iff
    # F(k+1, i) <= l, stored at location F(k+1, i).
    u = round(Fraction(l) / spec.p)
    perm = PermutationFamily(u, n, [seed, 0])
    by_holders: dict[tuple[int, ...], list[int]] = {}
    locations: dict[int, dict[int, int]] = {i: {} for i in range(1, n + 1)}
    for k in range(u):
        holders = []
        for i in range(1, n + 1):
            loc = perm.permute(k + 1, i)
            if loc <= l:
                holders.append(i)
                locations[i][k] = loc
        if holders:
            by_holders.setdefault(tuple(holders), []).append(k)
    pool = BitString.random(u, np.random.default_rng([seed, 1]))
    return KeyStore(n=n, l=l, scheme=spec, seed=seed, pool=pool,
                    groups=by_holders, locations=locations, perm=perm)


def _sequential_locations(n: int, groups) -> dict[int, dict[int, int]]:
    locations: dict[int, dict[int, int]] = {i: {} for i in range(1, n + 1)}
    counters = {i: 0 for i in range(1, n + 1)}
    for nodes, idx in groups.items():
        for i in nodes:
            for k in idx:
                counters[i] += 1
                locations[i][k] = counters[i]
    return locations


def _generate_hybrid(spec, n, l, seed, strict) -> KeyStore:
    l1 = int(spec.lam * l)
    l2 = l - l1
    parts = []
    for part_no, (child, budget) in enumerate(zip(spec.parts, (l1, l2))):
        if budget < 1:
            continue
        parts.append(generate(child, n, budget, [seed, 2 + part_no], strict))
    offsets = []
    groups: dict[tuple[int, ...], list[int]] = {}
    locations: dict[int, dict[int, int]] = {i: {} for i in range(1, n + 1)}
    pool_bits = []
    offset = 0
    loc_offset = {i: 0 for i in range(1, n + 1)}
    for part in parts:
        offsets.append(offset)
        for nodes, idx in part.groups.items():
            groups.setdefault(nodes, []).extend(k + offset for k in idx)
        for i in range(1, n + 1):
            for k, loc in part.locations[i].items():
                locations[i][k + offset] = loc + loc_offset[i]
            loc_offset[i] += part.l
        pool_bits.append(part.pool.bits)
        offset += part.u
    pool = BitString(np.concatenate(pool_bits) if pool_bits else np.zeros(0, dtype=np.uint8))
    return KeyStore(n=n, l=l, scheme=spec, seed=seed, pool=pool, groups=groups,
                    locations=locations, parts=parts, part_offsets=offsets)


def random_regular_groups(n: int, a: int, m: int, seed, max_retries: int = 5000):
    """m distinct node-sets of size a with every node in exactly a*m/n sets.

    Regular bipartite design built by stub shuffling, the construction
    used for regular LDPC parity-check matrices; retries until the random
    partition has no repeated node inside a group and no repeated group.
    """
    if not 2 <= a <= n:
        raise ValueError(f"group size a={a} must satisfy 2 <= a <= n={n}")
    if (a * m) % n != 0:
        raise ValueError(f"a*m = {a * m} must be divisible by n = {n}")
    if m > comb(n, a):
        raise ValueError(f"m = {m} exceeds C({n},{a}) distinct groups")
    degree = a * m // n
    stubs = np.repeat(np.arange(1, n + 1), degree)
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        shuffled = rng.permutation(stubs)
        chunks = [tuple(sorted(shuffled[i * a:(i + 1) * a])) for i in range(m)]
        if any(len(set(c)) != a for c in chunks):
            continue
        if len(set(chunks)) != m:
            continue
        return sorted(chunks)
    raise RuntimeError(
        f"no regular group design found for n={n}, a={a}, m={m} "
        f"after {max_retries} retries"
    )
