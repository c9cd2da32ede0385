"""Achievability checkers for a set of channel rates.

Three routes:
  * check_exact      — iff-criterion: every hacked set, every channel
                       subset with positive rate sum must stay strictly
                       below its shared unhacked-secret-bit rate.
  * check_relaxed    — per-subset-size criterion with closed forms for
                       symmetric schemes; a pass is sufficient, a fail is
                       advisory only.
  * check_feasibility— sufficient group-flow criterion using the concrete
                       proportional construction; a pass is a proof, a
                       fail never claims non-achievability.

All rate arithmetic is exact rational.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb

import numpy as np

from .predistribution import KeyStore, SchemeSpec
from .rates import alpha

DEFAULT_MAX_WORK = 1 << 26
DEFAULT_EPSILON = Fraction(1, 2**20)


class EnumerationBudgetError(Exception):
    """check_exact's subset enumeration would exceed its work cap."""


class Status(Enum):
    ACHIEVABLE = "achievable"
    NOT_ACHIEVABLE = "not_achievable"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class RateProfile:
    """Channel-rate map r_ij >= 0 over unordered node pairs."""

    n: int
    rates: dict[tuple[int, int], Fraction]

    def __post_init__(self):
        normalized = {}
        for (i, j), r in self.rates.items():
            if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"bad channel ({i},{j}) for n={self.n}")
            r = Fraction(r)
            if not 0 <= r <= 1:
                raise ValueError(f"rate r_{i}{j}={r} must be in [0, 1]")
            normalized[(min(i, j), max(i, j))] = r
        object.__setattr__(self, "rates", normalized)

    def rate(self, i: int, j: int) -> Fraction:
        return self.rates.get((min(i, j), max(i, j)), Fraction(0))

    @classmethod
    def uniform(cls, n: int, r) -> "RateProfile":
        pairs = itertools.combinations(range(1, n + 1), 2)
        return cls(n, {pair: Fraction(r) for pair in pairs})

    @classmethod
    def from_json(cls, text: str) -> "RateProfile":
        doc = json.loads(text)
        rates = {(e["i"], e["j"]): Fraction(e["r"]) for e in doc["rates"]}
        return cls(doc["n"], rates)

    def to_json(self) -> str:
        entries = [
            {"i": i, "j": j, "r": str(r)}
            for (i, j), r in sorted(self.rates.items())
        ]
        return json.dumps({"n": self.n, "rates": entries}, indent=2)


@dataclass(frozen=True)
class Witness:
    """A violated constraint: sum of rates over P reaches the bound."""

    hacked: tuple[int, ...]
    channels: tuple[tuple[int, int], ...]
    rate_sum: Fraction
    bound: Fraction


@dataclass(frozen=True)
class FlowAssignment:
    """Non-negative per-group rate split x^G_ij for one hacked set."""

    hacked: tuple[int, ...]
    values: dict[tuple[tuple[int, ...], tuple[int, int]], Fraction]


@dataclass(frozen=True)
class SecurityVerdict:
    status: Status
    method: str
    witness: Witness | None = None
    margins: tuple[tuple[int, Fraction, Fraction], ...] = ()
    assignments: tuple[FlowAssignment, ...] = ()

    @property
    def achievable(self) -> bool:
        return self.status is Status.ACHIEVABLE

    def to_json(self) -> str:
        doc: dict = {"status": self.status.value, "method": self.method}
        if self.witness is not None:
            doc["witness"] = {
                "hacked": list(self.witness.hacked),
                "channels": [list(c) for c in self.witness.channels],
                "rate_sum": str(self.witness.rate_sum),
                "bound": str(self.witness.bound),
            }
        if self.margins:
            doc["margins"] = [
                {"w": w, "max_rate_sum": str(lhs), "r_secrecy": str(rhs)}
                for w, lhs, rhs in self.margins
            ]
        return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# exact criterion


def _hacked_sets(n: int, t: int):
    for size in range(t + 1):
        yield from itertools.combinations(range(1, n + 1), size)


def _lex_min_mask(masks: np.ndarray) -> int:
    """Among subset bitmasks, the one whose element tuple is lex-smallest."""
    cand = masks.astype(np.int64)
    acc = 0
    while True:
        lsb = cand & -cand
        best = int(lsb.min())
        cand = cand[lsb == best] ^ best
        acc |= best
        if (cand == 0).any():
            return acc
        cand = cand[cand != 0]


def check_exact(ks: KeyStore, profile: RateProfile, t: int,
                max_work: int = DEFAULT_MAX_WORK) -> SecurityVerdict:
    """Iff-criterion by full enumeration of hacked sets and channel subsets.

    Strict inequality at the boundary: privacy amplification is always
    applied, so a rate sum equal to the bound is already insecure.
    """
    if profile.n != ks.n:
        raise ValueError(f"profile is for n={profile.n}, keystore has n={ks.n}")
    if not 0 <= t <= ks.n - 2:
        raise ValueError(f"t={t} must satisfy 0 <= t <= n-2 = {ks.n - 2}")

    positive = sorted((p, r) for p, r in profile.rates.items() if r > 0)
    work = 0
    for hacked in _hacked_sets(ks.n, t):
        k = sum(1 for (i, j), _ in positive if i not in hacked and j not in hacked)
        work += 1 << k
        if work > max_work:
            raise EnumerationBudgetError(
                f"subset enumeration needs ~{work} steps (cap {max_work}); "
                "use check_relaxed for large symmetric instances"
            )

    best: tuple | None = None  # ((channels, hacked), Witness)
    group_items = list(ks.groups.items())
    for hacked in _hacked_sets(ks.n, t):
        hset = set(hacked)
        pairs = [(p, r) for p, r in positive
                 if p[0] not in hset and p[1] not in hset]
        if not pairs:
            continue
        k = len(pairs)
        denom = math.lcm(*[r.denominator for _, r in pairs])
        nums = [int(r * denom) for _, r in pairs]

        # Exact integer comparison: sum_P r >= bound  <=>  sums*l >= denom*counts.
        big = max(sum(nums) * ks.l, denom * max(ks.u, 1)) >= 1 << 62
        dtype = object if big else np.int64
        sums = np.zeros(1, dtype=dtype)
        for num in nums:
            sums = np.concatenate([sums, sums + num])
        counts = np.zeros(1 << k, dtype=dtype)
        subset_idx = np.arange(1 << k, dtype=np.int64)
        for nodes, idx in group_items:
            if hset.intersection(nodes):
                continue
            members = set(nodes)
            bm = 0
            for pos, ((i, j), _) in enumerate(pairs):
                if i in members and j in members:
                    bm |= 1 << pos
            if bm:
                counts += len(idx) * ((subset_idx & bm) != 0).astype(dtype)

        violating = np.nonzero((sums > 0) & (sums * ks.l >= denom * counts))[0]
        if violating.size == 0:
            continue
        mask = _lex_min_mask(violating)
        channels = tuple(p for pos, (p, _) in enumerate(pairs) if mask >> pos & 1)
        key = (channels, hacked)
        if best is None or key < best[0]:
            rate_sum = sum((profile.rate(*c) for c in channels), Fraction(0))
            bound = Fraction(ks.unhacked_union_size(channels, hacked), ks.l)
            best = (key, Witness(hacked=hacked, channels=channels,
                                 rate_sum=rate_sum, bound=bound))

    if best is None:
        return SecurityVerdict(status=Status.ACHIEVABLE, method="exact")
    return SecurityVerdict(status=Status.NOT_ACHIEVABLE, method="exact",
                           witness=best[1])


# ---------------------------------------------------------------------------
# relaxed per-size criterion


def lex_prefix_pairs(ns: int, w: int) -> list[tuple[int, int]]:
    """First w unhacked pairs in lexicographic order (nodes 1..ns)."""
    if not 1 <= w <= comb(ns, 2):
        raise ValueError(f"subset size w={w} must be in 1..C({ns},2)")
    pairs = list(itertools.combinations(range(1, ns + 1), 2))
    return pairs[:w]


def r_secrecy_w(ks: KeyStore, t: int, w: int) -> Fraction:
    """min over |P| = w and hacked sets of the shared unhacked rate,
    realized on the keystore via the lexicographic-prefix argument."""
    if not ks.scheme.is_symmetric():
        raise ValueError("r_secrecy_w needs a symmetric scheme")
    ns = ks.n - t
    prefix = lex_prefix_pairs(ns, w)
    hacked = tuple(range(ns + 1, ks.n + 1))
    return Fraction(ks.unhacked_union_size(prefix, hacked), ks.l)


def r_secrecy_w_closed(spec: SchemeSpec, n: int, t: int, w: int) -> Fraction:
    """Closed-form r_secrecy(w) for symmetric schemes (exact for the
    combinational family, in expectation for the random scheme)."""
    spec.validate(n)
    if not spec.is_symmetric():
        raise ValueError("closed forms exist only for symmetric schemes")
    ns = n - t
    x, y = lex_prefix_pairs(ns, w)[-1]

    if spec.kind == "hybrid":
        lam = spec.lam
        return (lam * r_secrecy_w_closed(spec.parts[0], n, t, w)
                + (1 - lam) * r_secrecy_w_closed(spec.parts[1], n, t, w))
    if spec.kind == "random":
        p = spec.p
        q = 1 - p
        return q**t * (alpha(ns, p) / p - q**x * alpha(ns - x, p) / p
                       - q ** (y - 1) * (1 - q ** (ns - y)))
    a = n if spec.kind == "same" else spec.effective_a
    return Fraction(comb(ns, a) - comb(ns - x, a) - comb(ns - y, a - 1),
                    comb(n - 1, a - 1))


def check_relaxed(spec: SchemeSpec, n: int, t: int,
                  profile: RateProfile) -> SecurityVerdict:
    """Sufficient criterion: for every subset size w, the w largest rates
    must sum below the minimum shared rate over all size-w subsets."""
    if profile.n != n:
        raise ValueError(f"profile is for n={profile.n}, expected {n}")
    spec.validate(n)
    if not spec.is_symmetric():
        raise ValueError("check_relaxed needs a symmetric scheme spec")
    all_rates = sorted(
        (profile.rate(i, j) for i, j in itertools.combinations(range(1, n + 1), 2)),
        reverse=True,
    )
    margins = []
    ok = True
    for w in range(1, comb(n - t, 2) + 1):
        lhs = sum(all_rates[:w], Fraction(0))
        rhs = r_secrecy_w_closed(spec, n, t, w)
        margins.append((w, lhs, rhs))
        if lhs > 0 and lhs >= rhs:
            ok = False
    status = Status.ACHIEVABLE if ok else Status.UNDECIDED
    return SecurityVerdict(status=status, method="relaxed", margins=tuple(margins))


# ---------------------------------------------------------------------------
# feasibility (group flow) criterion


def check_feasibility(ks: KeyStore, profile: RateProfile, t: int,
                      epsilon: Fraction = DEFAULT_EPSILON) -> SecurityVerdict:
    """Sufficient criterion via the concrete proportional flow split.

    For every hacked set, splits each positive rate across the unhacked
    groups shared by its endpoints in proportion to group size / group
    order, inflated by (1 + epsilon), and verifies the per-group capacity.
    A pass proves achievability; a fail leaves the profile undecided.
    """
    if profile.n != ks.n:
        raise ValueError(f"profile is for n={profile.n}, keystore has n={ks.n}")
    if not ks.groups:
        raise ValueError("feasibility check needs a group-structured keystore")
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    assignments = []
    for hacked in _hacked_sets(ks.n, t):
        hset = set(hacked)
        surviving = {nodes: len(idx) for nodes, idx in ks.groups.items()
                     if not hset.intersection(nodes)}
        values: dict = {}
        per_group_sum: dict[tuple[int, ...], Fraction] = {}
        for (i, j), r in profile.rates.items():
            if r == 0 or i in hset or j in hset:
                continue
            shares = {nodes: Fraction(size, len(nodes))
                      for nodes, size in surviving.items()
                      if i in nodes and j in nodes}
            denom = sum(shares.values(), Fraction(0))
            if denom == 0:
                return SecurityVerdict(status=Status.UNDECIDED, method="feasibility",
                                       witness=Witness(hacked=hacked,
                                                       channels=((i, j),),
                                                       rate_sum=r, bound=Fraction(0)))
            for nodes, share in shares.items():
                x = share / denom * (1 + epsilon) * r
                values[(nodes, (i, j))] = x
                per_group_sum[nodes] = per_group_sum.get(nodes, Fraction(0)) + x
        for nodes, total in per_group_sum.items():
            cap = Fraction(surviving[nodes], ks.l)
            if total > cap:
                return SecurityVerdict(
                    status=Status.UNDECIDED, method="feasibility",
                    witness=Witness(
                        hacked=hacked,
                        channels=tuple(sorted(p for g, p in values if g == nodes)),
                        rate_sum=total, bound=cap,
                    ),
                )
        assignments.append(FlowAssignment(hacked=hacked, values=values))
    return SecurityVerdict(status=Status.ACHIEVABLE, method="feasibility",
                           assignments=tuple(assignments))
