"""Independent oracles used across the test suite.

Everything here is deliberately naive and shares no code with the
library: pure-Python elimination, pool scans over per-node storage
locations, and brute-force graph/subset enumeration.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def py_rank(dense) -> int:
    """GF(2) row rank by textbook elimination over Python ints."""
    rows = [sum(int(bit) << pos for pos, bit in enumerate(row)) for row in dense]
    rank = 0
    for col in range(max((len(row) for row in dense), default=0)):
        mask = 1 << col
        pivot = next((i for i in range(rank, len(rows)) if rows[i] & mask), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & mask:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def holders_by_index(ks) -> dict[int, set[int]]:
    """Pool index -> set of holder nodes, scanned from the per-node
    storage-location tables only (never from the group metadata)."""
    holders: dict[int, set[int]] = {k: set() for k in range(ks.u)}
    for node in range(1, ks.n + 1):
        for k in ks.locations[node]:
            holders[k].add(node)
    return holders


def pair_index_sets(ks) -> dict[tuple[int, int], frozenset[int]]:
    """Channel -> pool indices held by both endpoints, via pool scan."""
    holders = holders_by_index(ks)
    sets: dict[tuple[int, int], set[int]] = {
        pair: set() for pair in itertools.combinations(range(1, ks.n + 1), 2)
    }
    for k, nodes in holders.items():
        for pair in itertools.combinations(sorted(nodes), 2):
            sets[pair].add(k)
    return {pair: frozenset(idx) for pair, idx in sets.items()}


def hacked_index_set(ks, hacked) -> frozenset[int]:
    holders = holders_by_index(ks)
    hset = set(hacked)
    return frozenset(k for k, nodes in holders.items() if nodes & hset)


def union_size_oracle(ks, channels, hacked) -> int:
    """|union of u_ij over channels, minus hacked bits| by pool scan."""
    pair_sets = pair_index_sets(ks)
    bad = hacked_index_set(ks, hacked)
    union: set[int] = set()
    for i, j in channels:
        union |= pair_sets[(min(i, j), max(i, j))]
    return len(union - bad)


def achievable_oracle(ks, profile, t) -> tuple[bool, list]:
    """Brute-force double enumeration of the strict-inequality criterion.

    Returns (achievable, violations) where each violation is
    (hacked, channels, rate_sum, bound) with exact Fractions.
    """
    pair_sets = pair_index_sets(ks)
    positive = sorted((p, r) for p, r in profile.rates.items() if r > 0)
    violations = []
    for size in range(t + 1):
        for hacked in itertools.combinations(range(1, ks.n + 1), size):
            bad = hacked_index_set(ks, hacked)
            pairs = [(p, r) for p, r in positive
                     if p[0] not in hacked and p[1] not in hacked]
            for k in range(1, len(pairs) + 1):
                for chosen in itertools.combinations(pairs, k):
                    rate_sum = sum((r for _, r in chosen), Fraction(0))
                    union: set[int] = set()
                    for p, _ in chosen:
                        union |= pair_sets[p]
                    bound = Fraction(len(union - bad), ks.l)
                    if rate_sum >= bound:
                        violations.append(
                            (hacked, tuple(p for p, _ in chosen), rate_sum, bound)
                        )
    return (not violations, violations)


def menger_max_paths(topo, s, dst) -> int:
    """Max internally-node-disjoint s-dst paths by Menger's theorem:
    count the direct edge separately, then find the minimum vertex cut
    of the remaining graph by subset enumeration."""
    edges = set(topo.edges)
    direct = (min(s, dst), max(s, dst)) in edges
    if direct:
        edges.discard((min(s, dst), max(s, dst)))
    adj: dict[int, set[int]] = {v: set() for v in range(1, topo.n + 1)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)

    def connected(removed: set[int]) -> bool:
        if s in removed or dst in removed:
            return False
        seen = {s}
        stack = [s]
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            for w in adj[v]:
                if w not in removed and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    if not connected(set()):
        return int(direct)
    internal = [v for v in range(1, topo.n + 1) if v not in (s, dst)]
    for cut_size in range(len(internal) + 1):
        for cut in itertools.combinations(internal, cut_size):
            if not connected(set(cut)):
                return int(direct) + cut_size
    return int(direct) + len(internal)


def paths_are_disjoint(paths, s, dst) -> bool:
    """Every path runs s..dst and no internal node repeats across paths."""
    seen: set[int] = set()
    for path in paths:
        if path[0] != s or path[-1] != dst:
            return False
        internal = set(path[1:-1])
        if len(internal) != len(path) - 2 or internal & seen:
            return False
        seen |= internal
    return True
