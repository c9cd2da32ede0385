import itertools
from fractions import Fraction
from math import comb

import pytest

from netpad.predistribution import (
    KeyStore,
    SchemeSpec,
    generate,
    random_regular_groups,
)

from helpers import holders_by_index, pair_index_sets, union_size_oracle

GRID = [
    ("pairwise", 4, 9),
    ("pairwise", 6, 10),
    ("same", 4, 7),
    ("comb:a=3", 4, 12),
    ("comb:a=3", 5, 12),
    ("comb:a=4", 6, 20),
    ("sampled:a=3,m=4", 4, 9),
    ("random:p=1/2", 4, 10),
    ("random:p=1/4", 5, 8),
    ("hybrid:lambda=1/2,(pairwise),(comb:a=3)", 4, 12),
]


# ---------------------------------------------------------------------------
# scheme specs


@pytest.mark.parametrize("text", [
    "pairwise", "same", "comb:a=3", "sampled:a=3,m=4", "random:p=1/2",
    "hybrid:lambda=1/2,(pairwise),(comb:a=25)",
])
def test_parse_canonical_roundtrip(text):
    assert SchemeSpec.parse(text).canonical() == text


@pytest.mark.parametrize("text", [
    "nonsense", "comb:b=3", "hybrid:lambda=1/2,(pairwise)", "random:q=1/2",
])
def test_parse_rejects_malformed(text):
    with pytest.raises(ValueError):
        SchemeSpec.parse(text)


def test_validate_rejects_bad_parameters():
    with pytest.raises(ValueError):
        SchemeSpec.parse("comb:a=5").validate(4)
    with pytest.raises(ValueError):
        SchemeSpec.parse("random:p=0").validate(4)
    with pytest.raises(ValueError):
        SchemeSpec.parse("sampled:a=3,m=4").validate(5)  # a*m not divisible by n
    with pytest.raises(ValueError):
        SchemeSpec.parse(
            "hybrid:lambda=1/2,(hybrid:lambda=1/2,(pairwise),(same)),(same)"
        ).validate(4)


def test_symmetry_flags():
    assert SchemeSpec.parse("pairwise").is_symmetric()
    assert SchemeSpec.parse("random:p=1/2").is_symmetric()
    assert not SchemeSpec.parse("sampled:a=3,m=4").is_symmetric()
    assert not SchemeSpec.parse(
        "hybrid:lambda=1/2,(pairwise),(sampled:a=3,m=4)"
    ).is_symmetric()


# ---------------------------------------------------------------------------
# generation: structure vs pool-scan oracle


@pytest.mark.parametrize("text,n,l", GRID)
def test_groups_match_location_scan(text, n, l):
    ks = generate(SchemeSpec.parse(text), n, l, seed=17)
    holders = holders_by_index(ks)
    # Every group's indices are held by exactly the group's nodes.
    seen = set()
    for nodes, idx in ks.groups.items():
        for k in idx:
            assert holders[k] == set(nodes)
            assert k not in seen
            seen.add(k)
    # Unassigned pool bits (random scheme can have them) have <= 1 holder
    # only if never grouped; grouped bits cover every multi-holder bit.
    for k in range(ks.u):
        if k not in seen:
            assert len(holders[k]) == 0


@pytest.mark.parametrize("text,n,l", GRID)
def test_node_budget_respected(text, n, l):
    ks = generate(SchemeSpec.parse(text), n, l, seed=17)
    for node in range(1, n + 1):
        bits = ks.node_bits(node)
        assert len(bits) <= l
        locs = ks.locations[node]
        assert sorted(locs) == bits
        values = list(locs.values())
        assert len(set(values)) == len(values)  # distinct storage slots
        assert all(1 <= v <= l for v in values)


@pytest.mark.parametrize("text,n,l", GRID)
def test_common_bits_match_scan(text, n, l):
    ks = generate(SchemeSpec.parse(text), n, l, seed=17)
    pairs = pair_index_sets(ks)
    for i, j in itertools.combinations(range(1, n + 1), 2):
        assert ks.common_bits(i, j) == sorted(pairs[(i, j)])


@pytest.mark.parametrize("text,n,l", GRID)
def test_unhacked_union_matches_scan(text, n, l):
    ks = generate(SchemeSpec.parse(text), n, l, seed=17)
    channels = [(1, 2), (1, 3)]
    for hacked in [(), (n,)]:
        assert ks.unhacked_union_size(channels, hacked) == union_size_oracle(
            ks, channels, hacked
        )


def test_combinational_shape():
    ks = generate(SchemeSpec.parse("comb:a=3"), 4, 1260, seed=0)
    group_size = 1260 // comb(3, 2)
    assert group_size == 420
    assert set(ks.groups) == set(itertools.combinations(range(1, 5), 3))
    assert all(len(idx) == group_size for idx in ks.groups.values())
    # |u_ij| = C(n-2, a-2) * group size
    assert len(ks.common_bits(1, 2)) == comb(2, 1) * group_size
    assert ks.u == comb(4, 3) * group_size


def test_pairwise_shape():
    ks = generate(SchemeSpec.parse("pairwise"), 4, 9, seed=0)
    assert set(ks.groups) == set(itertools.combinations(range(1, 5), 2))
    assert all(len(idx) == 3 for idx in ks.groups.values())
    assert len(ks.node_bits(2)) == 9


def test_same_shape():
    ks = generate(SchemeSpec.parse("same"), 5, 7, seed=0)
    assert set(ks.groups) == {(1, 2, 3, 4, 5)}
    assert ks.u == 7
    assert ks.common_bits(2, 4) == list(range(7))


def test_strict_mode_rejects_remainder():
    with pytest.raises(ValueError):
        generate(SchemeSpec.parse("comb:a=3"), 4, 10, seed=0, strict=True)
    generate(SchemeSpec.parse("comb:a=3"), 4, 9, seed=0, strict=True)


def test_floor_quota_when_not_strict():
    ks = generate(SchemeSpec.parse("pairwise"), 4, 10, seed=0)
    assert all(len(idx) == 3 for idx in ks.groups.values())
    assert len(ks.node_bits(1)) == 9  # one budget bit unused


def test_random_scheme_locations_follow_permutation():
    ks = generate(SchemeSpec.parse("random:p=1/2"), 4, 20, seed=3)
    assert ks.u == 40
    for node in range(1, 5):
        for k, loc in ks.locations[node].items():
            assert ks.perm.permute(k + 1, node) == loc
            assert loc <= ks.l
    # Every pool bit held ~ p of the time.
    total = sum(len(ks.locations[i]) for i in range(1, 5))
    assert abs(total / (4 * 40) - 0.5) < 0.15


def test_random_scheme_determinism():
    a = generate(SchemeSpec.parse("random:p=1/3"), 5, 12, seed=8)
    b = generate(SchemeSpec.parse("random:p=1/3"), 5, 12, seed=8)
    assert a.groups == b.groups and a.pool == b.pool


def test_sampled_scheme_regularity():
    ks = generate(SchemeSpec.parse("sampled:a=3,m=4"), 4, 9, seed=5)
    degree = 3 * 4 // 4
    counts = {i: 0 for i in range(1, 5)}
    for nodes in ks.groups:
        assert len(nodes) == 3
        for i in nodes:
            counts[i] += 1
    assert all(c == degree for c in counts.values())
    assert len(ks.groups) == 4


def test_hybrid_concatenates_parts():
    spec = SchemeSpec.parse("hybrid:lambda=1/2,(pairwise),(comb:a=3)")
    ks = generate(spec, 4, 12, seed=2)
    assert ks.l == 12
    assert ks.parts is not None and len(ks.parts) == 2
    assert ks.u == sum(p.u for p in ks.parts)
    assert len(ks.node_bits(1)) == sum(len(p.node_bits(1)) for p in ks.parts)
    # Pairwise part: 6 bits over pairs; comb part: 6 bits over triples.
    pair_groups = [g for g in ks.groups if len(g) == 2]
    triple_groups = [g for g in ks.groups if len(g) == 3]
    assert len(pair_groups) == 6 and len(triple_groups) == 4


def test_bit_values_read_the_pool():
    ks = generate(SchemeSpec.parse("pairwise"), 3, 4, seed=1)
    idx = ks.common_bits(1, 2)
    assert ks.bit_values(idx).to01() == "".join(
        str(ks.pool[k]) for k in idx
    )


def test_generate_validation():
    with pytest.raises(ValueError):
        generate(SchemeSpec.parse("pairwise"), 1, 4, seed=0)
    with pytest.raises(ValueError):
        generate(SchemeSpec.parse("pairwise"), 4, 0, seed=0)


def test_keystore_query_validation():
    ks = generate(SchemeSpec.parse("pairwise"), 4, 6, seed=0)
    with pytest.raises(ValueError):
        ks.common_bits(1, 1)
    with pytest.raises(ValueError):
        ks.node_bits(5)
    with pytest.raises(ValueError):
        ks.unhacked_common_indices([(1, 2)], [2])


def test_random_regular_groups_properties():
    groups = random_regular_groups(6, 3, 4, seed=0)
    assert len(set(groups)) == 4
    counts = {i: 0 for i in range(1, 7)}
    for g in groups:
        assert len(set(g)) == 3
        for i in g:
            counts[i] += 1
    assert all(c == 2 for c in counts.values())
    with pytest.raises(ValueError):
        random_regular_groups(6, 3, 5, seed=0)
