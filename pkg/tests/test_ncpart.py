import itertools

import pytest
from hypothesis import given, strategies as st

from freeprob.ncpart import (
    Partition,
    catalan,
    enumerate_nc,
    is_noncrossing,
    kreweras,
    kreweras_fast_path_verified,
    leq,
    moebius_kreweras_product,
    moebius_printed_product,
    moebius_recursive,
    moebius_to_top,
)


def all_set_partitions(n):
    def rec(elems):
        if not elems:
            yield []
            return
        first, rest = elems[0], elems[1:]
        for part in rec(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1:]
            yield [[first]] + part

    for blocks in rec(list(range(1, n + 1))):
        yield Partition.from_blocks(blocks, n)


@pytest.mark.parametrize("n, expected", [(0, 1), (1, 1), (3, 5), (4, 14), (10, 16796), (30, 3814986502092304)])
def test_catalan(n, expected):
    assert catalan(n) == expected


@pytest.mark.parametrize("n", [-1, 31])
def test_catalan_range(n):
    with pytest.raises(OverflowError):
        catalan(n)


def test_parse_and_format_roundtrip():
    text = "{{1,4,5},{2},{3},{6,8},{7}}"
    p = Partition.parse(" { {1, 4,5},{2},{3},{6,8}, {7}} ")
    assert str(p) == text and p.n == 8
    assert is_noncrossing(p)


@pytest.mark.parametrize("bad", ["{{1,2},{2}}", "{1,2}", "{{1},{3}}", ""])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        Partition.parse(bad)


def test_is_noncrossing_examples():
    assert not is_noncrossing(Partition.parse("{{1,3},{2,4}}"))
    for n in range(1, 9):
        assert is_noncrossing(Partition.singletons(n))


@pytest.mark.parametrize("n", range(1, 11))
def test_enumeration_count(n):
    parts = enumerate_nc(n)
    assert len(parts) == catalan(n)
    assert len(set(parts)) == len(parts)


def test_enumeration_small_cases():
    assert [str(p) for p in enumerate_nc(1)] == ["{{1}}"]
    for n in (3, 4, 5):
        brute = {p for p in all_set_partitions(n) if is_noncrossing(p)}
        assert brute == set(enumerate_nc(n))
    excluded = set(all_set_partitions(4)) - set(enumerate_nc(4))
    assert [str(p) for p in excluded] == ["{{1,3},{2,4}}"]


def test_enumeration_order_is_lexicographic():
    parts = list(enumerate_nc(5))
    assert parts == sorted(parts, key=lambda p: p.blocks)
    idx = enumerate_nc(5)
    assert all(idx.index(p) == i for i, p in enumerate(parts))


def test_leq_examples():
    p, q = Partition.parse("{{1,2},{3}}"), Partition.parse("{{1,3},{2}}")
    assert not leq(p, q) and not leq(q, p)
    for r in enumerate_nc(4):
        assert leq(Partition.singletons(4), r)
        assert leq(r, Partition.one(4))


@pytest.mark.parametrize("n", range(1, 7))
def test_leq_partial_order(n):
    parts = list(enumerate_nc(n))
    up = {p: frozenset(q for q in parts if leq(p, q)) for p in parts}
    for p in parts:
        assert p in up[p]
        for q in up[p]:
            if q != p:
                assert p not in up[q]
            # transitivity: everything above q is above p
            assert up[q] <= up[p]


@pytest.mark.parametrize("n", range(1, 7))
def test_moebius_defining_sum(n):
    top = Partition.one(n)
    for p in enumerate_nc(n):
        total = sum(moebius_to_top(s) for s in enumerate_nc(n) if leq(p, s))
        assert total == (1 if p == top else 0)


@pytest.mark.parametrize("n", range(1, 9))
def test_moebius_singletons(n):
    assert moebius_to_top(Partition.singletons(n)) == (-1) ** (n - 1) * catalan(n - 1)
    assert moebius_to_top(Partition.one(n)) == 1


def test_moebius_small_values():
    assert moebius_to_top(Partition.singletons(2)) == -1
    assert moebius_to_top(Partition.singletons(3)) == 2


def test_kreweras_product_matches_recursion():
    assert kreweras_fast_path_verified(7)
    for n in range(1, 8):
        for p in enumerate_nc(n):
            assert moebius_kreweras_product(p) == moebius_recursive(p)


def test_printed_product_disagrees_at_n2():
    # the block-wise product without the Kreweras complement has the wrong sign
    s2 = Partition.singletons(2)
    assert moebius_printed_product(s2) == 1
    assert moebius_recursive(s2) == -1


def test_moebius_large_n_uses_fast_path():
    assert moebius_to_top(Partition.singletons(12)) == -catalan(11)


def test_kreweras_examples():
    assert kreweras(Partition.parse("{{1,2},{3}}")) == Partition.parse("{{1},{2,3}}")
    for n in range(1, 7):
        assert kreweras(Partition.one(n)) == Partition.singletons(n)
        assert kreweras(Partition.singletons(n)) == Partition.one(n)


@pytest.mark.parametrize("n", range(1, 7))
def test_kreweras_twice_is_rotation(n):
    for p in enumerate_nc(n):
        k = kreweras(p)
        assert is_noncrossing(k)
        assert len(p) + len(k) == n + 1
        assert kreweras(k) == p.relabel(-1)


@given(st.integers(1, 9), st.data())
def test_kreweras_is_order_reversing(n, data):
    parts = enumerate_nc(n)
    p = parts[data.draw(st.integers(0, len(parts) - 1))]
    q = parts[data.draw(st.integers(0, len(parts) - 1))]
    if leq(p, q):
        assert leq(kreweras(q), kreweras(p))


def test_relabel_identity():
    p = Partition.parse("{{1,4,5},{2},{3},{6,8},{7}}")
    assert p.relabel(0) == p
    assert p.relabel(3).relabel(-3) == p
    assert list(itertools.islice(p.labels(), 3)) == [0, 1, 2]
