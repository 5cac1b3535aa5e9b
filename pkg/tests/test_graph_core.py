import itertools

import pytest
from hypothesis import given, settings, strategies as st

from endwalk.graph_core import (UNREACHABLE, Digraph, MultiWalk, Walk, _dfs, bfs_distances,
                                enumerate_closed, enumerate_saws, graph_distance, iter_saws)


def complete(n):
    return Digraph.from_edges(n, list(itertools.combinations(range(n), 2)))


def cycle(n):
    return Digraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n):
    return Digraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


@st.composite
def small_graphs(draw, max_n=7):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return Digraph.from_edges(n, chosen)


def naive_saws(g, origin, max_len):
    counts = [0] * (max_len + 1)

    def rec(v, seen, depth):
        counts[depth] += 1
        if depth == max_len:
            return
        for w in g.neighbours(v):
            if w not in seen:
                # parallel arcs count separately
                mult = sum(1 for a in g.out_arcs(v) if g.head[a] == w)
                for _ in range(mult):
                    rec(w, seen | {w}, depth + 1)

    rec(origin, {origin}, 0)
    return counts


def test_triangle_counts():
    assert enumerate_saws(complete(3), 0, 2) == [1, 2, 2]


def test_k4_counts():
    assert enumerate_saws(complete(4), 0, 3) == [1, 3, 6, 6]


def test_triangle_closed():
    sar, sap = enumerate_closed(complete(3), 0, 3)
    assert sar == [0, 2, 2, 0]
    assert sap == [0, 0, 0, 1]


@pytest.mark.parametrize("m", range(3, 9))
def test_cycle_has_one_polygon(m):
    _, sap = enumerate_closed(cycle(m), 0, m)
    assert sap[m] == 1
    assert sum(sap) == 1


def test_path_has_no_polygons():
    _, sap = enumerate_closed(path(3), 1, 2)
    assert sap == [0, 0, 0]


def test_zero_length():
    assert enumerate_saws(complete(4), 2, 0) == [1]


def test_bad_inputs():
    with pytest.raises(ValueError):
        enumerate_saws(complete(3), 5, 2)
    with pytest.raises(ValueError):
        enumerate_saws(complete(3), 0, -1)
    with pytest.raises(ValueError):
        Digraph(2, [(0, 0)], [0])
    with pytest.raises(ValueError):
        Digraph(2, [(0, 1), (1, 0)], [0, 1])


def test_walk_operations():
    g = path(4)
    w = next(w for w in iter_saws(g, 0, 3) if w.length == 3)
    assert w.vertices == (0, 1, 2, 3)
    assert w.is_walk_in(g) and w.is_self_avoiding()
    assert w.sub(1, 2).vertices == (1, 2)
    assert w.sub(0, 1).concat(w.sub(1, 3)) == w
    back = w.reversed_in(g)
    assert back.vertices == (3, 2, 1, 0) and back.is_walk_in(g)
    with pytest.raises(ValueError):
        Walk((0, 1), ())
    with pytest.raises(ValueError):
        w.sub(0, 1).concat(w.sub(2, 3))


def test_multiwalk_components():
    mw = MultiWalk([("v", 0), ("a", 5), ("v", 1), ("v", 7), ("v", 8), ("a", 2), ("v", 9)])
    comps = mw.components()
    assert [c.vertices for c in comps] == [(0, 1), (7,), (8, 9)]
    with pytest.raises(ValueError):
        MultiWalk([("a", 1), ("v", 0)])


def test_distances():
    g = path(5)
    assert bfs_distances(g, 0) == [0, 1, 2, 3, 4]
    split = Digraph.from_edges(4, [(0, 1), (2, 3)])
    assert bfs_distances(split, 0) == [0, 1, -1, -1]
    assert graph_distance(split, 0, 3) is UNREACHABLE
    assert graph_distance(g, 4, 1) == 3


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.integers(0, 6))
def test_dfs_matches_naive_recursion(g, max_len):
    assert enumerate_saws(g, 0, max_len) == naive_saws(g, 0, max_len)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.integers(0, 6))
def test_iterator_agrees_with_counter(g, max_len):
    counts = [0] * (max_len + 1)
    seen = set()
    for w in iter_saws(g, 0, max_len):
        assert w.is_walk_in(g) and w.is_self_avoiding()
        assert w.arcs not in seen
        seen.add(w.arcs)
        counts[w.length] += 1
    assert counts == enumerate_saws(g, 0, max_len)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.integers(1, 6))
def test_first_arc_split_partitions_walks(g, max_len):
    total = [0] * (max_len + 1)
    total[0] = 1
    for a in g.out_arcs(0):
        part = [0] * (max_len + 1)

        def visit(p, arcs):
            part[len(arcs)] += 1

        _dfs(g, 0, max_len, visit, first_arc=a)
        assert part[0] == 0
        total = [x + y for x, y in zip(total, part)]
    assert total == enumerate_saws(g, 0, max_len)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.integers(1, 7))
def test_returns_and_polygons_consistent(g, max_len):
    sar, sap = enumerate_closed(g, 0, max_len)
    saw = enumerate_saws(g, 0, max_len)
    assert all(r <= s for r, s in zip(sar, saw))
    assert sar[1] == g.degree(0)
    # every polygon of length n is closed by exactly two returns of length n - 1
    for n in range(3, max_len + 1):
        assert 2 * sap[n] == sar[n - 1]
