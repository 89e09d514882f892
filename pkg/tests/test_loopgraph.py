import random

import pytest
from hypothesis import given, strategies as st

from loopshift.errors import LoopNotFound, NotIrreducible
from loopshift.loopgraph import (LabeledLoopGraph, Loop, check_condition_star,
                                 delete_loop_step, edge_symbols, first_return_series,
                                 from_series, loop_name, split_graph, split_symbol)
from loopshift.series import Series, divide_one_minus, mul_star, star
from oracles import brute_first_returns, random_irreducible


def test_loop_names():
    assert [loop_name(i) for i in (0, 1, 25, 26, 27, 701, 702)] == \
        ["a", "b", "z", "aa", "ab", "zz", "aaa"]
    assert len({loop_name(i) for i in range(2000)}) == 2000


def test_edge_symbols_round_trip():
    assert edge_symbols("c", 1) == ("c",)
    assert edge_symbols("ab", 3) == ("ab1", "ab2", "ab3")
    for sym, want in (("c", ("c", 0)), ("ab3", ("ab", 2)), ("k12", ("k", 11))):
        assert split_symbol(sym) == want


@given(st.lists(st.integers(0, 3), min_size=1, max_size=8))
def test_from_series_census(coeffs):
    f = Series.from_coeffs(coeffs)
    G = from_series(f, f.degree)
    assert G.census() == f
    assert G.has_distinct_labels()


def test_budget_cannot_exceed_degree():
    with pytest.raises(ValueError):
        from_series(Series.from_coeffs([1], 3), 4)


def test_delete_loop_step_small():
    # 2z + z^2 without one fixed loop: c, c a^n for both remaining loops
    G = from_series(Series.from_coeffs([2, 1], 3), 3)
    a = G.loops_of_length(1)[0]
    H = delete_loop_step(G, a)
    assert H.census() == Series.from_coeffs([1, 2, 2])
    assert Loop(("b", "a", "a"), ("b", "a", "a")) in H
    assert a not in H
    with pytest.raises(LoopNotFound):
        delete_loop_step(H, a)


@given(st.lists(st.integers(0, 3), min_size=2, max_size=7), st.integers(0, 20))
def test_delete_loop_step_matches_series(coeffs, pick):
    f = Series.from_coeffs(coeffs)
    G = from_series(f, f.degree)
    if not G.loops:
        return
    l = G.loops[pick % len(G.loops)]
    H = delete_loop_step(G, l)
    assert H.census() == divide_one_minus(f, Series.monomial(l.length, f.degree))
    assert H.has_distinct_labels()


@given(st.lists(st.integers(0, 2), min_size=2, max_size=7), st.integers(0, 99))
def test_split_graph_matches_h_kstar(coeffs, seed):
    f = Series.from_coeffs(coeffs)
    G = from_series(f, f.degree)
    if len(G.loops) < 2:
        return
    rng = random.Random(seed)
    heads = [lp for lp in G.loops if rng.random() < 0.5] or [G.loops[0]]
    tails = [lp for lp in G.loops if lp not in heads]
    h = Series.from_coeffs([sum(lp.length == n for lp in heads) for n in range(1, f.degree + 1)])
    k = Series.from_coeffs([sum(lp.length == n for lp in tails) for n in range(1, f.degree + 1)])
    assert split_graph(G, heads, tails).census() == mul_star(h, star(k))


def test_condition_star():
    G = from_series(Series.from_coeffs([2, 1], 6), 6)
    W = G.loops[0]
    assert check_condition_star(G, W)
    # after deleting a loop that is not W, W still only starts labels
    H = delete_loop_step(G, G.loops[1])
    assert check_condition_star(H, W)
    # deleting W itself spreads its symbol into the middle of labels
    H = delete_loop_step(G, W)
    assert not check_condition_star(H, W)


def test_first_return_golden():
    assert first_return_series([[1, 1], [1, 0]], 0, 6) == Series.from_coeffs([1, 1, 0, 0, 0, 0])


def test_first_return_multiplicity():
    # two parallel edges out and one back: 2 first returns of length 2
    assert first_return_series([[0, 2], [1, 0]], 0, 4).coeffs == (0, 2, 0, 0)


def test_first_return_matches_dfs():
    rng = random.Random(17)
    for _ in range(25):
        A = random_irreducible(rng, rng.randint(1, 5))
        v = rng.randrange(len(A))
        assert list(first_return_series(A, v, 8).coeffs) == brute_first_returns(A, v, 8)


def test_first_return_errors():
    with pytest.raises(NotIrreducible):
        first_return_series([[0, 1], [0, 0]], 0, 5)
    with pytest.raises(NotIrreducible):
        first_return_series([[0]], 0, 5)
    with pytest.raises(ValueError):
        first_return_series([[1, 1]], 0, 5)
    with pytest.raises(ValueError):
        first_return_series([[1]], 1, 5)


def test_fresh_graph_labels():
    G = LabeledLoopGraph.fresh([("a", 1), ("b", 3)], 5)
    assert G.base_alphabet == ("a", "b1", "b2", "b3")
    assert G.base_lengths() == {"a": 1, "b": 3}
