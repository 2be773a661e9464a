# LwD test suite
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
import itertools

import numpy
from numpy.testing import assert_equal
import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from lwd import config
from lwd.generators import gen_er
from lwd.graph import Graph
from lwd.problems import ProblemSpec, PROBLEMS, objective, is_independent, sample_weights
from lwd.solvers import (SizeCapError, brute_force_mis, brute_force_generic, naive_mis,
                         greedy_mis, local_search_2imp)

from .conftest import path_graph, cycle_graph, complete_graph, star_graph
from .strategies import graphs


def indicator(g, members):
    x = numpy.zeros(g.n, dtype=numpy.int8)
    x[numpy.asarray(members, dtype=numpy.int64)] = 1
    return x


def networkx_mis(g):
    """Independence number as the clique number of the complement."""
    if g.n == 0:
        return 0
    return max(len(c) for c in nx.find_cliques(nx.complement(g.to_networkx())))


def is_maximal(g, x):
    x = numpy.asarray(x, dtype=bool)
    return all(x[v] or x[g.neighbors(v)].any() for v in range(g.n))


@pytest.mark.parametrize("g,size", [
    (path_graph(5), 3),
    (cycle_graph(5), 2),
    (cycle_graph(6), 3),
    (complete_graph(6), 1),
    (star_graph(7), 7),
    (Graph.from_edges(4, []), 4),
    (Graph.from_edges(0, []), 0),
])
def test_brute_force_mis_examples(g, size):
    value, witness = brute_force_mis(g)
    assert value == size
    assert len(witness) == size
    assert_equal(witness, numpy.sort(witness))
    assert is_independent(g, indicator(g, witness))


@settings(max_examples=80, deadline=None)
@given(graphs(max_n=12))
def test_mis_oracles_agree(g):
    size, witness = brute_force_mis(g)
    assert naive_mis(g)[0] == size
    assert networkx_mis(g) == size
    assert is_independent(g, indicator(g, witness))


def test_brute_force_mis_medium():
    g = gen_er(24, 0.2, 11)
    size, witness = brute_force_mis(g)
    assert size == networkx_mis(g)
    assert is_maximal(g, indicator(g, witness))


def test_size_caps():
    g = gen_er(10, 0.3, 0)
    with pytest.raises(SizeCapError):
        brute_force_mis(g, cap=9)
    with pytest.raises(SizeCapError):
        brute_force_generic(ProblemSpec('maxcut'), g, cap=5)
    assert config.cfg.getint('oracle', 'mis_cap') == 40
    with pytest.raises(SizeCapError):
        brute_force_mis(gen_er(41, 0.1, 0))
    with pytest.raises(SizeCapError):
        naive_mis(gen_er(23, 0.1, 0))


def test_brute_force_generic_examples(triangle, edge):
    value, x = brute_force_generic(ProblemSpec('maxcut'), triangle)
    assert value == 2
    assert_equal(x, [1, 0, 0])
    value, x = brute_force_generic(ProblemSpec('pcmis', lam=0.5), triangle)
    # a pair ties with the whole triangle; the smaller bitmask wins
    assert value == 1.5
    assert_equal(x, [1, 1, 0])
    value, x = brute_force_generic(ProblemSpec('ising', beta=1.0, gamma=1.0), edge)
    assert value == 1
    assert_equal(x, [1, 0])
    spec = ProblemSpec('mwis', weights=[1.0, 2.5, 1.0])
    value, x = brute_force_generic(spec, path_graph(3))
    assert value == 2.5
    assert_equal(x, [0, 1, 0])


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=8), st.sampled_from(PROBLEMS))
def test_brute_force_generic_is_exhaustive(g, kind):
    if kind == 'mwis':
        spec = ProblemSpec(kind, weights=sample_weights(g.n, numpy.random.default_rng(g.n)))
    else:
        spec = ProblemSpec(kind, lam=0.75, beta=0.5, gamma=1.0)
    value, x = brute_force_generic(spec, g, chunk=16)
    assert objective(spec, g, x) == pytest.approx(value)
    best = -numpy.inf
    for y in itertools.product([0, 1], repeat=g.n):
        if spec.uses_cleanup and not is_independent(g, y):
            continue
        best = max(best, objective(spec, g, y))
    assert value == pytest.approx(best)


def test_greedy_mis_examples():
    assert_equal(greedy_mis(star_graph(5)), [1, 2, 3, 4, 5])
    assert_equal(greedy_mis(path_graph(5)), [0, 2, 4])
    assert_equal(greedy_mis(complete_graph(4)), [0])
    assert_equal(greedy_mis(Graph.from_edges(0, [])), [])


@settings(max_examples=80, deadline=None)
@given(graphs(max_n=20))
def test_greedy_mis_is_maximal(g):
    x = indicator(g, greedy_mis(g))
    assert is_independent(g, x)
    assert is_maximal(g, x)


def test_local_search_two_improvement():
    # the star center is replaced by two (then all) leaves
    assert_equal(local_search_2imp(star_graph(3), [0]), [1, 2, 3])
    # free vertices are inserted before any swap is tried
    g = Graph.from_edges(5, [(0, 1), (0, 2), (2, 3), (3, 4)])
    assert_equal(local_search_2imp(g, [2]), [1, 2, 4])


def test_local_search_rejects_dependent_input(edge):
    with pytest.raises(ValueError):
        local_search_2imp(edge, [0, 1])


@settings(max_examples=80, deadline=None)
@given(graphs(max_n=16), st.data())
def test_local_search_improves(g, data):
    start = data.draw(st.permutations(list(range(g.n))))
    members = []
    taken = numpy.zeros(g.n, dtype=bool)
    for v in start[:data.draw(st.integers(0, g.n))]:
        if not taken[v] and not taken[g.neighbors(v)].any():
            members.append(v)
            taken[v] = True
    result = local_search_2imp(g, members)
    x = indicator(g, result)
    assert is_independent(g, x)
    assert is_maximal(g, x)
    assert len(result) >= len(members)
    assert len(result) <= brute_force_mis(g)[0]
    assert_equal(local_search_2imp(g, result), result)
    # no 2-improvement is left
    for v in result:
        tight = [u for u in g.neighbors(v) if not x[u] and x[g.neighbors(u)].sum() == 1]
        for u, w in itertools.combinations(tight, 2):
            assert w in g.neighbors(u)
