# LwD test suite
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
import itertools

import numpy
from numpy.testing import assert_equal, assert_allclose
import pytest
from hypothesis import given, settings, strategies as st

from lwd.problems import (ProblemSpec, PROBLEMS, DEFERRED, objective, partial_objective,
                          is_independent, greedy_complete, sample_weights)
from lwd.problems import _vertex_gain

from .strategies import graphs, graphs_with_state

D = DEFERRED


def spec_for(kind, n, rng=None):
    rng = numpy.random.default_rng(0) if rng is None else rng
    if kind == 'mwis':
        return ProblemSpec('mwis', weights=sample_weights(n, rng))
    return ProblemSpec(kind, lam=0.5, beta=1.0, gamma=0.7)


def test_spec_defaults():
    spec = ProblemSpec('PCMIS')
    assert spec.kind == 'pcmis'
    assert spec.lam == 0.5
    assert (spec.beta, spec.gamma) == (1.0, 1.0)
    assert [ProblemSpec(k).uses_cleanup for k in PROBLEMS] == [True, True, False, False, False]
    assert ProblemSpec('mwis').num_features == 3
    assert ProblemSpec('maxcut').num_features == 2


@pytest.mark.parametrize("kwargs", [
    dict(kind='tsp'),
    dict(kind='pcmis', lam=0.0),
    dict(kind='mwis', weights=[1.0, 0.0]),
    dict(kind='mwis', weights=[1.0, -2.0]),
])
def test_spec_rejects(kwargs):
    with pytest.raises(ValueError):
        ProblemSpec(**kwargs)


def test_mwis_needs_weights(edge):
    with pytest.raises(ValueError):
        objective(ProblemSpec('mwis'), edge, [1, 0])
    with pytest.raises(ValueError):
        ProblemSpec('mwis', weights=[1.0]).vertex_weights(2)


def test_objective_examples(triangle, edge):
    assert objective(ProblemSpec('mis'), triangle, [1, 0, 0]) == 1
    assert objective(ProblemSpec('pcmis', lam=0.5), edge, [1, 1]) == 1.5
    ising = ProblemSpec('ising', beta=1.0, gamma=1.0)
    assert objective(ising, edge, [1, 0]) == 1
    assert objective(ising, edge, [1, 1]) == 1
    spec = ProblemSpec('mwis', weights=[0.5, 2.0, 1.5])
    assert objective(spec, triangle, [0, 1, 0]) == 2.0
    assert objective(ProblemSpec('maxcut'), triangle, [1, 0, 0]) == 2


def test_ising_on_single_edge(edge):
    spec = ProblemSpec('ising', beta=1.0, gamma=1.0)
    values = dict((x, objective(spec, edge, x)) for x in itertools.product([0, 1], repeat=2))
    assert values == {(0, 0): -3, (0, 1): 1, (1, 0): 1, (1, 1): 1}


def test_objective_length_mismatch(triangle):
    with pytest.raises(ValueError):
        objective(ProblemSpec('mis'), triangle, [1, 0])
    with pytest.raises(ValueError):
        partial_objective(ProblemSpec('mis'), triangle, [D, D])


def test_partial_objective_examples(path3):
    for kind in PROBLEMS:
        assert partial_objective(spec_for(kind, 3), path3, [D, D, D]) == 0
    assert partial_objective(ProblemSpec('maxcut'), path3, [1, 0, D]) == 1
    assert partial_objective(ProblemSpec('mis'), path3, [1, 0, D]) == 1


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=10), st.sampled_from(PROBLEMS), st.data())
def test_partial_objective_of_complete_state(g, kind, data):
    x = numpy.array(data.draw(st.lists(st.sampled_from([0, 1]), min_size=g.n, max_size=g.n)),
                    dtype=numpy.int8)
    spec = spec_for(kind, g.n)
    assert_allclose(partial_objective(spec, g, x), objective(spec, g, x))


def test_is_independent(triangle, edge):
    assert is_independent(triangle, [1, 0, 0])
    assert not is_independent(edge, [1, 1])
    assert is_independent(edge, [D, D])


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=4))
def test_is_independent_exhaustive(g):
    edges = g.edges().tolist()
    for x in itertools.product([0, 1], repeat=g.n):
        expected = not any(x[u] and x[v] for u, v in edges)
        assert is_independent(g, x) == expected


def test_greedy_complete_examples(edge, triangle):
    assert_equal(greedy_complete(ProblemSpec('mis'), edge, [D, D]), [0, 0])
    assert_equal(greedy_complete(ProblemSpec('maxcut'), edge, [1, D]), [1, 0])
    spec = ProblemSpec('pcmis', lam=0.5)
    x = greedy_complete(spec, triangle, [D, D, D])
    # the third vertex ties (gain 1 - 2 * 0.5 = 0) and goes to 0
    assert_equal(x, [1, 1, 0])
    assert objective(spec, triangle, x) == 1.5


def test_greedy_complete_keeps_determined(path3):
    x = greedy_complete(ProblemSpec('ising'), path3, [0, D, 0])
    assert (x[0], x[2]) == (0, 0)
    assert set(numpy.unique(x)) <= {0, 1}


@settings(max_examples=60, deadline=None)
@given(graphs_with_state(max_n=10), st.sampled_from(["pcmis", "maxcut", "ising"]))
def test_greedy_complete_scan(gs, kind):
    g, s = gs
    spec = spec_for(kind, g.n)
    x = greedy_complete(spec, g, s)
    assert not (x == D).any()
    determined = s != D
    assert_equal(x[determined], s[determined])
    # replay the scan: every choice is a best choice given the previous ones
    current = s.copy()
    for i in numpy.flatnonzero(s == D):
        before = partial_objective(spec, g, current)
        gains = [_vertex_gain(spec, g, current, i, v) for v in (0, 1)]
        assert gains[x[i]] == max(gains)
        current[i] = x[i]
        assert_allclose(partial_objective(spec, g, current) - before, gains[x[i]], atol=1e-9)
    assert_allclose(partial_objective(spec, g, current), objective(spec, g, x))


@settings(max_examples=60, deadline=None)
@given(graphs_with_state(max_n=10, values=(0, 1, D)),
       st.sampled_from(['pcmis', 'maxcut']))
def test_greedy_complete_never_decreases(gs, kind):
    g, s = gs
    spec = spec_for(kind, g.n)
    current = s.copy()
    x = greedy_complete(spec, g, s)
    for i in numpy.flatnonzero(s == D):
        before = partial_objective(spec, g, current)
        current[i] = x[i]
        assert partial_objective(spec, g, current) >= before - 1e-12


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=10), st.sampled_from(PROBLEMS), st.data())
def test_telescoping_potential(g, kind, data):
    """Differences of the partial objective along any trajectory add up to the objective."""
    spec = spec_for(kind, g.n)
    order = data.draw(st.permutations(list(range(g.n))))
    x = numpy.array(data.draw(st.lists(st.sampled_from([0, 1]), min_size=g.n,
                                       max_size=g.n)), dtype=numpy.int8)
    state = numpy.full(g.n, D, dtype=numpy.int8)
    total = 0.0
    for i in order:
        before = partial_objective(spec, g, state)
        state[i] = x[i]
        total += partial_objective(spec, g, state) - before
    assert_allclose(total, objective(spec, g, x), atol=1e-9)


def test_sample_weights_positive():
    w = sample_weights(10000, numpy.random.default_rng(1), mean=0.0, std=1.0)
    assert (w > 0).all()
    assert w.min() == 1e-6
    w = sample_weights(5000, numpy.random.default_rng(2))
    assert abs(w.mean() - 1.0) < 0.01


@settings(max_examples=40, deadline=None)
@given(graphs_with_state(max_n=10), st.sampled_from(['mis', 'mwis']))
def test_greedy_complete_excludes_for_cleanup_problems(gs, kind):
    g, s = gs
    x = greedy_complete(spec_for(kind, g.n), g, s)
    assert_equal(x[s == D], 0)
    assert_equal(x[s != D], s[s != D])
