# LwD test suite -- end-to-end checks at desk scale
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
"""
Large randomized checks and full training runs. All tests here are
marked ``slow``; run them with ``pytest -m slow``.
"""
import itertools

import numpy
from numpy.testing import assert_allclose
import pytest
from hypothesis import given, settings, HealthCheck

from lwd import nn
from lwd.agent import ActorCritic, ConstantPolicy
from lwd.env import reset, cleanup, rollout
from lwd.generators import gen_er, sample_dataset
from lwd.ppo import (TrainConfig, train, evaluate_best_of_k, mean_pairwise_deviation, ppo_loss,
                     validation_set, validate)
from lwd.problems import ProblemSpec, INCLUDED, DEFERRED, objective, is_independent
from lwd.sat import sat3_to_mis
from lwd.solvers import brute_force_mis, greedy_mis, local_search_2imp

from .strategies import cnf_formulas

pytestmark = pytest.mark.slow

MIS = ProblemSpec('mis')


def clean_state(g, s):
    """No adjacent included pair and no deferred vertex next to an included one."""
    included = s == INCLUDED
    for u, v in g.edges():
        if included[u] and included[v]:
            return False
        if (included[u] and s[v] == DEFERRED) or (included[v] and s[u] == DEFERRED):
            return False
    return True


def test_transition_invariants():
    rng = numpy.random.default_rng(1)
    checked = 0
    while checked < 10000:
        g = gen_er(int(rng.integers(1, 51)), rng.uniform(0.02, 0.5), int(rng.integers(1 << 30)))
        e = reset(g, MIS, 1000)
        while not e.done and checked < 10000:
            action = rng.integers(0, 3, size=len(e.deferred()))
            determined = e.state != DEFERRED
            before = e.state.copy()
            e.step(action)
            assert clean_state(g, e.state)
            assert (e.state[determined] == before[determined]).all()
            checked += 1


def test_cleanup_postconditions_on_arbitrary_states():
    rng = numpy.random.default_rng(2)
    for trial in range(2000):
        g = gen_er(int(rng.integers(1, 51)), 0.1, trial)
        s = cleanup(g, rng.integers(0, 3, size=g.n))
        assert clean_state(g, s)


@pytest.mark.parametrize("coupled", [False, True])
def test_reward_telescoping_mis(coupled):
    rng = numpy.random.default_rng(3)
    graphs = [gen_er(int(rng.integers(5, 40)), 0.15, s) for s in range(500)]
    batch = rollout(ConstantPolicy(), graphs, MIS, 8, coupled=coupled, rng=rng)
    assert len(batch.episodes) == (1000 if coupled else 500)
    for ep in batch.episodes:
        assert is_independent(ep.graph, ep.solution)
        assert ep.total_reward == ep.solution.sum()
        assert ep.total_reward == sum(batch.steps[i].reward for i in ep.steps)
    if coupled:
        for a, b in zip(batch.episodes[::2], batch.episodes[1::2]):
            distance = numpy.abs(a.solution.astype(int) - b.solution).sum()
            assert a.total_div == b.total_div == distance


@pytest.mark.parametrize("kind", ['pcmis', 'maxcut', 'ising'])
def test_reward_telescoping_objectives(kind):
    rng = numpy.random.default_rng(4)
    spec = ProblemSpec(kind, lam=0.5, beta=1.0, gamma=0.5)
    graphs = [gen_er(int(rng.integers(5, 30)), 0.2, s) for s in range(1000)]
    batch = rollout(ConstantPolicy((0.25, 0.25, 0.5)), graphs, spec, 6, rng=rng)
    for ep in batch.episodes:
        total = sum(batch.steps[i].reward for i in ep.steps)
        assert total == pytest.approx(objective(spec, ep.graph, ep.solution), abs=1e-9)


@pytest.fixture(scope="module")
def full_loss():
    """PPO loss of a 4-layer default-width agent on coupled rollouts of graphs with n <= 8."""
    rng = numpy.random.default_rng(5)
    cfg = TrainConfig()
    agent = ActorCritic(in_features=2, hidden=cfg.hidden, layers=cfg.layers, rng=6)
    graphs = [gen_er(int(rng.integers(3, 9)), 0.4, s) for s in range(4)]
    batch = rollout(agent, graphs, MIS, 4, coupled=True, rng=rng)
    steps = batch.steps[:8]
    adv = rng.normal(size=len(steps))
    ret = rng.normal(size=len(steps))

    def f(store):
        return ppo_loss(steps, adv, ret, agent, cfg, tape=nn.Tape(), store=store)[0]
    return agent, f


def test_full_loss_gradient(full_loss):
    agent, f = full_loss
    assert agent.layers == 4
    assert nn.grad_check(f, agent.store, eps=1e-5, max_coords=25, one_sided=True,
                         rng=numpy.random.default_rng(0)) < 1e-3


def test_full_loss_gradient_float32(full_loss):
    agent, f = full_loss
    single, value = nn.gradients(f, agent.store, dtype=numpy.float32)
    double, _ = nn.gradients(f, agent.store, dtype=numpy.float64)
    for name in agent.store:
        assert single.grads[name].dtype == numpy.float32
        scale = numpy.abs(double.grads[name]).max()
        assert_allclose(single.grads[name], double.grads[name], rtol=1e-3, atol=1e-4 * scale)
    # finite differences of a float32 loss resolve gradients only down to the round-off floor
    atol = nn.roundoff_atol(value, 1e-3, numpy.float32, factor=64)
    assert nn.grad_check(f, agent.store, eps=1e-3, dtype=numpy.float32, max_coords=25,
                         atol=atol, one_sided=True, rng=numpy.random.default_rng(1)) < 1e-3


def test_local_search_dominance():
    graphs = sample_dataset('er', 20, 30, 200, 7, p=0.15)
    greedy, improved = [], []
    for g in graphs:
        members = greedy_mis(g)
        better = local_search_2imp(g, members)
        optimum = brute_force_mis(g)[0]
        assert len(members) <= len(better) <= optimum
        greedy.append(len(members))
        improved.append(len(better))
    assert numpy.mean(improved) > numpy.mean(greedy)


@settings(max_examples=3000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(cnf_formulas(max_vars=4, max_clauses=6))
def test_sat_reduction_soundness(clauses):
    num_vars = max(abs(lit) for c in clauses for lit in c)
    satisfiable = any(all(any((lit > 0) == values[abs(lit) - 1] for lit in c) for c in clauses)
                      for values in itertools.product([False, True], repeat=num_vars))
    g, _ = sat3_to_mis(clauses)
    assert (brute_force_mis(g)[0] == len(clauses)) == satisfiable


def desk_run(tmpdir, name, **overrides):
    cfg = TrainConfig.desk(outdir=str(tmpdir.join(name)), log_wall_time=False, **overrides)
    return cfg, train(cfg)


def test_desk_training_approximation_ratio(tmpdir):
    cfg, result = desk_run(tmpdir, "desk")
    agent = ActorCritic.from_checkpoint(result['best'])
    graphs = sample_dataset('er', 15, 20, 100, 1001, name="test", p=0.15)
    results = evaluate_best_of_k(agent, graphs, MIS, cfg.horizon, k=10, seed=11)
    ratios = []
    for g, r in zip(graphs, results):
        assert is_independent(g, r['solution'])
        ratios.append(r['best'] / brute_force_mis(g)[0])
    assert numpy.mean(ratios) >= 0.95


def test_diversification_effect(tmpdir):
    graphs = sample_dataset('er', 15, 20, 50, 2002, name="test", p=0.15)
    deviation, best = {}, {}
    for alpha in (0.0, 0.1):
        dev, obj = [], []
        for seed in range(3):
            cfg, result = desk_run(tmpdir, "a%g-s%d" % (alpha, seed), alpha=alpha, seed=seed)
            agent = ActorCritic.from_checkpoint(result['best'])
            results = evaluate_best_of_k(agent, graphs, MIS, cfg.horizon, k=10, seed=seed)
            dev.extend(mean_pairwise_deviation(r['solutions']) for r in results)
            obj.extend(r['best'] for r in results)
        deviation[alpha], best[alpha] = numpy.mean(dev), numpy.mean(obj)
    assert deviation[0.1] > deviation[0.0]
    assert best[0.1] >= 0.99 * best[0.0]


def test_short_training_beats_uniform_policy(tmpdir):
    cfg, result = desk_run(tmpdir, "short", updates=200)
    graphs, specs = validation_set(cfg)
    uniform, _ = validate(ConstantPolicy(), graphs, specs, cfg)
    trained, _ = validate(result['agent'], graphs, specs, cfg)
    assert result['best_val'] > uniform
    assert trained > uniform
