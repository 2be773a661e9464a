# LwD test suite
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
import numpy
from numpy.testing import assert_equal, assert_allclose
import pytest

from lwd import nn
from lwd.agent import (ActorCritic, ConstantPolicy, PolicyOutput, NUM_ACTIONS, entropy,
                       sample_actions, glorot, sage_layer)
from lwd.env import reset
from lwd.generators import gen_er
from lwd.graph import Graph, normalized_adjacency
from lwd.problems import ProblemSpec

from .conftest import cycle_graph, path_graph


def inputs(graphs, t=0.0):
    adjs = [normalized_adjacency(g) for g in graphs]
    feats = []
    for g in graphs:
        deg = g.degree().astype(numpy.float32)
        feats.append(numpy.column_stack([deg / max(1.0, deg.max()),
                                         numpy.full(g.n, t)]).astype(numpy.float32))
    return adjs, feats


@pytest.fixture
def agent():
    return ActorCritic(in_features=2, hidden=16, layers=3, rng=1)


def test_parameter_layout(agent):
    names = list(agent.store)
    assert names[:7] == ["layer0.W1", "layer0.W2", "layer1.W1", "layer1.W2",
                         "layer2.W1", "layer2.W2", "policy_head.W"]
    assert names[-1] == "value_head.W"
    assert "value.layer2.W2" in agent.store
    assert agent.store["layer0.W1"].shape == (2, 16)
    assert agent.store["policy_head.W"].shape == (16, NUM_ACTIONS)
    assert agent.store["value_head.W"].shape == (16, 1)
    shared = ActorCritic(in_features=3, hidden=16, layers=3, shared_trunk=True)
    assert "value.layer0.W1" not in shared.store
    assert shared.store.num_parameters() == 2 * 3 * 16 + 4 * 16 * 16 + 16 * 3 + 16


def test_glorot_range():
    w = glorot(10, 30, numpy.random.default_rng(0))
    assert w.shape == (10, 30)
    assert numpy.abs(w).max() <= numpy.sqrt(6.0 / 40)


def test_sage_layer():
    rng = numpy.random.default_rng(2)
    W1, W2 = [nn.constant(rng.normal(size=(2, 3)), dtype=numpy.float32) for _ in range(2)]
    H = numpy.array([[1.0, 2.0], [3.0, -1.0]], dtype=numpy.float32)
    adj = normalized_adjacency(Graph.from_edges(2, [(0, 1)]))
    assert_equal(adj.toarray(), [[0, 1], [1, 0]])
    expected = numpy.maximum(H.dot(W1.value) + H[::-1].dot(W2.value), 0)
    out = sage_layer(nn.constant(H), adj, W1, W2)
    assert_allclose(out.value, expected, rtol=1e-6, atol=1e-6)
    # no edges: only the self term is left
    out = sage_layer(nn.constant(H), normalized_adjacency(Graph.from_edges(2, [])), W1, W2)
    assert_allclose(out.value, numpy.maximum(H.dot(W1.value), 0), rtol=1e-6, atol=1e-6)
    out = sage_layer(nn.constant(numpy.zeros((2, 2), dtype=numpy.float32)), adj, W1, W2)
    assert_equal(out.value, 0)
    with pytest.raises(nn.ShapeError):
        sage_layer(nn.constant(H), normalized_adjacency(path_graph(3)), W1, W2)


def test_initialization_is_seeded():
    a = ActorCritic(hidden=8, layers=2, rng=4)
    b = ActorCritic(hidden=8, layers=2, rng=numpy.random.default_rng(4))
    for name in a.store:
        assert_equal(a.store[name], b.store[name])


def test_policy_rows_are_distributions(agent):
    g = gen_er(20, 0.2, 3)
    out = agent.policy_forward(g, inputs([g])[1][0])
    assert out.probs.shape == (20, 3)
    assert_allclose(out.probs.sum(axis=1), 1.0, rtol=1e-6)
    assert (out.probs > 0).all()


def test_batch_equals_single(agent):
    graphs = [cycle_graph(5), path_graph(4), gen_er(9, 0.4, 1)]
    adjs, feats = inputs(graphs, t=0.25)
    outputs, values = agent.forward_batch(adjs, feats)
    assert len(outputs) == 3
    for adj, f, out, v in zip(adjs, feats, outputs, values):
        single = agent.policy_forward(adj, f)
        assert_allclose(out.probs, single.probs, rtol=1e-5, atol=1e-6)
        assert v == pytest.approx(agent.value_forward(adj, f), rel=1e-4, abs=1e-5)


def test_permutation_equivariance(agent):
    g = gen_er(12, 0.3, 4)
    feats = inputs([g], t=0.5)[1][0]
    label = numpy.random.default_rng(7).permutation(g.n)
    relabeled = Graph.from_edges(g.n, [(label[u], label[v]) for u, v in g.edges()])
    moved = numpy.empty_like(feats)
    moved[label] = feats
    out = agent.policy_forward(relabeled, moved)
    # vertex v of g is vertex label[v] of the relabeled graph
    assert_allclose(out.probs[label], agent.policy_forward(g, feats).probs, atol=1e-4)
    assert agent.value_forward(relabeled, moved) == pytest.approx(
        agent.value_forward(g, feats), rel=1e-4, abs=1e-4)


def test_isolated_vertices_use_self_features(agent):
    g = Graph.from_edges(3, [])
    out = agent.policy_forward(g, numpy.array([[0.0, 0.5]] * 3, dtype=numpy.float32))
    # without neighbors identical inputs give identical outputs
    assert_allclose(out.probs[0], out.probs[1])
    assert_allclose(out.probs[1], out.probs[2])


def test_forward_errors(agent):
    with pytest.raises(ValueError):
        agent.forward_batch([normalized_adjacency(Graph.from_edges(0, []))],
                            [numpy.zeros((0, 2), dtype=numpy.float32)])
    g = path_graph(3)
    with pytest.raises(nn.ShapeError):
        agent.policy_forward(g, numpy.zeros((3, 3), dtype=numpy.float32))


def test_checkpoint_roundtrip(agent, tmpdir):
    filename = str(tmpdir.join("agent.ckpt"))
    agent.save(filename)
    other = ActorCritic.from_checkpoint(filename)
    assert (other.in_features, other.hidden, other.layers) == (2, 16, 3)
    assert not other.shared_trunk
    g = cycle_graph(6)
    adjs, feats = inputs([g])
    assert_equal(agent.forward_batch(adjs, feats)[0][0].probs,
                 other.forward_batch(adjs, feats)[0][0].probs)


def test_checkpoint_shape_mismatch(agent, tmpdir):
    filename = str(tmpdir.join("agent.ckpt"))
    agent.save(filename)
    wider = ActorCritic(in_features=2, hidden=32, layers=3)
    with pytest.raises(nn.CheckpointError):
        wider.store.load(filename)


def test_not_an_agent_checkpoint(tmpdir):
    filename = str(tmpdir.join("other.ckpt"))
    store = nn.ParamStore()
    store.add("w", numpy.ones(3))
    store.save(filename)
    with pytest.raises(nn.CheckpointError):
        ActorCritic.from_checkpoint(filename)


def test_forward_matches_float64_store(agent):
    graphs = [cycle_graph(5), path_graph(3)]
    adjs, feats = inputs(graphs)
    lp32, v32, sizes = agent.forward(adjs, feats)
    lp64, v64, _ = agent.forward(adjs, feats, store=agent.store.copy(numpy.float64))
    assert sizes == [5, 3]
    assert lp64.dtype == numpy.float64
    assert_allclose(lp32.value, lp64.value, rtol=1e-4, atol=1e-5)
    assert_allclose(v32.value, v64.value, rtol=1e-4, atol=1e-4)


def test_network_gradients():
    agent = ActorCritic(in_features=2, hidden=4, layers=2, rng=2)
    graphs = [cycle_graph(4), path_graph(3)]
    adjs, feats = inputs(graphs, t=0.5)
    actions = numpy.array([0, 1, 2, 1, 0, 2, 1])

    def f(store):
        tape = nn.Tape()
        log_probs, values, _ = agent.forward(adjs, feats, tape=tape, store=store)
        return nn.add(nn.tsum(nn.pick(log_probs, actions)), nn.tsum(nn.square(values)))
    assert nn.grad_check(f, agent.store, eps=1e-5, max_coords=6) < 1e-3


def test_entropy():
    uniform = PolicyOutput(numpy.full((4, 3), 1 / 3.))
    assert entropy(uniform) == pytest.approx(numpy.log(3))
    onehot = PolicyOutput(numpy.eye(3))
    assert onehot.entropy() == 0.0
    assert entropy(PolicyOutput(numpy.zeros((0, 3)))) == 0.0
    assert_equal(onehot.argmax(), [0, 1, 2])


def test_sample_actions_frequencies():
    p = numpy.array([[0.2, 0.5, 0.3]] * 20000)
    actions, logp = sample_actions(PolicyOutput(p), numpy.random.default_rng(0))
    assert actions.dtype == numpy.int8
    freq = numpy.bincount(actions, minlength=3) / float(len(actions))
    assert_allclose(freq, [0.2, 0.5, 0.3], atol=0.02)
    assert_allclose(logp, numpy.log(p[0][actions]))


def test_sample_actions_deterministic_rows():
    p = numpy.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    actions, logp = sample_actions(PolicyOutput(p), numpy.random.default_rng(3))
    assert_equal(actions, [0, 1, 2])
    assert_equal(logp, 0.0)


def test_constant_policy(triangle):
    with pytest.raises(ValueError):
        ConstantPolicy((0.5, 0.5))
    with pytest.raises(ValueError):
        ConstantPolicy((0.5, 0.6, 0.0))
    e = reset(triangle, ProblemSpec('mis'), 4)
    out = ConstantPolicy((0.0, 1.0, 0.0)).policy_forward(triangle, e.features())
    assert_equal(out.argmax(), [1, 1, 1])


def test_agent_drives_environment():
    agent = ActorCritic(in_features=3, hidden=8, layers=2, rng=0)
    g = gen_er(12, 0.3, 0)
    spec = ProblemSpec('mwis', weights=numpy.linspace(0.5, 1.5, 12))
    e = reset(g, spec, 8)
    sub, mapping, adj = e.deferred_subgraph()
    out = agent.policy_forward(adj, e.features())
    actions, _ = sample_actions(out, numpy.random.default_rng(0))
    e.step(actions)
    assert e.t == 1
