# LwD -- GraphSAGE policy and value networks
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Agent networks --- :mod:`lwd.agent`
===================================

The policy and the value function see only the subgraph induced by the
deferred vertices. Both are GraphSAGE networks of *layers* layers, each
computing

.. math::

   h(H) = \\mathrm{ReLU}(H W_1 + \\hat{A} H W_2)

with the normalized adjacency :math:`\\hat{A}` of the deferred subgraph
(no bias terms). The policy head maps every vertex embedding to three
logits (exclude, include, defer) followed by a softmax; the value head
is a linear map of the sum-pooled embeddings, one scalar per graph.

Several subgraphs are processed as one block-diagonal batch; pooling is
per graph, so the value of a batch equals the values of its members.

Parameter names (also the checkpoint names) are ``layer{n}.W1``,
``layer{n}.W2``, ``policy_head.W`` and ``value_head.W``; with separate
trunks (the default) the value trunk uses ``value.layer{n}.W1`` and
``value.layer{n}.W2``.

.. autoclass:: ActorCritic
   :members:
.. autoclass:: PolicyOutput
   :members:
.. autofunction:: sample_actions
.. autofunction:: sage_layer
"""
import numpy

from . import nn
from .graph import Graph, NormalizedAdjacency, normalized_adjacency

import logging
logger = logging.getLogger("lwd.agent")

#: number of actions per vertex (exclude, include, defer)
NUM_ACTIONS = 3


def glorot(fan_in, fan_out, rng, dtype=numpy.float32):
    """Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out))."""
    r = numpy.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_in, fan_out)).astype(dtype)


def sage_layer(H, adj, W1, W2):
    """One GraphSAGE layer ``ReLU(H W1 + Â H W2)`` on tensors."""
    return nn.relu(nn.add(nn.matmul(H, W1), nn.matmul(nn.spmm(adj, H), W2)))


class PolicyOutput(object):
    """Per-vertex categorical distributions over {exclude, include, defer}.

    :Attributes:
       *probs*
          (n, 3) array; every row sums to one
    """
    def __init__(self, probs):
        self.probs = numpy.asarray(probs, dtype=numpy.float64)

    def __len__(self):
        return len(self.probs)

    def entropy(self):
        """Mean over vertices of the per-vertex entropy (0 log 0 = 0)."""
        return entropy(self)

    def argmax(self):
        return self.probs.argmax(axis=1)


def entropy(out):
    """Mean over vertices of :math:`-\\sum_c p_c \\log p_c`."""
    p = out.probs
    if len(p) == 0:
        return 0.0
    with numpy.errstate(divide='ignore', invalid='ignore'):
        terms = numpy.where(p > 0, -p * numpy.log(p), 0.0)
    return float(terms.sum(axis=1).mean())


def sample_actions(out, rng):
    """Draw one action per vertex independently.

    :Returns: ``(actions, log_probs)``; *actions* int8 in {0, 1, 2} and the
              per-vertex log-probabilities of the drawn actions
    """
    p = out.probs
    cdf = numpy.cumsum(p, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(len(p))
    actions = (cdf <= u[:, None]).sum(axis=1)
    actions = numpy.minimum(actions, NUM_ACTIONS - 1)
    with numpy.errstate(divide='ignore'):
        logp = numpy.log(p[numpy.arange(len(p)), actions])
    return actions.astype(numpy.int8), logp


class GraphSageNet(object):
    """Stack of :func:`sage_layer` weights registered in a parameter store."""
    def __init__(self, store, in_features, hidden, layers, prefix, rng):
        self.names = []
        width = in_features
        for n in range(layers):
            w1 = "%slayer%d.W1" % (prefix, n)
            w2 = "%slayer%d.W2" % (prefix, n)
            store.add(w1, glorot(width, hidden, rng))
            store.add(w2, glorot(width, hidden, rng))
            self.names.append((w1, w2))
            width = hidden

    def forward(self, store, tape, adj, x):
        h = x
        for w1, w2 in self.names:
            h = sage_layer(h, adj, store.tensor(w1, tape), store.tensor(w2, tape))
        return h


class ActorCritic(object):
    """Policy and value GraphSAGE networks sharing one :class:`~lwd.nn.ParamStore`.

    :Arguments:
       *in_features*
          per-vertex input width (2, or 3 for MWIS)
       *hidden*
          layer width, default 128
       *layers*
          number of GraphSAGE layers, default 4
       *shared_trunk*
          use the policy trunk for the value head as well
       *rng*
          :class:`numpy.random.Generator` for the initialization (or an
          integer seed)
    """
    def __init__(self, in_features=2, hidden=128, layers=4, shared_trunk=False, rng=0):
        if not isinstance(rng, numpy.random.Generator):
            rng = numpy.random.default_rng(rng)
        self.in_features = int(in_features)
        self.hidden = int(hidden)
        self.layers = int(layers)
        self.shared_trunk = bool(shared_trunk)
        self.store = nn.ParamStore()
        self.policy_trunk = GraphSageNet(self.store, in_features, hidden, layers, "", rng)
        self.store.add("policy_head.W", glorot(hidden, NUM_ACTIONS, rng))
        if shared_trunk:
            self.value_trunk = self.policy_trunk
        else:
            self.value_trunk = GraphSageNet(self.store, in_features, hidden, layers,
                                            "value.", rng)
        self.store.add("value_head.W", glorot(hidden, 1, rng))

    @classmethod
    def from_checkpoint(cls, filename):
        """Rebuild a network from a checkpoint; the architecture is read off the shapes."""
        from . import bpio
        params = bpio.read_checkpoint(filename)
        try:
            in_features, hidden = params["layer0.W1"].shape
        except KeyError:
            errmsg = "%r is not an LwD agent checkpoint (no layer0.W1)" % (filename,)
            logger.fatal(errmsg)
            raise nn.CheckpointError(errmsg)
        layers = len([name for name in params
                      if name.startswith("layer") and name.endswith(".W1")])
        shared = "value.layer0.W1" not in params
        agent = cls(in_features=in_features, hidden=hidden, layers=layers,
                    shared_trunk=shared, rng=0)
        agent.store.load_state_dict(params)
        logger.info("Loaded %r from %r", agent, filename)
        return agent

    def save(self, filename):
        return self.store.save(filename)

    def _inputs(self, adjs, feats, tape, store):
        adjs = [normalized_adjacency(a) if isinstance(a, Graph) else a for a in adjs]
        sizes = [a.shape[0] for a in adjs]
        if not adjs or min(sizes) == 0:
            errmsg = "policy queried on an empty deferred subgraph"
            logger.error(errmsg)
            raise ValueError(errmsg)
        for a, f in zip(adjs, feats):
            if numpy.shape(f) != (a.shape[0], self.in_features):
                raise nn.ShapeError("features have shape %s, expected (%d, %d)" % (
                    numpy.shape(f), a.shape[0], self.in_features))
        adj = NormalizedAdjacency.block_diag(adjs)
        x = nn.constant(numpy.vstack(feats).astype(store.dtype), tape=tape)
        return adj, x, sizes

    def forward(self, adjs, feats, tape=None, store=None):
        """Batched forward pass on tensors.

        :Returns: ``(log_probs, values, sizes)`` -- an (N, 3) log-softmax
                  tensor over all stacked vertices, a (G,) value tensor and
                  the vertex count of every graph

        *store* replaces the network's own parameters (same names and
        shapes), e.g. a float64 copy for gradient checks.
        """
        store = self.store if store is None else store
        adj, x, sizes = self._inputs(adjs, feats, tape, store)
        h = self.policy_trunk.forward(store, tape, adj, x)
        logits = nn.matmul(h, store.tensor("policy_head.W", tape))
        log_probs = nn.log_softmax(logits)
        if self.value_trunk is not self.policy_trunk:
            h = self.value_trunk.forward(store, tape, adj, x)
        pooled = nn.segment_sum(h, sizes)
        values = nn.reshape(nn.matmul(pooled, store.tensor("value_head.W", tape)),
                            (len(sizes),))
        return log_probs, values, sizes

    def forward_batch(self, adjs, feats):
        """Inference on several deferred subgraphs at once.

        :Returns: ``(outputs, values)`` -- a :class:`PolicyOutput` per graph
                  and an array of values
        """
        log_probs, values, sizes = self.forward(adjs, feats)
        logits = log_probs.value.astype(numpy.float64)
        probs = numpy.exp(logits - logits.max(axis=1, keepdims=True))
        probs /= probs.sum(axis=1, keepdims=True)
        bounds = numpy.cumsum([0] + sizes)
        outputs = [PolicyOutput(probs[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
        return outputs, values.value.astype(numpy.float64)

    def policy_forward(self, subgraph, features):
        """Policy of one deferred subgraph (a Graph or its normalized adjacency)."""
        return self.forward_batch([subgraph], [features])[0][0]

    def value_forward(self, subgraph, features):
        """Value estimate of one deferred subgraph."""
        return float(self.forward_batch([subgraph], [features])[1][0])

    def __repr__(self):
        return "<ActorCritic in=%d hidden=%d layers=%d %s, %d parameters>" % (
            self.in_features, self.hidden, self.layers,
            "shared trunk" if self.shared_trunk else "separate trunks",
            self.store.num_parameters())


class ConstantPolicy(object):
    """The same action distribution for every vertex and a constant value.

    ``ConstantPolicy()`` is the uniform random policy; a one-hot row gives
    a deterministic policy.
    """
    in_features = None

    def __init__(self, probs=(1.0 / 3, 1.0 / 3, 1.0 / 3), value=0.0):
        self.probs = numpy.asarray(probs, dtype=numpy.float64)
        if self.probs.shape != (NUM_ACTIONS,) or abs(self.probs.sum() - 1) > 1e-9:
            raise ValueError("probs must be a distribution over 3 actions, got %r" % (probs,))
        self.value = float(value)

    def forward_batch(self, adjs, feats):
        outputs = [PolicyOutput(numpy.tile(self.probs, (a.shape[0], 1))) for a in adjs]
        return outputs, numpy.full(len(adjs), self.value)

    def policy_forward(self, subgraph, features):
        adj = normalized_adjacency(subgraph) if isinstance(subgraph, Graph) else subgraph
        return self.forward_batch([adj], [features])[0][0]

    def __repr__(self):
        return "<ConstantPolicy %s>" % (self.probs.tolist(),)
