# LwD -- synthetic graph models
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Random graph generators --- :mod:`lwd.generators`
=================================================

The four synthetic graph models used for training and evaluation:

========  ================================================  ========================
model     function                                          parameters
========  ================================================  ========================
``er``    :func:`gen_er` (Erdős-Rényi)                      *p*
``ba``    :func:`gen_ba` (Barabási-Albert)                  *m_attach*
``hk``    :func:`gen_hk` (Holme-Kim powerlaw cluster)       *m_attach*, *p_triad*
``ws``    :func:`gen_ws` (Watts-Strogatz small world)       *k*, *p_rewire*
========  ================================================  ========================

Every generator is a deterministic function of its parameters and the
integer *seed*; the random state is local to the call. Default
parameters live in the ``[generators]`` section of the configuration
(:func:`lwd.config.generator_defaults`).

A dataset "ER-[N_min, N_max]" draws the vertex count of each graph
uniformly from the integer interval, see :func:`draw_instances` and
:func:`sample_dataset`.
"""
import numpy

from . import config
from .graph import Graph
from .utilities import substream, child_seeds

import logging
logger = logging.getLogger("lwd.generators")


def _rng(seed):
    if isinstance(seed, numpy.random.Generator):
        return seed
    return numpy.random.default_rng(seed)


def gen_er(n, p, seed):
    """Erdős-Rényi G(n, p): each of the C(n,2) vertex pairs is an edge with probability *p*."""
    if n < 1 or not 0.0 <= p <= 1.0:
        errmsg = "gen_er needs n >= 1 and 0 <= p <= 1 (got n=%r, p=%r)" % (n, p)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    rng = _rng(seed)
    u, v = numpy.triu_indices(n, 1)
    chosen = rng.random(len(u)) < p
    return Graph.from_edges(n, numpy.column_stack([u[chosen], v[chosen]]))


def _attachment(n, m_attach, p_triad, rng):
    """Preferential attachment with optional triad formation (Holme-Kim).

    Starts from *m_attach* isolated seed vertices. Vertex ``m_attach``
    connects to all of them; every later vertex connects to *m_attach*
    distinct existing vertices chosen proportionally to degree. After
    each attachment, with probability *p_triad*, the next target is a
    random neighbor of the vertex just attached to (closing a triangle)
    when such a neighbor is still available. With ``p_triad == 0`` no
    random numbers are spent on the triad step, so the stream is
    identical to plain preferential attachment.
    """
    if not 1 <= m_attach < n:
        errmsg = "attachment count must satisfy 1 <= m_attach < n (got m_attach=%r, n=%r)" % (
            m_attach, n)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    adj = [set() for _ in range(n)]
    repeated = []                  # every vertex once per incident edge end
    edges = []
    for source in range(m_attach, n):
        if source == m_attach:
            targets = list(range(m_attach))
        else:
            targets = []
            chosen = set()
            last = None
            while len(targets) < m_attach:
                if last is not None and p_triad > 0 and rng.random() < p_triad:
                    candidates = sorted(adj[last] - chosen)
                    if candidates:
                        t = candidates[rng.integers(len(candidates))]
                        targets.append(t)
                        chosen.add(t)
                        last = t
                        continue
                t = repeated[rng.integers(len(repeated))]
                if t in chosen:
                    continue
                targets.append(t)
                chosen.add(t)
                last = t
        for t in targets:
            adj[source].add(t)
            adj[t].add(source)
            edges.append((source, t))
        repeated.extend(targets)
        repeated.extend([source] * m_attach)
    return Graph.from_edges(n, edges)


def gen_ba(n, m_attach, seed):
    """Barabási-Albert preferential attachment graph with (n - m_attach)·m_attach edges."""
    return _attachment(n, m_attach, 0.0, _rng(seed))


def gen_hk(n, m_attach, p_triad, seed):
    """Holme-Kim powerlaw cluster graph: preferential attachment plus triad closure."""
    if not 0.0 <= p_triad <= 1.0:
        raise ValueError("p_triad must be a probability, got %r" % (p_triad,))
    return _attachment(n, m_attach, p_triad, _rng(seed))


def gen_ws(n, k, p_rewire, seed):
    """Watts-Strogatz small-world graph.

    Start from a ring lattice in which every vertex is joined to its *k*
    nearest neighbors (k/2 on each side), then rewire the far end of each
    lattice edge with probability *p_rewire* to a uniformly chosen vertex
    that is neither the near end nor already adjacent to it. The edge
    count n·k/2 is preserved.
    """
    if k % 2 or k < 0 or k >= n:
        errmsg = "gen_ws needs an even k with 0 <= k < n (got k=%r, n=%r)" % (k, n)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    if not 0.0 <= p_rewire <= 1.0:
        raise ValueError("p_rewire must be a probability, got %r" % (p_rewire,))
    rng = _rng(seed)
    adj = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or rng.random() >= p_rewire:
                continue
            if len(adj[u]) >= n - 1:
                continue            # no free target left
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return Graph.from_edges(n, edges)


#: model name -> generator; each takes (n, **params, seed=seed)
GENERATORS = {'er': gen_er, 'ba': gen_ba, 'hk': gen_hk, 'ws': gen_ws}


def generate(model, n, seed, **params):
    """Generate one graph of *model* with *n* vertices.

    Missing *params* are taken from :func:`lwd.config.generator_defaults`.
    """
    kwargs = config.generator_defaults(model)
    kwargs.update(params)
    return GENERATORS[model](n, seed=seed, **kwargs)


def draw_instances(n_min, n_max, count, seed, name="gen"):
    """Vertex counts and per-graph seeds for a dataset "MODEL-[n_min, n_max]".

    :Returns: list of ``(n, graph_seed)``; *n* is uniform on the integer
              interval ``[n_min, n_max]``
    """
    if not 1 <= n_min <= n_max:
        errmsg = "need 1 <= n_min <= n_max (got %r, %r)" % (n_min, n_max)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    rng = substream(seed, name + ".sizes")
    sizes = rng.integers(n_min, n_max + 1, size=count)
    seeds = child_seeds(seed, name, count)
    return [(int(n), s) for n, s in zip(sizes, seeds)]


def sample_dataset(model, n_min, n_max, count, seed, name="gen", **params):
    """Return a list of *count* graphs of *model* with n uniform in [n_min, n_max]."""
    return [generate(model, n, s, **params)
            for n, s in draw_instances(n_min, n_max, count, seed, name=name)]


class GraphStream(object):
    """Endless supply of fresh training graphs ("generated on the fly").

    Each call of :meth:`draw` returns *count* new graphs whose sizes and
    seeds come from the generator *rng*.
    """
    def __init__(self, model, n_min, n_max, rng, **params):
        if not 1 <= n_min <= n_max:
            raise ValueError("need 1 <= n_min <= n_max (got %r, %r)" % (n_min, n_max))
        self.model = model
        self.n_min, self.n_max = n_min, n_max
        self.rng = rng
        self.params = params

    def draw(self, count):
        sizes = self.rng.integers(self.n_min, self.n_max + 1, size=count)
        seeds = self.rng.integers(0, 2**63 - 1, size=count)
        return [generate(self.model, int(n), int(s), **self.params)
                for n, s in zip(sizes, seeds)]
