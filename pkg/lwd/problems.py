# LwD -- problem definitions
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Locally decomposable problems --- :mod:`lwd.problems`
=====================================================

The five objectives that the deferred MDP can optimize. Each is a sum of
vertex terms and edge terms, which is what makes the problems *locally
decomposable*:

=========  =========================================================  ========
kind       objective :math:`f(x)`                                     clean-up
=========  =========================================================  ========
``mis``    :math:`\\sum_i x_i` over independent sets                   yes
``mwis``   :math:`\\sum_i w_i x_i` over independent sets               yes
``pcmis``  :math:`|I| - \\lambda\\,|\\{ \\{i,j\\} \\in E: i,j \\in I\\}|`        no
``maxcut`` number of edges with differing endpoints                   no
``ising``  :math:`\\gamma \\sum_i (2x_i-1) + \\beta \\sum_{ij} f_2(x_i,x_j)`   no
=========  =========================================================  ========

with :math:`f_2 = -1` for equal and :math:`+1` for differing endpoint
values (anti-ferromagnetic coupling).

Vertex states of the MDP are small integers, :data:`EXCLUDED` (0),
:data:`INCLUDED` (1) and :data:`DEFERRED` (2). The *partial objective*
of a state counts only fully determined terms: vertex terms of
determined vertices and edge terms whose two endpoints are both
determined. Differences of the partial objective are the per-step
rewards and telescope to the final objective.
"""
import numpy

import logging
logger = logging.getLogger("lwd.problems")

#: vertex states
EXCLUDED, INCLUDED, DEFERRED = 0, 1, 2

#: problem kinds in canonical order
PROBLEMS = ('mis', 'mwis', 'pcmis', 'maxcut', 'ising')


class ProblemSpec(object):
    """Problem kind plus its parameters.

    :Arguments:
       *kind*
          one of :data:`PROBLEMS`
       *weights*
          positive per-vertex weights (MWIS only; may be attached later
          with :meth:`with_weights`)
       *lam*
          PCMIS penalty per internal edge, default 0.5
       *beta*, *gamma*
          Ising interaction and field strength, default 1.0
    """
    def __init__(self, kind='mis', weights=None, lam=0.5, beta=1.0, gamma=1.0):
        kind = str(kind).lower()
        if kind not in PROBLEMS:
            errmsg = "Unknown problem %r; choose one of %s" % (kind, ", ".join(PROBLEMS))
            logger.fatal(errmsg)
            raise ValueError(errmsg)
        if lam <= 0:
            raise ValueError("PCMIS penalty lambda must be positive, got %r" % (lam,))
        self.kind = kind
        self.lam = float(lam)
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.weights = None
        if weights is not None:
            w = numpy.asarray(weights, dtype=numpy.float64)
            if (w <= 0).any():
                errmsg = "MWIS weights must be strictly positive"
                logger.fatal(errmsg)
                raise ValueError(errmsg)
            self.weights = w

    @property
    def uses_cleanup(self):
        """True for the problems with a hard independence constraint."""
        return self.kind in ('mis', 'mwis')

    @property
    def num_features(self):
        """Width of the per-vertex network input (MWIS adds the weight)."""
        return 3 if self.kind == 'mwis' else 2

    def with_weights(self, weights):
        """Copy of this spec with vertex *weights* attached."""
        return ProblemSpec(self.kind, weights=weights, lam=self.lam,
                           beta=self.beta, gamma=self.gamma)

    def vertex_weights(self, n):
        """Weights of an *n*-vertex instance (all ones unless MWIS)."""
        if self.kind != 'mwis':
            return numpy.ones(n)
        if self.weights is None or len(self.weights) != n:
            errmsg = "MWIS needs %d vertex weights, have %s" % (
                n, None if self.weights is None else len(self.weights))
            logger.fatal(errmsg)
            raise ValueError(errmsg)
        return self.weights

    def __repr__(self):
        extra = {'pcmis': " lam=%g" % self.lam,
                 'ising': " beta=%g gamma=%g" % (self.beta, self.gamma)}.get(self.kind, "")
        return "<ProblemSpec %s%s>" % (self.kind, extra)


def _potential(spec, g, values, determined):
    """Sum of vertex terms over *determined* vertices and of edge terms
    over edges with both endpoints determined; *values* are 0/1 there."""
    x = numpy.where(determined, values, 0).astype(numpy.int64)
    e = g.edges()
    u, v = e[:, 0], e[:, 1]
    both = determined[u] & determined[v]
    kind = spec.kind
    if kind == 'mis':
        return float(x[determined].sum())
    elif kind == 'mwis':
        w = spec.vertex_weights(g.n)
        return float(w[determined & (x == 1)].sum())
    elif kind == 'pcmis':
        internal = numpy.count_nonzero(both & (x[u] == 1) & (x[v] == 1))
        return float(x[determined].sum()) - spec.lam * internal
    elif kind == 'maxcut':
        return float(numpy.count_nonzero(both & (x[u] != x[v])))
    # ising
    field = (2 * x[determined] - 1).sum()
    coupling = numpy.where(x[u] == x[v], -1, 1)[both].sum()
    return float(spec.gamma * field + spec.beta * coupling)


def _check_length(g, x, what):
    x = numpy.asarray(x)
    if x.shape != (g.n,):
        errmsg = "%s has length %s, graph has n=%d" % (what, x.shape, g.n)
        logger.error(errmsg)
        raise ValueError(errmsg)
    return x


def objective(spec, g, x):
    """Objective value of the complete 0/1 assignment *x* on graph *g*.

    For MIS/MWIS *x* need not be independent; use :func:`is_independent`
    for feasibility.

    :Raises: :exc:`ValueError` if ``len(x) != g.n``
    """
    x = _check_length(g, x, "assignment")
    return _potential(spec, g, x, numpy.ones(g.n, dtype=bool))


def partial_objective(spec, g, s):
    """Objective restricted to the determined part of the state vector *s*."""
    s = _check_length(g, s, "state vector")
    return _potential(spec, g, s, s != DEFERRED)


def is_independent(g, x):
    """True iff no edge of *g* has both endpoints set in *x*."""
    x = numpy.asarray(x) == 1
    e = g.edges()
    return not (x[e[:, 0]] & x[e[:, 1]]).any()


def _vertex_gain(spec, g, s, i, value):
    """Change of the partial objective when deferred vertex *i* gets *value*."""
    nb = g.neighbors(i)
    nb_vals = s[nb]
    det = nb_vals != DEFERRED
    kind = spec.kind
    if kind == 'pcmis':
        if value == 0:
            return 0.0
        return 1.0 - spec.lam * numpy.count_nonzero(nb_vals[det] == INCLUDED)
    elif kind == 'maxcut':
        return float(numpy.count_nonzero(nb_vals[det] != value))
    elif kind == 'ising':
        coupling = numpy.where(nb_vals[det] == value, -1, 1).sum()
        return spec.gamma * (2 * value - 1) + spec.beta * coupling
    w = spec.vertex_weights(g.n)
    return float(w[i]) if value == 1 else 0.0


def greedy_complete(spec, g, s):
    """Complete the state vector *s* into a 0/1 assignment.

    For MIS/MWIS every deferred vertex is excluded (always feasible).
    For the other problems the deferred vertices are scanned in
    ascending order and each gets the value with the larger increase of
    the partial objective given everything fixed so far; ties go to 0.
    """
    s = numpy.array(_check_length(g, s, "state vector"), dtype=numpy.int8)
    deferred = numpy.flatnonzero(s == DEFERRED)
    if spec.uses_cleanup:
        s[deferred] = EXCLUDED
        return s
    for i in deferred:
        gain0 = _vertex_gain(spec, g, s, i, 0)
        gain1 = _vertex_gain(spec, g, s, i, 1)
        s[i] = INCLUDED if gain1 > gain0 else EXCLUDED
    return s


def sample_weights(n, rng, mean=1.0, std=0.1, floor=1e-6):
    """MWIS vertex weights: Normal(mean, std) truncated below at *floor*."""
    return numpy.maximum(rng.normal(mean, std, size=n), floor)
