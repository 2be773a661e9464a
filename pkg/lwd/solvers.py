# LwD -- reference solvers
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Non-learned solvers --- :mod:`lwd.solvers`
==========================================

Exact oracles for small graphs, a greedy baseline and the
2-improvement local search.

Exact oracles
-------------

:func:`brute_force_mis` is a branch-and-bound search over vertex
bitsets: it branches on a vertex of maximum degree among the remaining
candidates (include it and delete its neighborhood, or exclude it) and
prunes when the current size plus the number of candidates cannot beat
the incumbent. :func:`brute_force_generic` enumerates all :math:`2^n`
assignments in vectorized chunks and works for every problem kind of
:mod:`lwd.problems`. Both refuse graphs above the caps in the
``[oracle]`` section of the configuration (:exc:`SizeCapError`).

Heuristics
----------

:func:`greedy_mis` repeatedly takes a vertex of minimum residual degree.
:func:`local_search_2imp` removes one solution vertex and inserts two
non-adjacent free vertices whenever possible; a free vertex is *tight*
when exactly one of its neighbors is in the solution.
"""
import numpy

from . import config
from .problems import ProblemSpec, is_independent

import logging
logger = logging.getLogger("lwd.solvers")


class SizeCapError(ValueError):
    """Graph too large for an exact solver."""


def _check_cap(g, cap, option, solver):
    if cap is None:
        cap = config.cfg.getint('oracle', option)
    if g.n > cap:
        errmsg = "%s: graph has n=%d vertices, above the cap of %d ([oracle] %s)" % (
            solver, g.n, cap, option)
        logger.fatal(errmsg)
        raise SizeCapError(errmsg)


def _popcount(x):
    return bin(x).count('1')


def brute_force_mis(g, cap=None):
    """Exact maximum independent set by branch and bound.

    :Returns: ``(size, witness)`` with the sorted vertex ids of one
              maximum independent set
    :Raises: :exc:`SizeCapError` for ``g.n`` above *cap* (default
             ``[oracle] mis_cap``)
    """
    _check_cap(g, cap, 'mis_cap', 'brute_force_mis')
    nbr = [0] * g.n
    for i in range(g.n):
        for j in g.neighbors(i):
            nbr[i] |= 1 << int(j)
    best = [0, 0]                       # size, bitmask

    def search(cand, chosen, size):
        remaining = _popcount(cand)
        if size + remaining <= best[0]:
            return
        pivot, pivot_deg = -1, -1
        c = cand
        while c:
            low = c & -c
            i = low.bit_length() - 1
            d = _popcount(nbr[i] & cand)
            if d > pivot_deg:
                pivot, pivot_deg = i, d
            c ^= low
        if pivot_deg == 0:
            # all candidates are isolated in the residual graph
            best[0], best[1] = size + remaining, chosen | cand
            return
        bit = 1 << pivot
        search(cand & ~nbr[pivot] & ~bit, chosen | bit, size + 1)
        search(cand & ~bit, chosen, size)

    search((1 << g.n) - 1, 0, 0)
    witness = numpy.array([i for i in range(g.n) if best[1] >> i & 1], dtype=numpy.int64)
    x = numpy.zeros(g.n, dtype=numpy.int8)
    x[witness] = 1
    if not is_independent(g, x):
        raise RuntimeError("brute_force_mis produced a dependent witness")
    logger.debug("brute_force_mis: n=%d m=%d -> %d", g.n, g.m, best[0])
    return best[0], witness


def _chunk_objective(spec, g, X):
    """Objective of every row of the 0/1 matrix *X* (-inf where infeasible)."""
    e = g.edges()
    xu, xv = X[:, e[:, 0]], X[:, e[:, 1]]
    kind = spec.kind
    if kind in ('mis', 'mwis'):
        w = spec.vertex_weights(g.n)
        values = X.dot(w) if kind == 'mwis' else X.sum(axis=1).astype(numpy.float64)
        values[(xu & xv).any(axis=1)] = -numpy.inf
        return values
    elif kind == 'pcmis':
        return X.sum(axis=1) - spec.lam * (xu & xv).sum(axis=1)
    elif kind == 'maxcut':
        return (xu != xv).sum(axis=1).astype(numpy.float64)
    field = (2 * X.astype(numpy.int64) - 1).sum(axis=1)
    coupling = numpy.where(xu == xv, -1, 1).sum(axis=1)
    return spec.gamma * field + spec.beta * coupling


def brute_force_generic(spec, g, cap=None, chunk=1 << 16):
    """Maximize ``objective(spec, g, x)`` over all 0/1 vectors (independent sets for MIS/MWIS).

    Ties go to the assignment with the smallest bitmask (vertex *i* is bit *i*).

    :Returns: ``(optimum, x)``
    :Raises: :exc:`SizeCapError` for ``g.n`` above *cap* (default
             ``[oracle] generic_cap``)
    """
    _check_cap(g, cap, 'generic_cap', 'brute_force_generic')
    n = g.n
    total = 1 << n
    bits = numpy.arange(n, dtype=numpy.int64)
    best_value, best_mask = -numpy.inf, 0
    for start in range(0, total, chunk):
        masks = numpy.arange(start, min(total, start + chunk), dtype=numpy.int64)
        X = ((masks[:, None] >> bits) & 1).astype(numpy.int8)
        values = _chunk_objective(spec, g, X)
        k = int(numpy.argmax(values))
        if values[k] > best_value:
            best_value, best_mask = float(values[k]), int(masks[k])
    x = ((best_mask >> bits) & 1).astype(numpy.int8)
    logger.debug("brute_force_generic(%s): n=%d -> %g", spec.kind, n, best_value)
    return best_value, x


def naive_mis(g, cap=None):
    """Maximum independent set size by plain enumeration (cross-check for :func:`brute_force_mis`)."""
    size, x = brute_force_generic(ProblemSpec('mis'), g, cap=cap)
    return int(size), numpy.flatnonzero(x)


def greedy_mis(g):
    """Minimum-degree greedy independent set; ties go to the lowest index.

    :Returns: sorted vertex ids
    """
    deg = g.degree().astype(numpy.int64)
    alive = numpy.ones(g.n, dtype=bool)
    chosen = []
    big = g.n + 1
    while alive.any():
        v = int(numpy.argmin(numpy.where(alive, deg, big)))
        chosen.append(v)
        removed = [v] + [int(u) for u in g.neighbors(v) if alive[u]]
        alive[removed] = False
        for u in removed:
            nb = g.neighbors(u)
            deg[nb] -= 1
    return numpy.array(sorted(chosen), dtype=numpy.int64)


def local_search_2imp(g, independent_set):
    """Improve an independent set with insertions and 2-improvements until none applies.

    Free vertices (no neighbor in the set) are inserted in ascending
    order first. Then the solution vertices *v* are scanned in ascending
    order; the first pair of non-adjacent vertices that are tight with
    respect to *v* replaces *v*, after which the search restarts with
    the insertion pass.

    :Returns: sorted vertex ids of the improved set
    :Raises: :exc:`ValueError` if *independent_set* is not independent
    """
    x = numpy.zeros(g.n, dtype=bool)
    x[numpy.asarray(independent_set, dtype=numpy.int64)] = True
    if not is_independent(g, x):
        errmsg = "local_search_2imp needs an independent set as input"
        logger.error(errmsg)
        raise ValueError(errmsg)
    A = g.adjacency()
    count = A.dot(x.astype(numpy.int64))     # solution neighbors per vertex

    def insert(u):
        x[u] = True
        count[g.neighbors(u)] += 1

    def remove(u):
        x[u] = False
        count[g.neighbors(u)] -= 1

    moves = 0
    while True:
        for u in range(g.n):
            if not x[u] and count[u] == 0:
                insert(u)
        improved = False
        for v in numpy.flatnonzero(x):
            tight = [int(u) for u in g.neighbors(v) if not x[u] and count[u] == 1]
            for a, u in enumerate(tight):
                nb_u = g.neighbors(u)
                for w in tight[a + 1:]:
                    if w in nb_u:
                        continue
                    remove(v)
                    insert(u)
                    insert(w)
                    improved = True
                    break
                if improved:
                    break
            if improved:
                break
        if not improved:
            break
        moves += 1
    logger.debug("local_search_2imp: %d 2-improvements", moves)
    return numpy.flatnonzero(x).astype(numpy.int64)
