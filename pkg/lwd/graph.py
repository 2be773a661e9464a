# LwD -- sparse undirected graphs
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Graphs --- :mod:`lwd.graph`
===========================

Immutable undirected simple graphs in compressed sparse row (CSR) form,
induced subgraphs and the symmetrically normalized adjacency matrix
:math:`\\hat{A} = D^{-1/2} A D^{-1/2}` used by the GraphSAGE layers.

A :class:`Graph` is always in canonical form: vertices are ``0..n-1``,
every neighbor list is sorted ascending, there are no self-loops and no
duplicate edges, and the adjacency is symmetric. Graphs (and
:class:`NormalizedAdjacency` matrices) are never modified after
construction and can be shared freely between threads.

.. autoclass:: Graph
   :members:
.. autoclass:: VertexMapping
   :members:
.. autoclass:: NormalizedAdjacency
   :members:
.. autofunction:: induced_subgraph
.. autofunction:: normalized_adjacency
"""
import numpy
import scipy.sparse
import networkx

import logging
logger = logging.getLogger("lwd.graph")


class GraphError(ValueError):
    """Base class for invalid graph input."""

class SelfLoopError(GraphError):
    """An edge joins a vertex to itself."""

class DuplicateEdgeError(GraphError):
    """An undirected edge occurs more than once."""

class VertexRangeError(GraphError):
    """A vertex id is outside ``0..n-1``."""

class MalformedHeaderError(GraphError):
    """The "n m" header of an edge-list file cannot be parsed."""

class EdgeCountError(GraphError):
    """An edge-list file does not contain the number of edges its header promises."""


def _frozen(a):
    a.flags.writeable = False
    return a


class Graph(object):
    """Undirected simple graph with *n* vertices in CSR form.

    Build graphs with :meth:`from_edges` (validating) or
    :meth:`from_networkx`; the constructor expects canonical CSR arrays
    and is used internally.

    :Attributes:
       *n*
          number of vertices
       *m*
          number of undirected edges
       *indptr*, *indices*
          CSR arrays; the neighbors of ``i`` are
          ``indices[indptr[i]:indptr[i+1]]`` (sorted)
    """
    def __init__(self, n, indptr, indices):
        self.n = int(n)
        self.indptr = _frozen(numpy.asarray(indptr, dtype=numpy.int64))
        self.indices = _frozen(numpy.asarray(indices, dtype=numpy.int64))
        self.m = len(self.indices) // 2
        self._adjacency = None
        self._edges = None

    @classmethod
    def from_edges(cls, n, edges):
        """Build a graph from an iterable of vertex pairs.

        Pairs may be given in any order and orientation. Self-loops,
        repeated edges and out-of-range ids are rejected, each with its
        own exception (:exc:`SelfLoopError`, :exc:`DuplicateEdgeError`,
        :exc:`VertexRangeError`).
        """
        n = int(n)
        if n < 0:
            raise GraphError("vertex count must be non-negative, got %d" % n)
        e = numpy.asarray(list(edges) if not isinstance(edges, numpy.ndarray) else edges,
                          dtype=numpy.int64).reshape(-1, 2)
        u, v = e[:, 0], e[:, 1]
        if len(e) and (e.min() < 0 or e.max() >= n):
            bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
            errmsg = "edge (%d, %d) has a vertex id outside 0..%d" % (bad[0], bad[1], n - 1)
            logger.error(errmsg)
            raise VertexRangeError(errmsg)
        loops = u == v
        if loops.any():
            errmsg = "self-loop at vertex %d" % u[loops][0]
            logger.error(errmsg)
            raise SelfLoopError(errmsg)
        lo, hi = numpy.minimum(u, v), numpy.maximum(u, v)
        keys = lo * max(n, 1) + hi
        uniq, counts = numpy.unique(keys, return_counts=True)
        if (counts > 1).any():
            k = uniq[counts > 1][0]
            errmsg = "duplicate edge (%d, %d)" % divmod(k, max(n, 1))
            logger.error(errmsg)
            raise DuplicateEdgeError(errmsg)
        rows = numpy.concatenate([lo, hi])
        cols = numpy.concatenate([hi, lo])
        order = numpy.lexsort((cols, rows))
        indptr = numpy.zeros(n + 1, dtype=numpy.int64)
        numpy.cumsum(numpy.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, indptr, cols[order])

    @classmethod
    def from_networkx(cls, G):
        """Build a graph from a :class:`networkx.Graph` with nodes ``0..n-1``."""
        return cls.from_edges(G.number_of_nodes(), list(G.edges()))

    def to_networkx(self):
        """Return the graph as a :class:`networkx.Graph`."""
        G = networkx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(self.edges().tolist())
        return G

    def neighbors(self, i):
        """Sorted neighbor ids of vertex *i* (read-only view)."""
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self):
        """Array of vertex degrees."""
        return numpy.diff(self.indptr)

    def edges(self):
        """(m, 2) array of edges ``(u, v)`` with ``u < v``, lexicographically sorted."""
        if self._edges is None:
            rows = numpy.repeat(numpy.arange(self.n, dtype=numpy.int64), self.degree())
            keep = rows < self.indices
            self._edges = _frozen(numpy.column_stack([rows[keep], self.indices[keep]]))
        return self._edges

    def adjacency(self):
        """Adjacency matrix as a :class:`scipy.sparse.csr_matrix` of int8 ones."""
        if self._adjacency is None:
            data = numpy.ones(len(self.indices), dtype=numpy.int8)
            self._adjacency = scipy.sparse.csr_matrix(
                (data, self.indices, self.indptr), shape=(self.n, self.n))
        return self._adjacency

    def is_canonical(self):
        """Check every structural invariant by scanning the CSR arrays."""
        if len(self.indptr) != self.n + 1 or self.indptr[0] != 0 \
                or self.indptr[-1] != len(self.indices) or len(self.indices) % 2:
            return False
        for i in range(self.n):
            nb = self.neighbors(i)
            if len(nb) and (nb[0] < 0 or nb[-1] >= self.n):
                return False
            if (numpy.diff(nb) <= 0).any() or (nb == i).any():
                return False
        a = self.adjacency()
        return (a != a.T).nnz == 0

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and numpy.array_equal(self.indptr, other.indptr) \
            and numpy.array_equal(self.indices, other.indices)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self):
        return "<Graph n=%d m=%d>" % (self.n, self.m)


class VertexMapping(object):
    """Map between the vertex ids of a subgraph and of the graph it came from.

    *sub_to_full[i]* is the original id of subgraph vertex *i*; the
    array is strictly increasing, so subgraph vertices keep the order of
    the original graph.
    """
    def __init__(self, sub_to_full, n_full):
        self.sub_to_full = _frozen(numpy.asarray(sub_to_full, dtype=numpy.int64))
        self.n_full = int(n_full)

    def __len__(self):
        return len(self.sub_to_full)

    def to_full(self, sub_ids):
        """Original ids of subgraph vertices *sub_ids*."""
        return self.sub_to_full[sub_ids]

    def to_sub(self, full_ids):
        """Subgraph ids of original vertices *full_ids* (-1 where not kept)."""
        lookup = numpy.full(self.n_full, -1, dtype=numpy.int64)
        lookup[self.sub_to_full] = numpy.arange(len(self.sub_to_full))
        return lookup[full_ids]

    def __repr__(self):
        return "<VertexMapping %d of %d vertices>" % (len(self), self.n_full)


def induced_subgraph(g, keep):
    """Return the subgraph of *g* induced on the vertex set *keep*.

    *keep* is any collection of vertex ids (a boolean mask of length
    ``g.n`` is also accepted). The subgraph numbers its vertices in
    ascending order of their original ids.

    :Returns: ``(subgraph, mapping)`` with a :class:`VertexMapping`
    :Raises: :exc:`VertexRangeError` for ids outside ``0..n-1``
    """
    keep = numpy.asarray(keep)
    if keep.dtype == bool:
        if len(keep) != g.n:
            raise VertexRangeError("mask length %d does not match n=%d" % (len(keep), g.n))
        keep = numpy.flatnonzero(keep)
    keep = numpy.unique(keep.astype(numpy.int64))
    if len(keep) and (keep[0] < 0 or keep[-1] >= g.n):
        errmsg = "vertex ids must be in 0..%d" % (g.n - 1)
        logger.error(errmsg)
        raise VertexRangeError(errmsg)
    sub = g.adjacency()[keep][:, keep].tocsr()
    sub.sort_indices()
    return Graph(len(keep), sub.indptr, sub.indices), VertexMapping(keep, g.n)


class NormalizedAdjacency(object):
    """Symmetrically normalized adjacency :math:`D^{-1/2} A D^{-1/2}` (float32 CSR).

    Entry (i, j) is :math:`1/\\sqrt{d_i d_j}` for every edge and zero
    otherwise; rows of isolated vertices are all zero. :attr:`matrix` is
    the underlying :class:`scipy.sparse.csr_matrix`.
    """
    def __init__(self, matrix):
        self.matrix = matrix

    @property
    def shape(self):
        return self.matrix.shape

    def dot(self, H):
        """Return Â·H for a dense (n, d) array."""
        return self.matrix.dot(H)

    def toarray(self):
        return self.matrix.toarray()

    @staticmethod
    def block_diag(blocks):
        """Block-diagonal stacking of several normalized adjacencies (batched graphs)."""
        if len(blocks) == 1:
            return blocks[0]
        mats = [b.matrix for b in blocks]
        return NormalizedAdjacency(scipy.sparse.block_diag(mats, format='csr',
                                                           dtype=numpy.float32))

    def __repr__(self):
        return "<NormalizedAdjacency %dx%d nnz=%d>" % (self.shape + (self.matrix.nnz,))


def normalized_adjacency(g):
    """Return the :class:`NormalizedAdjacency` of graph *g*."""
    deg = g.degree().astype(numpy.float64)
    inv_sqrt = numpy.zeros(g.n)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / numpy.sqrt(deg[nz])
    rows = numpy.repeat(numpy.arange(g.n), g.degree())
    data = (inv_sqrt[rows] * inv_sqrt[g.indices]).astype(numpy.float32)
    matrix = scipy.sparse.csr_matrix((data, g.indices, g.indptr), shape=(g.n, g.n))
    return NormalizedAdjacency(matrix)
