# LwD -- 3-SAT to independent set reduction
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
SAT instances as MIS instances --- :mod:`lwd.sat`
=================================================

A CNF formula with *k* clauses becomes a graph with one vertex per
literal occurrence. Vertices of the same clause form a clique and every
occurrence of a variable is joined to every occurrence of its negation.
An independent set can therefore pick at most one literal per clause and
never two contradicting literals, so the formula is satisfiable if and
only if the maximum independent set has exactly *k* vertices.

Formulas are read from the DIMACS CNF format (the SATLIB subset: ``c``
comment lines, a ``p cnf V C`` header, clauses terminated by ``0`` and
possibly spanning lines, and the ``%`` trailer of the SATLIB files).
"""
import itertools

import numpy

from .graph import Graph
from .utilities import openany

import logging
logger = logging.getLogger("lwd.sat")


class CNFError(ValueError):
    """Invalid CNF formula or DIMACS file."""


def parse_dimacs(filename):
    """Read a DIMACS CNF file.

    :Returns: ``(num_vars, clauses)``, clauses as lists of signed ints
    :Raises: :exc:`CNFError` for a missing/malformed header or an empty clause
    """
    num_vars = None
    clauses = []
    current = []
    with openany(filename) as cnf:
        for line in cnf:
            line = line.strip()
            if not line or line.startswith('c'):
                continue
            if line.startswith('%'):
                break                    # SATLIB trailer
            if line.startswith('p'):
                fields = line.split()
                if len(fields) != 4 or fields[1] != 'cnf':
                    errmsg = "Invalid problem line %r in %r" % (line, filename)
                    logger.fatal(errmsg)
                    raise CNFError(errmsg)
                num_vars = int(fields[2])
                continue
            if num_vars is None:
                errmsg = "Clause before the 'p cnf' header in %r" % (filename,)
                logger.fatal(errmsg)
                raise CNFError(errmsg)
            for lit in map(int, line.split()):
                if lit == 0:
                    if not current:
                        errmsg = "Empty clause in %r" % (filename,)
                        logger.fatal(errmsg)
                        raise CNFError(errmsg)
                    clauses.append(current)
                    current = []
                else:
                    current.append(lit)
    if current:
        clauses.append(current)        # tolerate a missing final 0
    if num_vars is None:
        errmsg = "No 'p cnf' header in %r" % (filename,)
        logger.fatal(errmsg)
        raise CNFError(errmsg)
    logger.debug("Read %d variables, %d clauses from %r", num_vars, len(clauses), filename)
    return num_vars, clauses


def write_dimacs(filename, num_vars, clauses):
    """Write *clauses* to *filename* in DIMACS CNF format."""
    with openany(filename, 'w') as cnf:
        cnf.write("p cnf %d %d\n" % (num_vars, len(clauses)))
        for clause in clauses:
            cnf.write(" ".join(str(lit) for lit in clause) + " 0\n")


class LiteralMap(object):
    """Vertex -> literal bookkeeping of :func:`sat3_to_mis`.

    :Attributes:
       *literals*
          signed literal of each vertex
       *clauses*
          clause index of each vertex
    """
    def __init__(self, literals, clauses):
        self.literals = numpy.asarray(literals, dtype=numpy.int64)
        self.clauses = numpy.asarray(clauses, dtype=numpy.int64)

    @property
    def num_clauses(self):
        return int(self.clauses.max()) + 1 if len(self.clauses) else 0

    def assignment(self, independent_set):
        """Truth assignment encoded by an independent set.

        Variables whose positive literal is in the set are True, those
        whose negative literal is in it are False; variables that do not
        appear are set False.

        :Returns: dict ``{variable: bool}``
        """
        values = {}
        for v in numpy.asarray(sorted(independent_set), dtype=numpy.int64):
            lit = int(self.literals[v])
            values[abs(lit)] = lit > 0
        for var in numpy.unique(numpy.abs(self.literals)):
            values.setdefault(int(var), False)
        return values

    def __len__(self):
        return len(self.literals)


def sat3_to_mis(clauses):
    """Reduce a CNF formula (clauses of signed ints, at most 3 literals) to MIS.

    :Returns: ``(graph, literal_map)``
    :Raises: :exc:`CNFError` for an empty clause or a zero literal
    """
    literals, owners = [], []
    for c, clause in enumerate(clauses):
        clause = list(clause)
        if not clause:
            errmsg = "clause %d is empty" % c
            logger.fatal(errmsg)
            raise CNFError(errmsg)
        if 0 in clause:
            errmsg = "clause %d contains the literal 0" % c
            logger.fatal(errmsg)
            raise CNFError(errmsg)
        if len(clause) > 3:
            logger.warning("clause %d has %d literals (not 3-SAT)", c, len(clause))
        literals.extend(clause)
        owners.extend([c] * len(clause))

    edges = set()
    start = 0
    for clause in clauses:
        members = range(start, start + len(clause))
        edges.update(itertools.combinations(members, 2))
        start += len(clause)
    occurrences = {}
    for v, lit in enumerate(literals):
        occurrences.setdefault(lit, []).append(v)
    for lit, vs in occurrences.items():
        if lit > 0:
            for u in vs:
                for w in occurrences.get(-lit, []):
                    edges.add((min(u, w), max(u, w)))
    g = Graph.from_edges(len(literals), sorted(edges))
    logger.debug("3-SAT with %d clauses -> graph n=%d m=%d", len(clauses), g.n, g.m)
    return g, LiteralMap(literals, owners)
