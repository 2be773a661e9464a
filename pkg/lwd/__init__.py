# LwD python package
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3

"""
LwD python package
==================

LwD-Solver: a deferred-decision Markov decision process for
the maximum independent set problem and related locally decomposable
graph problems (weighted and prize-collecting independent set, maximum
cut, MAP inference on an anti-ferromagnetic Ising model).

A policy decides, for every undetermined vertex at once, whether to
exclude it, include it or defer the decision to a later iteration. The
policy and value networks are GraphSAGE networks on the subgraph induced
by the deferred vertices and are trained with proximal policy
optimization. Exact brute-force oracles, a greedy baseline and the
2-improvement local search are included for verification and
comparison.

The package is used through the ``lwd-solver.py`` script (verbs ``gen``,
``train``, ``eval``, ``solve`` and ``oracle``) or as a library.
"""
import logging

from . import config
from . import utilities
from . import graph
from . import generators
from . import sat
from . import problems
from . import bpio
from . import env
from . import nn
from . import agent
from . import ppo
from . import solvers

from ._version import __version__

# see the advice on logging and libraries in
# http://docs.python.org/library/logging.html?#configuring-logging-for-a-library
logging.getLogger("lwd").addHandler(logging.NullHandler())

def start_logging(logfile="lwd.log"):
    """Start logging of messages to file and console."""
    from . import log
    log.create("lwd", logfile=logfile)
    logging.getLogger("lwd").info("LwD %r STARTED logging to %r",
                                  __version__, logfile)

def stop_logging():
    """Stop logging to logfile."""
    from . import log
    logger = logging.getLogger("lwd")
    logger.info("LwD STOPPED logging")
    log.clear_handlers(logger)


def write_parameters(filename, **overrides):
    """Write a default training run configuration to *filename*.

    Key-value pairs in *overrides* replace the defaults (the
    synthetic-graph values, see :class:`lwd.ppo.TrainConfig`). Edit
    the file with a text editor and then use it as input for
    ``lwd-solver.py train --config FILE``.
    """
    cfg = ppo.TrainConfig(**overrides)
    return cfg.write(filename)
