#!/usr/bin/env python
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3

"""lwd-solver.py [--logfile FILE] VERB [options]

Generate datasets, train deferred-MDP agents with PPO and evaluate them.

Verbs:

  gen     write random graphs (er, ba, hk, ws), reduce CNF formulas, or
          regenerate a dataset from its manifest
  train   train an agent from a run input file (see lwd.write_parameters)
  eval    best-of-k evaluation of a checkpoint on a dataset
  solve   greedy (and greedy + 2-improvement) baseline
  oracle  exact solutions of small graphs

Run 'lwd-solver.py VERB --help' for the options of a verb.
"""

import sys

from lwd.cli import main

if __name__ == "__main__":
    sys.exit(main())
