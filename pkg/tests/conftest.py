# LwD test suite -- shared fixtures
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
import numpy
import pytest

from lwd.graph import Graph


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n):
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def star_graph(leaves):
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


@pytest.fixture
def edge():
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def triangle():
    return complete_graph(3)


@pytest.fixture
def cycle5():
    return cycle_graph(5)


@pytest.fixture
def rng():
    return numpy.random.default_rng(20201016)


@pytest.fixture
def tiny_train_cfg(tmpdir):
    """Overrides for a training run that finishes in seconds."""
    return dict(problem='mis', model='er', n_min=5, n_max=8, p=0.3, horizon=4, unroll=4,
                envs=2, minibatch=2, grad_steps=1, updates=2, val_every=1, val_graphs=2,
                val_samples=2, hidden=8, layers=2, log_wall_time=False, seed=3,
                outdir=str(tmpdir.join("run")))
