# LwD -- proximal policy optimization
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Training with PPO --- :mod:`lwd.ppo`
====================================

Proximal policy optimization for the deferred MDP.

Every update collects coupled episodes on freshly generated graphs
(:func:`lwd.env.rollout`), computes undiscounted advantages of the
cardinality reward plus the weighted diversification reward, and takes
several passes of minibatch gradient steps on the clipped objective.

The probability ratio of a step is the product of the per-vertex
ratios :math:`r_i = \\pi_{new}(a_i|s) / \\pi_{old}(a_i|s)` over the
deferred vertices, and *each vertex's ratio is clipped individually* to
:math:`[1-\\epsilon, 1+\\epsilon]` before multiplying. With hundreds of
vertices the products under/overflow, so both branches are summed in
log space, the minimum (for non-negative advantages; maximum otherwise)
is taken on the log values and exponentiated once.

Run configuration
-----------------

A run is described by :class:`TrainConfig`; write a template with
:func:`lwd.write_parameters` and train with ``lwd-solver.py train
--config FILE``. Keys and defaults:

==================  ========  =====================================================
key                 default   meaning
==================  ========  =====================================================
problem             mis       mis, mwis, pcmis, maxcut, ising (required)
model               er        er, ba, hk, ws (required)
n_min, n_max        50, 100   vertex count range of the graphs (required)
p ... p_rewire      None      generator parameters; None = ``[generators]`` defaults
horizon             32        maximum number of MDP steps T
unroll              32        steps collected per episode and update (>= horizon)
envs                32        graphs per update (two coupled episodes each)
minibatch           16        episodes per minibatch
grad_steps          4         passes over the rollout batch per update
alpha               0.1       diversification reward coefficient
entropy_coef        0.1       entropy bonus coefficient
clip_eps            0.2       ratio clipping parameter
value_coef          0.5       value loss coefficient
lr                  1e-4      Adam learning rate
max_grad_norm       0.5       global gradient norm clip
updates             20000     number of PPO updates
val_every           100       updates between validations
val_graphs          100       size of the fixed validation set
val_samples         10        samples per validation graph (best-of-k)
log_every           1         updates between metrics lines
==================  ========  =====================================================

:meth:`TrainConfig.desk` gives a small profile that trains in minutes
on one CPU.
"""
import os

import numpy

from . import nn
from . import bpio
from .bpio import ConfigError
from .agent import ActorCritic, NUM_ACTIONS
from .env import rollout
from .generators import GENERATORS, GraphStream, sample_dataset
from .problems import PROBLEMS, ProblemSpec, objective, sample_weights
from .solvers import local_search_2imp
from .utilities import substream, child_seeds, mkdir_p, Timer

import logging
logger = logging.getLogger("lwd.ppo")


class NonFiniteLossError(FloatingPointError):
    """The PPO loss of a minibatch is NaN or infinite."""


#: generator keyword arguments that can appear in a run configuration, per model
GRAPH_PARAMETERS = {'er': ('p',), 'ba': ('m_attach',), 'hk': ('m_attach', 'p_triad'),
                    'ws': ('k', 'p_rewire')}


class TrainConfig(object):
    """Hyperparameters of a training run.

    Keyword arguments override the defaults in :attr:`parameters`;
    unknown keys raise :exc:`~lwd.bpio.ConfigError`.
    """
    #: (key, converter, default) in file order
    parameters = [
        ('problem', str, 'mis'),
        ('model', str, 'er'),
        ('n_min', int, 50),
        ('n_max', int, 100),
        ('p', bpio.float_or_None, None),
        ('m_attach', bpio.int_or_None, None),
        ('p_triad', bpio.float_or_None, None),
        ('k', bpio.int_or_None, None),
        ('p_rewire', bpio.float_or_None, None),
        ('lam', float, 0.5),
        ('beta', float, 1.0),
        ('gamma', float, 1.0),
        ('weight_mean', float, 1.0),
        ('weight_std', float, 0.1),
        ('horizon', int, 32),
        ('unroll', int, 32),
        ('envs', int, 32),
        ('minibatch', int, 16),
        ('grad_steps', int, 4),
        ('alpha', float, 0.1),
        ('entropy_coef', float, 0.1),
        ('clip_eps', float, 0.2),
        ('value_coef', float, 0.5),
        ('lr', float, 1e-4),
        ('max_grad_norm', float, 0.5),
        ('updates', int, 20000),
        ('val_every', int, 100),
        ('val_graphs', int, 100),
        ('val_samples', int, 10),
        ('log_every', int, 1),
        ('hidden', int, 128),
        ('layers', int, 4),
        ('shared_trunk', bpio.boolean, False),
        ('log_wall_time', bpio.boolean, True),
        ('seed', int, 0),
        ('outdir', str, 'lwd-run'),
    ]
    #: keys that a run input file must set
    required = ('problem', 'model', 'n_min', 'n_max')

    def __init__(self, **kwargs):
        known = dict((key, default) for key, _, default in self.parameters)
        for key, default in known.items():
            setattr(self, key, default)
        for key, value in kwargs.items():
            if key not in known:
                errmsg = "Unknown training parameter %r" % (key,)
                logger.fatal(errmsg)
                raise ConfigError(errmsg)
            setattr(self, key, value)
        self.validate()

    @classmethod
    def desk(cls, **overrides):
        """Small profile: ER-[15,20], p=0.15, T=16, 2000 updates, 16 envs."""
        values = dict(problem='mis', model='er', n_min=15, n_max=20, p=0.15,
                      horizon=16, unroll=16, envs=16, minibatch=8, grad_steps=4,
                      updates=2000, val_every=100, val_graphs=50)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_file(cls, filename, **overrides):
        """Read a run input file (see :class:`lwd.bpio.RunParameters`)."""
        runparams = bpio.RunParameters(filename, [(key, conv) for key, conv, _ in cls.parameters],
                                       required=cls.required)
        kwargs = runparams.get_kwargs()
        kwargs.update(overrides)
        return cls(**kwargs)

    def validate(self):
        def fail(errmsg):
            logger.fatal(errmsg)
            raise ValueError(errmsg)
        if self.problem not in PROBLEMS:
            fail("problem must be one of %s, got %r" % (", ".join(PROBLEMS), self.problem))
        if self.model not in GENERATORS:
            fail("model must be one of %s, got %r" % (", ".join(sorted(GENERATORS)), self.model))
        if not 1 <= self.n_min <= self.n_max:
            fail("need 1 <= n_min <= n_max, got %r, %r" % (self.n_min, self.n_max))
        for key in ('horizon', 'unroll', 'envs', 'minibatch', 'grad_steps', 'val_every',
                    'val_graphs', 'val_samples', 'log_every', 'hidden', 'layers'):
            if getattr(self, key) < 1:
                fail("%s must be positive, got %r" % (key, getattr(self, key)))
        if self.updates < 0:
            fail("updates must be non-negative, got %r" % (self.updates,))
        if not 0 < self.clip_eps < 1:
            fail("clip_eps must lie in (0, 1), got %r" % (self.clip_eps,))
        if self.unroll < self.horizon:
            fail("unroll (%d) must be at least the horizon (%d); episodes are never "
                 "truncated" % (self.unroll, self.horizon))
        if self.lr <= 0 or self.max_grad_norm <= 0:
            fail("lr and max_grad_norm must be positive")

    def as_dict(self):
        return dict((key, getattr(self, key)) for key, _, _ in self.parameters)

    def graph_params(self):
        """Generator keyword arguments set in this configuration."""
        return dict((key, getattr(self, key)) for key in GRAPH_PARAMETERS[self.model]
                    if getattr(self, key) is not None)

    def problem_spec(self):
        return ProblemSpec(self.problem, lam=self.lam, beta=self.beta, gamma=self.gamma)

    def write(self, filename):
        """Write all parameters as a flat run input file."""
        def fmt(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            return str(value)
        values = dict((key, fmt(value)) for key, value in self.as_dict().items())
        return bpio.write_run_parameters(
            filename, values, comment="LwD training run (lwd-solver.py train --config %s)"
            % os.path.basename(filename))

    def __repr__(self):
        return "<TrainConfig %s %s-[%d,%d] T=%d updates=%d>" % (
            self.problem, self.model.upper(), self.n_min, self.n_max, self.horizon, self.updates)


def instance_specs(spec, graphs, rng, mean=1.0, std=0.1):
    """One problem spec per graph; MWIS graphs get weights drawn from *rng*."""
    if spec.kind != 'mwis':
        return [spec] * len(graphs)
    return [spec.with_weights(sample_weights(g.n, rng, mean=mean, std=std)) for g in graphs]


def compute_advantages(batch, alpha):
    """Undiscounted advantages and returns of every recorded step.

    The return of step *t* is the suffix sum of
    ``(R + alpha * R_div) / reward_scale`` over the rest of its episode;
    the advantage subtracts the stored value prediction.

    :Returns: ``(advantages, returns)`` aligned with ``batch.steps``
    """
    returns = numpy.zeros(len(batch.steps))
    values = numpy.array([s.value for s in batch.steps], dtype=numpy.float64)
    for ep in batch.episodes:
        idx = numpy.asarray(ep.steps, dtype=numpy.int64)
        if len(idx) == 0:
            continue
        r = numpy.array([batch.steps[i].reward + alpha * batch.steps[i].div_reward
                         for i in idx]) / batch.reward_scale
        returns[idx] = numpy.cumsum(r[::-1])[::-1]
    return returns - values, returns


def ppo_loss(steps, advantages, returns, agent, cfg, tape=None, store=None):
    """Clipped PPO loss of a minibatch of recorded steps.

    :Arguments:
       *steps*
          list of :class:`lwd.env.Step`
       *advantages*, *returns*
          arrays aligned with *steps* (see :func:`compute_advantages`)
       *agent*
          :class:`~lwd.agent.ActorCritic`
       *cfg*
          anything with ``clip_eps``, ``value_coef`` and ``entropy_coef``
       *tape*
          :class:`~lwd.nn.Tape` to record on (``None`` for evaluation only)
       *store*
          optional replacement parameter store

    :Returns: ``(loss, terms)``; *terms* holds the float values of the
              ``policy``, ``value`` and ``entropy`` parts
    :Raises: :exc:`NonFiniteLossError`
    """
    store = agent.store if store is None else store
    dtype = store.dtype
    log_probs, values, sizes = agent.forward([s.adj for s in steps],
                                             [s.features for s in steps],
                                             tape=tape, store=store)
    actions = numpy.concatenate([s.actions for s in steps])
    old = nn.constant(numpy.concatenate([s.logp for s in steps]).astype(dtype), tape=tape)
    log_ratio = nn.sub(nn.pick(log_probs, actions), old)
    eps = cfg.clip_eps
    clipped = nn.clip(log_ratio, numpy.log(1.0 - eps), numpy.log(1.0 + eps))
    S = nn.segment_sum(log_ratio, sizes)
    S_clip = nn.segment_sum(clipped, sizes)

    A = numpy.asarray(advantages, dtype=dtype)
    take_unclipped = numpy.where(A >= 0, S.value <= S_clip.value, S.value >= S_clip.value)
    chosen = nn.where(take_unclipped, S, S_clip)
    policy_term = nn.scale(nn.mean(nn.mul(nn.constant(A, tape=tape), nn.exp(chosen))), -1.0)

    target = nn.constant(numpy.asarray(returns, dtype=dtype), tape=tape)
    value_term = nn.mean(nn.square(nn.sub(values, target)))

    probs = nn.exp(log_probs)
    ones = nn.constant(numpy.ones((NUM_ACTIONS, 1), dtype=dtype), tape=tape)
    per_vertex = nn.matmul(nn.mul(probs, log_probs), ones)
    entropy_term = nn.scale(nn.mean(per_vertex), -1.0)

    loss = nn.sub(nn.add(policy_term, nn.scale(value_term, cfg.value_coef)),
                  nn.scale(entropy_term, cfg.entropy_coef))
    terms = {'policy': float(policy_term.value), 'value': float(value_term.value),
             'entropy': float(entropy_term.value), 'loss': float(loss.value)}
    if not numpy.isfinite(terms['loss']):
        errmsg = "non-finite PPO loss (policy=%r value=%r entropy=%r)" % (
            terms['policy'], terms['value'], terms['entropy'])
        logger.fatal(errmsg)
        raise NonFiniteLossError(errmsg)
    return loss, terms


def ppo_update(agent, batch, advantages, returns, cfg, rng):
    """*cfg.grad_steps* passes of minibatch steps (clip, then Adam) over *batch*.

    :Returns: mean loss and mean entropy over all minibatches
    """
    episodes = [ep for ep in batch.episodes if ep.steps]
    losses, entropies = [], []
    for _ in range(cfg.grad_steps):
        order = rng.permutation(len(episodes))
        for start in range(0, len(order), cfg.minibatch):
            idx = numpy.array([i for e in order[start:start + cfg.minibatch]
                               for i in episodes[e].steps], dtype=numpy.int64)
            tape = nn.Tape()
            agent.store.zero_grad()
            loss, terms = ppo_loss([batch.steps[i] for i in idx], advantages[idx],
                                   returns[idx], agent, cfg, tape=tape)
            tape.backward(loss)
            nn.clip_grad_norm(agent.store, cfg.max_grad_norm)
            nn.adam_step(agent.store, lr=cfg.lr)
            losses.append(terms['loss'])
            entropies.append(terms['entropy'])
    if not losses:
        return 0.0, 0.0
    return float(numpy.mean(losses)), float(numpy.mean(entropies))


def evaluate_best_of_k(policy, graphs, spec, horizon, k=10, seed=0, local_search=False):
    """Sample *k* solutions per graph and keep the best.

    Sample *j* of graph *i* draws its random numbers from
    ``SeedSequence(seed, spawn_key=(i, j))``, so the first *k* samples
    are the same for every larger *k*. With *local_search* every MIS
    sample is improved by :func:`~lwd.solvers.local_search_2imp` before
    the comparison. ``time_ms`` covers sampling and local search only.

    :Returns: list of dicts with ``best``, ``mean``, ``objectives``,
              ``solution`` (of the best sample) and ``time_ms``
    """
    if k < 1:
        raise ValueError("k must be at least 1, got %r" % (k,))
    specs = spec if isinstance(spec, (list, tuple)) else [spec] * len(graphs)
    if local_search and specs and specs[0].kind != 'mis':
        logger.warning("local search is defined for MIS only; ignored for %s", specs[0].kind)
        local_search = False
    results = []
    for gi, (g, sp) in enumerate(zip(graphs, specs)):
        rngs = [numpy.random.default_rng(numpy.random.SeedSequence(seed, spawn_key=(gi, j)))
                for j in range(k)]
        with Timer() as timer:
            batch = rollout(policy, [g] * k, sp, horizon, rng=rngs, record=False)
            solutions = batch.solutions()
            if local_search:
                improved = []
                for x in solutions:
                    members = local_search_2imp(g, numpy.flatnonzero(x))
                    y = numpy.zeros(g.n, dtype=numpy.int8)
                    y[members] = 1
                    improved.append(y)
                solutions = improved
        objectives = numpy.array([objective(sp, g, x) for x in solutions])
        best = int(numpy.argmax(objectives))
        results.append({'best': float(objectives[best]), 'mean': float(objectives.mean()),
                        'objectives': objectives, 'solution': solutions[best],
                        'solutions': solutions, 'time_ms': timer.ms})
    return results


def mean_pairwise_deviation(solutions):
    """Mean L1 distance over all pairs of 0/1 solution vectors (0 for fewer than two)."""
    X = numpy.asarray(solutions, dtype=numpy.int64)
    if len(X) < 2:
        return 0.0
    total, pairs = 0, 0
    for a in range(len(X)):
        total += numpy.abs(X[a + 1:] - X[a]).sum()
        pairs += len(X) - a - 1
    return float(total) / pairs


def validation_set(cfg):
    """The fixed validation graphs (and per-graph specs) of a run."""
    graphs = sample_dataset(cfg.model, cfg.n_min, cfg.n_max, cfg.val_graphs, cfg.seed,
                            name="val", **cfg.graph_params())
    specs = instance_specs(cfg.problem_spec(), graphs, substream(cfg.seed, "weights"),
                           mean=cfg.weight_mean, std=cfg.weight_std)
    return graphs, specs


def validate(agent, graphs, specs, cfg):
    """Best-of-``val_samples`` validation; returns (mean best objective, results)."""
    seed = child_seeds(cfg.seed, "eval", 1)[0]
    results = evaluate_best_of_k(agent, graphs, specs, cfg.horizon, k=cfg.val_samples,
                                 seed=seed)
    return float(numpy.mean([r['best'] for r in results])), results


#: run configuration written next to the checkpoints of :func:`train`
RUN_CONFIG = "train.cfg"


def checkpoint_config(checkpoint):
    """The :class:`TrainConfig` of the run that wrote *checkpoint*.

    :func:`train` writes :data:`RUN_CONFIG` into the directory of its
    checkpoints; ``None`` is returned for a checkpoint without one.
    """
    filename = os.path.join(os.path.dirname(os.path.abspath(checkpoint)), RUN_CONFIG)
    if not os.path.exists(filename):
        return None
    return TrainConfig.from_file(filename)


def train(cfg, outdir=None):
    """Train an agent with PPO.

    Writes ``metrics.jsonl``, ``last.ckpt`` (the final parameters),
    ``best.ckpt`` (the parameters with the best validation score, or
    the final ones if no validation took place) and the run
    configuration :data:`RUN_CONFIG` to *outdir* (default
    ``cfg.outdir``).

    :Returns: dict with the agent, the file names and the best
              validation score
    """
    outdir = cfg.outdir if outdir is None else outdir
    mkdir_p(outdir)
    best_ckpt = os.path.join(outdir, "best.ckpt")
    last_ckpt = os.path.join(outdir, "last.ckpt")
    metrics_file = os.path.join(outdir, "metrics.jsonl")
    cfg.write(os.path.join(outdir, RUN_CONFIG))

    spec = cfg.problem_spec()
    agent = ActorCritic(in_features=spec.num_features, hidden=cfg.hidden, layers=cfg.layers,
                        shared_trunk=cfg.shared_trunk, rng=substream(cfg.seed, "init"))
    gen_rng = substream(cfg.seed, "gen")
    stream = GraphStream(cfg.model, cfg.n_min, cfg.n_max, gen_rng, **cfg.graph_params())
    train_rng = substream(cfg.seed, "train")
    val_graphs, val_specs = validation_set(cfg)
    logger.info("Training %r: %r, %d validation graphs", cfg, agent, len(val_graphs))

    best_val = None
    val_mean = None
    with bpio.MetricsLog(metrics_file) as metrics:
        for update in range(1, cfg.updates + 1):
            with Timer() as timer:
                graphs = stream.draw(cfg.envs)
                specs = instance_specs(spec, graphs, gen_rng,
                                       mean=cfg.weight_mean, std=cfg.weight_std)
                batch = rollout(agent, graphs, specs, cfg.horizon, coupled=True,
                                rng=train_rng, reward_scale=cfg.n_max)
                advantages, returns = compute_advantages(batch, cfg.alpha)
                try:
                    loss, entropy = ppo_update(agent, batch, advantages, returns, cfg, train_rng)
                except NonFiniteLossError:
                    logger.fatal("update %d aborted", update)
                    raise
            if update % cfg.val_every == 0:
                val_mean, _ = validate(agent, val_graphs, val_specs, cfg)
                if best_val is None or val_mean > best_val:
                    best_val = val_mean
                    agent.save(best_ckpt)
                logger.info("update %d: validation mean %.4f (best %.4f)",
                            update, val_mean, best_val)
            if update % cfg.log_every == 0:
                record = {'update': update, 'mean_return': batch.mean_return(),
                          'val_mean': val_mean, 'val_best': best_val,
                          'entropy': entropy, 'loss': loss,
                          'deviation': batch.mean_deviation(),
                          'wall_ms': timer.ms if cfg.log_wall_time else 0.0}
                metrics.write(record)
                logger.info("update %d: mean return %.3f, loss %.4f, entropy %.4f",
                            update, record['mean_return'], loss, entropy)
    agent.save(last_ckpt)
    if best_val is None:
        agent.save(best_ckpt)
    logger.info("Training finished: %r, %r", last_ckpt, best_ckpt)
    return {'agent': agent, 'best': best_ckpt, 'last': last_ckpt,
            'metrics': metrics_file, 'best_val': best_val}
