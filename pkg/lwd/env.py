# LwD -- the deferred MDP
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Deferred MDP environments --- :mod:`lwd.env`
============================================

State and transitions
---------------------

The state is a vertex-state vector :math:`s \\in \\{0, 1, *\\}^V`
(:data:`~lwd.problems.EXCLUDED`, :data:`~lwd.problems.INCLUDED`,
:data:`~lwd.problems.DEFERRED`). An episode starts with every vertex
deferred. At each step the agent assigns 0, 1 or * to every deferred
vertex (the *update phase*). For MIS and MWIS the *clean-up phase*
then repairs the intermediate state:

1. every included vertex with an included neighbor goes back to
   deferred (all conflicts are found first, then applied);
2. every deferred vertex next to an included vertex is excluded.

Afterwards no two included vertices are adjacent and no deferred vertex
touches an included one; determined vertices never change again.

The reward of a step is the increase of the partial objective
(:func:`lwd.problems.partial_objective`), i.e. the number (weight) of
newly included vertices for MIS (MWIS). The episode ends when no
deferred vertex is left or after *horizon* steps; at the horizon the
remaining deferred vertices are completed by
:func:`lwd.problems.greedy_complete` and the objective change is added to
the last reward.

Coupled episodes
----------------

A :class:`CoupledEnv` runs two copies of the MDP on the same graph. The
*diversification reward* of a step counts :math:`|s'_i - \\bar{s}'_i|`
for every vertex that has just become determined in both copies, so
that over an episode it adds up to :math:`\\lVert x - \\bar{x} \\rVert_1`.

Rollouts
--------

:func:`rollout` runs a batch of (possibly coupled) episodes against a
policy and returns a :class:`RolloutBatch`, the training unit of
:mod:`lwd.ppo`. Environments are stepped in lockstep so that the policy
sees all active deferred subgraphs of a step in one block-diagonal
batch.
"""
import numpy

from .graph import induced_subgraph, normalized_adjacency
from .problems import (EXCLUDED, INCLUDED, DEFERRED, partial_objective,
                       objective, greedy_complete)
from .agent import sample_actions

import logging
logger = logging.getLogger("lwd.env")


class EpisodeFinishedError(RuntimeError):
    """A finished episode was stepped again."""


def cleanup(g, s_hat):
    """Clean-up phase: repair the intermediate state *s_hat* of graph *g*.

    :Returns: new state vector (int8)
    """
    s = numpy.array(s_hat, dtype=numpy.int8)
    A = g.adjacency()
    included = (s == INCLUDED).astype(numpy.int32)
    conflict = (included > 0) & (A.dot(included) > 0)
    s[conflict] = DEFERRED
    included = (s == INCLUDED).astype(numpy.int32)
    touched = A.dot(included) > 0
    s[(s == DEFERRED) & touched] = EXCLUDED
    return s


class EnvState(object):
    """One episode of the deferred MDP on graph *graph*.

    :Attributes:
       *state*
          current vertex-state vector (int8)
       *t*
          number of steps taken
       *potential*
          cached partial objective of *state*
       *done*
          episode finished
       *solution*
          final 0/1 assignment once *done*
    """
    def __init__(self, graph, spec, horizon):
        if horizon < 1:
            errmsg = "horizon must be at least 1, got %r" % (horizon,)
            logger.fatal(errmsg)
            raise ValueError(errmsg)
        spec.vertex_weights(graph.n)     # fail early on missing MWIS weights
        self.graph = graph
        self.spec = spec
        self.horizon = int(horizon)
        self.state = numpy.full(graph.n, DEFERRED, dtype=numpy.int8)
        self.t = 0
        self.potential = 0.0
        self.done = graph.n == 0
        self.solution = self.state.copy() if self.done else None
        self._subgraph = None

    def deferred(self):
        """Ids of the deferred vertices, ascending."""
        return numpy.flatnonzero(self.state == DEFERRED)

    def deferred_subgraph(self):
        """``(subgraph, mapping, normalized_adjacency)`` of the deferred vertices."""
        if self._subgraph is None or self._subgraph[0] != self.t:
            sub, mapping = induced_subgraph(self.graph, self.deferred())
            self._subgraph = (self.t, sub, mapping, normalized_adjacency(sub))
        return self._subgraph[1:]

    def features(self):
        """Per-vertex input rows for the deferred subgraph.

        Columns: degree inside the deferred subgraph divided by its
        maximum (at least 1), the iteration index t/T and, for MWIS, the
        vertex weight.
        """
        sub, mapping, _ = self.deferred_subgraph()
        deg = sub.degree().astype(numpy.float32)
        cols = [deg / max(1.0, float(deg.max()) if len(deg) else 1.0),
                numpy.full(sub.n, self.t / float(self.horizon), dtype=numpy.float32)]
        if self.spec.kind == 'mwis':
            weights = self.spec.vertex_weights(self.graph.n)
            cols.append(weights[mapping.to_full(numpy.arange(sub.n))])
        return numpy.column_stack(cols).astype(numpy.float32)

    def step(self, action):
        """Apply *action* (one value in {0, 1, 2} per deferred vertex).

        :Returns: ``(self, reward, done)``
        :Raises: :exc:`EpisodeFinishedError`, :exc:`ValueError` for a
                 malformed action
        """
        if self.done:
            errmsg = "step() called on a finished episode (t=%d)" % self.t
            logger.error(errmsg)
            raise EpisodeFinishedError(errmsg)
        deferred = self.deferred()
        a = numpy.asarray(action)
        if a.shape != (len(deferred),):
            errmsg = "action has shape %s, expected (%d,) for the deferred vertices" % (
                a.shape, len(deferred))
            logger.error(errmsg)
            raise ValueError(errmsg)
        if len(a) and (a.min() < 0 or a.max() > DEFERRED):
            raise ValueError("action values must be 0, 1 or 2 (deferred)")

        s_hat = self.state.copy()
        s_hat[deferred] = a
        s_new = cleanup(self.graph, s_hat) if self.spec.uses_cleanup else s_hat
        potential = partial_objective(self.spec, self.graph, s_new)
        reward = potential - self.potential
        self.t += 1
        if not (s_new == DEFERRED).any():
            self.done = True
        elif self.t >= self.horizon:
            x = greedy_complete(self.spec, self.graph, s_new)
            final = objective(self.spec, self.graph, x)
            reward += final - potential
            s_new, potential = x, final
            self.done = True
        self.state = s_new
        self.potential = potential
        if self.done:
            self.solution = self.state.copy()
        return self, reward, self.done

    def __repr__(self):
        return "<EnvState %s n=%d t=%d/%d deferred=%d%s>" % (
            self.spec.kind, self.graph.n, self.t, self.horizon,
            len(self.deferred()), " done" if self.done else "")


def reset(g, spec, horizon):
    """Start an episode on *g*: all vertices deferred, t = 0."""
    return EnvState(g, spec, horizon)


def step(env, action):
    """Functional form of :meth:`EnvState.step`."""
    return env.step(action)


def div_reward(prev, next):
    """Diversification reward of one coupled transition.

    *prev* = (s, s̄) and *next* = (s', s̄'). A vertex contributes
    :math:`|s'_i - \\bar{s}'_i|` at the step where it becomes determined
    in both copies, and never again.
    """
    s, sb = prev
    s1, sb1 = next
    both_now = (s1 != DEFERRED) & (sb1 != DEFERRED)
    both_before = (s != DEFERRED) & (sb != DEFERRED)
    fresh = both_now & ~both_before
    return float(numpy.abs(s1[fresh].astype(numpy.int64) - sb1[fresh]).sum())


def state_deviation(s, sb):
    """Fraction of vertices whose states differ between two coupled copies."""
    s = numpy.asarray(s)
    if len(s) == 0:
        return 0.0
    return float(numpy.count_nonzero(s != numpy.asarray(sb))) / len(s)


class CoupledEnv(object):
    """Two episodes on the same graph advanced in lockstep.

    A copy that finishes first keeps its final state while the other
    one continues; :attr:`t` counts the joint steps.
    """
    def __init__(self, graph, spec, horizon):
        self.envs = (reset(graph, spec, horizon), reset(graph, spec, horizon))
        self.graph = graph
        self.horizon = int(horizon)
        self.t = 0

    @property
    def done(self):
        return self.envs[0].done and self.envs[1].done

    def states(self):
        return (self.envs[0].state, self.envs[1].state)

    def step(self, action, action_bar):
        """Step both copies (an action for a finished copy is ignored).

        :Returns: ``(reward, reward_bar, div_reward, done)``
        """
        prev = self.states()
        rewards = []
        for env, a in zip(self.envs, (action, action_bar)):
            if env.done:
                rewards.append(0.0)
            else:
                rewards.append(env.step(a)[1])
        self.t += 1
        return rewards[0], rewards[1], div_reward(prev, self.states()), self.done


class Step(object):
    """One recorded (episode, step) of a rollout."""
    __slots__ = ('episode', 't', 'adj', 'features', 'actions', 'logp',
                 'reward', 'div_reward', 'value', 'deviation')

    def __init__(self, episode, t, adj, features, actions, logp, reward=0.0,
                 div_reward=0.0, value=0.0, deviation=0.0):
        self.episode = episode
        self.t = t
        self.adj = adj
        self.features = features
        self.actions = actions
        self.logp = logp
        self.reward = reward
        self.div_reward = div_reward
        self.value = value
        self.deviation = deviation

    @property
    def size(self):
        return len(self.actions)


class Episode(object):
    """Summary of one finished episode of a rollout."""
    def __init__(self, index, graph, spec, partner=None):
        self.index = index
        self.graph = graph
        self.spec = spec
        self.partner = partner
        self.steps = []          # indices into RolloutBatch.steps
        self.solution = None
        self.total_reward = 0.0
        self.total_div = 0.0

    @property
    def objective(self):
        return objective(self.spec, self.graph, self.solution)


class RolloutBatch(object):
    """Trajectories collected by :func:`rollout`.

    :Attributes:
       *steps*
          list of :class:`Step`, ordered by episode and then by step
       *episodes*
          list of :class:`Episode`
       *reward_scale*
          rewards are divided by this before entering the learner (the
          dataset's maximum vertex count); recorded rewards are raw
       *coupled*
          episodes come in coupled pairs ``(2g, 2g+1)``
    """
    def __init__(self, steps, episodes, reward_scale=1.0, coupled=False):
        self.steps = steps
        self.episodes = episodes
        self.reward_scale = float(reward_scale)
        self.coupled = coupled

    def __len__(self):
        return len(self.steps)

    def solutions(self):
        return [ep.solution for ep in self.episodes]

    def mean_return(self):
        """Mean raw cardinality/objective return per episode."""
        return float(numpy.mean([ep.total_reward for ep in self.episodes]))

    def mean_deviation(self):
        """Mean fraction of vertices on which coupled states differ, over the recorded steps.

        Zero for an uncoupled batch.
        """
        if not self.coupled or not self.steps:
            return 0.0
        return float(numpy.mean([s.deviation for s in self.steps]))

    def __repr__(self):
        return "<RolloutBatch %d episodes, %d steps%s>" % (
            len(self.episodes), len(self.steps), " coupled" if self.coupled else "")


def _as_list(x, count):
    if isinstance(x, (list, tuple)):
        if len(x) != count:
            raise ValueError("expected %d entries, got %d" % (count, len(x)))
        return list(x)
    return [x] * count


def rollout(policy, graphs, spec, horizon, coupled=False, rng=None,
            reward_scale=1.0, record=True):
    """Run one episode per graph (a coupled pair per graph if *coupled*).

    :Arguments:
       *policy*
          object with ``forward_batch(adjs, features) -> (outputs, values)``
          (see :class:`lwd.agent.ActorCritic`)
       *graphs*
          list of :class:`~lwd.graph.Graph`
       *spec*
          a :class:`~lwd.problems.ProblemSpec` or one per graph (MWIS
          weights differ between graphs)
       *horizon*
          maximum number of steps T
       *rng*
          a :class:`numpy.random.Generator` shared by all episodes or a
          list with one generator per episode
       *record*
          keep per-step records (set ``False`` for pure evaluation)

    :Returns: :class:`RolloutBatch`
    """
    specs = _as_list(spec, len(graphs))
    copies = 2 if coupled else 1
    envs, episodes = [], []
    for gi, (g, sp) in enumerate(zip(graphs, specs)):
        for c in range(copies):
            index = len(envs)
            partner = (index + 1 - 2 * c) if coupled else None
            envs.append(reset(g, sp, horizon))
            episodes.append(Episode(index, g, sp, partner=partner))
    rngs = _as_list(rng if rng is not None else numpy.random.default_rng(), len(envs))

    steps = []
    t = 0
    while not all(env.done for env in envs):
        active = [i for i, env in enumerate(envs) if not env.done]
        inputs = [envs[i].deferred_subgraph()[2] for i in active]
        feats = [envs[i].features() for i in active]
        outputs, values = policy.forward_batch(inputs, feats)
        prev = [env.state for env in envs]
        current = {}
        for j, i in enumerate(active):
            actions, logp = sample_actions(outputs[j], rngs[i])
            reward = envs[i].step(actions)[1]
            episodes[i].total_reward += reward
            if record:
                current[i] = len(steps)
                episodes[i].steps.append(len(steps))
                steps.append(Step(i, t, inputs[j], feats[j], actions, logp,
                                  reward=reward, value=float(values[j])))
        if coupled:
            for a in range(0, len(envs), 2):
                b = a + 1
                r_div = div_reward((prev[a], prev[b]), (envs[a].state, envs[b].state))
                deviation = state_deviation(envs[a].state, envs[b].state)
                for i in (a, b):
                    episodes[i].total_div += r_div
                    if not record or not episodes[i].steps:
                        continue
                    # an episode that already finished collects late
                    # diversification on its last step
                    last = steps[current.get(i, episodes[i].steps[-1])]
                    last.div_reward += r_div
                    if i in current:
                        last.deviation = deviation
        t += 1

    for ep, env in zip(episodes, envs):
        ep.solution = env.solution
    logger.debug("rollout: %d episodes, %d steps, mean return %.3f",
                 len(episodes), len(steps),
                 numpy.mean([ep.total_reward for ep in episodes]) if episodes else 0.0)
    return RolloutBatch(steps, episodes, reward_scale=reward_scale, coupled=coupled)
