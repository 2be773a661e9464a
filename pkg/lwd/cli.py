# LwD -- command line driver
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Command line interface --- :mod:`lwd.cli`
=========================================

Implementation of the ``lwd-solver.py`` script. Each verb is also
available as a function:

========  ===================  ================================================
verb      function             does
========  ===================  ================================================
init      :func:`cmd_init`     write the package configuration file ~/.lwd.cfg
gen       :func:`cmd_gen`      write a dataset of random graphs + manifest
train     :func:`cmd_train`    train an agent from a run input file
eval      :func:`cmd_eval`     best-of-k sampling with a trained agent
solve     :func:`cmd_solve`    greedy baseline (optionally with local search)
oracle    :func:`cmd_oracle`   exact solutions of small graphs
========  ===================  ================================================

Datasets are directories of edge-list files ``graph_0000.txt``, ... (see
:mod:`lwd.bpio`) with a ``manifest.json``. Results are newline-delimited
JSON, one record per graph sorted by file name::

  {"file": ..., "n": ..., "m": ..., "objective": ..., "feasible": ...,
   "samples": ..., "time_ms": ...}

followed by a summary object ``{"summary": true, ...}``. Apart from
``time_ms`` results are reproducible for a fixed ``--seed``.
"""
import os
import sys
import glob
import argparse

import numpy

from . import bpio
from . import config
from . import generators
from .agent import ActorCritic
from .ppo import (GRAPH_PARAMETERS, RUN_CONFIG, TrainConfig, checkpoint_config, train,
                  evaluate_best_of_k)
from .problems import PROBLEMS, ProblemSpec, is_independent, objective, sample_weights
from .sat import parse_dimacs, sat3_to_mis
from .solvers import brute_force_mis, brute_force_generic, greedy_mis, local_search_2imp
from .utilities import mkdir_p, child_seeds, Timer, realpath

import logging
logger = logging.getLogger("lwd.cli")

MANIFEST = "manifest.json"


def graph_filename(index):
    return "graph_%04d.txt" % index


def _write_graph(out_dir, index, g, weights=None):
    filename = os.path.join(out_dir, graph_filename(index))
    bpio.save_edge_list(filename, g)
    if weights is not None:
        bpio.save_weights(bpio.weights_filename(filename), weights)
    return filename


def _weights_for(n, seed, mean=1.0, std=0.1):
    return sample_weights(n, numpy.random.default_rng(seed), mean=mean, std=std)


def cmd_init(filename=None):
    """Write the package configuration file with all defaults unless it exists.

    :Returns: ``(filename, written)``
    """
    filename = config.CONFIGNAME if filename is None else filename
    written = config.setup(filename)
    if not written:
        logger.info("Configuration file %r exists; left unchanged.", filename)
    return filename, written


def cmd_gen(model, n_min, n_max, count, params, seed, out_dir, weights=False):
    """Write *count* graphs of *model* with n uniform in [n_min, n_max] to *out_dir*.

    The manifest records the resolved generator parameters and the
    vertex count and seed of every file (plus the weight seed with
    *weights*), which is everything :func:`cmd_gen_from_manifest` needs.

    :Returns: the manifest (dict)
    """
    resolved = config.generator_defaults(model)
    resolved.update(params or {})
    mkdir_p(out_dir)
    instances = generators.draw_instances(n_min, n_max, count, seed, name="gen")
    weight_seeds = child_seeds(seed, "gen.weights", count) if weights else [None] * count
    files = []
    for index, ((n, graph_seed), wseed) in enumerate(zip(instances, weight_seeds)):
        g = generators.generate(model, n, graph_seed, **resolved)
        w = _weights_for(g.n, wseed) if weights else None
        _write_graph(out_dir, index, g, w)
        entry = {'file': graph_filename(index), 'n': n, 'seed': graph_seed}
        if weights:
            entry['weights_seed'] = wseed
        files.append(entry)
    manifest = {'model': model, 'params': resolved, 'n_min': n_min, 'n_max': n_max,
                'count': count, 'seed': seed, 'weights': bool(weights), 'files': files}
    bpio.write_manifest(os.path.join(out_dir, MANIFEST), manifest)
    logger.info("Wrote %d %s graphs (n in [%d, %d]) to %r", count, model.upper(),
                n_min, n_max, out_dir)
    return manifest


def cmd_gen_sat(cnf_dir, out_dir):
    """Reduce every ``*.cnf`` formula in *cnf_dir* to an MIS instance."""
    sources = sorted(glob.glob(os.path.join(cnf_dir, "*.cnf")) +
                     glob.glob(os.path.join(cnf_dir, "*.cnf.gz")))
    if not sources:
        errmsg = "No CNF files in %r" % (cnf_dir,)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    mkdir_p(out_dir)
    files = []
    for index, source in enumerate(sources):
        num_vars, clauses = parse_dimacs(source)
        g, _ = sat3_to_mis(clauses)
        _write_graph(out_dir, index, g)
        files.append({'file': graph_filename(index), 'n': g.n, 'source': realpath(source),
                      'num_vars': num_vars, 'clauses': len(clauses)})
    manifest = {'model': 'sat', 'count': len(files), 'files': files, 'weights': False}
    bpio.write_manifest(os.path.join(out_dir, MANIFEST), manifest)
    logger.info("Reduced %d CNF formulas from %r to graphs in %r", len(files), cnf_dir, out_dir)
    return manifest


def cmd_gen_from_manifest(manifest_file, out_dir=None):
    """Regenerate the dataset described by *manifest_file* (byte-identical files)."""
    manifest = bpio.read_manifest(manifest_file)
    out_dir = os.path.dirname(os.path.abspath(manifest_file)) if out_dir is None else out_dir
    mkdir_p(out_dir)
    for index, entry in enumerate(manifest['files']):
        if manifest['model'] == 'sat':
            g, _ = sat3_to_mis(parse_dimacs(entry['source'])[1])
            w = None
        else:
            g = generators.generate(manifest['model'], entry['n'], entry['seed'],
                                    **manifest['params'])
            w = _weights_for(g.n, entry['weights_seed']) if manifest.get('weights') else None
        bpio.save_edge_list(os.path.join(out_dir, entry['file']), g)
        if w is not None:
            bpio.save_weights(bpio.weights_filename(os.path.join(out_dir, entry['file'])), w)
    bpio.write_manifest(os.path.join(out_dir, MANIFEST), manifest)
    logger.info("Regenerated %d graphs from %r in %r", len(manifest['files']),
                manifest_file, out_dir)
    return manifest


def cmd_train(config_file, outdir=None, seed=None):
    """Train from the run input file *config_file*; writes best and last checkpoints."""
    overrides = {}
    if seed is not None:
        overrides['seed'] = seed
    if outdir is not None:
        overrides['outdir'] = outdir
    cfg = TrainConfig.from_file(config_file, **overrides)
    return train(cfg)


def problem_spec(problem, lam=0.5, beta=1.0, gamma=1.0):
    return ProblemSpec(problem, lam=lam, beta=beta, gamma=gamma)


def load_dataset(dataset, spec):
    """Graphs of a dataset directory with one problem spec per graph.

    :Returns: list of ``(filename, graph, spec)`` sorted by file name
    """
    items = []
    for filename in bpio.dataset_files(dataset):
        g = bpio.load_edge_list(filename)
        sp = spec
        if spec.kind == 'mwis':
            wfile = bpio.weights_filename(filename)
            if not os.path.exists(wfile):
                errmsg = "MWIS needs vertex weights: %r is missing" % (wfile,)
                logger.fatal(errmsg)
                raise ValueError(errmsg)
            sp = spec.with_weights(bpio.load_weights(wfile))
        items.append((filename, g, sp))
    return items


def _feasible(spec, g, x):
    return bool(is_independent(g, x)) if spec.uses_cleanup else True


def _record(filename, g, value, feasible, samples, time_ms, **extra):
    record = {'file': os.path.basename(filename), 'n': g.n, 'm': g.m,
              'objective': float(value), 'feasible': feasible,
              'samples': samples, 'time_ms': time_ms}
    record.update(extra)
    return record


def summarize(records, **extra):
    """Trailing summary object of a results file."""
    objectives = [r['objective'] for r in records]
    summary = {'summary': True, 'count': len(records),
               'mean_objective': float(numpy.mean(objectives)) if records else 0.0,
               'max_objective': float(numpy.max(objectives)) if records else 0.0,
               'all_feasible': all(r['feasible'] for r in records),
               'time_ms': float(sum(r['time_ms'] for r in records))}
    summary.update(extra)
    return summary


def eval_horizon(checkpoint, horizon=None):
    """Horizon for evaluating *checkpoint*: *horizon*, else the training run's."""
    if horizon is not None:
        return horizon
    cfg = checkpoint_config(checkpoint)
    if cfg is None:
        horizon = TrainConfig().horizon
        logger.warning("no %s next to %r; evaluating with the default horizon %d",
                       RUN_CONFIG, checkpoint, horizon)
        return horizon
    logger.info("horizon %d from the training run of %r", cfg.horizon, checkpoint)
    return cfg.horizon


def cmd_eval(checkpoint, dataset, samples=10, local_search=False, seed=0, problem='mis',
             horizon=None, out=None, lam=0.5, beta=1.0, gamma=1.0):
    """Best-of-*samples* evaluation of a trained agent on every graph of *dataset*.

    The rollouts use the horizon the agent was trained with, read from the
    run configuration next to *checkpoint* (see
    :func:`lwd.ppo.checkpoint_config`); *horizon* overrides it. A
    checkpoint without a run configuration falls back to the default
    training horizon.

    :Returns: ``(records, summary)``
    :Raises: :exc:`ValueError` when the checkpoint's input width does not
             fit the problem
    """
    spec = problem_spec(problem, lam, beta, gamma)
    agent = ActorCritic.from_checkpoint(checkpoint)
    if agent.in_features != spec.num_features:
        errmsg = ("checkpoint %r expects %d input features but problem %r provides %d"
                  % (checkpoint, agent.in_features, problem, spec.num_features))
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    horizon = eval_horizon(checkpoint, horizon)
    items = load_dataset(dataset, spec)
    results = evaluate_best_of_k(agent, [g for _, g, _ in items], [sp for _, _, sp in items],
                                 horizon, k=samples, seed=child_seeds(seed, "eval", 1)[0],
                                 local_search=local_search)
    records = []
    for (filename, g, sp), result in zip(items, results):
        x = result['solution']
        records.append(_record(filename, g, objective(sp, g, x), _feasible(sp, g, x),
                               samples, result['time_ms']))
        logger.debug("%s: best %g, mean %g", filename, result['best'], result['mean'])
    summary = summarize(records, problem=problem, method="lwd+ls" if local_search else "lwd",
                        checkpoint=os.path.basename(checkpoint), horizon=horizon)
    if out is not None:
        bpio.write_results(out, records, summary)
    logger.info("eval: %d graphs, mean objective %.4f", len(records), summary['mean_objective'])
    return records, summary


#: heuristics of :func:`cmd_solve`
METHODS = ('greedy', 'greedy+ls')


def cmd_solve(dataset, method='greedy', out=None):
    """Solve MIS on every graph of *dataset* with a non-learned heuristic."""
    if method not in METHODS:
        errmsg = "method must be one of %s, got %r" % (", ".join(METHODS), method)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    spec = ProblemSpec('mis')
    records = []
    for filename, g, sp in load_dataset(dataset, spec):
        with Timer() as timer:
            members = greedy_mis(g)
            if method == 'greedy+ls':
                members = local_search_2imp(g, members)
        x = numpy.zeros(g.n, dtype=numpy.int8)
        x[members] = 1
        records.append(_record(filename, g, objective(sp, g, x), _feasible(sp, g, x), 1,
                               timer.ms))
    summary = summarize(records, problem='mis', method=method)
    if out is not None:
        bpio.write_results(out, records, summary)
    logger.info("solve (%s): %d graphs, mean objective %.4f", method, len(records),
                summary['mean_objective'])
    return records, summary


def cmd_oracle(dataset, problem='mis', out=None, lam=0.5, beta=1.0, gamma=1.0):
    """Exact optimum of every graph of *dataset* (size caps apply)."""
    spec = problem_spec(problem, lam, beta, gamma)
    records = []
    for filename, g, sp in load_dataset(dataset, spec):
        with Timer() as timer:
            if sp.kind == 'mis':
                _, members = brute_force_mis(g)
                x = numpy.zeros(g.n, dtype=numpy.int8)
                x[members] = 1
            else:
                _, x = brute_force_generic(sp, g)
        records.append(_record(filename, g, objective(sp, g, x), _feasible(sp, g, x), 1,
                               timer.ms, exact=True))
    summary = summarize(records, problem=problem, method='oracle')
    if out is not None:
        bpio.write_results(out, records, summary)
    logger.info("oracle (%s): %d graphs, mean objective %.4f", problem, len(records),
                summary['mean_objective'])
    return records, summary


def _add_problem_options(parser):
    parser.add_argument("--problem", choices=PROBLEMS, default='mis',
                        help="problem to solve [%(default)s]")
    parser.add_argument("--lam", type=float, default=0.5,
                        help="PCMIS penalty per internal edge [%(default)s]")
    parser.add_argument("--beta", type=float, default=1.0,
                        help="Ising interaction strength [%(default)s]")
    parser.add_argument("--gamma", type=float, default=1.0,
                        help="Ising field strength [%(default)s]")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lwd-solver.py",
        description="Deferred-decision solvers: train and evaluate deferred-MDP agents "
        "for maximum independent set and related graph problems.")
    parser.add_argument("--logfile", metavar="FILE", default=None,
                        help="log file (default: [logging] logfile of the configuration)")
    verbs = parser.add_subparsers(dest="command", metavar="VERB")
    verbs.required = True

    ini = verbs.add_parser("init", help="write the configuration file with all defaults")
    ini.add_argument("--file", metavar="FILE", default=None,
                     help="configuration file (default: %s)" % config.CONFIGNAME)
    ini.set_defaults(func=_run_init)

    gen = verbs.add_parser("gen", help="generate a dataset")
    gen.add_argument("--model", choices=sorted(generators.GENERATORS), default='er')
    gen.add_argument("--n-min", type=int, default=50, dest="n_min")
    gen.add_argument("--n-max", type=int, default=100, dest="n_max")
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--p", type=float, help="ER edge probability")
    gen.add_argument("--m-attach", type=int, dest="m_attach", help="BA/HK edges per new vertex")
    gen.add_argument("--p-triad", type=float, dest="p_triad", help="HK triad probability")
    gen.add_argument("--k", type=int, help="WS lattice degree")
    gen.add_argument("--p-rewire", type=float, dest="p_rewire", help="WS rewiring probability")
    gen.add_argument("--weights", action="store_true", help="also write MWIS vertex weights")
    gen.add_argument("--cnf-dir", metavar="DIR", dest="cnf_dir",
                     help="reduce the DIMACS CNF files in DIR instead of sampling graphs")
    gen.add_argument("--from-manifest", metavar="FILE", dest="from_manifest",
                     help="regenerate the dataset described by a manifest")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", metavar="DIR", required=True)
    gen.set_defaults(func=_run_gen)

    tr = verbs.add_parser("train", help="train an agent")
    tr.add_argument("--config", metavar="FILE", required=True, help="run input file")
    tr.add_argument("--out", metavar="DIR", help="output directory (overrides outdir)")
    tr.add_argument("--seed", type=int, help="overrides the seed of the run input file")
    tr.set_defaults(func=_run_train)

    ev = verbs.add_parser("eval", help="evaluate a trained agent")
    ev.add_argument("--checkpoint", metavar="FILE", required=True)
    ev.add_argument("--dataset", metavar="DIR", required=True)
    ev.add_argument("--samples", type=int, default=10, help="best-of-k samples [%(default)s]")
    ev.add_argument("--local-search", action="store_true", dest="local_search",
                    help="improve every sample with 2-improvement local search")
    ev.add_argument("--horizon", type=int, default=None,
                    help="override the horizon of the training run")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", metavar="FILE", default="results.jsonl")
    _add_problem_options(ev)
    ev.set_defaults(func=_run_eval)

    so = verbs.add_parser("solve", help="greedy baseline")
    so.add_argument("--dataset", metavar="DIR", required=True)
    so.add_argument("--method", choices=METHODS, default='greedy')
    so.add_argument("--out", metavar="FILE", default="results.jsonl")
    so.set_defaults(func=_run_solve)

    orc = verbs.add_parser("oracle", help="exact solutions of small graphs")
    orc.add_argument("--dataset", metavar="DIR", required=True)
    orc.add_argument("--out", metavar="FILE", default="results.jsonl")
    _add_problem_options(orc)
    orc.set_defaults(func=_run_oracle)
    return parser


def _run_init(args):
    return cmd_init(args.file)


def _run_gen(args):
    if args.from_manifest:
        return cmd_gen_from_manifest(args.from_manifest, args.out)
    if args.cnf_dir:
        return cmd_gen_sat(args.cnf_dir, args.out)
    params = dict((key, getattr(args, key)) for key in GRAPH_PARAMETERS[args.model]
                  if getattr(args, key) is not None)
    return cmd_gen(args.model, args.n_min, args.n_max, args.count, params, args.seed,
                   args.out, weights=args.weights)


def _run_train(args):
    return cmd_train(args.config, outdir=args.out, seed=args.seed)


def _run_eval(args):
    return cmd_eval(args.checkpoint, args.dataset, samples=args.samples,
                    local_search=args.local_search, seed=args.seed, problem=args.problem,
                    horizon=args.horizon, out=args.out, lam=args.lam, beta=args.beta,
                    gamma=args.gamma)


def _run_solve(args):
    return cmd_solve(args.dataset, method=args.method, out=args.out)


def _run_oracle(args):
    return cmd_oracle(args.dataset, problem=args.problem, out=args.out, lam=args.lam,
                      beta=args.beta, gamma=args.gamma)


def main(argv=None):
    """Run ``lwd-solver.py`` with *argv*; returns the exit status."""
    from . import start_logging, stop_logging
    args = build_parser().parse_args(argv)
    start_logging(args.logfile or config.configuration['logfile'])
    status = 0
    try:
        args.func(args)
    except Exception as err:
        logger.fatal("%s failed: %s: %s", args.command, type(err).__name__, err)
        status = 1
    finally:
        stop_logging()
    return status


if __name__ == "__main__":
    sys.exit(main())
