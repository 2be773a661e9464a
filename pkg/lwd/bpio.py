# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Input/Output for the LwD modules --- :mod:`lwd.bpio`
====================================================

The module contains functions and classes to read and write every file
the package produces or consumes.

Edge lists
----------

A graph file starts with a header line ``n m`` followed by exactly *m*
lines ``u v`` with ``0 <= u < v < n``; blank lines and lines starting with
``#`` are ignored. Files ending in ``.gz`` or ``.bz2`` are decompressed
on the fly. MWIS vertex weights live next to the graph in a file with the
suffix ``.weights`` (one float per line, vertex order).

Checkpoints
-----------

A checkpoint is a text header line holding a JSON object
``{name: [shape...]}`` in parameter order, a newline, and then the
parameter arrays as little-endian float32 (``<f4``), C order,
concatenated in header order. Reading and writing round-trips bit-exactly.

Run parameters
--------------

Training runs are configured by a flat ``key = value`` file (an INI
``[train]`` header is optional), read through :class:`RunParameters`.

Logs and results
----------------

Metrics and results are newline-delimited JSON (one object per line);
see :class:`MetricsLog` and :func:`write_results`. Datasets are described
by a ``manifest.json`` (:func:`write_manifest`).
"""
import os
import glob
import json
from configparser import ConfigParser, Error as ConfigParserError

import numpy

from .graph import Graph, MalformedHeaderError, EdgeCountError
from .utilities import openany, mkdir_p

import logging
logger = logging.getLogger("lwd.bpio")


class ConfigError(KeyError):
    """A run configuration lacks a required key or contains an unknown one."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class CheckpointError(ValueError):
    """Malformed checkpoint file or parameter shapes that do not match the model."""


#: suffixes of graph files in a dataset directory
GRAPH_SUFFIXES = ('.txt', '.txt.gz', '.txt.bz2')


def load_edge_list(filename):
    """Read a graph from an edge-list file.

    :Returns: :class:`~lwd.graph.Graph`
    :Raises: :exc:`~lwd.graph.MalformedHeaderError`,
             :exc:`~lwd.graph.EdgeCountError` and the
             :meth:`~lwd.graph.Graph.from_edges` validation errors
    """
    with openany(filename) as edgefile:
        lines = [line.strip() for line in edgefile]
    lines = [line for line in lines if line and not line.startswith('#')]
    if not lines:
        errmsg = "Empty edge-list file %r (missing 'n m' header)" % (filename,)
        logger.fatal(errmsg)
        raise MalformedHeaderError(errmsg)
    try:
        n, m = [int(x) for x in lines[0].split()]
    except ValueError:
        errmsg = "Header of %r must be 'n m', got %r" % (filename, lines[0])
        logger.fatal(errmsg)
        raise MalformedHeaderError(errmsg)
    if n < 0 or m < 0:
        errmsg = "Header of %r has negative counts: %r" % (filename, lines[0])
        logger.fatal(errmsg)
        raise MalformedHeaderError(errmsg)
    body = lines[1:]
    if len(body) != m:
        errmsg = "%r promises %d edges but contains %d edge lines" % (filename, m, len(body))
        logger.fatal(errmsg)
        raise EdgeCountError(errmsg)
    edges = numpy.empty((m, 2), dtype=numpy.int64)
    for k, line in enumerate(body):
        fields = line.split()
        if len(fields) != 2:
            errmsg = "Edge line %d of %r must hold two vertex ids, got %r" % (k + 2, filename, line)
            logger.fatal(errmsg)
            raise MalformedHeaderError(errmsg)
        edges[k] = [int(fields[0]), int(fields[1])]
    g = Graph.from_edges(n, edges)
    logger.debug("Read graph n=%d m=%d from %r", g.n, g.m, filename)
    return g


def save_edge_list(filename, g):
    """Write graph *g* to *filename* (``u < v``, lexicographic order)."""
    with openany(filename, 'w') as edgefile:
        edgefile.write("%d %d\n" % (g.n, g.m))
        for u, v in g.edges():
            edgefile.write("%d %d\n" % (u, v))
    logger.debug("Wrote graph n=%d m=%d to %r", g.n, g.m, filename)
    return filename


def weights_filename(graphfile):
    """Name of the weights file that belongs to *graphfile*."""
    for suffix in GRAPH_SUFFIXES[::-1]:
        if graphfile.endswith(suffix):
            return graphfile[:-len(suffix)] + ".weights"
    return graphfile + ".weights"


def load_weights(filename):
    """Read one float per line."""
    with openany(filename) as wfile:
        values = [float(line) for line in wfile if line.strip()]
    return numpy.array(values, dtype=numpy.float64)


def save_weights(filename, weights):
    """Write *weights* one per line with full double precision."""
    with openany(filename, 'w') as wfile:
        for w in weights:
            wfile.write("%.17g\n" % w)
    return filename


def dataset_files(dirname):
    """Sorted graph files of the dataset directory *dirname*.

    :Raises: :exc:`ValueError` if the directory holds no graph files
    """
    files = set()
    for suffix in GRAPH_SUFFIXES:
        files.update(glob.glob(os.path.join(dirname, "*" + suffix)))
    files = sorted(files)
    if not files:
        errmsg = "No graph files (%s) in dataset directory %r" % (
            ", ".join(GRAPH_SUFFIXES), dirname)
        logger.fatal(errmsg)
        raise ValueError(errmsg)
    return files


def write_checkpoint(filename, params):
    """Write the ordered mapping *params* (name -> array) as a checkpoint."""
    header = json.dumps(dict((name, [int(x) for x in numpy.shape(a)])
                             for name, a in params.items()))
    with open(filename, 'wb') as ckpt:
        ckpt.write(header.encode('utf-8') + b"\n")
        for a in params.values():
            ckpt.write(numpy.ascontiguousarray(a, dtype='<f4').tobytes())
    logger.debug("Wrote checkpoint with %d parameter arrays to %r", len(params), filename)
    return filename


def read_checkpoint(filename):
    """Read a checkpoint into a dict name -> float32 array (in file order).

    :Raises: :exc:`CheckpointError` for a malformed header, truncated data
             or trailing bytes
    """
    with open(filename, 'rb') as ckpt:
        header = ckpt.readline()
        data = ckpt.read()
    try:
        shapes = json.loads(header.decode('utf-8'))
        if not isinstance(shapes, dict):
            raise ValueError("header is not a JSON object")
        shapes = dict((str(k), tuple(int(x) for x in v)) for k, v in shapes.items())
    except (ValueError, TypeError, UnicodeDecodeError) as err:
        errmsg = "Malformed checkpoint header in %r: %s" % (filename, err)
        logger.fatal(errmsg)
        raise CheckpointError(errmsg)
    params = {}
    offset = 0
    for name, shape in shapes.items():
        nbytes = 4 * int(numpy.prod(shape, dtype=numpy.int64))
        if offset + nbytes > len(data):
            errmsg = "Checkpoint %r is truncated in parameter %r" % (filename, name)
            logger.fatal(errmsg)
            raise CheckpointError(errmsg)
        a = numpy.frombuffer(data, dtype='<f4', count=nbytes // 4, offset=offset)
        params[name] = a.astype(numpy.float32).reshape(shape)
        offset += nbytes
    if offset != len(data):
        errmsg = "Checkpoint %r has %d unexpected trailing bytes" % (filename, len(data) - offset)
        logger.fatal(errmsg)
        raise CheckpointError(errmsg)
    logger.debug("Read checkpoint with %d parameter arrays from %r", len(params), filename)
    return params


def boolean(s):
    """Convert 'true'/'false' (yes/no, on/off, 1/0) to a bool."""
    value = str(s).strip().lower()
    if value in ('1', 'yes', 'true', 'on'):
        return True
    if value in ('0', 'no', 'false', 'off'):
        return False
    raise ValueError("not a boolean: %r" % (s,))


def float_or_None(s):
    """Return *s* as float or None when s == "None"."""
    if str(s).strip() == "None":
        return None
    return float(s)


def int_or_None(s):
    """Return *s* as int or None when s == "None"."""
    if str(s).strip() == "None":
        return None
    return int(s)


class RunParameters(object):
    """Parameters of a training run, stored in a flat ``key = value`` file.

    The class checks every key against a converter table and turns the
    string values into python types. Keys not listed in *parameters*
    and missing *required* keys raise :exc:`ConfigError`; optional keys
    that are absent keep their default.

    :Arguments:
       *filename*
          run input file
       *parameters*
          sequence of ``(key, converter)``; converters are ``int``,
          ``float``, ``str``, :func:`boolean`, :func:`int_or_None`
       *required*
          keys that must appear in the file
       *section*
          section name used when the file has no header
    """
    def __init__(self, filename, parameters, required=(), section='train'):
        self.filename = filename
        self.parameters = list(parameters)
        self.section = section
        self.parser = ConfigParser()
        self.parser.optionxform = str     # keys are case sensitive
        with openany(filename) as runfile:
            text = runfile.read()
        if not text.lstrip().startswith('['):
            text = "[%s]\n" % section + text
        try:
            self.parser.read_string(text, source=str(filename))
        except ConfigParserError as err:
            errmsg = "Cannot parse run input configuration %r: %s" % (filename, err)
            logger.fatal(errmsg)
            raise ValueError(errmsg)
        if not self.parser.has_section(section):
            errmsg = "Run input configuration %r has no [%s] section" % (filename, section)
            logger.fatal(errmsg)
            raise ConfigError(errmsg)
        known = set(key for key, _ in self.parameters)
        for key in self.parser.options(section):
            if key not in known:
                errmsg = "Unknown key %r in run input configuration %r" % (key, filename)
                logger.fatal(errmsg)
                raise ConfigError(errmsg)
        for key in required:
            if not self.parser.has_option(section, key):
                errmsg = "Required key %r missing from run input configuration %r" % (
                    key, filename)
                logger.fatal(errmsg)
                raise ConfigError(errmsg)
        logger.info("Read run input configuration from %r", filename)

    def get_kwargs(self):
        """Return a dict with the converted values of all keys present in the file."""
        kw = {}
        for key, convertor in self.parameters:
            if not self.parser.has_option(self.section, key):
                continue
            value = self.parser.get(self.section, key)
            try:
                kw[key] = convertor(value)
            except ValueError:
                errmsg = "Problem converting %s = %r in %r" % (key, value, self.filename)
                logger.fatal(errmsg)
                raise ValueError(errmsg)
        return kw


def write_run_parameters(filename, values, comment=None):
    """Write the ordered mapping *values* as a flat ``key = value`` file."""
    with open(filename, 'w') as runfile:
        if comment:
            for line in comment.splitlines():
                runfile.write("# %s\n" % line)
        for key, value in values.items():
            runfile.write("%s = %s\n" % (key, value))
    return filename


def _jsonable(obj):
    if isinstance(obj, dict):
        return dict((k, _jsonable(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, numpy.generic):
        return obj.item()
    if isinstance(obj, numpy.ndarray):
        return obj.tolist()
    return obj


def dumps(record):
    """One-line JSON text of *record* (numpy scalars converted)."""
    return json.dumps(_jsonable(record))


class MetricsLog(object):
    """Append-only newline-delimited JSON log; every line is flushed at once.

    Use as a context manager so that the file is closed even when
    training aborts.
    """
    def __init__(self, filename):
        self.filename = filename
        dirname = os.path.dirname(filename)
        if dirname:
            mkdir_p(dirname)
        self._stream = open(filename, 'w')

    def write(self, record):
        self._stream.write(dumps(record) + "\n")
        self._stream.flush()

    def close(self):
        if not self._stream.closed:
            self._stream.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_jsonl(filename):
    """Return the list of objects in a newline-delimited JSON file."""
    with openany(filename) as jsonfile:
        return [json.loads(line) for line in jsonfile if line.strip()]


def write_results(filename, records, summary):
    """Write per-graph result *records* (sorted by ``file``) and a trailing *summary*."""
    records = sorted(records, key=lambda r: r['file'])
    with MetricsLog(filename) as out:
        for record in records:
            out.write(record)
        out.write(summary)
    logger.info("Wrote %d results to %r", len(records), filename)
    return filename


def write_manifest(filename, manifest):
    """Write the dataset *manifest* (a dict) as indented JSON."""
    with open(filename, 'w') as mfile:
        json.dump(_jsonable(manifest), mfile, indent=2, sort_keys=True)
        mfile.write("\n")
    return filename


def read_manifest(filename):
    with open(filename) as mfile:
        return json.load(mfile)
