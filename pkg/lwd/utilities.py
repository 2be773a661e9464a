# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3

"""
Helper functions and classes --- :mod:`lwd.utilities`
=====================================================

The module defines some convenience functions and classes that are
used in other modules.

Files and directories
---------------------

.. function:: openany(datasource[,mode='r'])

   Context manager to open a compressed (bzip2, gzip) or plain file
   (uses :func:`anyopen`).

.. autofunction:: anyopen
.. autofunction:: realpath
.. autofunction:: mkdir_p

Random numbers and timing
-------------------------

.. autofunction:: substream
.. autoclass:: Timer

"""
import os
import errno
import time
import zlib
import bz2
import gzip
from contextlib import contextmanager

import numpy

import logging
logger = logging.getLogger('lwd.utilities')

@contextmanager
def openany(datasource, mode='r'):
    """Open the datasource and close it when the context exits."""
    stream, filename = anyopen(datasource, mode=mode)
    try:
        yield stream
    finally:
        stream.close()

def anyopen(datasource, mode='r'):
    """Open datasource (gzipped, bzipped, uncompressed) and return a stream.

    The compression is chosen from the filename suffix (``.gz``,
    ``.bz2``); anything else is a plain text file. Streams are passed
    through unchanged.

    :Arguments:
    - *datasource*: a filename or a stream
    - *mode*: 'r' or 'w' (always text mode)

    :Returns: ``(stream, filename)``
    """
    handlers = {'bz2': bz2.open, 'gz': gzip.open, '': open}

    if not (mode.startswith('r') or mode.startswith('w')):
        raise NotImplementedError("Sorry, mode=%r is not implemented for %r"
                                  % (mode, datasource))
    if hasattr(datasource, 'readline') or hasattr(datasource, 'write'):
        return datasource, '(%s)' % getattr(datasource, 'name', 'stream')

    filename = str(datasource)
    ext = os.path.splitext(filename)[1][1:]
    if ext not in ('bz2', 'gz'):
        ext = ''   # anything else but bz2 or gz is just a normal file
    openfunc = handlers[ext]
    textmode = mode[0] + 't'
    try:
        stream = openfunc(filename, textmode)
    except IOError:
        logger.error("Cannot open %r in mode=%r.", filename, mode)
        raise
    return stream, filename

def realpath(*args):
    """Join all args and return the real path, rooted at /.

    Expands '~', '~user', and environment variables such as $HOME.

    Returns ``None`` if any of the args is ``None``.
    """
    if None in args:
        return None
    return os.path.realpath(os.path.expanduser(os.path.expandvars(os.path.join(*args))))

def mkdir_p(path):
    """Create a directory *path* with subdirs but do not complain if it exists.

    This is like GNU ``mkdir -p path``.
    """
    try:
        os.makedirs(path)
    except OSError as err:
        if err.errno != errno.EEXIST:
            raise

def substream(seed, name):
    """Return a :class:`numpy.random.Generator` for the named sub-stream of *seed*.

    All randomness of a run flows from one integer *seed*; independent
    streams for generation, initialization, training and evaluation are
    derived from it by *name* ("gen", "val", "init", "train", "eval",
    "weights", ...). The same (seed, name) always gives the same stream.
    """
    key = zlib.crc32(name.encode('utf-8'))
    ss = numpy.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
    return numpy.random.default_rng(ss)

def child_seeds(seed, name, count):
    """Return *count* distinct integer seeds derived from (*seed*, *name*).

    The i-th seed depends only on (seed, name, i), so a longer list
    extends a shorter one.
    """
    key = zlib.crc32(name.encode('utf-8'))
    seeds = []
    for i in range(count):
        ss = numpy.random.SeedSequence(entropy=int(seed), spawn_key=(key, i))
        seeds.append(int(ss.generate_state(1, dtype=numpy.uint64)[0]) & 0x7fffffffffffffff)
    return seeds

class Timer(object):
    """Wall-clock timer usable as a context manager; :attr:`ms` holds the result."""
    def __init__(self):
        self.ms = 0.0
        self._start = None

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = 1000.0 * (time.perf_counter() - self._start)
        return False
