# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
#
# LwD -- dealing with configuration files
"""
Configuration file handling and setup --- :mod:`lwd.config`
===========================================================

The user can set package-wide defaults in ``~/.lwd.cfg`` (or in the file
named by the environment variable :envvar:`LWD_CONFIG`). The file is read
when the package is imported; built-in defaults are used for anything it
does not set. Run :func:`setup` (or ``lwd-solver.py init``) to write
a file with all defaults that can then be edited.

In order to restore the default values, simply delete the config file.


Format
------

The configuration file is in "INI" format::

  [generators]
  er_p = 0.15
  ba_m = 2
  hk_m = 2
  hk_p_triad = 0.05
  ws_k = 4
  ws_p_rewire = 0.15

  [oracle]
  mis_cap = 40
  generic_cap = 22

  [logging]
  logfile = lwd.log

Meaning of variables
--------------------

generators
   default parameters of the synthetic graph models; the literature on
   learned MIS solvers does not fix them so they are exposed here
oracle
   largest graphs accepted by the exact solvers
   (:func:`lwd.solvers.brute_force_mis` and
   :func:`lwd.solvers.brute_force_generic`)
logging
   log file used by the command line driver

Accessing the configuration
---------------------------

Any variable can be accessed via the getter methods of the
:class:`configparser.ConfigParser` instance, ``cfg``::

  from lwd.config import cfg
  p = cfg.getfloat('generators', 'er_p')

"""
import os.path
import logging
from configparser import ConfigParser

logger = logging.getLogger("lwd.config")

#: Default name for the configuration file.
CONFIGNAME = os.path.expanduser(os.environ.get("LWD_CONFIG",
                                               os.path.join("~", ".lwd.cfg")))

#: Built-in defaults, section -> option -> value (as strings, the way
#: they appear in the file).
defaults = {
    'generators': {'er_p': '0.15',
                   'ba_m': '2',
                   'hk_m': '2',
                   'hk_p_triad': '0.05',
                   'ws_k': '4',
                   'ws_p_rewire': '0.15'},
    'oracle': {'mis_cap': '40',
               'generic_cap': '22'},
    'logging': {'logfile': 'lwd.log'},
}

class LWDConfigParser(ConfigParser):
    def getpath(self, section, option):
        """Return option as an expanded path."""
        return os.path.expanduser(os.path.expandvars(self.get(section, option)))

#: :data:`cfg` is the instance of :class:`LWDConfigParser` that makes all
#: global configuration data accessible
cfg = LWDConfigParser()

def get_configuration(filename=CONFIGNAME):
    """Reads and parses the configuration file.

    Default values are loaded and then replaced with the values from
    ``~/.lwd.cfg`` if that file exists. The global configuration
    instance :data:`lwd.config.cfg` is updated.

    Normally, the configuration is only loaded when the :mod:`lwd`
    package is imported but a re-reading of the configuration can be
    forced anytime by calling :func:`get_configuration`.
    """
    for section, options in defaults.items():
        if not cfg.has_section(section):
            cfg.add_section(section)
        for option, value in options.items():
            cfg.set(section, option, value)

    if os.path.exists(filename):
        # defaults are overriden by existing cfg file
        with open(filename) as configfile:
            cfg.read_file(configfile)
        logger.debug("Read configuration from %r", filename)

    return {'logfile': cfg.getpath('logging', 'logfile'),
            'mis_cap': cfg.getint('oracle', 'mis_cap'),
            'generic_cap': cfg.getint('oracle', 'generic_cap'),
            'configfilename': filename,
            }

#: Dict containing important configuration variables, populated by
#: :func:`get_configuration` (mainly a shortcut; use :data:`cfg` in most cases)
configuration = get_configuration()    # also initializes cfg...


def setup(filename=CONFIGNAME):
    """Write the global config file with the current values if it does not exist.

    This function can be run repeatedly without harm. Returns ``True``
    if a new file was written.
    """
    if os.path.exists(filename):
        return False
    with open(filename, 'w') as configfile:
        cfg.write(configfile)
    logger.info("Created the configuration file %r; edit it to customize "
                "the package.", filename)
    return True


def generator_defaults(model):
    """Return the default keyword arguments for graph *model*.

    *model* is one of "er", "ba", "hk", "ws" (see
    :mod:`lwd.generators`). The values come from the ``[generators]``
    section of the configuration.

    :Raises: :exc:`ValueError` for an unknown model.
    """
    g = 'generators'
    if model == 'er':
        return {'p': cfg.getfloat(g, 'er_p')}
    elif model == 'ba':
        return {'m_attach': cfg.getint(g, 'ba_m')}
    elif model == 'hk':
        return {'m_attach': cfg.getint(g, 'hk_m'),
                'p_triad': cfg.getfloat(g, 'hk_p_triad')}
    elif model == 'ws':
        return {'k': cfg.getint(g, 'ws_k'),
                'p_rewire': cfg.getfloat(g, 'ws_p_rewire')}
    errmsg = "Unknown graph model %r; choose one of er, ba, hk, ws." % (model,)
    logger.fatal(errmsg)
    raise ValueError(errmsg)
