# LwD-Solver
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
# See the file COPYING for details.
#
# setuptools installation of LwD-Solver

import re
from setuptools import setup, find_packages


with open("README.rst") as summary:
    LONG_DESCRIPTION = summary.read()

with open("lwd/_version.py") as versionfile:
    VERSION = re.search(r'__version__\s*=\s*"([^"]+)"', versionfile.read()).group(1)

setup(version=VERSION,
      name="LwD-Solver",
      description="A deferred MDP with PPO for maximum "
                  "independent set and related graph problems",
      long_description=LONG_DESCRIPTION,
      author="LwD-Solver developers",
      license="GPLv3",
      keywords="science combinatorial-optimization reinforcement-learning graphs",
      packages=find_packages(exclude=['scripts', 'tests']),
      scripts=["scripts/lwd-solver.py",
               ],
      install_requires=[
          'numpy>=1.17',
          'scipy',
          'networkx'
        ],
      extras_require={
        'test': ['pytest',
                 'hypothesis',
                 ],
        },
      zip_safe=True,
)
