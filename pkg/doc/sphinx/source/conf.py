# -*- coding: utf-8 -*-
#
# LwD-Solver documentation build configuration file
#
# This file is execfile()d with the current directory set to its containing dir.

import sys, os

# the package is imported from the source tree
sys.path.insert(0, os.path.abspath('../../..'))

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.intersphinx',
              'sphinx.ext.mathjax', 'sphinx.ext.viewcode']

autoclass_content = 'both'

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'LwD-Solver'
copyright = u'2020, LwD-Solver developers'

release = __import__('lwd').__version__
version = ".".join(release.split('.')[:2])

exclude_patterns = []
pygments_style = 'sphinx'

on_rtd = os.environ.get('READTHEDOCS', None) == 'True'
if on_rtd:
    html_theme = 'default'
else:
    html_theme = 'alabaster'
    html_theme_options = {
        'logo_text_align': "left",
        'description': "Deferred-decision graph solvers",
        'show_related': True,
        'fixed_sidebar': False,
        'code_font_size': "smaller",
    }

htmlhelp_basename = 'LwDSolverdoc'

intersphinx_mapping = {'https://docs.python.org/3/': None,
                       'https://numpy.org/doc/stable/': None,
                       'https://docs.scipy.org/doc/scipy/': None,
                       'https://networkx.org/documentation/stable/': None}
