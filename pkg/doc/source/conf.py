# -*- coding: utf-8 -*-
#
# riseff documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing
# dir.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'riseff'
copyright = u'2026, The riseff Authors'

from riseff import __version__  # noqa: E402

version = '.'.join(__version__.split('.')[:2])
release = __version__

exclude_trees = []
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'riseffdoc'

latex_documents = [
    ('index', 'riseff.tex', u'riseff Documentation',
     u'The riseff Authors', 'manual'),
]
