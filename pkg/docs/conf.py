# Sphinx configuration for the GripSim documentation.
#
# Build with ``sphinx-build docs docs/_build/html``; run the tutorial's
# examples with ``sphinx-build -b doctest docs docs/_build/doctest``.

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(
    __file__))))

import gripsim  # noqa: E402

project = 'GripSim'
author = 'GripSim contributors'
version = release = gripsim.__version__
master_doc = 'index'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
]
intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
}

# Members appear in source order: parameters, states, then operations.
autodoc_member_order = 'bysource'
exclude_patterns = ['_build']

html_theme = 'alabaster'
html_title = 'GripSim {}'.format(version)
