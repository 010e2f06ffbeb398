# -*- coding: utf-8 -*-
#
# timnet documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.
# All configuration values have a default; only those that differ are set.

import sys, os

# The package is documented from the source tree.
sys.path.insert(0, os.path.abspath('../..'))

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc',
              'sphinx.ext.todo',
              'sphinx.ext.doctest',
              'sphinx.ext.intersphinx']

templates_path = ['_templates']
source_suffix = '.rst'
source_encoding = 'utf-8'
master_doc = 'index'

project = 'timnet'
copyright = '2026, timnet contributors'

# The full version, including alpha/beta/rc tags.
release = '0.1.0'
# The short X.Y version.
version = release.rsplit('.', 1)[0]

language = 'en'
exclude_patterns = []

# The reST default role (used for this markup: `text`) to use for all documents.
default_role = 'py:obj'
add_function_parentheses = True
pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'timnet-doc'

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [('index', 'timnet-doc.tex', 'timnet Documentation',
                    'timnet contributors', 'manual')]
latex_elements = {'papersize': 'a4paper', 'pointsize': '10pt',
                  'babel': '\\usepackage[english]{babel}'}

# -- Options for manual page output --------------------------------------------

man_pages = [('index', 'timnet', 'timnet Documentation',
              ['timnet contributors'], 1)]

# -- Additional options --------------------------------------------------------

todo_include_todos = True
autodoc_member_order = 'bysource'
intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable', None)}
