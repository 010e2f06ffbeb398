# Copyright (c) 2011 David Townshend
# Copyright (c) 2026 timnet contributors
#
# This program is free software; you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by the
# Free Software Foundation; either version 2 of the License, or (at your
# option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of MERCHANTABILITY
# or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU General Public License
# for more details.
#
# You should have received a copy of the GNU General Public License along
# with this program; if not, write to the Free Software Foundation, Inc.,
# 675 Mass Ave, Cambridge, MA 02139, USA.

import re
import sys

from setuptools import setup


def read_version():
    with open('timnet/__init__.py') as fh:
        text = fh.read()
    version = re.search(r"^__version__ = '([^']+)'", text, re.M).group(1)
    author = re.search(r"^__author__ = '([^']+)'", text, re.M).group(1)
    return version, author

version, author = read_version()

classifiers = [
    'Development Status :: 3 - Alpha',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: GNU General Public License (GPL)',
    'Natural Language :: English',
    'Operating System :: OS Independent',
    'Programming Language :: Python :: 3',
    'Topic :: Scientific/Engineering :: Artificial Intelligence',
    'Topic :: Scientific/Engineering :: Image Recognition',
]

def run_setup(*argv):
    if len(argv) > 0:
        sys.argv = [sys.argv[0]] + list(argv)

    setup(name='timnet',
          version=version,
          description='Text-image matching pre-training for image '
                      'classifiers, in numpy',
          long_description=open('readme.rst').read(),
          author=author,
          packages=['timnet'],
          classifiers=classifiers,
          python_requires='>=3.8',
          install_requires=['numpy>=1.20', 'simplejson>=2.0',
                            'opencv-python-headless>=4.5', 'Pillow>=8.0'],
          extras_require={'test': ['pytest>=6.0']},
          tests_require=['pytest>=6.0'],
          entry_points={'console_scripts': ['timnet = timnet._cli:main']},
         )

if __name__ == '__main__':
    run_setup()
