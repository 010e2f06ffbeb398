#
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

""" Run the examples in the module docstrings. """

import doctest

import pytest

from timnet import (_field, _record, _tensor, _weights, tools, metrics,
                    datagen, sweep)


@pytest.mark.parametrize('module', [_field, _record, _tensor, _weights, tools,
                                    metrics, datagen, sweep],
                         ids=lambda m: m.__name__)
def test_docstrings(module):
    'Docstring examples give the output they show.'
    failures, _ = doctest.testmod(module)
    assert failures == 0
