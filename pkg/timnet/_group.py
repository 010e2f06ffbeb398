# -*- coding: utf-8 -*-
#
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

import collections


class ParamGroup(object):
    """ A live view of the tensors of a `Module` whose names share a prefix.

    The group holds no tensors itself; every query goes back to the module,
    so tensors registered later are seen as well.  Names yielded by the
    group have the prefix stripped.

    >>> group = ParamGroup(net, 'image_encoder.extractor.')   # doctest: +SKIP
    >>> group.freeze()                                         # doctest: +SKIP
    """

    def __init__(self, module, prefix=''):
        self._module = module
        self._prefix = prefix

    @property
    def module(self):
        return self._module

    @property
    def prefix(self):
        return self._prefix

    def _items(self, tensors=True):
        named = (self._module.named_tensors() if tensors
                 else self._module.named_parameters())
        n = len(self._prefix)
        for name, tensor in named:
            if name.startswith(self._prefix):
                yield name[n:], tensor

    def __iter__(self):
        return self._items()

    def __contains__(self, name):
        return any(n == name for n, _ in self._items())

    def __len__(self):
        return sum(1 for _ in self._items())

    def get(self, name):
        for n, tensor in self._items():
            if n == name:
                return tensor
        raise KeyError(self._prefix + name)

    def parameters(self):
        """ Trainable tensors in the group, by full name. """
        return collections.OrderedDict(
            (self._prefix + name, p) for name, p in self._items(False)
            if p.requires_grad)

    def state(self):
        """ Copies of every tensor in the group, keyed by stripped name. """
        return collections.OrderedDict(
            (name, t.data.copy()) for name, t in self._items())

    def freeze(self):
        for _, param in self._items(False):
            param.requires_grad = False
            param.grad = None

    def thaw(self):
        for _, param in self._items(False):
            param.requires_grad = True

    def frozen(self):
        return all(not p.requires_grad for _, p in self._items(False))
