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

import numpy as np

from ._tensor import Tensor, ShapeError


class Module(object):
    """ A named collection of tensors with a forward definition.

    Assigning a `Tensor` which requires a gradient to an attribute registers
    it as a parameter, assigning another `Module` registers it as a child,
    and `register_buffer` adds state that is saved but not trained (batch
    normalization statistics).  Names are dotted paths through the children,
    e.g. ``extractor.stem.conv.weight``.

    Subclasses implement ``forward``; calling the module calls it.
    """

    def __init__(self):
        object.__setattr__(self, '_params', collections.OrderedDict())
        object.__setattr__(self, '_buffers', collections.OrderedDict())
        object.__setattr__(self, '_children', collections.OrderedDict())
        object.__setattr__(self, 'training', True)

    def __setattr__(self, attr, value):
        if isinstance(value, Module):
            self._children[attr] = value
        elif isinstance(value, Tensor) and value.requires_grad:
            self._params[attr] = value
        elif attr in self._children or attr in self._params:
            raise TypeError('{} is a registered {}'.format(
                attr, 'child' if attr in self._children else 'parameter'))
        object.__setattr__(self, attr, value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def register_buffer(self, name, tensor):
        self._buffers[name] = tensor
        object.__setattr__(self, name, tensor)

    def children(self):
        return iter(self._children.items())

    def modules(self):
        """ This module and all of its descendants, depth first. """
        yield self
        for child in self._children.values():
            for module in child.modules():
                yield module

    def named_parameters(self, prefix=''):
        for name, param in self._params.items():
            yield prefix + name, param
        for name, child in self._children.items():
            for item in child.named_parameters(prefix + name + '.'):
                yield item

    def named_tensors(self, prefix=''):
        """ Parameters and buffers, module by module, in registration order. """
        for name, param in self._params.items():
            yield prefix + name, param
        for name, buf in self._buffers.items():
            yield prefix + name, buf
        for name, child in self._children.items():
            for item in child.named_tensors(prefix + name + '.'):
                yield item

    def parameters(self, trainable=True):
        """ An ordered mapping of names to parameters.

        With *trainable*, frozen parameters (``requires_grad`` False) are
        left out.
        """
        return collections.OrderedDict(
            (name, p) for name, p in self.named_parameters()
            if p.requires_grad or not trainable)

    def param_count(self):
        return sum(p.size for _, p in self.named_parameters())

    def train(self, mode=True):
        object.__setattr__(self, 'training', mode)
        for child in self._children.values():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for _, param in self.named_parameters():
            param.grad = None

    def state_dict(self):
        """ Copies of every parameter and buffer, keyed by dotted name. """
        return collections.OrderedDict(
            (name, t.data.copy()) for name, t in self.named_tensors())

    def load_state(self, state, rename=None):
        """ Copy arrays from *state* into the tensors of this module.

        *rename* maps a tensor name of this module to its name in *state*.
        Returns the names that were loaded and the names left untouched.
        Shapes must agree.
        """
        loaded, fresh = [], []
        for name, tensor in self.named_tensors():
            source = rename(name) if rename else name
            if source is None or source not in state:
                fresh.append(name)
                continue
            array = np.asarray(state[source])
            if array.shape != tensor.shape:
                raise ShapeError('shape conflict for {}: stored {}, model '
                                 'expects {}'.format(source, array.shape,
                                                     tensor.shape))
            tensor.data[...] = array
            loaded.append(name)
        return loaded, fresh
