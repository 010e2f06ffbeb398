# -*- coding: utf-8 -*-
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

import collections

import numpy as np


class AdamState(object):
    """ Moments and step count of an Adam optimizer.

    ``m`` and ``v`` map parameter names to first and second moment arrays,
    created on the first step that sees the parameter.
    """

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = collections.OrderedDict()
        self.v = collections.OrderedDict()
        self.t = 0


def adam_step(params, state):
    """ Apply one bias-corrected Adam update to a mapping of named tensors.

    Every parameter must carry a gradient.
    """
    for name, param in params.items():
        if param.grad is None:
            raise ValueError('adam_step: parameter {!r} has no gradient'
                             .format(name))
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for name, param in params.items():
        g = param.grad
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        else:
            v = state.v[name]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        param.data[...] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


class Adam(object):
    """ Adam over a fixed set of named parameters. """

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = collections.OrderedDict(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self):
        for param in self.params.values():
            param.grad = None

    def step(self):
        adam_step(self.params, self.state)
