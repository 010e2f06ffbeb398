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

""" Building blocks shared by the encoders and the classification heads. """

import math

import numpy as np

from ._module import Module
from ._tensor import (Tensor, add, matmul, reshape, conv2d,
                      batchnorm, layernorm, relu, take_rows)


class Linear(Module):
    """ y = x W + b over the last axis of a 2-d input.

    With *zero*, both weight and bias start at zero (used for output
    layers, so an untrained head predicts uniformly).
    """

    def __init__(self, n_in, n_out, rng, zero=False):
        super(Linear, self).__init__()
        if zero:
            weight = np.zeros((n_in, n_out))
        else:
            bound = 1.0 / math.sqrt(n_in)
            weight = rng.uniform(-bound, bound, size=(n_in, n_out))
        self.weight = Tensor(weight, requires_grad=True)
        self.bias = Tensor(np.zeros(n_out), requires_grad=True)

    def forward(self, x):
        return add(matmul(x, self.weight), self.bias)


class Conv2d(Module):
    """ Bias-free convolution; always followed by batch normalization. """

    def __init__(self, c_in, c_out, size, rng, stride=1, padding=0):
        super(Conv2d, self).__init__()
        std = math.sqrt(2.0 / (c_in * size * size))
        self.weight = Tensor(rng.normal(0.0, std, size=(c_out, c_in, size, size)),
                             requires_grad=True)
        self.stride = stride
        self.padding = padding

    def forward(self, x):
        return conv2d(x, self.weight, self.stride, self.padding)


class BatchNorm(Module):

    def __init__(self, channels, momentum=0.1, eps=1e-5):
        super(BatchNorm, self).__init__()
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)
        self.register_buffer('running_mean', Tensor(np.zeros(channels)))
        self.register_buffer('running_var', Tensor(np.ones(channels)))
        self.momentum = momentum
        self.eps = eps

    def forward(self, x):
        # one value per channel has no batch variance: use the running stats
        train = self.training and x.size // max(x.shape[1], 1) > 1
        return batchnorm(x, self.gamma, self.beta,
                         (self.running_mean, self.running_var),
                         mode='train' if train else 'eval',
                         momentum=self.momentum, eps=self.eps)

    def reset_running_stats(self):
        self.running_mean.data[...] = 0
        self.running_var.data[...] = 1


class LayerNorm(Module):

    def __init__(self, dim, eps=1e-5):
        super(LayerNorm, self).__init__()
        self.gamma = Tensor(np.ones(dim), requires_grad=True)
        self.beta = Tensor(np.zeros(dim), requires_grad=True)
        self.eps = eps

    def forward(self, x):
        return layernorm(x, self.gamma, self.beta, self.eps)


class Embedding(Module):

    def __init__(self, count, dim, rng, std=0.1):
        super(Embedding, self).__init__()
        self.weight = Tensor(rng.normal(0.0, std, size=(count, dim)),
                             requires_grad=True)

    def forward(self, ids):
        return take_rows(self.weight, ids)


class ConvBNReLU(Module):
    """ conv, batch normalization, ReLU. """

    def __init__(self, c_in, c_out, size, rng, stride=1, padding=0):
        super(ConvBNReLU, self).__init__()
        self.conv = Conv2d(c_in, c_out, size, rng, stride, padding)
        self.bn = BatchNorm(c_out)

    def forward(self, x):
        return relu(self.bn(self.conv(x)))


class ResidualBlock(Module):
    """ Two 3x3 convolutions with an identity skip. """

    def __init__(self, channels, rng):
        super(ResidualBlock, self).__init__()
        self.conv1 = ConvBNReLU(channels, channels, 3, rng, padding=1)
        self.conv2 = Conv2d(channels, channels, 3, rng, padding=1)
        self.bn2 = BatchNorm(channels)

    def forward(self, x):
        return relu(add(x, self.bn2(self.conv2(self.conv1(x)))))


def rows(x):
    """ View an N x L x D tensor as (N L) x D. """
    return reshape(x, (x.shape[0] * x.shape[1], x.shape[2]))


__all__ = ['Linear', 'Conv2d', 'BatchNorm', 'LayerNorm', 'Embedding',
           'ConvBNReLU', 'ResidualBlock', 'rows']
