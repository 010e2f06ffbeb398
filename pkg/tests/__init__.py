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

""" Shared helpers for the test suite. """

import numpy as np

from timnet import RunConfig, Tensor
from timnet._tensor import total, mul
from timnet.datagen import DataConfig, generate_corpus

TINY = dict(d_emb=8, d_tok=8, text_layers=1, text_ff=16, text_channels=8,
            image_stages=2, base_width=4, image_size=8, max_len=12,
            match_hidden=8, head_channels=8, head_hidden=8,
            pretrain_epochs=1, finetune_epochs=1, batch_size=8,
            n_train=24, n_test=16, fractions=[0.5, 1.0], sweep_seeds=[0],
            inits=['scratch'])


def tiny_config(**kwargs):
    'A RunConfig small enough to train in well under a second.'
    values = dict(TINY)
    values.update(kwargs)
    return RunConfig(**values)


def tiny_corpus(n=24, seed=0, vocab=None, **kwargs):
    config = DataConfig(image_size=8, **kwargs)
    return generate_corpus(n, seed, config, max_len=12, vocab=vocab)


def projection(shape, seed=0):
    'Fixed random weights for reducing a tensor to a scalar.'
    return np.random.default_rng(seed).normal(size=shape)


def project(t, weights):
    'sum(t * weights), differentiable in t.'
    return total(mul(t, Tensor(weights, dtype=t.data.dtype)))
