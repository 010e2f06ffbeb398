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

""" The text and image branches, each mapping its input to an embedding.

Both branches end the same way: a 1x1 convolution with batch normalization
and ReLU over a feature map, global average pooling, and a fully connected
projection to ``d_emb``.

==================  ====================================================
Branch              Feature map fed to the 1x1 convolution
==================  ====================================================
`TextEncoder`       contextual token features, one row per non-pad token
`ImageEncoder`      output of the residual stages, C x H_f x W_f
==================  ====================================================
"""

import math

import numpy as np

from ._module import Module
from ._layers import (Linear, Embedding, LayerNorm, BatchNorm, Conv2d,
                      ConvBNReLU, ResidualBlock, rows)
from ._tensor import (Tensor, ShapeError, add, scale, reshape, swapaxes, bmm,
                      softmax, relu, gap, take_rows, segment_mean, index)

PAD = 0
UNKNOWN = 1


class VocabularyError(ValueError):
    """ Raised for token ids outside the vocabulary. """


class AttentionBlock(Module):
    """ Single-head self-attention and a feed-forward layer, each followed
    by a residual connection and layer normalization.
    """

    def __init__(self, dim, ff_dim, rng):
        super(AttentionBlock, self).__init__()
        self.query = Linear(dim, dim, rng)
        self.key = Linear(dim, dim, rng)
        self.value = Linear(dim, dim, rng)
        self.proj = Linear(dim, dim, rng)
        self.norm1 = LayerNorm(dim)
        self.ff1 = Linear(dim, ff_dim, rng)
        self.ff2 = Linear(ff_dim, dim, rng)
        self.norm2 = LayerNorm(dim)
        self.dim = dim

    def forward(self, x, mask):
        # x is (N L) x D, mask is N x L x L
        n, length = mask.shape[:2]
        shape = (n, length, self.dim)
        q = reshape(self.query(x), shape)
        k = reshape(self.key(x), shape)
        v = reshape(self.value(x), shape)
        scores = scale(bmm(q, swapaxes(k, 1, 2)), 1.0 / math.sqrt(self.dim))
        attn = softmax(add(scores, mask))
        context = rows(bmm(attn, v))
        x = self.norm1(add(x, self.proj(context)))
        return self.norm2(add(x, self.ff2(relu(self.ff1(x)))))


class TextEncoder(Module):
    """ Token ids to a ``d_emb`` embedding.

    Token id 0 is padding: pad keys are masked out of attention, and the
    1x1 convolution, batch normalization and pooling only see the rows of
    real tokens.  A sequence with no real tokens is represented by its
    first position.
    """

    def __init__(self, vocab_size, max_len, rng, d_tok=32, n_layers=2,
                 ff_dim=64, conv_channels=64, d_emb=64):
        super(TextEncoder, self).__init__()
        if vocab_size < 2:
            raise ValueError('vocabulary needs at least the pad and unknown '
                             'tokens, got size {}'.format(vocab_size))
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.d_emb = d_emb
        self.token_emb = Embedding(vocab_size, d_tok, rng)
        self.pos_emb = Embedding(max_len, d_tok, rng)
        self.n_layers = n_layers
        for i in range(n_layers):
            setattr(self, 'block{}'.format(i), AttentionBlock(d_tok, ff_dim, rng))
        self.conv = Conv2d(d_tok, conv_channels, 1, rng)
        self.bn = BatchNorm(conv_channels)
        self.fc = Linear(conv_channels, d_emb, rng)

    def check_tokens(self, tokens):
        tokens = np.asarray(tokens)
        if tokens.ndim == 1:
            tokens = tokens[None]
        if tokens.ndim != 2:
            raise ShapeError('tokens must be L or N x L ids, got shape {}'
                             .format(tokens.shape))
        if not np.issubdtype(tokens.dtype, np.integer):
            if tokens.size and not np.array_equal(tokens, np.round(tokens)):
                raise VocabularyError('token ids must be integers')
            tokens = tokens.astype(np.int64)
        if tokens.shape[1] == 0 or tokens.shape[1] > self.max_len:
            raise ShapeError('sequence length {} outside 1..{}'.format(
                tokens.shape[1], self.max_len))
        bad = (tokens < 0) | (tokens >= self.vocab_size)
        if bad.any():
            raise VocabularyError('token id {} outside vocabulary of size {}'
                                  .format(int(tokens[bad][0]), self.vocab_size))
        return tokens

    def forward(self, tokens):
        tokens = self.check_tokens(tokens)
        n, length = tokens.shape
        pad = tokens == PAD
        mask = np.where(pad[:, None, :], -1e9, 0.0)
        mask = Tensor(np.broadcast_to(mask, (n, length, length)))
        x = add(self.token_emb(tokens), self.pos_emb(np.arange(length)))
        x = rows(x)
        for i in range(self.n_layers):
            x = getattr(self, 'block{}'.format(i))(x, mask)

        keep = ~pad
        keep[~keep.any(axis=1), 0] = True
        positions = np.flatnonzero(keep.reshape(-1))
        segments = positions // length
        x = take_rows(x, positions)
        x = reshape(x, (x.shape[0], x.shape[1], 1, 1))
        x = relu(self.bn(self.conv(x)))
        x = reshape(x, (x.shape[0], x.shape[1]))
        return self.fc(segment_mean(x, segments, n))


class FeatureExtractor(Module):
    """ The convolutional part of the image branch.

    A 3x3 stem, then one residual block per stage with a 2x2 stride-2
    convolution doubling the channels between stages, then a 1x1
    convolution.  Tensor names start with ``stem``, ``stage<s>``,
    ``down<s>`` and ``neck``.
    """

    def __init__(self, in_channels, base_width, stages, rng):
        super(FeatureExtractor, self).__init__()
        if stages < 1:
            raise ValueError('at least one stage is needed, got {}'.format(
                stages))
        self.in_channels = in_channels
        self.stages = stages
        self.stem = ConvBNReLU(in_channels, base_width, 3, rng, padding=1)
        width = base_width
        for s in range(stages):
            if s:
                setattr(self, 'down{}'.format(s),
                        ConvBNReLU(width, 2 * width, 2, rng, stride=2))
                width *= 2
            setattr(self, 'stage{}'.format(s), ResidualBlock(width, rng))
        self.neck = ConvBNReLU(width, width, 1, rng)
        self.out_channels = width

    @property
    def reduction(self):
        return 2 ** (self.stages - 1)

    def forward(self, x):
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError('expected N x {} x H x W images, got {}'.format(
                self.in_channels, x.shape))
        h, w = x.shape[2:]
        if h % self.reduction or w % self.reduction:
            raise ShapeError('image size {}x{} is not divisible by {}'.format(
                h, w, self.reduction))
        x = self.stem(x)
        for s in range(self.stages):
            if s:
                x = getattr(self, 'down{}'.format(s))(x)
            x = getattr(self, 'stage{}'.format(s))(x)
        return self.neck(x)


class ImageEncoder(Module):

    def __init__(self, rng, in_channels=1, base_width=16, stages=3, d_emb=64,
                 image_size=32):
        super(ImageEncoder, self).__init__()
        self.extractor = FeatureExtractor(in_channels, base_width, stages, rng)
        reduction = self.extractor.reduction
        if image_size % reduction:
            raise ShapeError('image size {} is not divisible by {}'.format(
                image_size, reduction))
        if image_size // reduction < 4:
            raise ShapeError('{} stages leave a {}x{} feature map from {}x{} '
                             'images, at least 4x4 is needed'.format(
                                 stages, image_size // reduction,
                                 image_size // reduction, image_size,
                                 image_size))
        self.image_size = image_size
        self.d_emb = d_emb
        self.fc = Linear(self.extractor.out_channels, d_emb, rng)

    def forward(self, images):
        return self.fc(gap(self.extractor(images)))


def _batched_images(image):
    if not isinstance(image, Tensor):
        image = Tensor(image)
    if image.ndim == 3:
        return reshape(image, (1,) + image.shape), True
    return image, False


def _first(x, single):
    return index(x, 0) if single else x


def encode_text(enc, tokens):
    """ Embed one id sequence (length L) or a batch (N x L). """
    single = np.ndim(tokens) == 1
    return _first(enc(tokens), single)


def encode_image(enc, image):
    """ Embed one C x H x W image or an N x C x H x W batch. """
    images, single = _batched_images(image)
    return _first(enc(images), single)


def extract_feature_maps(enc, image):
    """ Feature maps after the final 1x1 convolution, before pooling. """
    extractor = getattr(enc, 'extractor', enc)
    images, single = _batched_images(image)
    return _first(extractor(images), single)
