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

""" Text-image matching: pairs, the matching network and its training.

A pair is an image with either its own report (a true pair) or the report
of another item (a negative pair).  The network embeds both, takes the
absolute difference of the embeddings and classifies it as mismatch
(class 0) or match (class 1).
"""

import logging

import numpy as np

from ._field import Field
from ._record import Record, Dataset
from ._module import Module
from ._layers import Linear
from ._optim import Adam
from ._tensor import (Tensor, no_grad, relu, abs_diff, softmax, cross_entropy,
                      backward, index)
from .encoders import TextEncoder, ImageEncoder
from .metrics import (TrainingLog, UndefinedMetricError, binary_report)
from . import tools


class PairedExample(Record):
    """ An image, a token sequence and whether the two belong together.

    *source_index* is the corpus item the image came from and
    *report_index* the item the report came from.
    """

    image = Field()
    tokens = Field()
    match = Field(kind=bool, index=True)
    source_index = Field(kind=int, index=True)
    report_index = Field(kind=int)

    def validate(self):
        assert self.match == (self.source_index == self.report_index), \
            'a {} pair must have report_index {} source_index'.format(
                'true' if self.match else 'negative',
                '==' if self.match else '!=')


class PairedDataset(Dataset):

    record_type = PairedExample

    def arrays(self, positions=None):
        """ Stacked images, tokens and 0/1 match labels. """
        if positions is None:
            positions = range(len(self))
        records = [self[p] for p in positions]
        images = np.stack([r.image for r in records])
        tokens = np.stack([r.tokens for r in records])
        labels = np.array([int(r.match) for r in records], dtype=np.int64)
        return images, tokens, labels


class MatchingHead(Module):
    """ A shallow classifier over the embedding difference. """

    def __init__(self, d_emb, rng, hidden=32, zero_init=True):
        super(MatchingHead, self).__init__()
        self.d_emb = d_emb
        self.fc1 = Linear(d_emb, hidden, rng)
        self.out = Linear(hidden, 2, rng, zero=zero_init)

    def forward(self, diff):
        return self.out(relu(self.fc1(diff)))


class TimNet(Module):
    """ Two encoder branches joined by the absolute embedding difference. """

    def __init__(self, text_encoder, image_encoder, head):
        super(TimNet, self).__init__()
        if text_encoder.d_emb != image_encoder.d_emb:
            raise ValueError('text embeddings have {} dimensions but image '
                             'embeddings have {}'.format(text_encoder.d_emb,
                                                         image_encoder.d_emb))
        if head.d_emb != text_encoder.d_emb:
            raise ValueError('head expects {} dimensions, encoders give {}'
                             .format(head.d_emb, text_encoder.d_emb))
        self.text_encoder = text_encoder
        self.image_encoder = image_encoder
        self.head = head

    @classmethod
    def from_config(cls, config, vocab_size, rng):
        text = TextEncoder(vocab_size, config.max_len, rng,
                           d_tok=config.d_tok, n_layers=config.text_layers,
                           ff_dim=config.text_ff,
                           conv_channels=config.text_channels,
                           d_emb=config.d_emb)
        image = ImageEncoder(rng, base_width=config.base_width,
                             stages=config.image_stages, d_emb=config.d_emb,
                             image_size=config.image_size)
        head = MatchingHead(config.d_emb, rng, hidden=config.match_hidden)
        return cls(text, image, head)

    def forward(self, tokens, images):
        if not isinstance(images, Tensor):
            images = Tensor(images)
        v_t = self.text_encoder(tokens)
        v_i = self.image_encoder(images)
        return self.head(abs_diff(v_t, v_i))


def match_forward(net, tokens, image):
    """ Logits for mismatch and match.

    A single sequence and C x H x W image give a vector of two logits;
    batches give N x 2.
    """
    image = np.asarray(getattr(image, 'data', image))
    if np.ndim(tokens) == 1:
        return index(net(np.asarray(tokens)[None], image[None]), 0)
    return net(tokens, image)


def build_pairs(corpus, negative_ratio=1.0, seed=0):
    """ One true pair per corpus item plus ``round(negative_ratio * N)``
    negatives, in a seeded random order.

    Negative images cycle through seeded permutations of the corpus, so
    every image is used before any repeats, and each is given the report
    of a uniformly chosen different item.
    """
    images = corpus.images
    tokens = corpus.tokens
    n = len(images)
    if n < 2:
        raise ValueError('negative pairs need at least 2 items, corpus has {}'
                         .format(n))
    if negative_ratio < 0:
        raise ValueError('negative_ratio must not be negative, got {}'.format(
            negative_ratio))
    rng = np.random.default_rng(seed)
    n_neg = tools.round_half_up(negative_ratio * n)
    sources = []
    while len(sources) < n_neg:
        sources.extend(rng.permutation(n).tolist())
    pairs = [PairedExample(image=images[i], tokens=tokens[i], match=True,
                           source_index=i, report_index=i) for i in range(n)]
    for j in sources[:n_neg]:
        r = int(rng.integers(n - 1))
        if r >= j:
            r += 1
        pairs.append(PairedExample(image=images[j], tokens=tokens[r],
                                   match=False, source_index=j,
                                   report_index=r))
    order = rng.permutation(len(pairs))
    return PairedDataset(pairs[p] for p in order)


class PairSampler(object):
    """ Fresh negatives for every epoch, seeded by (seed, epoch). """

    def __init__(self, corpus, negative_ratio=1.0, seed=0):
        self.corpus = corpus
        self.negative_ratio = negative_ratio
        self.seed = seed

    def __call__(self, epoch):
        return build_pairs(self.corpus, self.negative_ratio,
                           tools.derive_seed(self.seed, 'pairs', epoch))


def _match_probability(logits):
    return softmax(logits).data[:, 1].astype(np.float64)


def pretrain(net, pairs, epochs=10, batch_size=16, lr=1e-4, held_out=None,
             sampler=None, seed=0):
    """ Train *net* to tell true pairs from negative pairs.

    Each epoch visits the pairs in a seeded random order; with a *sampler*
    the pairs of each epoch are ``sampler(epoch)`` instead.  The training
    split is scored from the batch outputs as they are produced, and
    *held_out* pairs (if given) are evaluated after every epoch.

    Returns the trained network and a `TrainingLog`.
    """
    if not len(pairs):
        raise ValueError('no pairs to train on')
    rng = np.random.default_rng(seed)
    optimizer = Adam(net.parameters(), lr=lr)
    log = TrainingLog()
    for epoch in range(1, epochs + 1):
        if sampler is not None:
            pairs = sampler(epoch)
        net.train()
        losses, probs, labels = [], [], []
        for batch in tools.batches(rng.permutation(len(pairs)), batch_size):
            images, tokens, targets = pairs.arrays(batch)
            logits = net(tokens, images)
            loss = cross_entropy(logits, targets)
            optimizer.zero_grad()
            backward(loss)
            optimizer.step()
            losses.append(loss.item() * len(batch))
            probs.append(_match_probability(logits))
            labels.append(targets)
        report = binary_report(np.concatenate(probs), np.concatenate(labels),
                               loss=sum(losses) / len(pairs))
        log.append(epoch, 'train', report)
        message = 'pretrain epoch {}: loss {:.4f} acc {:.4f}'.format(
            epoch, report.loss, report.acc)
        if held_out is not None:
            held = evaluate_matching(net, held_out)
            log.append(epoch, 'held_out', held)
            message += ' held-out auroc {:.4f}'.format(held.auroc)
        logging.info(message)
    return net, log


def evaluate_matching(net, pairs, batch_size=64):
    """ Metrics of the match probability over *pairs*, in eval mode. """
    if not len(pairs):
        raise ValueError('no pairs to evaluate')
    training = net.training
    net.eval()
    probs, labels, losses = [], [], []
    try:
        with no_grad():
            for batch in tools.batches(range(len(pairs)), batch_size):
                images, tokens, targets = pairs.arrays(batch)
                logits = net(tokens, images)
                losses.append(cross_entropy(logits, targets).item() *
                              len(batch))
                probs.append(_match_probability(logits))
                labels.append(targets)
    finally:
        net.train(training)
    labels = np.concatenate(labels)
    if labels.min() == labels.max():
        raise UndefinedMetricError('auroc is undefined: every pair is a {}'
                                   .format('match' if labels[0] else
                                           'mismatch'))
    return binary_report(np.concatenate(probs), labels,
                         loss=sum(losses) / len(pairs))
