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

""" Image classifiers built on the feature extractor of the image branch.

The extractor is either freshly initialized (``init_mode='scratch'``) or
copied from a matching network (``'pretrained'``).  No text is involved
anywhere in this module.

Two tasks are supported:

===========  ============================  =============================
Task         Label                         Output and loss
===========  ============================  =============================
binary       class index, 0 or 1           2 logits, softmax
                                           cross-entropy
multilabel   multi-hot vector of length K  K logits, per-class sigmoid
                                           binary cross-entropy
===========  ============================  =============================
"""

import logging

import numpy as np

from ._field import Field, Undefined
from ._record import Record, Dataset
from ._group import ParamGroup
from ._module import Module
from ._layers import Linear, ConvBNReLU, BatchNorm
from ._optim import Adam
from ._tensor import (Tensor, no_grad, relu, gap, softmax, cross_entropy,
                      bce_multilabel, backward, _sigmoid)
from .encoders import FeatureExtractor
from .metrics import TrainingLog, binary_report, multilabel_report
from . import tools

TASKS = ('binary', 'multilabel')

INIT_MODES = ('scratch', 'pretrained')

# Where the extractor lives in a matching network checkpoint
MATCHER_PREFIX = 'image_encoder.'


class LabeledExample(Record):
    """ An image with a class index or a multi-hot label.

    *stratum* is filled in from the label and is what stratified sampling
    groups by.
    """

    image = Field()
    label = Field()
    task = Field(default='binary')
    stratum = Field(index=True)

    def validate(self):
        assert self.task in TASKS, 'unknown task {!r}'.format(self.task)
        if self.task == 'binary':
            assert np.ndim(self.label) == 0, 'binary label must be a scalar'
            assert self.label in (0, 1), \
                'binary label must be 0 or 1, got {!r}'.format(self.label)
            self.label = int(self.label)
            self.stratum = self.label
        else:
            label = np.asarray(self.label)
            assert label.ndim == 1, 'multi-hot label must be a vector'
            assert np.isin(label, (0, 1)).all(), \
                'multi-hot entries must be 0 or 1'
            self.label = label.astype(np.int64)
            self.stratum = tuple(int(v) for v in label)


class LabeledDataset(Dataset):

    record_type = LabeledExample

    @property
    def task(self):
        return self[0].task if len(self) else None

    def arrays(self, positions=None):
        """ Stacked images and labels (N class indices, or N x K). """
        if positions is None:
            positions = range(len(self))
        records = [self[p] for p in positions]
        images = np.stack([r.image for r in records])
        labels = np.stack([np.asarray(r.label) for r in records])
        return images, labels


def subsample_fraction(dataset, fraction, seed=0):
    """ A stratified sample of *dataset*.

    Each stratum (class index, or distinct multi-hot vector) keeps
    ``max(1, round(fraction * size))`` records drawn without replacement.
    The result keeps dataset order.  A fraction of 1 returns *dataset*.
    """
    if not 0 < fraction <= 1:
        raise ValueError('fraction must be in (0, 1], got {}'.format(fraction))
    if fraction == 1:
        return dataset
    strata = dataset.keys('stratum')
    if fraction * len(dataset) < len(strata):
        raise ValueError('fraction {} of {} records cannot cover {} classes'
                         .format(fraction, len(dataset), len(strata)))
    rng = np.random.default_rng(seed)
    chosen = []
    for stratum in strata:
        positions = dataset.positions(stratum=stratum)
        k = max(1, tools.round_half_up(fraction * len(positions)))
        chosen.extend(int(p) for p in
                      rng.choice(positions, size=k, replace=False))
    return dataset.subset(sorted(chosen))


class DownstreamModel(Module):
    """ Feature extractor, a 1x1 convolution head, pooling and a classifier.

    With *hidden* 0 the classifier is a single linear layer from the pooled
    features to the logits.  With *freeze_extractor* the extractor is not
    trained and stays in eval mode, so its batch statistics do not move
    either.
    """

    def __init__(self, extractor, task, num_classes, rng, head_channels=64,
                 hidden=32, init_mode='scratch', freeze_extractor=False,
                 reset_bn=False):
        super(DownstreamModel, self).__init__()
        if task not in TASKS:
            raise ValueError('unknown task {!r}'.format(task))
        if init_mode not in INIT_MODES:
            raise ValueError('unknown init mode {!r}'.format(init_mode))
        self.task = task
        self.num_classes = num_classes
        self.init_mode = init_mode
        self.freeze_extractor = freeze_extractor
        self.reset_bn = reset_bn
        n_out = 2 if task == 'binary' else num_classes
        self.extractor = extractor
        self.head_conv = ConvBNReLU(extractor.out_channels, head_channels, 1,
                                    rng)
        if hidden:
            self.fc = Linear(head_channels, hidden, rng)
            self.out = Linear(hidden, n_out, rng, zero=True)
        else:
            self.fc = None
            self.out = Linear(head_channels, n_out, rng, zero=True)
        self.extractor_group = ParamGroup(self, 'extractor.')
        if freeze_extractor:
            self.extractor_group.freeze()
            self.extractor.eval()

    @classmethod
    def from_config(cls, config, num_classes, rng, state=None):
        """ Build from a `RunConfig`; *state* holds pretrained tensors. """
        extractor = FeatureExtractor(1, config.base_width,
                                     config.image_stages, rng)
        model = cls(extractor, config.task, num_classes, rng,
                    head_channels=config.head_channels,
                    hidden=config.head_hidden,
                    init_mode='pretrained' if state is not None else 'scratch',
                    freeze_extractor=config.freeze, reset_bn=config.reset_bn)
        if state is not None:
            model.load_pretrained(state)
        return model

    def load_pretrained(self, state):
        """ Copy extractor tensors from a matching network or extractor
        checkpoint.  Returns the names of the freshly initialized tensors.
        """
        def source(name):
            if not name.startswith('extractor.'):
                return None
            for candidate in (MATCHER_PREFIX + name, name):
                if candidate in state:
                    return candidate
            return None
        loaded, fresh = self.load_state(state, rename=source)
        if not any(name.startswith('extractor.') for name in loaded):
            raise ValueError('no extractor tensors found in the weights')
        missing = [n for n in fresh if n.startswith('extractor.')]
        if missing:
            raise ValueError('weights lack extractor tensor(s): {}'.format(
                ', '.join(missing)))
        logging.info('loaded %d pretrained tensors; freshly initialized: %s',
                     len(loaded), ', '.join(fresh))
        if self.reset_bn:
            for module in self.extractor.modules():
                if isinstance(module, BatchNorm):
                    module.reset_running_stats()
        self.init_mode = 'pretrained'
        return fresh

    def train(self, mode=True):
        super(DownstreamModel, self).train(mode)
        if self.freeze_extractor:
            self.extractor.train(False)
        return self

    def features(self, images):
        if not isinstance(images, Tensor):
            images = Tensor(images)
        if self.freeze_extractor:
            with no_grad():
                return self.extractor(images)
        return self.extractor(images)

    def pool(self, maps):
        """ Head convolution output to the pooled vector. """
        return gap(maps)

    def classify(self, pooled):
        if self.fc is not None:
            pooled = relu(self.fc(pooled))
        return self.out(pooled)

    def forward(self, images):
        return self.classify(self.pool(self.head_conv(self.features(images))))


def _probabilities(task, logits):
    if task == 'binary':
        return softmax(logits).data[:, 1].astype(np.float64)
    return _sigmoid(logits.data.astype(np.float64))


def _loss(task, logits, labels):
    if task == 'binary':
        return cross_entropy(logits, labels)
    return bce_multilabel(logits, labels)


def finetune(model, train_set, epochs=30, batch_size=16, lr=1e-4,
             val_set=None, seed=0):
    """ Train *model* on *train_set*; returns the model and a `TrainingLog`.

    Frozen extractor parameters are left out of the optimizer.
    """
    if not len(train_set):
        raise ValueError('no labeled examples to train on')
    rng = np.random.default_rng(seed)
    optimizer = Adam(model.parameters(), lr=lr)
    log = TrainingLog()
    for epoch in range(1, epochs + 1):
        model.train()
        losses, probs, labels = [], [], []
        for batch in tools.batches(rng.permutation(len(train_set)), batch_size):
            images, targets = train_set.arrays(batch)
            logits = model(images)
            loss = _loss(model.task, logits, targets)
            optimizer.zero_grad()
            backward(loss)
            optimizer.step()
            losses.append(loss.item() * len(batch))
            probs.append(_probabilities(model.task, logits))
            labels.append(targets)
        report = _report(model.task, np.concatenate(probs),
                         np.concatenate(labels), sum(losses) / len(train_set))
        log.append(epoch, 'train', report)
        message = 'finetune epoch {}: loss {:.4f} acc {:.4f}'.format(
            epoch, report.loss, report.acc)
        if val_set is not None:
            val = evaluate_downstream(model, val_set)
            log.append(epoch, 'val', val)
            message += ' val acc {:.4f}'.format(val.acc)
        logging.info(message)
    return model, log


def predict_logits(model, images, batch_size=64):
    images = np.asarray(getattr(images, 'data', images))
    training = model.training
    model.eval()
    out = []
    try:
        with no_grad():
            for batch in tools.batches(range(len(images)), batch_size):
                out.append(model(images[batch]).data)
    finally:
        model.train(training)
    return np.concatenate(out)


def predict(model, images, batch_size=64):
    """ Probabilities in eval mode: P(class 1) for the binary task, one
    sigmoid per class for the multi-label task.
    """
    images = np.asarray(getattr(images, 'data', images))
    single = images.ndim == 3
    if single:
        images = images[None]
    probs = _probabilities(model.task, Tensor(predict_logits(model, images,
                                                      batch_size)))
    return probs[0] if single else probs


def _report(task, probs, labels, loss=Undefined, names=None):
    if task == 'binary':
        return binary_report(probs, labels, loss=loss)
    return multilabel_report(probs, labels, loss=loss, names=names)


def evaluate_downstream(model, dataset, names=None):
    """ A `MetricReport` of *model* over *dataset*.

    Binary tasks get all six metrics; multi-label tasks get per-class
    values and their macro averages (see `multilabel_report`).
    """
    if not len(dataset):
        raise ValueError('no labeled examples to evaluate')
    images, labels = dataset.arrays()
    logits = Tensor(predict_logits(model, images))
    with no_grad():
        loss = _loss(model.task, logits, labels).item()
    return _report(model.task, _probabilities(model.task, logits), labels,
                   loss, names)
