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

""" Evaluation metrics for scored binary decisions.

Scores are probabilities of the positive class and labels are 0 or 1.
A metric which has no value for the given data (the recall of a set with
no positives, say) is `Undefined`, never 0.

=========  ===============================================================
Metric     Definition
=========  ===============================================================
acc        fraction of correct predictions, predicting score >= threshold
precision  true positives / predicted positives
recall     true positives / actual positives
f1         harmonic mean of precision and recall
auroc      probability that a random positive outscores a random negative,
           ties counting one half
ap         mean over positives of the precision at their rank, ranking by
           descending score with ties kept in input order
=========  ===============================================================
"""

import collections
import logging

import numpy as np

from ._field import Field, Undefined
from ._record import Record
from . import tools

METRICS = ('acc', 'auroc', 'f1', 'precision', 'recall', 'ap')

LOG_COLUMNS = ('epoch', 'split', 'loss', 'acc', 'auroc', 'f1', 'prec',
               'recall', 'ap')


class UndefinedMetricError(ValueError):
    """ Raised where a metric is required but has no defined value. """


def _unit(value):
    if value is Undefined:
        return value
    return float(value)


class MetricReport(Record):
    """ The six metrics of one evaluation, plus bookkeeping.

    *per_class* holds one mapping per class for multi-label evaluations
    and *warnings* the reasons any value is undefined.
    """

    acc = Field(default=Undefined, kind=_unit)
    auroc = Field(default=Undefined, kind=_unit)
    f1 = Field(default=Undefined, kind=_unit)
    precision = Field(default=Undefined, kind=_unit)
    recall = Field(default=Undefined, kind=_unit)
    ap = Field(default=Undefined, kind=_unit)
    n_samples = Field(default=0, kind=int)
    per_class = Field(default=[])
    warnings = Field(default=[])
    loss = Field(default=Undefined, kind=_unit)

    def validate(self):
        for name in METRICS:
            value = getattr(self, name)
            assert value is Undefined or 0.0 <= value <= 1.0, \
                '{} = {} is outside [0, 1]'.format(name, value)
        assert self.n_samples >= 0, 'negative sample count'
        if Undefined not in (self.precision, self.recall, self.f1):
            expected = harmonic_mean(self.precision, self.recall)
            assert expected is not Undefined and \
                abs(self.f1 - expected) <= 1e-12, \
                'f1 = {} is not the harmonic mean of precision {} and ' \
                'recall {}'.format(self.f1, self.precision, self.recall)

    def values(self):
        """ acc, auroc, f1, precision, recall, ap in that order. """
        return [getattr(self, name) for name in METRICS]


def harmonic_mean(precision, recall):
    """ F1 from precision and recall, `Undefined` if either is or both
    are zero.
    """
    if precision is Undefined or recall is Undefined or \
            not precision + recall:
        return Undefined
    return 2 * precision * recall / (precision + recall)


def _check(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ValueError('{} scores for {} labels'.format(
            scores.size, labels.size))
    if not np.isin(labels, (0, 1)).all():
        raise ValueError('labels must be 0 or 1')
    return scores, labels.astype(bool)


def auroc(scores, labels):
    """ Area under the ROC curve from average ranks (Mann-Whitney U).

    Returns `Undefined` unless both classes are present.

    >>> auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    0.75
    """
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return Undefined
    _, inverse, counts = np.unique(scores, return_inverse=True,
                                   return_counts=True)
    # 1-based rank of each distinct value, averaged over its ties
    ends = np.cumsum(counts)
    ranks = (ends - (counts - 1) / 2.0)[inverse]
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels):
    """ Mean of the precision at the rank of every positive.

    >>> round(average_precision([0.9, 0.8, 0.7], [1, 0, 1]), 6)
    0.833333
    """
    scores, labels = _check(scores, labels)
    if not labels.any():
        return Undefined
    order = np.argsort(-scores, kind='stable')
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    return float(np.mean(np.arange(1, ranks.size + 1) / ranks))


def threshold_metrics(scores, labels, threshold=0.5):
    """ Accuracy, precision, recall and F1 of predicting score >= threshold.

    Returns an ordered mapping with keys acc, precision, recall, f1.
    """
    scores, labels = _check(scores, labels)
    predicted = scores >= threshold
    tp = int((predicted & labels).sum())
    fp = int((predicted & ~labels).sum())
    fn = int((~predicted & labels).sum())
    tn = int((~predicted & ~labels).sum())
    n = tp + fp + fn + tn
    acc = (tp + tn) / float(n) if n else Undefined
    precision = tp / float(tp + fp) if tp + fp else Undefined
    recall = tp / float(tp + fn) if tp + fn else Undefined
    f1 = harmonic_mean(precision, recall)
    return collections.OrderedDict([('acc', acc), ('precision', precision),
                                    ('recall', recall), ('f1', f1)])


def binary_report(scores, labels, threshold=0.5, loss=Undefined):
    """ A `MetricReport` over all six metrics. """
    values = threshold_metrics(scores, labels, threshold)
    values['auroc'] = auroc(scores, labels)
    values['ap'] = average_precision(scores, labels)
    warnings = ['{} undefined'.format(name) for name in METRICS
                if values[name] is Undefined]
    return MetricReport(n_samples=len(np.reshape(scores, -1)), loss=loss,
                        warnings=warnings, **values)


def _macro(values):
    defined = [v for v in values if v is not Undefined]
    return float(np.mean(defined)) if defined else Undefined


def multilabel_report(scores, labels, threshold=0.5, loss=Undefined,
                      names=None):
    """ Per-class metrics and their unweighted means over N x K arrays.

    The macro F1 is the harmonic mean of the macro precision and recall;
    per-class F1 values are kept in *per_class*.

    Classes whose auROC or AP is undefined (one outcome only) are listed in
    the warnings and left out of the corresponding mean.  Accuracy is the
    fraction of correct entries over all N x K decisions.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape != labels.shape:
        raise ValueError('expected matching N x K scores and labels, got {} '
                         'and {}'.format(scores.shape, labels.shape))
    k = scores.shape[1]
    names = list(names) if names is not None else [str(c) for c in range(k)]
    per_class = []
    warnings = []
    for c in range(k):
        entry = threshold_metrics(scores[:, c], labels[:, c], threshold)
        entry['auroc'] = auroc(scores[:, c], labels[:, c])
        entry['ap'] = average_precision(scores[:, c], labels[:, c])
        entry['class'] = names[c]
        for name in ('auroc', 'ap'):
            if entry[name] is Undefined:
                msg = 'class {}: {} undefined, excluded from the macro ' \
                      'average'.format(names[c], name)
                logging.warning(msg)
                warnings.append(msg)
        per_class.append(entry)
    acc = float(((scores >= threshold) == labels.astype(bool)).mean())
    precision = _macro([e['precision'] for e in per_class])
    recall = _macro([e['recall'] for e in per_class])
    return MetricReport(
        acc=acc, precision=precision, recall=recall,
        auroc=_macro([e['auroc'] for e in per_class]),
        ap=_macro([e['ap'] for e in per_class]),
        f1=harmonic_mean(precision, recall),
        n_samples=scores.shape[0], per_class=per_class, warnings=warnings,
        loss=loss)


class TrainingLog(object):
    """ Per-epoch metric reports of a training run.

    >>> log = TrainingLog()
    >>> log.append(1, 'train', MetricReport(acc=0.5, loss=0.69))
    >>> log.last('train').acc
    0.5
    """

    def __init__(self):
        self.entries = []

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def append(self, epoch, split, report):
        self.entries.append((epoch, split, report))

    def split(self, name):
        return [(epoch, report) for epoch, s, report in self.entries
                if s == name]

    def last(self, split):
        entries = self.split(split)
        return entries[-1][1] if entries else None

    def rows(self):
        for epoch, split, r in self.entries:
            yield [epoch, split, r.loss, r.acc, r.auroc, r.f1, r.precision,
                   r.recall, r.ap]

    def write(self, path):
        tools.write_csv(path, LOG_COLUMNS, self.rows())
