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

""" Fine-tuning sweeps over label fractions, seeds and initializations.

Every cell of a sweep fine-tunes one downstream model and evaluates it on
the held-out corpus.  A cell draws all of its randomness from a seed
derived from the base seed and the cell's own coordinates, so any cell can
be re-run alone and reproduces its row exactly.

Output files, all under the output directory:

============  ============================================================
File          Content
============  ============================================================
results.csv   one row per cell: task, init, fraction, seed and the six
              metrics
summary.csv   mean metrics per (init, fraction)
summary.json  the means and the label reduction for acc and auroc
============  ============================================================
"""

import collections
import concurrent.futures
import logging
import math
import os

import numpy as np
import simplejson

from ._config import ConfigError, RunConfig
from ._field import Undefined
from ._tensor import precision
from ._weights import load_extractor
from .datagen import DataConfig, KINDS, generate_corpus, load_corpus
from .downstream import (DownstreamModel, subsample_fraction, finetune,
                         evaluate_downstream)
from . import tools

RESULT_COLUMNS = ('task', 'init', 'fraction', 'seed', 'acc', 'auroc', 'f1',
                  'prec', 'recall', 'ap')

SUMMARY_COLUMNS = ('init', 'fraction', 'n', 'acc', 'auroc', 'f1', 'prec',
                   'recall', 'ap')

_METRIC_COLUMNS = ('acc', 'auroc', 'f1', 'prec', 'recall', 'ap')


def data_config(config):
    return DataConfig(image_size=config.image_size,
                      noise_sigma=config.noise_sigma,
                      finding_gain=config.finding_gain,
                      omission=config.omission)


def make_corpora(config):
    """ The training and held-out corpora of a run.

    With ``data_dir`` set they are read from its ``train`` and ``test``
    subdirectories (as written by the gen-data command); otherwise they are
    generated, the held-out corpus from its own seed with the training
    vocabulary.
    """
    if config.data_dir:
        train = load_corpus(os.path.join(config.data_dir, 'train'),
                            config.max_len)
        test = load_corpus(os.path.join(config.data_dir, 'test'),
                           config.max_len)
        return train, test
    dc = data_config(config)
    train = generate_corpus(config.n_train, config.seed, dc, config.max_len)
    test = generate_corpus(config.n_test,
                           tools.derive_seed(config.seed, 'held_out'), dc,
                           config.max_len, vocab=train.vocab)
    return train, test


def cell_seed(config, fraction, seed, init):
    return tools.derive_seed(config.seed, float(fraction), int(seed), init)


def num_classes(task):
    return 2 if task == 'binary' else len(KINDS)


def fit_cell(config, train, fraction, seed, init, weights=None,
             val_set=None):
    """ Subsample *train* and fine-tune one model with the cell's seed.

    Returns the model, its `TrainingLog` and the number of labeled
    examples it saw.  The validation set only adds log entries; it does
    not change the trained weights.
    """
    task = config.task
    derived = cell_seed(config, fraction, seed, init)
    with precision(config.precision):
        rng = np.random.default_rng(derived)
        labeled = subsample_fraction(train.labeled(task), fraction, derived)
        model = DownstreamModel.from_config(config, num_classes(task), rng)
        if init == 'pretrained':
            load_extractor(model, weights)
        model, log = finetune(model, labeled, epochs=config.finetune_epochs,
                              batch_size=config.batch_size, lr=config.lr,
                              val_set=val_set, seed=derived)
    return model, log, len(labeled)


def evaluate_cell(config, model, test):
    names = KINDS if config.task == 'multilabel' else None
    with precision(config.precision):
        return evaluate_downstream(model, test.labeled(config.task),
                                   names=names)


def run_cell(config, train, test, fraction, seed, init, weights=None):
    """ Fine-tune and evaluate one cell; returns its results row. """
    model, _, n_labeled = fit_cell(config, train, fraction, seed, init,
                                   weights)
    report = evaluate_cell(config, model, test)
    logging.info('cell %s fraction=%s seed=%s: acc %s (%d examples)',
                 init, fraction, seed, tools.format_value(report.acc),
                 n_labeled)
    return [config.task, init, float(fraction), int(seed)] + report.values()


_corpora = {}


def _cached_corpora(config):
    key = config.dumps()
    if key not in _corpora:
        _corpora.clear()
        _corpora[key] = make_corpora(config)
    return _corpora[key]


def _cell_worker(args):
    values, fraction, seed, init, weights = args
    config = RunConfig(**values)
    train, test = _cached_corpora(config)
    return run_cell(config, train, test, fraction, seed, init, weights)


def _mean(values):
    defined = [v for v in values if v is not Undefined and
               not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(defined)) if defined else Undefined


def summarize(rows):
    """ Mean metrics per (init, fraction), in first-seen order. """
    groups = collections.OrderedDict()
    for row in rows:
        record = dict(zip(RESULT_COLUMNS, row))
        groups.setdefault((record['init'], record['fraction']),
                          []).append(record)
    summary = []
    for (init, fraction), records in groups.items():
        entry = collections.OrderedDict(
            [('init', init), ('fraction', fraction), ('n', len(records))])
        for name in _METRIC_COLUMNS:
            entry[name] = _mean([r[name] for r in records])
        summary.append(entry)
    return summary


def label_reduction(summary, metric='acc'):
    """ How much labeled data pretraining saves, judged by *metric*.

    Finds the best mean scratch value (the smallest fraction reaching it)
    and the smallest pretrained fraction whose mean is at least as good.
    The reduction is ``(f_scratch - f_pretrained) / f_scratch``; it is None
    when either init is missing or pretraining never catches up.

    >>> summary = [{'init': 'scratch', 'fraction': 0.3, 'acc': 0.9},
    ...            {'init': 'scratch', 'fraction': 0.05, 'acc': 0.7},
    ...            {'init': 'pretrained', 'fraction': 0.05, 'acc': 0.92}]
    >>> round(label_reduction(summary)['reduction'], 4)
    0.8333
    """
    def defined(init):
        return sorted((e['fraction'], e[metric]) for e in summary
                      if e['init'] == init and e[metric] is not Undefined)
    scratch = defined('scratch')
    pretrained = defined('pretrained')
    if not scratch or not pretrained:
        return None
    best = max(value for _, value in scratch)
    f_scratch = min(f for f, value in scratch if value == best)
    reaching = [f for f, value in pretrained if value >= best]
    result = collections.OrderedDict([
        ('metric', metric), ('scratch_fraction', f_scratch),
        ('scratch_value', best), ('pretrained_fraction', None),
        ('reduction', None)])
    if reaching:
        f_pre = min(reaching)
        result['pretrained_fraction'] = f_pre
        result['reduction'] = (f_scratch - f_pre) / f_scratch
    return result


def _json_value(value):
    return None if value is Undefined else value


def sweep(config, train=None, test=None, out=None):
    """ Run every (init, fraction, seed) cell of *config*.

    Writes the result files under *out* (default ``config.out``) and
    returns the result rows and the summary mapping.
    """
    out = out if out is not None else config.out
    if config.task == 'match':
        raise ConfigError('task: a sweep fine-tunes binary or multilabel '
                          'models, not match')
    weights = config.weights or config.pretrained_path
    if 'pretrained' in config.inits:
        if not weights:
            raise ConfigError('weights: a pretrained weight file is needed '
                              'for the pretrained init')
        if not os.path.exists(weights):
            raise ConfigError('weights: {} does not exist'.format(weights))
    cells = [(fraction, seed, init) for init in config.inits
             for fraction in config.fractions for seed in config.sweep_seeds]
    logging.info('sweep of %d cell(s) on %d worker(s)', len(cells),
                 config.workers)
    if config.workers > 1:
        values = dict(config.asdict())
        jobs = [(values, f, s, i, weights) for f, s, i in cells]
        with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_cell_worker, jobs))
    else:
        if train is None or test is None:
            train, test = make_corpora(config)
        rows = [run_cell(config, train, test, f, s, i, weights)
                for f, s, i in cells]

    summary = summarize(rows)
    reductions = collections.OrderedDict(
        (metric, label_reduction(summary, metric))
        for metric in ('acc', 'auroc'))
    os.makedirs(out, exist_ok=True)
    tools.write_csv(os.path.join(out, 'results.csv'), RESULT_COLUMNS, rows)
    tools.write_csv(os.path.join(out, 'summary.csv'), SUMMARY_COLUMNS,
                    ([e[c] for c in SUMMARY_COLUMNS] for e in summary))
    document = collections.OrderedDict([
        ('task', config.task),
        ('cells', len(rows)),
        ('means', [collections.OrderedDict(
            (k, _json_value(v)) for k, v in e.items()) for e in summary]),
        ('reduction', reductions),
    ])
    with open(os.path.join(out, 'summary.json'), 'w') as fh:
        fh.write(simplejson.dumps(document, sort_keys=True, indent=4))
    for metric, result in reductions.items():
        if result and result['reduction'] is not None:
            logging.info('label reduction by %s: %.2f%% (pretrained %s vs '
                         'scratch %s)', metric, 100 * result['reduction'],
                         result['pretrained_fraction'],
                         result['scratch_fraction'])
    return rows, document
