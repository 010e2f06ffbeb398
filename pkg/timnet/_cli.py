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

""" Command line interface: ``timnet <command> [flags]``.

Every command reads the defaults, then ``--config``, then its flags, echoes
the effective config to ``<out>/config.json`` and writes all of its
artifacts under ``--out``.
"""

import argparse
import logging
import os
import sys

import numpy as np

from ._config import ConfigError, load_config, echo_config
from ._tensor import precision
from ._weights import WeightFileError, save_weights, load_into
from .cam import compute_cam, render_heatmap
from .datagen import export_corpus
from .downstream import DownstreamModel
from .matcher import TimNet, PairSampler, build_pairs, pretrain, \
    evaluate_matching
from .metrics import UndefinedMetricError
from . import sweep as sweeps
from . import tools

EVAL_COLUMNS = ('acc', 'auroc', 'f1', 'prec', 'recall', 'ap', 'n')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='timnet', description='Text-image matching pre-training and '
        'transfer to image classification.')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH',
                        help='JSON file of config values')
    common.add_argument('--seed', type=int, help='base random seed')
    common.add_argument('--out', metavar='DIR', help='output directory')

    commands.add_parser('gen-data', parents=[common],
                        help='write synthetic train and test corpora')

    p = commands.add_parser('pretrain', parents=[common],
                            help='train the matching network')
    p.add_argument('--epochs', type=int)
    p.add_argument('--batch-size', type=int)

    p = commands.add_parser('finetune', parents=[common],
                            help='train a downstream classifier')
    p.add_argument('--task', choices=('binary', 'multilabel'))
    p.add_argument('--init', help='scratch or pretrained:<weights>')
    p.add_argument('--fraction', type=float,
                   help='share of the labeled training set to use')
    p.add_argument('--epochs', type=int)
    p.add_argument('--batch-size', type=int)

    p = commands.add_parser('eval', parents=[common],
                            help='print held-out metrics of a weight file')
    p.add_argument('--task', choices=('match', 'binary', 'multilabel'))
    p.add_argument('--weights', metavar='PATH')

    p = commands.add_parser('cam', parents=[common],
                            help='render the class activation map of an image')
    p.add_argument('--task', choices=('binary', 'multilabel'))
    p.add_argument('--weights', metavar='PATH')
    p.add_argument('--image', metavar='PATH', required=True,
                   help='8-bit grayscale PGM image')
    p.add_argument('--class', dest='class_index', type=int, default=1,
                   metavar='K', help='class index (default 1)')

    p = commands.add_parser('sweep', parents=[common],
                            help='fine-tune over fractions, seeds and inits')
    p.add_argument('--task', choices=('binary', 'multilabel'))
    p.add_argument('--weights', metavar='PATH',
                   help='matcher weights for the pretrained init')
    p.add_argument('--epochs', type=int)
    p.add_argument('--batch-size', type=int)
    return parser


def overrides(args):
    """ Config values given on the command line. """
    values = {'seed': args.seed, 'out': args.out}
    for name in ('task', 'init', 'fraction', 'weights', 'batch_size'):
        values[name] = getattr(args, name, None)
    epochs = getattr(args, 'epochs', None)
    if args.command == 'pretrain':
        values['pretrain_epochs'] = epochs
    else:
        values['finetune_epochs'] = epochs
    return values


def _weights(config):
    if not config.weights:
        raise ConfigError('weights: a weight file is needed')
    if not os.path.exists(config.weights):
        raise ConfigError('weights: {} does not exist'.format(config.weights))
    return config.weights


def gen_data(config, args):
    train, test = sweeps.make_corpora(config.replace(data_dir=''))
    export_corpus(train, os.path.join(config.out, 'train'))
    export_corpus(test, os.path.join(config.out, 'test'))
    logging.info('wrote %d training and %d held-out items to %s',
                 len(train), len(test), config.out)


def run_pretrain(config, args):
    train, test = sweeps.make_corpora(config)
    rng = np.random.default_rng(tools.derive_seed(config.seed, 'matcher'))
    net = TimNet.from_config(config, len(train.vocab), rng)
    logging.info('matching network with %d parameters', net.param_count())
    sampler = PairSampler(train, config.negative_ratio,
                          tools.derive_seed(config.seed, 'pairs'))
    held_out = build_pairs(test, config.negative_ratio,
                           tools.derive_seed(config.seed, 'held_out_pairs'))
    net, log = pretrain(net, sampler(1), epochs=config.pretrain_epochs,
                        batch_size=config.batch_size, lr=config.lr,
                        held_out=held_out, sampler=sampler,
                        seed=tools.derive_seed(config.seed, 'order'))
    save_weights(net, os.path.join(config.out, 'matcher.timw'))
    train.vocab.save(os.path.join(config.out, 'vocab.tsv'))
    log.write(os.path.join(config.out, 'pretrain_log.csv'))


def run_finetune(config, args):
    if config.task == 'match':
        raise ConfigError('task: finetune trains binary or multilabel models')
    path = config.pretrained_path
    if path and not os.path.exists(path):
        raise ConfigError('init: {} does not exist'.format(path))
    train, test = sweeps.make_corpora(config)
    init = 'pretrained' if path else 'scratch'
    model, log, _ = sweeps.fit_cell(config, train, config.fraction,
                                    config.seed, init, path,
                                    val_set=test.labeled(config.task))
    save_weights(model, os.path.join(config.out, 'downstream.timw'))
    log.write(os.path.join(config.out, 'finetune_log.csv'))


def _downstream(config, path):
    rng = np.random.default_rng(0)
    model = DownstreamModel.from_config(
        config, sweeps.num_classes(config.task), rng)
    return load_into(model, path)


def run_eval(config, args):
    path = _weights(config)
    train, test = sweeps.make_corpora(config)
    if config.task == 'match':
        net = TimNet.from_config(config, len(train.vocab),
                                 np.random.default_rng(0))
        load_into(net, path)
        pairs = build_pairs(test, config.negative_ratio,
                            tools.derive_seed(config.seed, 'held_out_pairs'))
        report = evaluate_matching(net, pairs)
    else:
        report = sweeps.evaluate_cell(config, _downstream(config, path), test)
    print(','.join(EVAL_COLUMNS))
    print(','.join(tools.format_value(v)
                   for v in report.values() + [report.n_samples]))


def run_cam(config, args):
    if config.task == 'match':
        raise ConfigError('task: cam needs a binary or multilabel model')
    model = _downstream(config, _weights(config))
    pixels = tools.read_pgm(args.image)
    image = (pixels.astype(np.float64) / 255.0)[None]
    heatmap = compute_cam(model, image, args.class_index)
    stem = os.path.splitext(os.path.basename(args.image))[0]
    path = os.path.join(config.out, '{}_cam{}.pgm'.format(
        stem, args.class_index))
    render_heatmap(heatmap, image, path)
    logging.info('wrote %s', path)


def run_sweep(config, args):
    sweeps.sweep(config)


_RUNNERS = {
    'gen-data': gen_data,
    'pretrain': run_pretrain,
    'finetune': run_finetune,
    'eval': run_eval,
    'cam': run_cam,
    'sweep': run_sweep,
}


def main(argv=None):
    """ Run one command; returns the exit status. """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format='%(levelname)s %(message)s')
    try:
        config = load_config(args.config, overrides(args))
        echo_config(config)
        with precision(config.precision):
            _RUNNERS[args.command](config, args)
    except ConfigError as err:
        print('timnet: config error: {}'.format(err), file=sys.stderr)
        return 2
    except (WeightFileError, UndefinedMetricError, ValueError,
            OSError) as err:
        print('timnet: error: {}'.format(err), file=sys.stderr)
        return 1
    return 0
