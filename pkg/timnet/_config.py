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

import logging
import os

import simplejson

from ._field import Field
from ._record import Record

TASKS = ('match', 'binary', 'multilabel')


class ConfigError(ValueError):
    """ Raised for configuration files or values which cannot be used. """


def _boolean(value):
    if isinstance(value, bool):
        return value
    if value in (0, 1):
        return bool(value)
    raise ValueError('expected true or false, got {!r}'.format(value))


def _floats(value):
    return [float(v) for v in value]


def _ints(value):
    return [int(v) for v in value]


def _strings(value):
    if isinstance(value, str):
        raise ValueError('expected a list, got {!r}'.format(value))
    return [str(v) for v in value]


def _integer(value):
    if isinstance(value, bool) or (isinstance(value, float) and
                                   not value.is_integer()):
        raise ValueError('expected an integer, got {!r}'.format(value))
    return int(value)


class RunConfig(Record):
    """ Every setting of a run, with defaults.

    Settings are read from a JSON object whose keys are field names; keys
    which are not fields are an error.  The architecture defaults are a
    small desk-scale network; training defaults to Adam with learning rate
    1e-4 on batches of 16.
    """

    seed = Field(default=0, kind=_integer)
    precision = Field(default='float32', kind=str)
    lr = Field(default=1e-4, kind=float)

    d_emb = Field(default=64, kind=_integer)
    d_tok = Field(default=32, kind=_integer)
    text_layers = Field(default=2, kind=_integer)
    text_ff = Field(default=64, kind=_integer)
    text_channels = Field(default=64, kind=_integer)
    image_stages = Field(default=3, kind=_integer)
    base_width = Field(default=16, kind=_integer)
    image_size = Field(default=32, kind=_integer)
    max_len = Field(default=32, kind=_integer)
    match_hidden = Field(default=32, kind=_integer)
    head_channels = Field(default=64, kind=_integer)
    head_hidden = Field(default=32, kind=_integer)

    pretrain_epochs = Field(default=10, kind=_integer)
    finetune_epochs = Field(default=30, kind=_integer)
    batch_size = Field(default=16, kind=_integer)
    negative_ratio = Field(default=1.0, kind=float)

    n_train = Field(default=2000, kind=_integer)
    n_test = Field(default=400, kind=_integer)
    noise_sigma = Field(default=0.05, kind=float)
    finding_gain = Field(default=1.0, kind=float)
    omission = Field(default=0.05, kind=float)
    data_dir = Field(default='', kind=str)

    task = Field(default='binary', kind=str)
    init = Field(default='scratch', kind=str)
    fraction = Field(default=1.0, kind=float)
    freeze = Field(default=False, kind=_boolean)
    reset_bn = Field(default=False, kind=_boolean)

    fractions = Field(default=[0.005, 0.01, 0.02, 0.05, 0.1, 0.3, 0.5, 1.0],
                      kind=_floats)
    sweep_seeds = Field(default=[0, 1, 2], kind=_ints)
    inits = Field(default=['scratch', 'pretrained'], kind=_strings)
    weights = Field(default='', kind=str)
    workers = Field(default=1, kind=_integer)

    out = Field(default='runs', kind=str)

    def validate(self):
        assert self.precision in ('float32', 'float64'), \
            'precision: expected float32 or float64, got {!r}'.format(
                self.precision)
        assert self.lr > 0, 'lr: must be positive'
        for name in ('d_emb', 'd_tok', 'text_layers', 'text_ff',
                     'text_channels', 'image_stages', 'base_width',
                     'image_size', 'max_len', 'match_hidden', 'head_channels',
                     'pretrain_epochs', 'finetune_epochs', 'batch_size',
                     'n_train', 'n_test', 'workers'):
            assert getattr(self, name) > 0, '{}: must be positive'.format(name)
        assert self.head_hidden >= 0, 'head_hidden: must not be negative'
        assert self.negative_ratio > 0, 'negative_ratio: must be positive'
        assert self.n_train >= 2, 'n_train: at least 2 items are needed'
        assert self.noise_sigma >= 0, 'noise_sigma: must not be negative'
        assert self.finding_gain > 0, 'finding_gain: must be positive'
        assert 0 <= self.omission <= 1, 'omission: must be in [0, 1]'
        assert self.task in TASKS, 'task: expected one of {}, got {!r}'.format(
            ', '.join(TASKS), self.task)
        assert self.init == 'scratch' or (
            self.init.startswith('pretrained:') and self.pretrained_path), \
            'init: expected scratch or pretrained:<path>, got {!r}'.format(
                self.init)
        assert 0 < self.fraction <= 1, 'fraction: must be in (0, 1]'
        assert self.fractions, 'fractions: at least one is needed'
        for f in self.fractions:
            assert 0 < f <= 1, 'fractions: {} is not in (0, 1]'.format(f)
        assert self.sweep_seeds, 'sweep_seeds: at least one is needed'
        for init in self.inits:
            assert init in ('scratch', 'pretrained'), \
                'inits: expected scratch or pretrained, got {!r}'.format(init)

    @property
    def pretrained_path(self):
        """ The weight file of ``init = 'pretrained:<path>'``, else None. """
        if self.init.startswith('pretrained:'):
            return self.init[len('pretrained:'):] or None
        return None

    def dumps(self):
        return simplejson.dumps(dict(self.asdict()), sort_keys=True, indent=4)


def load_config(path=None, overrides=None):
    """ Defaults, then the JSON file at *path*, then *overrides*.

    *overrides* maps field names to values; None values are ignored.
    Errors are raised as `ConfigError` naming the offending key.
    """
    values = {}
    if path:
        try:
            with open(path, encoding='utf-8') as fh:
                loaded = simplejson.load(fh)
        except OSError as err:
            raise ConfigError('cannot read config {}: {}'.format(path, err))
        except simplejson.JSONDecodeError as err:
            raise ConfigError('config {} is not valid JSON: {}'.format(
                path, err))
        if not isinstance(loaded, dict):
            raise ConfigError('config {} must hold a JSON object'.format(path))
        values.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    unknown = sorted(set(values) - set(RunConfig.fields()))
    if unknown:
        raise ConfigError('unknown config key(s): {}'.format(
            ', '.join(unknown)))
    try:
        return RunConfig(**values)
    except ValueError as err:
        raise ConfigError(str(err))


def echo_config(config, out=None):
    """ Log the effective config and write it to ``<out>/config.json``. """
    out = out if out is not None else config.out
    os.makedirs(out, exist_ok=True)
    text = config.dumps()
    with open(os.path.join(out, 'config.json'), 'w', encoding='utf-8') as fh:
        fh.write(text + '\n')
    logging.info('effective config:\n%s', text)
    return text
