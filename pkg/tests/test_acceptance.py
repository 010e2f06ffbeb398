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

""" Desk-scale end-to-end checks.  These train real networks on the default
synthetic corpus and take minutes; run them with ``--runslow``.
"""

import os

import numpy as np
import pytest

from timnet import RunConfig, auroc, average_precision
from timnet._cli import main
from timnet._tensor import (Tensor, precision, add, mul, matmul, bmm, conv2d,
                            batchnorm, layernorm, relu, sigmoid, softmax,
                            cross_entropy, bce_multilabel, gap, abs_diff,
                            take_rows, segment_mean, check_gradient)
from timnet.cam import occlusion_check
from timnet import sweep as sweeps
from timnet import tools

from . import projection, project
from .test_metrics import pairwise_auroc, walked_ap

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)


def leaf(rng, shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def _cases():
    'Builders of (function, tensors) for each op under test.'
    def dense(rng):
        a, b = leaf(rng, (3, 4)), leaf(rng, (4, 2))
        return lambda: matmul(a, b), [a, b]

    def batched(rng):
        a, b = leaf(rng, (2, 3, 4)), leaf(rng, (2, 4, 2))
        return lambda: bmm(a, b), [a, b]

    def conv(rng):
        x, k = leaf(rng, (2, 2, 5, 5)), leaf(rng, (3, 2, 3, 3))
        return lambda: conv2d(x, k, 1, 1), [x, k]

    def norm(rng):
        x, g, b = leaf(rng, (4, 3, 2, 2)), leaf(rng, (3,)), leaf(rng, (3,))
        stats = (Tensor(np.zeros(3)), Tensor(np.ones(3)))
        return lambda: batchnorm(x, g, b, stats, 'train'), [x, g, b]

    def rows(rng):
        x, g, b = leaf(rng, (3, 5)), leaf(rng, (5,)), leaf(rng, (5,))
        return lambda: layernorm(x, g, b), [x, g, b]

    def smooth(rng):
        x = leaf(rng, (4, 3))
        return lambda: mul(sigmoid(x), softmax(x)), [x]

    def pooled(rng):
        x = leaf(rng, (2, 3, 4, 4))
        return lambda: gap(relu(add(x, Tensor(np.full(x.shape, 3.0))))), [x]

    def distance(rng):
        a = leaf(rng, (3, 4))
        # keep |a - b| clear of the kink at zero
        offset = rng.choice([-1.0, 1.0], size=a.shape) * rng.uniform(
            0.1, 1.0, size=a.shape)
        b = Tensor(a.data + offset, requires_grad=True)
        return lambda: abs_diff(a, b), [a, b]

    def gather(rng):
        table = leaf(rng, (5, 3))
        ids = rng.integers(0, 5, size=(2, 4))
        return lambda: take_rows(table, ids), [table]

    def segments(rng):
        x = leaf(rng, (6, 3))
        ids = rng.permutation(np.arange(6) % 3)
        return lambda: segment_mean(x, ids, 3), [x]

    def losses(rng):
        x = leaf(rng, (5, 3))
        targets = rng.integers(0, 3, size=5)
        multihot = rng.integers(0, 2, size=(5, 3))
        return lambda: add(cross_entropy(x, targets),
                           bce_multilabel(x, multihot)), [x]

    return [dense, batched, conv, norm, rows, smooth, pooled, distance,
            gather, segments, losses]


@pytest.mark.parametrize('build', _cases(), ids=lambda f: f.__name__)
def test_gradient_suite(build):
    'Every op agrees with central differences on 100 random cases.'
    with precision('float64'):
        for case in range(100):
            rng = np.random.default_rng(case)
            fn, tensors = build(rng)
            weights = projection(fn().shape, case)
            err = check_gradient(lambda: project(fn(), weights), tensors)
            assert err < 1e-5, (case, err)


def test_ranking_oracles():
    'auROC and AP agree with their brute-force oracles on 1000 instances.'
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        scores = np.round(rng.uniform(size=n), int(rng.integers(1, 4)))
        labels = rng.integers(0, 2, size=n)
        labels[:2] = [0, 1]
        assert abs(auroc(scores, labels) -
                   pairwise_auroc(scores, labels)) < 1e-12
        distinct = rng.permutation(n) / float(n)
        assert abs(average_precision(distinct, labels) -
                   walked_ap(list(distinct), list(labels))) < 1e-12


@pytest.fixture(scope='module')
def matchers(tmp_path_factory):
    'A matching network per seed, pretrained with the default config.'
    root = tmp_path_factory.mktemp('matchers')
    runs = {}
    for seed in SEEDS:
        out = str(root / 'seed{}'.format(seed))
        assert main(['pretrain', '--seed', str(seed), '--out', out]) == 0
        _, rows = tools.read_csv(os.path.join(out, 'pretrain_log.csv'))
        held = [r for r in rows if r['split'] == 'held_out'][-1]
        runs[seed] = (os.path.join(out, 'matcher.timw'), held)
    return runs


def test_matching(matchers):
    'Held-out matching auROC of at least 0.80 and accuracy of 0.70.'
    held = [matchers[seed][1] for seed in SEEDS]
    assert np.mean([float(r['auroc']) for r in held]) >= 0.80
    assert np.mean([float(r['acc']) for r in held]) >= 0.70


def _means(rows, column):
    return dict(((e['init'], e['fraction']), e[column])
                for e in sweeps.summarize(rows))


def test_transfer(matchers, tmp_path):
    'Pretraining saves at least 90% of the labels for binary accuracy.'
    config = RunConfig(task='binary', fractions=[0.05, 0.5],
                       sweep_seeds=list(SEEDS),
                       weights=matchers[0][0], out=str(tmp_path))
    rows, document = sweeps.sweep(config)
    acc = _means(rows, 'acc')
    assert acc['pretrained', 0.05] >= acc['scratch', 0.05] + 0.03
    assert acc['pretrained', 0.05] >= acc['scratch', 0.5]
    assert document['reduction']['acc']['reduction'] >= 0.9


def test_multilabel(matchers, tmp_path):
    'Pretraining lifts macro auROC of the three finding kinds.'
    config = RunConfig(task='multilabel', fractions=[0.1],
                       sweep_seeds=list(SEEDS),
                       weights=matchers[0][0], out=str(tmp_path))
    rows, _ = sweeps.sweep(config)
    means = _means(rows, 'auroc')
    assert means['pretrained', 0.1] >= means['scratch', 0.1] + 0.02


def test_occlusion(matchers):
    'Occluding the hottest CAM pixels hurts more than random pixels.'
    config = RunConfig(task='binary', init='pretrained:' + matchers[0][0])
    train, test = sweeps.make_corpora(config)
    with precision(config.precision):
        model, _, _ = sweeps.fit_cell(config, train, 1.0, 0, 'pretrained',
                                      config.pretrained_path)
        abnormal = test.images[test.labels == 1][:100]
        assert occlusion_check(model, abnormal, class_index=1) >= 0.70
