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

import math
import types

import numpy as np
import pytest

from timnet import (TimNet, MatchingHead, PairedDataset, build_pairs,
                    pretrain, evaluate_matching, match_forward,
                    UndefinedMetricError)
from timnet._tensor import (Tensor, abs_diff, cross_entropy, softmax,
                            precision)
from timnet.matcher import PairedExample, PairSampler

from . import tiny_config, tiny_corpus


def tiny_net(corpus, seed=0):
    return TimNet.from_config(tiny_config(), len(corpus.vocab),
                              np.random.default_rng(seed))


class TestPairs(object):

    def setup_method(self):
        self.corpus = tiny_corpus(n=10)

    def test_counts(self):
        'One true pair per item plus round(ratio * N) negatives.'
        pairs = build_pairs(self.corpus, 1.0, seed=0)
        assert len(pairs) == 20
        assert len(pairs.get(match=True)) == 10
        assert len(build_pairs(self.corpus, 0.25, seed=0)) == 10 + 3

    def test_true_pairs(self):
        'True pairs hold the image and tokens of one item.'
        pairs = build_pairs(self.corpus, 1.0, seed=0)
        for pair in pairs.iter(match=True):
            i = pair.source_index
            assert pair.report_index == i
            assert np.array_equal(pair.image, self.corpus.images[i])
            assert np.array_equal(pair.tokens, self.corpus.tokens[i])

    def test_negative_pairs(self):
        'Negatives take the report of a different item.'
        pairs = build_pairs(self.corpus, 1.0, seed=0)
        negatives = pairs.get(match=False)
        for pair in negatives:
            assert pair.report_index != pair.source_index
            assert np.array_equal(pair.tokens,
                                  self.corpus.tokens[pair.report_index])
        # every image is used once before any repeats
        assert sorted(p.source_index for p in negatives) == list(range(10))

    def test_deterministic(self):
        'Equal seeds give equal pairs; other seeds reorder them.'
        a = build_pairs(self.corpus, 1.0, seed=3)
        b = build_pairs(self.corpus, 1.0, seed=3)
        c = build_pairs(self.corpus, 1.0, seed=4)
        key = lambda ds: [(p.source_index, p.report_index) for p in ds]
        assert key(a) == key(b)
        assert key(a) != key(c)

    def test_too_small(self):
        'Negatives need at least two items.'
        corpus = self.corpus.replace(ids=self.corpus.ids[:1],
                                     images=self.corpus.images[:1],
                                     reports=self.corpus.reports[:1],
                                     labels=self.corpus.labels[:1],
                                     multihot=self.corpus.multihot[:1],
                                     tokens=self.corpus.tokens[:1])
        with pytest.raises(ValueError):
            build_pairs(corpus)

    def test_two_items(self):
        'With two items each negative pairs an image with the other report.'
        pairs = build_pairs(tiny_corpus(n=2), 1.0, seed=0)
        assert len(pairs) == 4
        assert len(pairs.get(match=True)) == 2
        negatives = pairs.get(match=False)
        assert sorted(p.source_index for p in negatives) == [0, 1]
        for pair in negatives:
            assert pair.report_index == 1 - pair.source_index

    def test_balance(self):
        'A ratio of 1 gives as many negatives as true pairs.'
        corpus = types.SimpleNamespace(
            images=np.zeros((1000, 1, 2, 2)),
            tokens=np.ones((1000, 3), dtype=np.int64))
        pairs = build_pairs(corpus, 1.0, seed=0)
        assert len(pairs.positions(match=True)) == 1000
        assert len(pairs.positions(match=False)) == 1000

    def test_pair_record(self):
        'A pair marked true must pair an item with itself.'
        with pytest.raises(ValueError):
            PairedExample(image=None, tokens=None, match=True,
                          source_index=1, report_index=2)

    def test_arrays(self):
        'arrays stacks images, tokens and labels.'
        pairs = build_pairs(self.corpus, 1.0, seed=0)
        images, tokens, labels = pairs.arrays([0, 1, 2])
        assert images.shape == (3, 1, 8, 8)
        assert tokens.shape == (3, 12)
        assert list(labels) == [int(pairs[i].match) for i in range(3)]

    def test_sampler(self):
        'The sampler draws fresh negatives per epoch, reproducibly.'
        sampler = PairSampler(self.corpus, 1.0, seed=1)
        key = lambda ds: [(p.source_index, p.report_index) for p in ds]
        assert key(sampler(1)) == key(sampler(1))
        assert key(sampler(1)) != key(sampler(2))


class TestTimNet(object):

    def setup_method(self):
        self.corpus = tiny_corpus(n=12)
        self.net = tiny_net(self.corpus)
        self.pairs = build_pairs(self.corpus, 1.0, seed=0)

    def test_zero_init(self):
        'An untrained head gives probability 0.5 and loss ln 2.'
        images, tokens, labels = self.pairs.arrays()
        logits = self.net(tokens, images)
        assert not logits.data.any()
        assert np.allclose(softmax(logits).data, 0.5)
        loss = cross_entropy(logits, labels).item()
        assert abs(loss - math.log(2)) < 1e-6

    def test_composition(self):
        'The network is the head applied to |text - image| exactly.'
        with precision('float64'):
            net = tiny_net(self.corpus, seed=3)
            net.head.out.weight.data[...] = np.random.default_rng(0).normal(
                size=net.head.out.weight.shape)
            net.eval()
            images, tokens, _ = self.pairs.arrays(range(6))
            whole = net(tokens, images).data
            v_t = net.text_encoder(tokens)
            v_i = net.image_encoder(Tensor(images))
            parts = net.head(abs_diff(v_t, v_i)).data
        assert np.array_equal(whole, parts)

    def test_match_forward(self):
        'A single pair gives two logits.'
        self.net.eval()
        out = match_forward(self.net, self.corpus.tokens[0],
                            self.corpus.images[0])
        assert out.shape == (2,)

    def test_swap_symmetric(self):
        'Swapping the two embeddings leaves the logits bit-identical.'
        self.net.head.out.weight.data[...] = np.random.default_rng(1).normal(
            size=self.net.head.out.weight.shape)
        self.net.eval()
        tokens = self.corpus.tokens[2]
        image = self.corpus.images[2]
        logits = match_forward(self.net, tokens, image).data
        v_t = self.net.text_encoder(tokens[None])
        v_i = self.net.image_encoder(Tensor(image[None]))
        swapped = self.net.head(abs_diff(v_i, v_t)).data[0]
        assert logits.any()
        assert np.array_equal(logits, swapped)

    def test_embedding_mismatch(self):
        'Branches must agree on the embedding size.'
        other = TimNet.from_config(tiny_config(d_emb=4), len(self.corpus.vocab),
                                   np.random.default_rng(0))
        with pytest.raises(ValueError):
            TimNet(self.net.text_encoder, other.image_encoder, self.net.head)
        with pytest.raises(ValueError):
            TimNet(self.net.text_encoder, self.net.image_encoder,
                   MatchingHead(4, np.random.default_rng(0)))

    def test_tensor_names(self):
        'The extractor sits under image_encoder.extractor.'
        names = [n for n, _ in self.net.named_tensors()]
        assert 'image_encoder.extractor.stem.conv.weight' in names
        assert 'image_encoder.extractor.stage1.bn2.running_var' in names
        assert 'text_encoder.token_emb.weight' in names


class TestPretrain(object):

    def setup_method(self):
        self.corpus = tiny_corpus(n=16)
        self.pairs = build_pairs(self.corpus, 1.0, seed=0)

    def test_log(self):
        'Every epoch logs the training split and the held-out split.'
        net = tiny_net(self.corpus)
        held = build_pairs(tiny_corpus(n=8, seed=9, vocab=self.corpus.vocab),
                           1.0, seed=1)
        net, log = pretrain(net, self.pairs, epochs=2, batch_size=8,
                            held_out=held)
        assert [(e, s) for e, s, _ in log] == [
            (1, 'train'), (1, 'held_out'), (2, 'train'), (2, 'held_out')]
        assert log.last('held_out').n_samples == len(held)
        assert net.training

    def test_learns(self):
        'Training loss falls on a small fixed set of pairs.'
        corpus = tiny_corpus(n=6)
        pairs = build_pairs(corpus, 1.0, seed=0)
        net, log = pretrain(tiny_net(corpus), pairs, epochs=30, batch_size=4,
                            lr=0.01)
        losses = [r.loss for _, r in log.split('train')]
        assert losses[-1] < losses[0]

    def test_memorizes(self):
        'A single repeated pair is learned within 200 steps.'
        pair = self.pairs.get(match=True)[0]
        net, log = pretrain(tiny_net(self.corpus), PairedDataset([pair, pair]),
                            epochs=200, batch_size=2, lr=0.01)
        assert len(log.split('train')) == 200
        assert log.last('train').loss < 0.01

    def test_deterministic(self):
        'Equal seeds train to bit-identical weights.'
        states = []
        for _ in range(2):
            net = tiny_net(self.corpus)
            pretrain(net, self.pairs, epochs=1, batch_size=8, seed=5,
                     sampler=PairSampler(self.corpus, 1.0, seed=2))
            states.append(net.state_dict())
        for name in states[0]:
            assert np.array_equal(states[0][name], states[1][name]), name

    def test_changes_weights(self):
        'A training step moves the parameters.'
        net = tiny_net(self.corpus)
        before = net.state_dict()
        pretrain(net, self.pairs, epochs=1, batch_size=8)
        after = net.state_dict()
        assert not np.array_equal(before['head.out.bias'],
                                  after['head.out.bias'])
        assert not np.array_equal(
            before['image_encoder.extractor.stem.bn.running_mean'],
            after['image_encoder.extractor.stem.bn.running_mean'])

    def test_empty(self):
        with pytest.raises(ValueError):
            pretrain(tiny_net(self.corpus), PairedDataset())


class TestEvaluateMatching(object):

    def setup_method(self):
        self.corpus = tiny_corpus(n=12)
        self.net = tiny_net(self.corpus)
        self.pairs = build_pairs(self.corpus, 1.0, seed=0)

    def test_report(self):
        'The untrained network scores every pair 0.5.'
        report = evaluate_matching(self.net, self.pairs)
        assert report.n_samples == 24
        assert report.auroc == 0.5
        assert abs(report.loss - math.log(2)) < 1e-6
        assert self.net.training

    def test_single_class(self):
        'Matching metrics need both kinds of pair.'
        only_true = self.pairs.subset(self.pairs.positions(match=True))
        with pytest.raises(UndefinedMetricError):
            evaluate_matching(self.net, only_true)
