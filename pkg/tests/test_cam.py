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

import numpy as np
import pytest

from timnet import (TimNet, DownstreamModel, compute_cam,
                    compute_matching_cam, render_heatmap)
from timnet._tensor import no_grad
from timnet.cam import Heatmap, normalize_map, upsample, occlusion_check
from timnet import tools

from . import tiny_config, tiny_corpus


def linear_model(seed=0):
    'A model whose classifier is one linear layer, with random weights.'
    model = DownstreamModel.from_config(tiny_config(head_hidden=0), 2,
                                        np.random.default_rng(seed))
    model.out.weight.data[...] = np.random.default_rng(seed + 1).normal(
        size=model.out.weight.shape)
    return model


class TestMaps(object):

    def test_normalize(self):
        values = normalize_map([[1.0, 3.0], [2.0, 5.0]])
        assert values.min() == 0 and values.max() == 1
        assert values[0, 1] == 0.5
        assert not normalize_map(np.full((3, 3), 4.0)).any()

    def test_upsample_peak(self):
        'An isolated peak stays in the image region it covers.'
        raw = np.zeros((4, 4))
        raw[1, 2] = 1.0
        up = upsample(raw, 16, 16)
        assert up.shape == (16, 16)
        row, col = np.unravel_index(np.argmax(up), up.shape)
        assert (row // 4, col // 4) == (1, 2)

    def test_upsample_constant(self):
        up = upsample(np.full((2, 2), 0.3), 8, 8)
        assert np.allclose(up, 0.3)

    def test_heatmap_record(self):
        'A constant map must be all zeros, any other must span [0, 1].'
        with pytest.raises(ValueError):
            Heatmap(values=np.full((2, 2), 0.5), source_class=0,
                    raw_min=1.0, raw_max=1.0, raw_map=None)
        with pytest.raises(ValueError):
            Heatmap(values=np.full((2, 2), 0.5), source_class=0,
                    raw_min=0.0, raw_max=1.0, raw_map=None)


class TestComputeCam(object):

    def setup_method(self):
        self.corpus = tiny_corpus(n=8)
        self.image = self.corpus.images[0]

    def test_linear_head(self):
        'With a linear classifier the map is the weighted sum of feature maps.'
        model = linear_model()
        heatmap = compute_cam(model, self.image, 1)
        model.eval()
        with no_grad():
            maps = model.head_conv(model.features(self.image[None])).data[0]
        expected = np.tensordot(model.out.weight.data[:, 1].astype(np.float64),
                                maps.astype(np.float64), axes=1)
        assert np.abs(heatmap.raw_map - expected).max() < 1e-10
        assert heatmap.source_class == 1

    def test_values(self):
        'The map has image resolution and spans [0, 1].'
        heatmap = compute_cam(linear_model(seed=2), self.image, 0)
        assert heatmap.values.shape == (8, 8)
        if heatmap.raw_max > heatmap.raw_min:
            assert heatmap.values.min() == 0
            assert heatmap.values.max() == 1

    def test_untrained(self):
        'A zero classifier has no gradient, so the map is constant zero.'
        model = DownstreamModel.from_config(tiny_config(), 2,
                                            np.random.default_rng(0))
        heatmap = compute_cam(model, self.image, 1)
        assert not heatmap.values.any()
        assert heatmap.raw_min == heatmap.raw_max

    def test_state(self):
        'Computing a map restores training mode and leaves no gradients.'
        model = linear_model()
        compute_cam(model, self.image, 0)
        assert model.training
        assert all(p.grad is None for _, p in model.named_parameters())

    def test_class_range(self):
        model = linear_model()
        for k in (-1, 2):
            with pytest.raises(ValueError):
                compute_cam(model, self.image, k)

    def test_matching(self):
        'Match maps are taken over the image branch of a matching network.'
        net = TimNet.from_config(tiny_config(), len(self.corpus.vocab),
                                 np.random.default_rng(0))
        assert not compute_matching_cam(net, self.corpus.tokens[0],
                                        self.image).values.any()
        net.head.out.weight.data[...] = np.random.default_rng(1).normal(
            size=net.head.out.weight.shape)
        heatmap = compute_matching_cam(net, self.corpus.tokens[0], self.image)
        assert heatmap.values.shape == (8, 8)
        assert heatmap.source_class == 1
        assert net.training

    def test_occlusion(self):
        score = occlusion_check(linear_model(), self.corpus.images[:4])
        assert 0.0 <= score <= 1.0
        with pytest.raises(ValueError):
            occlusion_check(linear_model(), self.corpus.images[:0])


class TestRender(object):

    def test_layout(self, tmp_path):
        'Image left, 2 white columns, heatmap right.'
        image = np.linspace(0, 1, 24).reshape(1, 4, 6)
        values = np.zeros((4, 6))
        values[0, 0] = 1.0
        heatmap = Heatmap(values=values, source_class=1, raw_min=0.0,
                          raw_max=2.0, raw_map=None)
        path = str(tmp_path / 'cam.pgm')
        pixels = render_heatmap(heatmap, image, path)
        assert pixels.shape == (4, 2 * 6 + 2)
        assert (pixels[:, 6:8] == 255).all()
        assert np.array_equal(pixels[:, :6], np.floor(255 * image[0] + 0.5))
        assert pixels[0, 8] == 255 and pixels[1:, 8:].max() == 0
        assert np.array_equal(tools.read_pgm(path), pixels)

    def test_levels(self, tmp_path):
        'Heatmap values map to gray levels with halves rounding up.'
        values = np.array([[0.0, 0.25], [0.5, 1.0]])
        heatmap = Heatmap(values=values, source_class=0, raw_min=0.0,
                          raw_max=1.0, raw_map=None)
        pixels = render_heatmap(heatmap, np.zeros((1, 2, 2)),
                                str(tmp_path / 'levels.pgm'))
        assert pixels[:, 4:].tolist() == [[0, 64], [128, 255]]

    def test_mismatch(self, tmp_path):
        heatmap = Heatmap(values=np.zeros((2, 2)), source_class=0,
                          raw_min=0.0, raw_max=0.0, raw_map=None)
        with pytest.raises(ValueError):
            render_heatmap(heatmap, np.zeros((1, 3, 3)),
                           str(tmp_path / 'x.pgm'))
