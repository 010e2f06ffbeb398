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

""" Class activation maps.

The map of a class is the sum of the pooled feature maps weighted by the
gradient of the class logit with respect to the pooled vector.  For a
linear classifier that gradient is the weight row of the class, which is
classic CAM; deeper classifiers are handled the same way.  The weighted
sum is clipped at zero, upsampled bilinearly to the image size and scaled
to [0, 1].
"""

import numpy as np
import cv2

from ._field import Field
from ._record import Record
from ._tensor import Tensor, no_grad, index, abs_diff, backward
from .encoders import extract_feature_maps
from .downstream import predict_logits
from . import tools


class Heatmap(Record):
    """ A normalized class activation map at image resolution.

    *raw_map* is the weighted sum at feature-map resolution before
    clipping; *raw_min* and *raw_max* are the extremes of the upsampled map
    before scaling.
    """

    values = Field()
    source_class = Field(kind=int)
    raw_min = Field(kind=float)
    raw_max = Field(kind=float)
    raw_map = Field()

    def validate(self):
        values = np.asarray(self.values)
        assert values.ndim == 2, 'heatmap values must be H x W'
        assert values.min() >= 0 and values.max() <= 1, \
            'heatmap values must lie in [0, 1]'
        if self.raw_max > self.raw_min:
            assert values.min() == 0 and values.max() == 1, \
                'a non-constant map must span [0, 1]'
        else:
            assert not values.any(), 'a constant map must be all zeros'


def normalize_map(values):
    """ Scale to [0, 1] by min and max; a constant map becomes zeros. """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def upsample(raw, height, width):
    """ Bilinear resize with pixel centres aligned (corners not pinned). """
    return cv2.resize(np.ascontiguousarray(raw, dtype=np.float64),
                      (width, height), interpolation=cv2.INTER_LINEAR)


def _heatmap(grad, maps, class_index, height, width):
    raw_map = np.tensordot(grad.astype(np.float64), maps.astype(np.float64),
                           axes=1)
    up = upsample(np.maximum(raw_map, 0.0), height, width)
    return Heatmap(values=normalize_map(up), source_class=class_index,
                   raw_min=up.min(), raw_max=up.max(), raw_map=raw_map)


def _as_image(image):
    image = np.asarray(getattr(image, 'data', image))
    if image.ndim == 2:
        image = image[None]
    if image.ndim != 3:
        raise ValueError('expected a C x H x W image, got shape {}'.format(
            image.shape))
    return image


def compute_cam(model, image, class_index):
    """ The `Heatmap` of *class_index* for one image under a
    `DownstreamModel`, evaluated in eval mode.
    """
    n_out = model.out.weight.shape[1]
    if not 0 <= class_index < n_out:
        raise ValueError('class index {} out of range for {} outputs'.format(
            class_index, n_out))
    image = _as_image(image)
    training = model.training
    model.eval()
    try:
        with no_grad():
            maps = model.head_conv(model.features(image[None])).data
        pooled = Tensor(maps.mean(axis=(2, 3)), requires_grad=True,
                        dtype=maps.dtype)
        backward(index(model.classify(pooled), (0, class_index)))
        grad = pooled.grad[0]
    finally:
        model.zero_grad()
        model.train(training)
    return _heatmap(grad, maps[0], class_index, image.shape[1],
                    image.shape[2])


def compute_matching_cam(net, tokens, image):
    """ The `Heatmap` of the match logit of a text and an image, over the
    feature maps of the image branch.
    """
    image = _as_image(image)
    training = net.training
    net.eval()
    try:
        with no_grad():
            v_t = net.text_encoder(np.asarray(tokens)[None])
            maps = extract_feature_maps(net.image_encoder, image).data
        pooled = Tensor(maps.mean(axis=(1, 2))[None], requires_grad=True,
                        dtype=maps.dtype)
        v_i = net.image_encoder.fc(pooled)
        logits = net.head(abs_diff(v_t, v_i))
        backward(index(logits, (0, 1)))
        grad = pooled.grad[0]
    finally:
        net.zero_grad()
        net.train(training)
    return _heatmap(grad, maps, 1, image.shape[1], image.shape[2])


def _class_logits(model, images, class_index):
    return predict_logits(model, images)[:, class_index].astype(np.float64)


def occlusion_check(model, images, class_index=1, top=0.1, seed=0):
    """ Fraction of *images* for which zeroing the top *top* share of CAM
    pixels lowers the class logit more than zeroing as many random pixels.
    """
    images = np.asarray(images)
    if not len(images):
        raise ValueError('no images to check')
    rng = np.random.default_rng(seed)
    _, height, width = images.shape[1:]
    count = max(1, tools.round_half_up(top * height * width))
    cam_occluded = images.copy()
    random_occluded = images.copy()
    for i, image in enumerate(images):
        values = compute_cam(model, image, class_index).values.reshape(-1)
        hottest = np.argsort(-values, kind='stable')[:count]
        chosen = rng.choice(height * width, size=count, replace=False)
        cam_occluded[i].reshape(len(image), -1)[:, hottest] = 0
        random_occluded[i].reshape(len(image), -1)[:, chosen] = 0
    base = _class_logits(model, images, class_index)
    cam_drop = base - _class_logits(model, cam_occluded, class_index)
    random_drop = base - _class_logits(model, random_occluded, class_index)
    return float(np.mean(cam_drop > random_drop))


def render_heatmap(heatmap, image, path):
    """ Write the image (left) and heatmap (right) side by side as a PGM,
    separated by a 2 pixel white column.  Returns the written pixels.
    """
    image = _as_image(image)[0]
    values = np.asarray(heatmap.values)
    if values.shape != image.shape:
        raise ValueError('heatmap {} does not match image {}'.format(
            values.shape, image.shape))
    left = tools.gray_levels(image)
    right = tools.gray_levels(values)
    separator = np.full((image.shape[0], 2), 255)
    pixels = np.hstack([left, separator, right]).astype(np.uint8)
    tools.write_pgm(path, pixels)
    return pixels
