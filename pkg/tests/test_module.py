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

from timnet import Module, ParamGroup, ShapeError, Tensor
from timnet._tensor import gap
from timnet._layers import (Linear, Conv2d, BatchNorm, ConvBNReLU,
                            ResidualBlock, Embedding)


def rng():
    return np.random.default_rng(0)


class Net(Module):

    def __init__(self):
        super(Net, self).__init__()
        self.body = ConvBNReLU(1, 2, 3, rng(), padding=1)
        self.fc = Linear(2, 3, rng())
        self.scale = Tensor(np.ones(1), requires_grad=True)

    def forward(self, x):
        return self.fc(gap(self.body(x)))


class TestModule(object):

    def setup_method(self):
        self.net = Net()

    def test_named_parameters(self):
        'Parameters are named by dotted paths, own tensors first.'
        names = [n for n, _ in self.net.named_parameters()]
        assert names == ['scale', 'body.conv.weight', 'body.bn.gamma',
                         'body.bn.beta', 'fc.weight', 'fc.bias']

    def test_named_tensors(self):
        'Buffers follow the parameters of their module.'
        names = [n for n, _ in self.net.named_tensors()]
        assert names[:6] == ['scale', 'body.conv.weight', 'body.bn.gamma',
                             'body.bn.beta', 'body.bn.running_mean',
                             'body.bn.running_var']

    def test_param_count(self):
        assert self.net.param_count() == 1 + 18 + 2 + 2 + 6 + 3

    def test_modules(self):
        'modules walks depth first.'
        kinds = [type(m).__name__ for m in self.net.modules()]
        assert kinds == ['Net', 'ConvBNReLU', 'Conv2d', 'BatchNorm', 'Linear']

    def test_reassign_child(self):
        'A registered child cannot be replaced by a plain value.'
        with pytest.raises(TypeError):
            self.net.fc = 3

    def test_train_eval(self):
        'train and eval reach every descendant.'
        self.net.eval()
        assert not any(m.training for m in self.net.modules())
        self.net.train()
        assert all(m.training for m in self.net.modules())

    def test_trainable(self):
        'Frozen parameters are left out of parameters().'
        self.net.scale.requires_grad = False
        assert 'scale' not in self.net.parameters()
        assert 'scale' in self.net.parameters(trainable=False)

    def test_state_round_trip(self):
        'load_state restores every tensor of state_dict.'
        state = self.net.state_dict()
        other = Net()
        for _, t in other.named_tensors():
            t.data[...] = 0
        loaded, fresh = other.load_state(state)
        assert fresh == []
        assert len(loaded) == len(state)
        for name, t in other.named_tensors():
            assert np.array_equal(t.data, state[name])

    def test_state_is_copy(self):
        'state_dict holds copies.'
        state = self.net.state_dict()
        state['fc.bias'][...] = 7
        assert not self.net.fc.bias.data.any()

    def test_load_shape_conflict(self):
        'A stored shape which differs is a ShapeError naming the tensor.'
        state = self.net.state_dict()
        state['fc.weight'] = np.zeros((3, 3))
        with pytest.raises(ShapeError) as err:
            Net().load_state(state)
        assert 'fc.weight' in str(err.value)

    def test_load_rename(self):
        'rename maps model names to stored names; unmatched are fresh.'
        state = dict(('old.' + k, v) for k, v in self.net.state_dict().items()
                     if k.startswith('fc.'))
        loaded, fresh = Net().load_state(
            state, rename=lambda n: 'old.' + n if n.startswith('fc.') else None)
        assert loaded == ['fc.weight', 'fc.bias']
        assert 'scale' in fresh and 'body.bn.running_var' in fresh

    def test_zero_grad(self):
        'zero_grad clears every parameter gradient.'
        for _, p in self.net.named_parameters():
            p.grad = np.ones(p.shape)
        self.net.zero_grad()
        assert all(p.grad is None for _, p in self.net.named_parameters())


class TestLayers(object):

    def test_linear_zero(self):
        'A zero linear layer outputs zeros.'
        layer = Linear(4, 2, rng(), zero=True)
        out = layer(Tensor(np.ones((3, 4))))
        assert out.shape == (3, 2) and not out.data.any()

    def test_linear_init_bound(self):
        'Weights are drawn within 1/sqrt(fan in).'
        layer = Linear(16, 8, rng())
        assert np.abs(layer.weight.data).max() <= 0.25

    def test_conv_shape(self):
        'A padded 3x3 convolution keeps the spatial size.'
        conv = Conv2d(2, 5, 3, rng(), padding=1)
        assert conv(Tensor(np.ones((4, 2, 6, 6)))).shape == (4, 5, 6, 6)

    def test_batchnorm_modes(self):
        'Eval mode uses the running statistics.'
        bn = BatchNorm(2)
        x = Tensor(np.random.default_rng(1).normal(3.0, 1.0, size=(8, 2, 2, 2)))
        bn(x)
        assert bn.running_mean.data.min() > 0
        bn.eval()
        out = bn(x).data
        mean = bn.running_mean.data.reshape(1, 2, 1, 1)
        var = bn.running_var.data.reshape(1, 2, 1, 1)
        assert np.allclose(out, (x.data - mean) / np.sqrt(var + 1e-5),
                           atol=1e-5)
        bn.reset_running_stats()
        assert not bn.running_mean.data.any()
        assert (bn.running_var.data == 1).all()

    def test_residual_shape(self):
        block = ResidualBlock(3, rng())
        out = block(Tensor(np.ones((2, 3, 4, 4))))
        assert out.shape == (2, 3, 4, 4)
        assert out.data.min() >= 0

    def test_embedding(self):
        'Embedding rows are looked up by id.'
        emb = Embedding(5, 3, rng())
        out = emb(np.array([[4, 0]]))
        assert out.shape == (1, 2, 3)
        assert np.array_equal(out.data[0, 0], emb.weight.data[4])

    def test_batchnorm_single_value(self):
        'One value per channel falls back to the running statistics.'
        bn = BatchNorm(3)
        x = Tensor(np.array([[1.0, -2.0, 4.0]]))
        out = bn(x).data
        assert np.allclose(out, x.data / np.sqrt(1 + 1e-5), atol=1e-5)
        assert not bn.running_mean.data.any()
        assert bn.training


class TestParamGroup(object):

    def setup_method(self):
        self.net = Net()
        self.g = ParamGroup(self.net, 'body.')

    def test_init(self):
        'A group keeps its module and prefix.'
        assert self.g.module is self.net
        assert self.g.prefix == 'body.'

    def test_meta_len(self):
        assert len(self.g) == 5

    def test_meta_contains(self):
        assert 'bn.gamma' in self.g
        assert 'fc.weight' not in self.g

    def test_meta_iter(self):
        'Names are yielded without the prefix.'
        assert [n for n, _ in self.g] == ['conv.weight', 'bn.gamma', 'bn.beta',
                                          'bn.running_mean', 'bn.running_var']

    def test_get(self):
        assert self.g.get('conv.weight') is self.net.body.conv.weight
        with pytest.raises(KeyError):
            self.g.get('missing')

    def test_live(self):
        'Tensors registered later are seen.'
        self.net.body.extra = Tensor(np.ones(2), requires_grad=True)
        assert 'extra' in self.g

    def test_parameters(self):
        'parameters() holds trainable tensors by full name.'
        assert list(self.g.parameters()) == ['body.conv.weight',
                                             'body.bn.gamma', 'body.bn.beta']

    def test_state(self):
        'state() copies every tensor, buffers included.'
        state = self.g.state()
        assert list(state) == [n for n, _ in self.g]
        state['bn.gamma'][...] = 0
        assert (self.net.body.bn.gamma.data == 1).all()

    def test_freeze_thaw(self):
        'freeze stops gradients for the group only.'
        self.net.body.conv.weight.grad = np.ones((2, 1, 3, 3))
        self.g.freeze()
        assert self.g.frozen()
        assert self.net.body.conv.weight.grad is None
        assert list(self.net.parameters()) == ['scale', 'fc.weight', 'fc.bias']
        self.g.thaw()
        assert not self.g.frozen()
