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

""" A small reverse-mode automatic differentiation engine.

Tensors wrap numpy arrays.  Every operation on tensors which require a
gradient records its inputs and a backward rule on the output tensor;
`backward` walks those records in reverse topological order (a `Tape`)
and accumulates gradients into the ``grad`` of every leaf tensor.

The element type is a module-wide setting: ``float32`` for training runs,
``float64`` for gradient verification.

>>> w = Tensor([1.0, 2.0], requires_grad=True)
>>> tape = backward((w * w).sum())
>>> w.grad
array([2., 4.], dtype=float32)
"""

import contextlib
import numbers

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """ Raised when tensor shapes do not fit an operation. """


_PRECISIONS = {'float32': np.float32, 'float64': np.float64}

_state = {'dtype': np.float32, 'grad': True}


def set_precision(name):
    """ Select the element type of newly created tensors. """
    try:
        _state['dtype'] = _PRECISIONS[name]
    except KeyError:
        raise ValueError('Unknown precision {!r}, expected one of {}'.format(
            name, ', '.join(sorted(_PRECISIONS))))


def get_precision():
    return np.dtype(_state['dtype']).name


def get_dtype():
    return _state['dtype']


@contextlib.contextmanager
def precision(name):
    """ Temporarily switch the element type. """
    old = get_precision()
    set_precision(name)
    try:
        yield
    finally:
        set_precision(old)


@contextlib.contextmanager
def no_grad():
    """ Disable recording inside the block. """
    old = _state['grad']
    _state['grad'] = False
    try:
        yield
    finally:
        _state['grad'] = old


class Tensor(object):
    """ An n-dimensional array which may take part in differentiation.

    ``data`` is a numpy array in the current element type.  The array can
    be updated in place but not replaced, so ``shape`` never changes.
    Leaf tensors with ``requires_grad`` receive gradients from `backward`;
    intermediate tensors only do so after `retain_grad`.
    """

    def __init__(self, data, requires_grad=False, dtype=None):
        self._data = np.array(data, dtype=dtype or get_dtype())
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._retain = False

    @property
    def data(self):
        return self._data

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self._parents

    def __repr__(self):
        return 'Tensor(shape={}, dtype={}, requires_grad={})'.format(
            self.shape, self.data.dtype.name, self.requires_grad)

    def retain_grad(self):
        """ Keep the gradient of an intermediate tensor after backward. """
        self._retain = True
        return self

    def zero_grad(self):
        self.grad = None

    def detach(self):
        """ Return a leaf copy of the values, outside any recorded graph. """
        return Tensor(self.data, dtype=self.data.dtype)

    def item(self):
        return self.data.item()

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)

    def sum(self):
        return total(self)

    def mean(self):
        return mean(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = shape[0]
        return reshape(self, tuple(shape))


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _record(data, parents, backward_fn):
    out = Tensor.__new__(Tensor)
    out._data = data
    out.grad = None
    out._retain = False
    out.requires_grad = _state['grad'] and any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    else:
        out._parents = ()
        out._backward = None
    return out


class Tape(object):
    """ The operations reachable from an output, in topological order.

    Every tensor appears after all of the tensors it was computed from,
    so walking the tape backwards visits each consumer before its inputs.
    """

    def __init__(self, output):
        self.output = output
        self.nodes = []
        visited = set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def backward(self, seed):
        grads = {id(self.output): seed}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.is_leaf or node._retain:
                node.grad = g.copy() if node.grad is None else node.grad + g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


def backward(loss):
    """ Accumulate d(loss)/d(leaf) into the grad of every reachable leaf.

    Gradients are summed into existing ``grad`` arrays, so calling this twice
    without zeroing doubles them.
    """
    if loss.data.size != 1 or loss.ndim > 1:
        raise ValueError('backward needs a scalar loss, got shape {}'.format(
            loss.shape))
    if not loss.requires_grad:
        raise ValueError('backward: nothing recorded, the loss does not '
                         'depend on any tensor requiring a gradient')
    tape = Tape(loss)
    tape.backward(np.ones_like(loss.data))
    return tape


###############################################################################
# Elementwise and structural operations

def add(a, b):
    """ a + b for equal shapes, a bias over the leading axis, or a scalar. """
    if isinstance(b, numbers.Number):
        return _record(a.data + b, (a,), lambda g: (g,))
    b = as_tensor(b)
    if a.shape == b.shape:
        return _record(a.data + b.data, (a, b), lambda g: (g, g))
    if a.ndim >= 2 and a.shape[1:] == b.shape:
        return _record(a.data + b.data, (a, b),
                       lambda g: (g, g.sum(axis=0)))
    raise ShapeError('add: cannot combine shapes {} and {}'.format(
        a.shape, b.shape))


def sub(a, b):
    if isinstance(b, numbers.Number):
        return _record(a.data - b, (a,), lambda g: (g,))
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError('sub: shapes {} and {} differ'.format(
            a.shape, b.shape))
    return _record(a.data - b.data, (a, b), lambda g: (g, -g))


def neg(a):
    return _record(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    """ Elementwise product of equal shapes, or scaling by a number. """
    if isinstance(b, numbers.Number):
        return scale(a, b)
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError('mul: shapes {} and {} differ'.format(
            a.shape, b.shape))
    return _record(a.data * b.data, (a, b),
                   lambda g: (g * b.data, g * a.data))


def scale(a, factor):
    return _record(a.data * factor, (a,), lambda g: (g * factor,))


def total(a):
    """ Sum of all elements, as a scalar tensor. """
    return _record(np.array(a.data.sum(), dtype=a.data.dtype), (a,),
                   lambda g: (np.full(a.shape, g, dtype=a.data.dtype),))


def mean(a):
    n = a.data.size
    return _record(np.array(a.data.mean(), dtype=a.data.dtype), (a,),
                   lambda g: (np.full(a.shape, g / n, dtype=a.data.dtype),))


def reshape(a, shape):
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError('reshape: cannot view {} as {}'.format(
            a.shape, shape))
    return _record(data, (a,), lambda g: (g.reshape(a.shape),))


def swapaxes(a, axis1, axis2):
    return _record(np.swapaxes(a.data, axis1, axis2), (a,),
                   lambda g: (np.swapaxes(g, axis1, axis2),))


def index(a, key):
    """ Basic indexing (integers and slices). """
    def backward_fn(g):
        full = np.zeros_like(a.data)
        full[key] += g
        return (full,)
    return _record(np.array(a.data[key]), (a,), backward_fn)


def take_rows(table, ids):
    """ Gather rows of a 2-d table; the result has shape ids.shape + (D,). """
    if table.ndim != 2:
        raise ShapeError('take_rows: table must be 2-d, got {}'.format(
            table.shape))
    ids = np.asarray(ids, dtype=np.int64)

    def backward_fn(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (full,)
    return _record(table.data[ids], (table,), backward_fn)


def segment_mean(x, segments, count):
    """ Mean of the rows of *x* belonging to each of *count* segments. """
    if x.ndim != 2:
        raise ShapeError('segment_mean: input must be 2-d, got {}'.format(
            x.shape))
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape != (x.shape[0],):
        raise ShapeError('segment_mean: {} segment ids for {} rows'.format(
            segments.shape, x.shape[0]))
    sizes = np.bincount(segments, minlength=count)[:count]
    if (sizes == 0).any():
        raise ValueError('segment_mean: segment {} is empty'.format(
            int(np.argmin(sizes))))
    out = np.zeros((count, x.shape[1]), dtype=x.data.dtype)
    np.add.at(out, segments, x.data)
    sizes = sizes.astype(x.data.dtype)[:, None]
    out /= sizes
    return _record(out, (x,), lambda g: ((g / sizes)[segments],))


###############################################################################
# Linear algebra

def matmul(a, b):
    """ Matrix product of a (M x K) and b (K x N). """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul: shapes {} and {} do not align'.format(
            a.shape, b.shape))

    def backward_fn(g):
        ga = g @ b.data.T if a.requires_grad else None
        gb = a.data.T @ g if b.requires_grad else None
        return ga, gb
    return _record(a.data @ b.data, (a, b), backward_fn)


def bmm(a, b):
    """ Batched matrix product of a (B x M x K) and b (B x K x N). """
    if (a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0]
            or a.shape[2] != b.shape[1]):
        raise ShapeError('bmm: shapes {} and {} do not align'.format(
            a.shape, b.shape))

    def backward_fn(g):
        ga = g @ np.swapaxes(b.data, 1, 2) if a.requires_grad else None
        gb = np.swapaxes(a.data, 1, 2) @ g if b.requires_grad else None
        return ga, gb
    return _record(a.data @ b.data, (a, b), backward_fn)


def conv2d(x, kernels, stride=1, padding=0):
    """ Cross-correlation of C x H x W (or N x C x H x W) input with
    C_out x C_in x k x k kernels, with zero padding.

    The output size (H + 2 padding - k) / stride + 1 must be a whole number.
    """
    single = x.ndim == 3
    xd = x.data[None] if single else x.data
    if xd.ndim != 4 or kernels.ndim != 4:
        raise ShapeError('conv2d: expected C x H x W input and 4-d kernels, '
                         'got {} and {}'.format(x.shape, kernels.shape))
    n, c, h, w = xd.shape
    o, ci, kh, kw = kernels.shape
    if ci != c:
        raise ShapeError('conv2d: input has {} channels, kernels expect {}'
                         .format(c, ci))
    span_h = h + 2 * padding - kh
    span_w = w + 2 * padding - kw
    if (span_h < 0 or span_w < 0 or span_h % stride or span_w % stride):
        raise ShapeError(
            'conv2d: {}x{} input with {}x{} kernel, stride {} and padding {} '
            'gives a non-integral output size'.format(
                h, w, kh, kw, stride, padding))
    oh = span_h // stride + 1
    ow = span_w // stride + 1
    if padding:
        xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding),
                         (padding, padding)))
    else:
        xp = xd
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    kmat = kernels.data.reshape(o, c * kh * kw)
    out = (cols @ kmat.T).reshape(n, oh, ow, o).transpose(0, 3, 1, 2)
    out = np.ascontiguousarray(out)
    if single:
        out = out[0]

    def backward_fn(g):
        g4 = g[None] if single else g
        gm = g4.transpose(0, 2, 3, 1).reshape(n * oh * ow, o)
        gk = (gm.T @ cols).reshape(kernels.shape) if kernels.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (gm @ kmat).reshape(n, oh, ow, c, kh, kw)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i:i + stride * oh:stride,
                        j:j + stride * ow:stride] += \
                        gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            gx = gxp[:, :, padding:padding + h, padding:padding + w]
            gx = np.ascontiguousarray(gx[0] if single else gx)
        return gx, gk
    return _record(out, (x, kernels), backward_fn)


###############################################################################
# Normalization

def batchnorm(x, gamma, beta, running_stats, mode='train', momentum=0.1,
              eps=1e-5):
    """ Per-channel normalization of an N x C x ... input.

    *running_stats* is a pair of (mean, variance) tensors updated in place
    in train mode and used for normalization in eval mode.
    """
    if mode not in ('train', 'eval'):
        raise ValueError('batchnorm: mode must be train or eval, got {!r}'
                         .format(mode))
    if x.ndim < 2 or gamma.shape != (x.shape[1],) or beta.shape != gamma.shape:
        raise ShapeError('batchnorm: input {} with scale {} and shift {}'
                         .format(x.shape, gamma.shape, beta.shape))
    running_mean, running_var = running_stats
    channels = x.shape[1]
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, channels) + (1,) * (x.ndim - 2)
    m = x.data.size // channels
    training = mode == 'train'
    if training:
        if m < 2:
            raise ValueError('batchnorm: degenerate variance, {} element per '
                             'channel in train mode'.format(m))
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean.data[...] *= 1 - momentum
        running_mean.data[...] += momentum * mu
        running_var.data[...] *= 1 - momentum
        running_var.data[...] += momentum * var * (m / (m - 1.0))
    else:
        mu = running_mean.data
        var = running_var.data
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu.reshape(bshape)) * invstd.reshape(bshape)
    g_scale = gamma.data.reshape(bshape)
    out = g_scale * xhat + beta.data.reshape(bshape)

    def backward_fn(g):
        ggamma = (g * xhat).sum(axis=axes)
        gbeta = g.sum(axis=axes)
        if training:
            gx = (g_scale * invstd.reshape(bshape) / m) * (
                m * g - gbeta.reshape(bshape) - xhat * ggamma.reshape(bshape))
        else:
            gx = g * g_scale * invstd.reshape(bshape)
        return gx, ggamma, gbeta
    return _record(out.astype(x.data.dtype, copy=False), (x, gamma, beta),
                   backward_fn)


def layernorm(x, gamma, beta, eps=1e-5):
    """ Normalization over the last axis with a learned scale and shift. """
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError('layernorm: input {} with scale {} and shift {}'
                         .format(x.shape, gamma.shape, beta.shape))
    mu = x.data.mean(axis=-1, keepdims=True)
    invstd = 1.0 / np.sqrt(x.data.var(axis=-1, keepdims=True) + eps)
    xhat = (x.data - mu) * invstd
    out = gamma.data * xhat + beta.data
    lead = tuple(range(x.ndim - 1))

    def backward_fn(g):
        ggamma = (g * xhat).sum(axis=lead)
        gbeta = g.sum(axis=lead)
        gxhat = g * gamma.data
        gx = (invstd / d) * (d * gxhat - gxhat.sum(axis=-1, keepdims=True)
                             - xhat * (gxhat * xhat).sum(axis=-1, keepdims=True))
        return gx, ggamma, gbeta
    return _record(out, (x, gamma, beta), backward_fn)


###############################################################################
# Activations and pooling

def relu(x):
    mask = x.data > 0
    return _record(x.data * mask, (x,), lambda g: (g * mask,))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid(x):
    y = _sigmoid(x.data)
    return _record(y, (x,), lambda g: (g * y * (1.0 - y),))


def abs_diff(a, b):
    """ |a - b| elementwise, with subgradient 0 where a == b. """
    a = as_tensor(a)
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError('abs_diff: shapes {} and {} differ'.format(
            a.shape, b.shape))
    diff = a.data - b.data
    sign = np.sign(diff)
    return _record(np.abs(diff), (a, b), lambda g: (g * sign, -g * sign))


def gap(x):
    """ Global average pooling of C x H x W or N x C x H x W input. """
    if x.ndim < 3:
        raise ShapeError('gap: expected at least 3 dimensions, got {}'.format(
            x.shape))
    area = x.shape[-1] * x.shape[-2]
    out = x.data.mean(axis=(-2, -1))

    def backward_fn(g):
        return (np.broadcast_to((g / area)[..., None, None], x.shape).copy(),)
    return _record(out, (x,), backward_fn)


def softmax(x):
    """ Softmax over the last axis. """
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    return _record(y, (x,),
                   lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


###############################################################################
# Losses

def cross_entropy(logits, targets):
    """ Mean softmax cross-entropy of N x K logits against class indices. """
    if logits.ndim != 2:
        raise ShapeError('cross_entropy: logits must be N x K, got {}'.format(
            logits.shape))
    n, k = logits.shape
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if targets.shape != (n,):
        raise ShapeError('cross_entropy: {} targets for {} rows'.format(
            targets.size, n))
    bad = (targets < 0) | (targets >= k)
    if bad.any():
        raise ValueError('cross_entropy: target index {} out of range for {} '
                         'classes'.format(int(targets[bad][0]), k))
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(n)
    loss = -logp[rows, targets].mean()

    def backward_fn(g):
        p = np.exp(logp)
        p[rows, targets] -= 1.0
        return (p * (g / n),)
    return _record(np.array(loss, dtype=logits.data.dtype), (logits,),
                   backward_fn)


def bce_multilabel(logits, targets):
    """ Mean binary cross-entropy of independent sigmoids over N x K. """
    targets = np.asarray(getattr(targets, 'data', targets))
    if targets.shape != logits.shape:
        raise ShapeError('bce_multilabel: logits {} and targets {}'.format(
            logits.shape, targets.shape))
    if not np.isin(targets, (0, 1)).all():
        raise ValueError('bce_multilabel: non-binary target')
    t = targets.astype(logits.data.dtype)
    z = logits.data
    count = z.size
    loss = (np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))).mean()
    return _record(np.array(loss, dtype=z.dtype), (logits,),
                   lambda g: ((_sigmoid(z) - t) * (g / count),))


###############################################################################
# Verification

def numerical_gradient(f, tensor, rel_step=1e-6):
    """ Central-difference gradient of the scalar function f() with respect
    to *tensor*, stepping each element by rel_step * max(1, |x|).
    """
    grad = np.zeros_like(tensor.data, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    for i in range(flat.size):
        x = flat[i]
        h = rel_step * max(1.0, abs(float(x)))
        flat[i] = x + h
        up = float(f().data)
        flat[i] = x - h
        down = float(f().data)
        flat[i] = x
        grad.reshape(-1)[i] = (up - down) / (2 * h)
    return grad


def check_gradient(f, tensors, rel_step=1e-6):
    """ Largest relative disagreement between backward and central
    differences over *tensors*, relative to max(1, |numerical|).
    """
    for t in tensors:
        t.grad = None
    backward(f())
    worst = 0.0
    for t in tensors:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        numeric = numerical_gradient(f, t, rel_step)
        err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
        worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst
