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

import collections
import logging
import struct

import numpy as np

from ._tensor import ShapeError

MAGIC = b'TIMW'
VERSION = 1

_HEADER = struct.Struct('<4sII')
_DTYPES = {0: np.dtype('<f4'), 1: np.dtype('<f8')}
_TAGS = {np.dtype('<f4'): 0, np.dtype('<f8'): 1}


class WeightFileError(ValueError):
    """ Raised for weight files which cannot be read or applied. """


class WeightFile(object):
    """ Named arrays in the TIMW binary layout.

    All integers are little-endian:

    ===========  ===========================================================
    Part         Layout
    ===========  ===========================================================
    header       magic ``TIMW``, version u32 (1), tensor count u32
    per tensor   name length u16, UTF-8 name, rank u8, each dimension u32,
                 dtype tag u8 (0 float32, 1 float64), raw row-major data
    ===========  ===========================================================

    Arrays keep the order they were added in, so writing a file that was
    read gives the same bytes.

    >>> wf = WeightFile()
    >>> wf.add('fc.bias', np.zeros(2, dtype=np.float32))
    >>> WeightFile.frombytes(wf.tobytes()).names()
    ['fc.bias']
    """

    def __init__(self, arrays=()):
        self._arrays = collections.OrderedDict()
        if hasattr(arrays, 'items'):
            arrays = arrays.items()
        for name, array in arrays:
            self.add(name, array)

    def __contains__(self, name):
        return name in self._arrays

    def __getitem__(self, name):
        return self._arrays[name]

    def __iter__(self):
        return iter(self._arrays)

    def __len__(self):
        return len(self._arrays)

    def names(self):
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def add(self, name, array):
        if name in self._arrays:
            raise WeightFileError('duplicate tensor name {!r}'.format(name))
        array = np.asarray(array)
        if array.dtype.newbyteorder('<') not in _TAGS:
            raise WeightFileError('{}: unsupported dtype {}'.format(
                name, array.dtype))
        self._arrays[name] = array

    def tobytes(self):
        parts = [_HEADER.pack(MAGIC, VERSION, len(self._arrays))]
        for name, array in self._arrays.items():
            encoded = name.encode('utf-8')
            dtype = array.dtype.newbyteorder('<')
            parts.append(struct.pack('<H', len(encoded)))
            parts.append(encoded)
            parts.append(struct.pack('<B', array.ndim))
            parts.append(struct.pack('<{}I'.format(array.ndim), *array.shape))
            parts.append(struct.pack('<B', _TAGS[dtype]))
            parts.append(np.ascontiguousarray(array, dtype=dtype).tobytes())
        return b''.join(parts)

    @classmethod
    def frombytes(cls, data):
        """ Parse a complete file; every malformation has its own message. """
        reader = _Reader(data)
        magic, version, count = reader.unpack(_HEADER, 'header')
        if magic != MAGIC:
            raise WeightFileError('bad magic {!r}, not a TIMW weight file'
                                  .format(magic))
        if version != VERSION:
            raise WeightFileError('unsupported TIMW version {}, expected {}'
                                  .format(version, VERSION))
        wf = cls()
        for i in range(count):
            (length,) = reader.unpack('<H', 'name length of tensor {}'.format(i))
            name = reader.take(length, 'name of tensor {}'.format(i))
            try:
                name = name.decode('utf-8')
            except UnicodeDecodeError:
                raise WeightFileError('name of tensor {} is not UTF-8'.format(i))
            (rank,) = reader.unpack('<B', 'rank of {}'.format(name))
            shape = reader.unpack('<{}I'.format(rank), 'shape of {}'.format(name))
            (tag,) = reader.unpack('<B', 'dtype of {}'.format(name))
            if tag not in _DTYPES:
                raise WeightFileError('{}: unknown dtype tag {}'.format(
                    name, tag))
            dtype = _DTYPES[tag]
            size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            raw = reader.take(size, 'data of {}'.format(name))
            array = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
            if name in wf:
                raise WeightFileError('duplicate tensor name {!r}'.format(name))
            wf.add(name, array)
        if reader.remaining:
            raise WeightFileError('{} trailing bytes after {} tensors'.format(
                reader.remaining, count))
        return wf

    def save(self, path):
        with open(path, 'wb') as fh:
            fh.write(self.tobytes())

    @classmethod
    def load(cls, path):
        with open(path, 'rb') as fh:
            return cls.frombytes(fh.read())


class _Reader(object):

    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    @property
    def remaining(self):
        return len(self.data) - self.pos

    def take(self, n, what):
        if n > self.remaining:
            raise WeightFileError('truncated file: {} needs {} bytes, {} left'
                                  .format(what, n, self.remaining))
        chunk = self.data[self.pos:self.pos + n].tobytes()
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        if not isinstance(fmt, struct.Struct):
            fmt = struct.Struct(fmt)
        return fmt.unpack(self.take(fmt.size, what))


def save_weights(model, path):
    """ Write every parameter and buffer of *model*. """
    WeightFile(model.state_dict()).save(path)


def load_weights(path):
    """ The arrays of a weight file, as an ordered mapping. """
    return collections.OrderedDict(WeightFile.load(path).items())


def load_into(model, path):
    """ Restore *model* from a file written for the same architecture. """
    state = load_weights(path)
    try:
        loaded, fresh = model.load_state(state)
    except ShapeError as err:
        raise WeightFileError(str(err))
    if fresh:
        raise WeightFileError('{} lacks tensor(s): {}'.format(
            path, ', '.join(fresh)))
    extra = set(state) - set(loaded)
    if extra:
        logging.warning('%s: ignored %d unused tensor(s)', path, len(extra))
    return model


def load_extractor(model, path):
    """ Copy the feature extractor of a matching network (or of another
    downstream model) stored at *path* into a `DownstreamModel`.
    """
    try:
        return model.load_pretrained(load_weights(path))
    except ShapeError as err:
        raise WeightFileError(str(err))
