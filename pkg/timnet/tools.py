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

import csv
import hashlib
import math
import os

import numpy as np
from PIL import Image

from ._field import Undefined


def int2(s, default=0):
    """ Convert *s* to an int, returning *default* if it cannot be converted.

    >>> int2('33', 42)
    33
    >>> int2('cannot convert this', 42)
    42
    >>> print(int2('3.5', None))
    None
    """
    try:
        return int(s)
    except (ValueError, TypeError):
        return default


def round_half_up(x):
    """ Round to the nearest integer, halves going up.

    >>> round_half_up(2.5), round_half_up(0.5), round_half_up(1.49)
    (3, 1, 1)
    """
    return int(math.floor(x + 0.5))


def gray_levels(values):
    """ Intensities in [0, 1] as 0..255 levels, halves rounding up.

    >>> gray_levels([0.0, 0.25, 0.5, 1.0, 1.5]).tolist()
    [0, 64, 128, 255, 255]
    """
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(255 * values + 0.5).astype(np.uint8)


def derive_seed(*parts):
    """ A 32-bit seed determined by the text of *parts*.

    Floats are written with `repr`, so ``0.05`` and ``0.050000001`` give
    different seeds and the result does not depend on the Python process.

    >>> derive_seed(0, 0.05, 1, 'scratch') == derive_seed(0, 0.05, 1, 'scratch')
    True
    """
    text = '|'.join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode('utf-8')).digest()
    return int.from_bytes(digest[:4], 'little')


def format_value(value):
    """ Text of a CSV cell; undefined values are written as ``nan``. """
    if value is Undefined or value is None:
        return 'nan'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    """ Write a header line and rows; every row must match the header. """
    header = list(header)
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            row = list(row)
            if len(row) != len(header):
                raise ValueError('row of {} values for {} columns'.format(
                    len(row), len(header)))
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """ Read a file written by `write_csv`.

    Returns the header and a list of rows, each a dict of column to text.
    A row whose length differs from the header is an error naming its line.
    """
    with open(path, newline='', encoding='utf-8') as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError('{}: empty file, expected a header'.format(path))
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise ValueError('{}:{}: {} values for {} columns'.format(
                    path, reader.line_num, len(row), len(header)))
            rows.append(dict(zip(header, row)))
    return header, rows


def batches(order, size):
    """ Split *order* into consecutive batches of *size* positions.

    A final batch of one is folded into the one before it, so every
    training step normalizes over at least two examples.  Only the last
    batch is adjusted; with *size* 1 that leaves a final batch of two.

    >>> [list(b) for b in batches(range(5), 2)]
    [[0, 1], [2, 3, 4]]
    >>> [list(b) for b in batches(range(3), 1)]
    [[0], [1, 2]]
    >>> [list(b) for b in batches([7], 4)]
    [[7]]
    """
    if size < 1:
        raise ValueError('batch size must be positive, got {}'.format(size))
    order = list(order)
    chunks = [order[i:i + size] for i in range(0, len(order), size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2].extend(chunks.pop())
    return chunks


def write_pgm(path, pixels):
    """ Write an H x W array of 0..255 values as a binary (P5) PGM file. """
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError('expected an H x W array, got shape {}'.format(
            pixels.shape))
    if pixels.min(initial=0) < 0 or pixels.max(initial=0) > 255:
        raise ValueError('pixel values must be within 0..255')
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    Image.fromarray(pixels.astype(np.uint8)).save(path, format='PPM')


def read_pgm(path):
    """ Read an 8-bit grayscale PGM file into an H x W uint8 array. """
    try:
        with Image.open(path) as img:
            if img.format != 'PPM' or img.mode != 'L':
                raise ValueError('{}: not an 8-bit grayscale PGM image'
                                 .format(path))
            return np.array(img, dtype=np.uint8)
    except (OSError, SyntaxError) as err:
        raise ValueError('{}: unreadable image: {}'.format(path, err))
