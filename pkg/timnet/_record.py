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
import functools

import numpy as np

from ._field import Field


class RecordMeta(type):
    """ Metaclass for all records.

    Collects the `Field` attributes of the class and its bases, in
    definition order, into ``cls._fields``.
    """

    def __new__(mcs, name, bases, cdict):
        cls = type.__new__(mcs, name, bases, cdict)
        fields = collections.OrderedDict()
        for base in reversed(cls.__mro__[1:]):
            fields.update(getattr(base, '_fields', {}))
        for fname, value in cdict.items():
            if isinstance(value, Field):
                value.name = fname
                fields[fname] = value
        cls._fields = fields
        return cls

    def fields(cls):
        """ Return a list of field names in the record type. """
        return list(cls._fields)


class Record(metaclass=RecordMeta):
    """ Each instance of a Record subclass is one validated data item.

    This class should be inherited from to define the fields of the record.
    It may also optionally provide a `validate` method, which is called
    after construction and after every assignment to a field.  Assertion
    failures in `validate` are raised as `ValueError`, and a failed
    assignment leaves the previous value in place.
    """

    def __init__(self, **kwargs):
        badkw = set(kwargs) - set(self._fields)
        if badkw:
            raise AttributeError('Unknown field(s) for {}: {}'.format(
                type(self).__name__, ', '.join(sorted(badkw))))
        for name, field in self._fields.items():
            value = kwargs[name] if name in kwargs else field.initial()
            try:
                field.force(self, value)
            except (TypeError, ValueError) as err:
                raise ValueError('{}: {}'.format(name, err))
        self._check()

    def __setattr__(self, attr, value):
        field = self._fields.get(attr)
        if field is None:
            super(Record, self).__setattr__(attr, value)
            return
        if self.__dict__.get('_validating'):
            # validate() may adjust values
            field.force(self, value)
            return
        oldvalue = field.__get__(self, type(self))
        try:
            field.__set__(self, value)
        except ValueError as err:
            raise ValueError('{}: {}'.format(attr, err))
        try:
            self._check()
        except Exception:
            self.__dict__[attr] = oldvalue
            raise

    def _check(self):
        self.__dict__['_validating'] = True
        try:
            self.validate()
        except AssertionError as err:
            raise ValueError(*err.args)
        finally:
            self.__dict__['_validating'] = False

    def __repr__(self):
        values = ', '.join('{}={!r}'.format(name, getattr(self, name))
                           for name in self._fields
                           if not isinstance(getattr(self, name), np.ndarray))
        return '{}({})'.format(type(self).__name__, values)

    def validate(self):
        """ Raise an exception if the record contains invalid data.

        This is usually re-implemented in subclasses, and checks that all
        data in the record is valid.  If not, an exception should be raised.
        Values may also be changed in the method.
        """
        return

    def asdict(self):
        """ Return an ordered mapping of field names to values. """
        return collections.OrderedDict(
            (name, getattr(self, name)) for name in self._fields)

    def replace(self, **kwargs):
        """ Return a new record with some values replaced. """
        values = self.asdict()
        values.update(kwargs)
        return type(self)(**values)


def _equal(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b


class Dataset(object):
    """ An ordered collection of records of one type.

    Datasets support a limited sequence-like interface, but support rapid
    lookup through indexes on the fields of `record_type` declared with
    ``index=True``.  Indexes map a field value to record positions, so
    indexed fields should not change after a record is added.

    >>> class Scan(Record):
    ...     label = Field(index=True, readonly=True)
    >>> scans = Dataset([Scan(label=0), Scan(label=1), Scan(label=1)])
    >>> scans.positions(label=1)
    [1, 2]
    """

    record_type = Record

    def __init__(self, records=()):
        self._records = []
        self._indexes = dict(
            (name, collections.defaultdict(list))
            for name, field in self.record_type._fields.items()
            if field.index)
        for record in records:
            self.add(record)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __contains__(self, record):
        return any(r is record for r in self._records)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return self.subset(range(len(self))[key])
        return self._records[key]

    def __repr__(self):
        return '<{} of {} record(s)>'.format(type(self).__name__, len(self))

    def add(self, record):
        """ Append a record and index it. """
        if not isinstance(record, self.record_type):
            raise TypeError('{} holds {} records, not {}'.format(
                type(self).__name__, self.record_type.__name__,
                type(record).__name__))
        position = len(self._records)
        self._records.append(record)
        for name, index in self._indexes.items():
            index[getattr(record, name)].append(position)
        return record

    def positions(self, **kwargs):
        """ Return the sorted positions of records matching *kwargs*. """
        keys = set(kwargs) & set(self._indexes)
        if keys:
            f = lambda a, b: a & b
            matches = functools.reduce(
                f, (set(self._indexes[key].get(kwargs[key], ()))
                    for key in keys))
            matches = sorted(matches)
        else:
            matches = range(len(self._records))
        return [p for p in matches
                if all(_equal(getattr(self._records[p], k), v)
                       for k, v in kwargs.items())]

    def iter(self, **kwargs):
        """ A generator which iterates over records matching kwargs."""
        for position in self.positions(**kwargs):
            yield self._records[position]

    def contains(self, **kwargs):
        """ Return `True` if the dataset has any records matching *kwargs*."""
        it = self.iter(**kwargs)
        try:
            next(it)
        except StopIteration:
            return False
        return True

    def get(self, **kwargs):
        """ Return a list of all records matching *kwargs*, in order."""
        return list(self.iter(**kwargs))

    def keys(self, name):
        """ Return the sorted distinct values of the indexed field *name*. """
        try:
            index = self._indexes[name]
        except KeyError:
            raise KeyError('{} is not indexed'.format(name))
        return sorted(value for value, positions in index.items() if positions)

    def subset(self, positions):
        """ Return a dataset of the same type holding the given positions. """
        return type(self)(self._records[p] for p in positions)

    def fields(self):
        """ Return an iterator over field names of the records. """
        return iter(self.record_type.fields())
