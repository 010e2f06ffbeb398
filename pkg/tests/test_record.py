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

import pickle

import numpy as np
import pytest

from timnet import Record, Dataset, Field, NotSet, Undefined


def test_sentinels_falsy():
    'NotSet and Undefined are false.'
    assert not NotSet
    assert not Undefined


def test_sentinels_pickle():
    'Sentinels unpickle to the same object.'
    assert pickle.loads(pickle.dumps(NotSet)) is NotSet
    assert pickle.loads(pickle.dumps(Undefined)) is Undefined


def test_field_kwargs():
    'Field options are kept.'
    f = Field(index=True, default=1, readonly=True, kind=int)
    assert f.index
    assert f.default == 1
    assert f.readonly
    assert f.kind is int


class Item(Record):
    oid = Field(index=True, kind=int)
    name = Field(index=True)
    size = Field(default=1.0, kind=float)
    tags = Field(default=[])

    def validate(self):
        assert self.size >= 0, 'size must not be negative'


class Frozen(Record):
    key = Field(readonly=True)


class Derived(Item):
    extra = Field(default='x')


class TestRecord(object):

    def test_init_empty(self):
        'Fields without a default start as NotSet.'
        r = Item()
        assert r.oid is NotSet
        assert r.name is NotSet
        assert r.size == 1.0

    def test_init_kwargs(self):
        'Keyword arguments set fields and are coerced.'
        r = Item(oid='3', name='a', size=2)
        assert r.oid == 3
        assert isinstance(r.size, float)

    def test_init_bad_kwargs(self):
        'Unknown keywords raise AttributeError naming them.'
        with pytest.raises(AttributeError) as err:
            Item(bad='field')
        assert 'bad' in str(err.value)

    def test_coercion_error(self):
        'Values the kind rejects are a ValueError naming the field.'
        with pytest.raises(ValueError) as err:
            Item(oid='three')
        assert str(err.value).startswith('oid:')

    def test_validate_init(self):
        'A failed assertion in validate is a ValueError.'
        with pytest.raises(ValueError):
            Item(size=-1)

    def test_validate_rollback(self):
        'A rejected assignment leaves the old value.'
        r = Item(size=2)
        with pytest.raises(ValueError):
            r.size = -5
        assert r.size == 2.0

    def test_readonly(self):
        'Readonly fields can be set once.'
        r = Frozen()
        r.key = 4
        with pytest.raises(TypeError):
            r.key = 5
        assert Frozen(key=1).key == 1

    def test_mutable_default(self):
        'List defaults are not shared between records.'
        a, b = Item(), Item()
        a.tags.append('x')
        assert b.tags == []

    def test_inherited_fields(self):
        'Subclasses keep the fields of their bases, in order.'
        assert Derived.fields() == ['oid', 'name', 'size', 'tags', 'extra']
        with pytest.raises(ValueError):
            Derived(size=-1)

    def test_asdict_replace(self):
        'replace makes a new record with some values changed.'
        r = Item(oid=1, name='a')
        s = r.replace(name='b')
        assert s.name == 'b' and r.name == 'a'
        assert list(s.asdict()) == ['oid', 'name', 'size', 'tags']

    def test_repr_skips_arrays(self):
        'Array values are left out of the repr.'
        r = Item(oid=1, name=np.zeros(3))
        assert 'name' not in repr(r)
        assert 'oid=1' in repr(r)


class Items(Dataset):
    record_type = Item


class TestDataset(object):

    def setup_method(self):
        self.records = [Item(oid=oid, name=name)
                        for oid, name in enumerate('abacadb')]
        self.ds = Items(self.records)

    def test_len_iter(self):
        'A dataset holds its records in order.'
        assert len(self.ds) == 7
        assert list(self.ds) == self.records
        assert self.ds[2] is self.records[2]

    def test_contains(self):
        'Membership is by identity.'
        assert self.records[0] in self.ds
        assert Item(oid=0, name='a') not in self.ds

    def test_positions(self):
        'positions uses the indexes.'
        assert self.ds.positions(name='a') == [0, 2, 4]
        assert self.ds.positions(name='a', oid=2) == [2]
        assert self.ds.positions(name='z') == []

    def test_positions_unindexed(self):
        'Unindexed fields are matched by scanning.'
        self.records[3].size = 5.0
        assert self.ds.positions(size=5.0) == [3]

    def test_get_iter_contains(self):
        'get, iter and contains agree.'
        assert self.ds.get(name='b') == [self.records[1], self.records[6]]
        assert list(self.ds.iter(oid=5)) == [self.records[5]]
        assert self.ds.contains(name='d')
        assert not self.ds.contains(name='e')

    def test_keys(self):
        'keys lists the distinct indexed values.'
        assert self.ds.keys('name') == ['a', 'b', 'c', 'd']
        with pytest.raises(KeyError):
            self.ds.keys('size')

    def test_subset(self):
        'Subsets and slices are datasets of the same type.'
        sub = self.ds.subset([1, 4])
        assert isinstance(sub, Items)
        assert list(sub) == [self.records[1], self.records[4]]
        assert sub.positions(name='a') == [1]
        assert list(self.ds[5:]) == self.records[5:]

    def test_wrong_type(self):
        'Only records of the dataset type are accepted.'
        with pytest.raises(TypeError):
            self.ds.add(Frozen(key=1))

    def test_fields(self):
        assert list(self.ds.fields()) == ['oid', 'name', 'size', 'tags']
