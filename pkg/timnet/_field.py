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

import copy


class _Sentinel(object):
    """ A named, falsy singleton which pickles back to itself. """

    def __init__(self, name):
        self._name = name

    def __bool__(self):
        return False

    def __repr__(self):
        return self._name

    def __reduce__(self):
        return self._name


# Sentinel indicating that the field value has not yet been set.
NotSet = _Sentinel('NotSet')

# Sentinel for a quantity which exists but has no defined value, such as
# the precision of a classifier which never predicts the positive class.
Undefined = _Sentinel('Undefined')


class Field(object):
    """ A `Field` is used in records to define attributes of data.

    When a record type is created, fields are identified by using a `Field`
    object:

    >>> from timnet import Record
    >>> class Finding(Record):
    ...     kind = Field()
    ...     severity = Field(default='mild')

    `Field` objects support *get* and *set* operations, similar to
    *properties*, but also provide additional options.  They are intended
    for use with `Record` subclasses.

    Field options are set as keyword arguments when it is initialised

    ========== ============ ===================================================
    Keyword    Default      Description
    ========== ============ ===================================================
    default    `NotSet`     Value used when the record is created without
                            one.  Mutable defaults (lists, dicts) are copied
                            for every record.
    readonly   False        Prohibits setting the value once it is set.
    index      False        True if a `Dataset` of these records should keep
                            an index on the field.  Indexed values must be
                            hashable.
    kind       None         A callable used to coerce assigned values, e.g.
                            ``int`` or ``float``.  `NotSet` is never coerced.
    ========== ============ ===================================================

    Note that *index* is a dataset-level control, and is not used by `Field`
    directly.
    """

    def __init__(self, default=NotSet, readonly=False, index=False, kind=None):
        self.default = default
        self.readonly = readonly
        self.index = index
        self.kind = kind
        self.name = None

    def __set_name__(self, owner, name):
        self.name = name

    def __get__(self, instance, owner):
        if instance is None:
            return self
        try:
            return instance.__dict__[self.name]
        except KeyError:
            return self.default

    def __set__(self, instance, value):
        """ Set a value for an instance."""
        if (self.readonly and
                self.__get__(instance, type(instance)) is not NotSet):
            raise TypeError('Field {} is read only'.format(self.name))
        self.force(instance, value)

    def force(self, instance, value):
        """ Set a value, ignoring *readonly*.  Used while building records. """
        if value is not NotSet and self.kind is not None:
            value = self.kind(value)
        instance.__dict__[self.name] = value

    def initial(self):
        """ The value a new record starts with. """
        if isinstance(self.default, (list, dict, set)):
            return copy.deepcopy(self.default)
        return self.default
