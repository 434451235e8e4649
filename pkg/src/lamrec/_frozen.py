"""Immutable tree nodes compared through interned structural ids.

Each node gets, on first use, a small integer that identifies its structure.
Equal trees get equal ids, so equality and hashing cost O(1) after the id
has been computed once per object.
"""

from dataclasses import dataclass
from threading import Lock

_ids: dict = {}
_lock = Lock()


def _key(v):
    if hasattr(type(v), "_fields"):
        return ("#", structural_id(v))
    if isinstance(v, tuple):
        return tuple(_key(x) for x in v)
    if isinstance(v, frozenset):
        return frozenset(_key(x) for x in v)
    return v


def structural_id(obj) -> int:
    try:
        return obj.__dict__["_sid"]
    except KeyError:
        pass
    key = (type(obj).__name__,) + tuple(_key(getattr(obj, n)) for n in obj._fields)
    with _lock:
        sid = _ids.setdefault(key, len(_ids))
    object.__setattr__(obj, "_sid", sid)
    return sid


def node(cls):
    cls = dataclass(frozen=True)(cls)
    cls._fields = tuple(cls.__dataclass_fields__)

    def __hash__(self):
        return structural_id(self)

    def __eq__(self, other):
        if self is other:
            return True
        if other.__class__ is not self.__class__:
            return False
        return structural_id(self) == structural_id(other)

    def __ne__(self, other):
        return not __eq__(self, other)

    cls.__hash__ = __hash__
    cls.__eq__ = __eq__
    cls.__ne__ = __ne__
    return cls
