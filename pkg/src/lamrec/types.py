"""Intersection types, their path normal form, and the subtype decider.

A type is normalized into a finite set of *paths*: atoms, arrows whose
codomain is a single path, and record fields whose body is a single path (or
the universal type).  Intersections are flattened, arrow and field codomains
are split, and conjuncts equal to the universal type are dropped.  The empty
path set is the universal type ``w``.

``s <= t`` holds iff every path of ``t`` is covered by ``s``:

* an atom is covered if it occurs among the paths of ``s``;
* ``{a : w}`` is covered if ``s`` has some path for field ``a``;
* ``{a : p}`` is covered if the bodies of the ``a``-paths of ``s`` cover ``p``;
* ``d -> p`` is covered if the codomains of those arrow paths of ``s`` whose
  domain is above ``d`` cover ``p``.

Fields and arrows are never related except through ``w``.  ``{a : w}`` is
not the universal type.

Concrete syntax::

    w                  universal type
    Int, Unit, Even    type constants (capitalized)
    a, b               type variables (lowercase)
    t -> u             arrow, right associative
    t & u              intersection, binds tighter than ->
    {a : t, b : u}     sugar for {a : t} & {b : u}
    t * u              product, sugar for {fst : t, snd : u}
"""

from __future__ import annotations

import re
from functools import lru_cache, reduce
from typing import Iterable, Optional

from ._frozen import node
from .syntax import ParseError


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        return print_type(self)


@node
class TVar(Type):
    name: str


@node
class TConst(Type):
    name: str


@node
class Omega(Type):
    pass


@node
class Arrow(Type):
    dom: Type
    cod: Type


@node
class Inter(Type):
    left: Type
    right: Type


@node
class Field(Type):
    label: str
    body: Type


OMEGA = Omega()
INT = TConst("Int")
UNIT_T = TConst("Unit")


def inter(*types: Type) -> Type:
    """Left-nested intersection; ``w`` for no arguments."""
    if not types:
        return OMEGA
    return reduce(Inter, types)


def record_type(*fields: tuple[str, Type], **named: Type) -> Type:
    items = list(fields) + list(named.items())
    if not items:
        raise ValueError("record type needs at least one field")
    return inter(*(Field(a, t) for a, t in items))


def product(first: Type, second: Type) -> Type:
    return Inter(Field("fst", first), Field("snd", second))


def arrows(*types: Type) -> Type:
    """``arrows(a, b, c)`` is ``a -> b -> c``."""
    *doms, cod = types
    for d in reversed(doms):
        cod = Arrow(d, cod)
    return cod


def conjuncts(t: Type) -> list[Type]:
    if isinstance(t, Inter):
        return conjuncts(t.left) + conjuncts(t.right)
    return [t]


# ---------------------------------------------------------------------------
# path normal form


class Path:
    __slots__ = ()

    def __str__(self) -> str:
        return print_type(path_type(self))


@node
class Atom(Path):
    name: str
    variable: bool = False


@node
class ArrowP(Path):
    dom: frozenset
    cod: Path


@node
class FieldP(Path):
    label: str
    cod: Optional[Path]  # None: the field body is the universal type


TypeNF = frozenset  # of Path


@lru_cache(maxsize=None)
def normalize_type(t: Type) -> TypeNF:
    if isinstance(t, Omega):
        return frozenset()
    if isinstance(t, TConst):
        return frozenset((Atom(t.name),))
    if isinstance(t, TVar):
        return frozenset((Atom(t.name, True),))
    if isinstance(t, Inter):
        return normalize_type(t.left) | normalize_type(t.right)
    if isinstance(t, Arrow):
        dom = normalize_type(t.dom)
        return frozenset(ArrowP(dom, p) for p in normalize_type(t.cod))
    if isinstance(t, Field):
        body = normalize_type(t.body)
        if not body:
            return frozenset((FieldP(t.label, None),))
        return frozenset(FieldP(t.label, p) for p in body)
    raise TypeError(f"not a type: {t!r}")


@lru_cache(maxsize=None)
def path_type(p: Path) -> Type:
    if isinstance(p, Atom):
        return TVar(p.name) if p.variable else TConst(p.name)
    if isinstance(p, ArrowP):
        return Arrow(nf_type(p.dom), path_type(p.cod))
    if isinstance(p, FieldP):
        return Field(p.label, OMEGA if p.cod is None else path_type(p.cod))
    raise TypeError(f"not a path: {p!r}")


def nf_type(paths: Iterable[Path]) -> Type:
    """Rebuild a type from a path set, in a deterministic order."""
    return _nf_type(frozenset(paths))


@lru_cache(maxsize=None)
def _nf_type(paths: frozenset) -> Type:
    return inter(*sorted((path_type(p) for p in paths), key=print_type))


def is_omega_equiv(t: Type) -> bool:
    if isinstance(t, Omega):
        return True
    if isinstance(t, Arrow):
        return is_omega_equiv(t.cod)
    if isinstance(t, Inter):
        return is_omega_equiv(t.left) and is_omega_equiv(t.right)
    return False


@lru_cache(maxsize=None)
def nf_subtype(s: TypeNF, t: TypeNF) -> bool:
    return all(path_subtype(s, p) for p in t)


@lru_cache(maxsize=None)
def path_subtype(s: TypeNF, p: Path) -> bool:
    if isinstance(p, Atom):
        return p in s
    if isinstance(p, FieldP):
        bodies = [q.cod for q in s if isinstance(q, FieldP) and q.label == p.label]
        if p.cod is None:
            return bool(bodies)
        return path_subtype(frozenset(b for b in bodies if b is not None), p.cod)
    if isinstance(p, ArrowP):
        cods = frozenset(
            q.cod for q in s if isinstance(q, ArrowP) and nf_subtype(p.dom, q.dom)
        )
        return path_subtype(cods, p.cod)
    raise TypeError(f"not a path: {p!r}")


def subtype(s: Type, t: Type) -> bool:
    """Decide ``s <= t``."""
    return nf_subtype(normalize_type(s), normalize_type(t))


def type_eq(s: Type, t: Type) -> bool:
    return subtype(s, t) and subtype(t, s)


def clear_caches() -> None:
    normalize_type.cache_clear()
    path_type.cache_clear()
    _nf_type.cache_clear()
    print_type.cache_clear()
    _print.cache_clear()
    nf_subtype.cache_clear()
    path_subtype.cache_clear()


# ---------------------------------------------------------------------------
# printing


def _field_chain(t: Type) -> Optional[list[Field]]:
    """The fields of an intersection made only of field types, in order."""
    if isinstance(t, Field):
        return [t]
    if isinstance(t, Inter):
        left = _field_chain(t.left)
        right = _field_chain(t.right) if left is not None else None
        if right is not None:
            return left + right
    return None


@lru_cache(maxsize=None)
def print_type(t: Type) -> str:
    return _print(t, 0)


@lru_cache(maxsize=None)
def _print(t: Type, level: int) -> str:
    # levels: 0 arrow, 1 intersection (left operand), 2 atom
    chain = _field_chain(t)
    if chain is not None:
        return "{" + ", ".join(f"{f.label} : {_print(f.body, 0)}" for f in chain) + "}"
    if isinstance(t, Omega):
        return "w"
    if isinstance(t, (TConst, TVar)):
        return t.name
    if isinstance(t, Arrow):
        text = f"{_print(t.dom, 1)} -> {_print(t.cod, 0)}"
        return f"({text})" if level > 0 else text
    if isinstance(t, Inter):
        text = f"{_print(t.left, 1)} & {_print(t.right, 2)}"
        return f"({text})" if level > 1 else text
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*|ω)|(?P<op>->|→|&|∩|\*|×|\(|\)|\{|\}|,|:)"
)
_CANON = {"→": "->", "∩": "&", "×": "*", "ω": "w"}


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r} in type", pos)
        if m.lastgroup != "ws":
            text = _CANON.get(m.group(), m.group())
            tokens.append((m.lastgroup, text, pos))
        pos = m.end()
    tokens.append(("eof", "", len(source)))
    return tokens


class _TypeParser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def at(self, text):
        return self.tok[0] == "op" and self.tok[1] == text

    def expect(self, text):
        if not self.at(text):
            raise ParseError(f"expected {text!r} in type, found {self.tok[1] or 'end'!r}", self.tok[2])
        self.i += 1

    def arrow(self) -> Type:
        dom = self.inter()
        if self.at("->"):
            self.i += 1
            return Arrow(dom, self.arrow())
        return dom

    def inter(self) -> Type:
        t = self.prod()
        while self.at("&"):
            self.i += 1
            t = Inter(t, self.prod())
        return t

    def prod(self) -> Type:
        t = self.atom()
        while self.at("*"):
            self.i += 1
            t = product(t, self.atom())
        return t

    def atom(self) -> Type:
        kind, text, pos = self.tok
        if kind == "ident":
            self.i += 1
            if text == "w":
                return OMEGA
            return TConst(text) if text[0].isupper() else TVar(text)
        if self.at("("):
            self.i += 1
            t = self.arrow()
            self.expect(")")
            return t
        if self.at("{"):
            self.i += 1
            fields = []
            while True:
                kind, label, pos = self.tok
                if kind != "ident":
                    raise ParseError("expected a field label in record type", pos)
                self.i += 1
                self.expect(":")
                fields.append((label, self.arrow()))
                if not self.at(","):
                    break
                self.i += 1
            self.expect("}")
            return record_type(*fields)
        raise ParseError(f"expected a type, found {text or 'end'!r}", pos)


def parse_type(source: str) -> Type:
    p = _TypeParser(source)
    t = p.arrow()
    if p.tok[0] != "eof":
        raise ParseError(f"unexpected {p.tok[1]!r} in type", p.tok[2])
    return t
