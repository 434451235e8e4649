"""Abstract syntax, concrete syntax and substitution for the record calculus.

Terms are immutable trees.  The right operand of a merge is always a record
literal; anything else is rejected at construction time, so an expression
like ``R ++ x`` cannot be built or parsed.

Concrete syntax::

    \\x. M              abstraction (body extends as far right as possible)
    M N                application, left associative
    {a = M, b = N}     record literal
    M.a                field selection
    M ++ {a = N}       merge, right operand must be a record literal
    M + N              integer addition
    3, (), (+)         integer literal, unit, the addition constant
    (M, N)             pair, sugar for {fst = M, snd = N}
    let x = M in N     sugar for (\\x. N) M
    let (x, y) = M in N
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Mapping

from ._frozen import node as _node


class LamRecError(Exception):
    """Base class for errors raised by this package."""


class ParseError(LamRecError):
    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class MergeOperandError(ParseError):
    """Right operand of ``++`` is not a record literal."""


class DuplicateLabelError(LamRecError):
    pass


class RecursiveLetError(LamRecError):
    pass


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return print_term(self)


@_node
class Var(Term):
    name: str


@_node
class Lam(Term):
    binder: str
    body: Term


@_node
class App(Term):
    fn: Term
    arg: Term


@_node
class Record(Term):
    """Record literal; entry order is kept for printing only."""

    entries: tuple[tuple[str, Term], ...]

    def __post_init__(self):
        entries = tuple((str(a), m) for a, m in self.entries)
        object.__setattr__(self, "entries", entries)
        seen = set()
        for label, _ in entries:
            if label in seen:
                raise DuplicateLabelError(f"duplicate label {label!r} in record literal")
            seen.add(label)

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(a for a, _ in self.entries)

    def get(self, label: str) -> Term | None:
        for a, m in self.entries:
            if a == label:
                return m
        return None


@_node
class Sel(Term):
    subject: Term
    label: str


@_node
class Merge(Term):
    left: Term
    right: Record

    def __post_init__(self):
        if not isinstance(self.right, Record):
            raise MergeOperandError(
                "right operand of a merge must be a record literal, got "
                f"{type(self.right).__name__}"
            )


@_node
class IntLit(Term):
    value: int


@_node
class UnitLit(Term):
    pass


@_node
class PrimPlus(Term):
    pass


@_node
class Let(Term):
    """``let name = bound in body``; removed by :func:`desugar_let`."""

    name: str
    bound: Term
    body: Term


@_node
class LetPair(Term):
    first: str
    second: str
    bound: Term
    body: Term


UNIT = UnitLit()
PLUS = PrimPlus()


def record(*entries: tuple[str, Term], **fields: Term) -> Record:
    return Record(tuple(entries) + tuple(fields.items()))


def pair(first: Term, second: Term) -> Record:
    return Record((("fst", first), ("snd", second)))


def plus(left: Term, right: Term) -> Term:
    return App(App(PLUS, left), right)


def apply(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def lams(binders: Iterable[str], body: Term) -> Term:
    for x in reversed(list(binders)):
        body = Lam(x, body)
    return body


# ---------------------------------------------------------------------------
# free variables, labels, substitution


def free_vars(t: Term) -> frozenset[str]:
    cached = t.__dict__.get("_fv")
    if cached is not None:
        return cached
    if isinstance(t, Var):
        fv = frozenset((t.name,))
    elif isinstance(t, Lam):
        fv = free_vars(t.body) - {t.binder}
    elif isinstance(t, App):
        fv = free_vars(t.fn) | free_vars(t.arg)
    elif isinstance(t, Record):
        fv = frozenset().union(*(free_vars(m) for _, m in t.entries))
    elif isinstance(t, Sel):
        fv = free_vars(t.subject)
    elif isinstance(t, Merge):
        fv = free_vars(t.left) | free_vars(t.right)
    elif isinstance(t, Let):
        fv = free_vars(t.bound) | (free_vars(t.body) - {t.name})
    elif isinstance(t, LetPair):
        fv = free_vars(t.bound) | (free_vars(t.body) - {t.first, t.second})
    else:
        fv = frozenset()
    object.__setattr__(t, "_fv", fv)
    return fv


def labels(r: Record) -> frozenset[str]:
    return r.labels


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def _rename_binder(binder: str, body: Term, avoid: set[str]) -> tuple[str, Term]:
    new = fresh_name(binder, avoid | free_vars(body))
    return new, subst(body, binder, Var(new))


def subst(body: Term, var: str, replacement: Term) -> Term:
    """Capture-avoiding substitution ``body[replacement/var]``."""
    if var not in free_vars(body):
        return body
    if isinstance(body, Var):
        return replacement
    if isinstance(body, Lam):
        x, b = body.binder, body.body
        if x in free_vars(replacement):
            x, b = _rename_binder(x, b, set(free_vars(replacement)) | {var})
        return Lam(x, subst(b, var, replacement))
    if isinstance(body, App):
        return App(subst(body.fn, var, replacement), subst(body.arg, var, replacement))
    if isinstance(body, Record):
        return Record(tuple((a, subst(m, var, replacement)) for a, m in body.entries))
    if isinstance(body, Sel):
        return Sel(subst(body.subject, var, replacement), body.label)
    if isinstance(body, Merge):
        return Merge(subst(body.left, var, replacement), subst(body.right, var, replacement))
    if isinstance(body, Let):
        bound = subst(body.bound, var, replacement)
        x, b = body.name, body.body
        if x == var:
            return Let(x, bound, b)
        if x in free_vars(replacement):
            x, b = _rename_binder(x, b, set(free_vars(replacement)) | {var})
        return Let(x, bound, subst(b, var, replacement))
    if isinstance(body, LetPair):
        bound = subst(body.bound, var, replacement)
        x, y, b = body.first, body.second, body.body
        if var in (x, y):
            return LetPair(x, y, bound, b)
        fvr = set(free_vars(replacement)) | {var}
        if x in fvr:
            x, b = _rename_binder(x, b, fvr | {y})
        if y in fvr:
            y, b = _rename_binder(y, b, fvr | {x})
        return LetPair(x, y, bound, subst(b, var, replacement))
    return body


def substitute_all(t: Term, mapping: Mapping[str, Term]) -> Term:
    for name, value in mapping.items():
        t = subst(t, name, value)
    return t


def alpha_eq(s: Term, t: Term) -> bool:
    """Syntactic identity up to consistent renaming of bound variables."""

    def go(s, t, ls, rs, depth):
        if type(s) is not type(t):
            return False
        if isinstance(s, Var):
            a, b = ls.get(s.name), rs.get(t.name)
            if a is None and b is None:
                return s.name == t.name
            return a == b
        if isinstance(s, Lam):
            return go(s.body, t.body, {**ls, s.binder: depth}, {**rs, t.binder: depth}, depth + 1)
        if isinstance(s, App):
            return go(s.fn, t.fn, ls, rs, depth) and go(s.arg, t.arg, ls, rs, depth)
        if isinstance(s, Record):
            if len(s.entries) != len(t.entries) or s.labels != t.labels:
                return False
            return all(go(m, t.get(a), ls, rs, depth) for a, m in s.entries)
        if isinstance(s, Sel):
            return s.label == t.label and go(s.subject, t.subject, ls, rs, depth)
        if isinstance(s, Merge):
            return go(s.left, t.left, ls, rs, depth) and go(s.right, t.right, ls, rs, depth)
        if isinstance(s, Let):
            return go(s.bound, t.bound, ls, rs, depth) and go(
                s.body, t.body, {**ls, s.name: depth}, {**rs, t.name: depth}, depth + 1
            )
        if isinstance(s, LetPair):
            return go(s.bound, t.bound, ls, rs, depth) and go(
                s.body,
                t.body,
                {**ls, s.first: depth, s.second: depth + 1},
                {**rs, t.first: depth, t.second: depth + 1},
                depth + 2,
            )
        return s == t

    return go(s, t, {}, {}, 0)


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, Lam):
            stack.append(u.body)
        elif isinstance(u, App):
            stack.extend((u.arg, u.fn))
        elif isinstance(u, Record):
            stack.extend(m for _, m in reversed(u.entries))
        elif isinstance(u, Sel):
            stack.append(u.subject)
        elif isinstance(u, Merge):
            stack.extend((u.right, u.left))
        elif isinstance(u, Let):
            stack.extend((u.body, u.bound))
        elif isinstance(u, LetPair):
            stack.extend((u.body, u.bound))


def has_sugar(t: Term) -> bool:
    return any(isinstance(u, (Let, LetPair)) for u in subterms(t))


def desugar_let(t: Term) -> Term:
    """Remove ``let`` forms.

    ``let x = M in N`` becomes ``(\\x. N) M`` and ``let (x, y) = M in N``
    becomes ``(\\p. (\\x. \\y. N) p.fst p.snd) M``.  Bindings are never
    recursive: a let whose name occurs free in its own right-hand side is
    rejected.
    """
    if isinstance(t, Let):
        if t.name in free_vars(t.bound):
            raise RecursiveLetError(f"let {t.name} refers to itself")
        return App(Lam(t.name, desugar_let(t.body)), desugar_let(t.bound))
    if isinstance(t, LetPair):
        if t.first == t.second:
            raise ParseError(f"pattern binds {t.first!r} twice")
        if {t.first, t.second} & free_vars(t.bound):
            raise RecursiveLetError(f"let ({t.first}, {t.second}) refers to itself")
        body = desugar_let(t.body)
        avoid = free_vars(body) | {t.first, t.second}
        p = "p" if "p" not in avoid else fresh_name("p", avoid)
        inner = apply(Lam(t.first, Lam(t.second, body)), Sel(Var(p), "fst"), Sel(Var(p), "snd"))
        return App(Lam(p, inner), desugar_let(t.bound))
    if isinstance(t, Lam):
        return Lam(t.binder, desugar_let(t.body))
    if isinstance(t, App):
        return App(desugar_let(t.fn), desugar_let(t.arg))
    if isinstance(t, Record):
        return Record(tuple((a, desugar_let(m)) for a, m in t.entries))
    if isinstance(t, Sel):
        return Sel(desugar_let(t.subject), t.label)
    if isinstance(t, Merge):
        return Merge(desugar_let(t.left), desugar_let(t.right))
    return t


# ---------------------------------------------------------------------------
# printing

_LAM, _SUM, _MERGE, _APP, _ATOM = range(5)


def _is_plus_app(t: Term) -> bool:
    return isinstance(t, App) and isinstance(t.fn, App) and isinstance(t.fn.fn, PrimPlus)


def print_term(t: Term) -> str:
    return _print(t, _LAM)


def _paren(text: str, needed: bool) -> str:
    return f"({text})" if needed else text


def _print(t: Term, level: int) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, UnitLit):
        return "()"
    if isinstance(t, PrimPlus):
        return "(+)"
    if isinstance(t, Record):
        inner = ", ".join(f"{a} = {_print(m, _LAM)}" for a, m in t.entries)
        return "{" + inner + "}"
    if isinstance(t, Lam):
        return _paren(f"\\{t.binder}. {_print(t.body, _LAM)}", level > _LAM)
    if isinstance(t, Let):
        text = f"let {t.name} = {_print(t.bound, _LAM)} in {_print(t.body, _LAM)}"
        return _paren(text, level > _LAM)
    if isinstance(t, LetPair):
        text = (
            f"let ({t.first}, {t.second}) = {_print(t.bound, _LAM)} "
            f"in {_print(t.body, _LAM)}"
        )
        return _paren(text, level > _LAM)
    if _is_plus_app(t):
        text = f"{_print(t.fn.arg, _SUM)} + {_print(t.arg, _MERGE)}"
        return _paren(text, level > _SUM)
    if isinstance(t, Merge):
        return _paren(f"{_print(t.left, _MERGE)} ++ {_print(t.right, _ATOM)}", level > _MERGE)
    if isinstance(t, App):
        return _paren(f"{_print(t.fn, _APP)} {_print(t.arg, _ATOM)}", level > _APP)
    if isinstance(t, Sel):
        return f"{_print(t.subject, _ATOM)}.{t.label}"
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\+\+|\\|λ|\.|\(|\)|\{|\}|,|=|\+)
    """,
    re.VERBOSE,
)

KEYWORDS = {"let", "in"}


def tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        text = m.group()
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        if kind == "op" and text == "λ":
            text = "\\"
        if kind != "ws":
            tokens.append((kind, text, pos))
        pos = m.end()
    tokens.append(("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, k: int = 1):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        kind, value, _ = self.tok
        return kind in ("op", "kw") and value == text

    def advance(self):
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text: str):
        if not self.at(text):
            kind, value, pos = self.tok
            raise ParseError(f"expected {text!r}, found {value or kind!r}", pos)
        return self.advance()

    def ident(self) -> str:
        kind, value, pos = self.tok
        if kind != "ident":
            raise ParseError(f"expected identifier, found {value or kind!r}", pos)
        self.advance()
        return value

    def term(self) -> Term:
        if self.at("\\"):
            self.advance()
            x = self.ident()
            self.expect(".")
            return Lam(x, self.term())
        if self.at("let"):
            self.advance()
            if self.at("("):
                self.advance()
                x = self.ident()
                self.expect(",")
                y = self.ident()
                self.expect(")")
                self.expect("=")
                bound = self.term()
                self.expect("in")
                return LetPair(x, y, bound, self.term())
            x = self.ident()
            self.expect("=")
            bound = self.term()
            self.expect("in")
            return Let(x, bound, self.term())
        return self.sum()

    def sum(self) -> Term:
        left = self.merge()
        while self.at("+"):
            self.advance()
            left = plus(left, self.merge())
        return left

    def merge(self) -> Term:
        left = self.app()
        while self.at("++"):
            _, _, pos = self.advance()
            if not self.at("{"):
                raise MergeOperandError(
                    "right operand of '++' must be a record literal", self.tok[2]
                )
            right = self.record()
            if self.at("."):
                raise MergeOperandError(
                    "right operand of '++' must be a record literal, not a selection", pos
                )
            left = Merge(left, right)
        return left

    def starts_atom(self) -> bool:
        kind, value, _ = self.tok
        return kind in ("ident", "int") or (kind == "op" and value in ("(", "{"))

    def app(self) -> Term:
        if not self.starts_atom():
            kind, value, pos = self.tok
            raise ParseError(f"expected a term, found {value or kind!r}", pos)
        fn = self.postfix()
        while self.starts_atom():
            fn = App(fn, self.postfix())
        return fn

    def postfix(self) -> Term:
        t = self.atom()
        while self.at(".") and self.peek()[0] == "ident":
            self.advance()
            t = Sel(t, self.ident())
        return t

    def record(self) -> Record:
        self.expect("{")
        entries = []
        if not self.at("}"):
            while True:
                _, _, pos = self.tok
                a = self.ident()
                self.expect("=")
                entries.append((a, self.term()))
                if any(b == a for b, _ in entries[:-1]):
                    raise DuplicateLabelError(f"duplicate label {a!r} (at offset {pos})")
                if not self.at(","):
                    break
                self.advance()
        self.expect("}")
        return Record(tuple(entries))

    def atom(self) -> Term:
        kind, value, pos = self.tok
        if kind == "ident":
            self.advance()
            return Var(value)
        if kind == "int":
            self.advance()
            return IntLit(int(value))
        if self.at("{"):
            return self.record()
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return UNIT
            if self.at("+") and self.peek()[1] == ")":
                self.advance()
                self.advance()
                return PLUS
            first = self.term()
            if self.at(","):
                self.advance()
                second = self.term()
                self.expect(")")
                return pair(first, second)
            self.expect(")")
            return first
        raise ParseError(f"expected a term, found {value or kind!r}", pos)


def parse_term(
    source: str, *, desugar: bool = True, defs: Mapping[str, Term] | None = None
) -> Term:
    """Parse concrete syntax into a term.

    ``let`` forms are desugared unless ``desugar=False``.  Free occurrences of
    names in ``defs`` are replaced by the given closed terms, which is how
    named combinators such as ``Y`` are spliced in.
    """
    p = _Parser(source)
    t = p.term()
    if p.tok[0] != "eof":
        kind, value, pos = p.tok
        raise ParseError(f"unexpected {value or kind!r}", pos)
    if desugar:
        t = desugar_let(t)
    if defs:
        t = substitute_all(t, {k: v for k, v in defs.items() if k in free_vars(t)})
    return t
