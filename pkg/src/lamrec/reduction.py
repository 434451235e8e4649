"""Reduction: beta, record selection, merge, and integer addition.

``step`` contracts the leftmost-outermost redex.  Stuck terms such as
``{a = 1}.b`` are normal forms.  Evaluation is always bounded by fuel because
fixed points built with ``Y`` diverge under full normalization.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Optional

from .syntax import (
    App,
    IntLit,
    Lam,
    Merge,
    PrimPlus,
    Record,
    Sel,
    Term,
    alpha_eq,
    print_term,
    subst,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

DEFAULT_FUEL = 100_000

Path = tuple  # of int | str


@dataclass(frozen=True)
class RedexInfo:
    kind: str  # "beta" | "rsel" | "merge" | "delta"
    position: Path = ()

    def __str__(self) -> str:
        where = ".".join(str(p) for p in self.position) or "root"
        return f"{self.kind} @ {where}"


@dataclass(frozen=True)
class NormalForm:
    term: Term
    steps: int


@dataclass(frozen=True)
class FuelExhausted:
    term: Term
    steps: int


NormalizeResult = NormalForm | FuelExhausted


def merge_records(left: Record, right: Record) -> Record:
    """Right-biased merge of two record literals."""
    overridden = right.labels
    kept = tuple((a, m) for a, m in left.entries if a not in overridden)
    return Record(kept + right.entries)


def contract(t: Term) -> Optional[tuple[Term, str]]:
    """Contract ``t`` if it is itself a redex."""
    if isinstance(t, App):
        if isinstance(t.fn, Lam):
            return subst(t.fn.body, t.fn.binder, t.arg), "beta"
        if (
            isinstance(t.fn, App)
            and isinstance(t.fn.fn, PrimPlus)
            and isinstance(t.fn.arg, IntLit)
            and isinstance(t.arg, IntLit)
        ):
            return IntLit(t.fn.arg.value + t.arg.value), "delta"
        return None
    if isinstance(t, Sel) and isinstance(t.subject, Record):
        field = t.subject.get(t.label)
        return (field, "rsel") if field is not None else None
    if isinstance(t, Merge) and isinstance(t.left, Record):
        return merge_records(t.left, t.right), "merge"
    return None


def _children(t: Term):
    """(position, child, rebuild) triples in left-to-right order."""
    if isinstance(t, Lam):
        yield 0, t.body, lambda b: Lam(t.binder, b)
    elif isinstance(t, App):
        yield 0, t.fn, lambda f: App(f, t.arg)
        yield 1, t.arg, lambda a: App(t.fn, a)
    elif isinstance(t, Sel):
        yield 0, t.subject, lambda s: Sel(s, t.label)
    elif isinstance(t, Merge):
        yield 0, t.left, lambda l: Merge(l, t.right)
        for label, m in t.right.entries:
            yield label, m, _field_rebuilder(t.right, label, lambda r: Merge(t.left, r))
    elif isinstance(t, Record):
        for label, m in t.entries:
            yield label, m, _field_rebuilder(t, label, lambda r: r)


def _field_rebuilder(r: Record, label: str, wrap: Callable[[Record], Term]):
    def rebuild(m: Term) -> Term:
        return wrap(Record(tuple((a, m if a == label else n) for a, n in r.entries)))

    return rebuild


def step(t: Term) -> Optional[tuple[Term, RedexInfo]]:
    """Contract the leftmost-outermost redex; ``None`` for normal forms."""
    hit = contract(t)
    if hit is not None:
        return hit[0], RedexInfo(hit[1], ())
    for pos, child, rebuild in _children(t):
        found = step(child)
        if found is not None:
            new, info = found
            return rebuild(new), RedexInfo(info.kind, (pos,) + info.position)
    return None


def step_innermost(t: Term) -> Optional[tuple[Term, RedexInfo]]:
    """Contract the rightmost-innermost redex."""
    for pos, child, rebuild in reversed(list(_children(t))):
        found = step_innermost(child)
        if found is not None:
            new, info = found
            return rebuild(new), RedexInfo(info.kind, (pos,) + info.position)
    hit = contract(t)
    if hit is not None:
        return hit[0], RedexInfo(hit[1], ())
    return None


def format_trace_line(k: int, info: RedexInfo, t: Term) -> str:
    return f"step {k} [{info}]: {print_term(t)}"


def normalize(
    t: Term,
    fuel: int = DEFAULT_FUEL,
    *,
    strategy: Callable[[Term], Optional[tuple[Term, RedexInfo]]] = step,
    trace: Callable[[int, RedexInfo, Term], None] | None = None,
) -> NormalizeResult:
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    for k in range(fuel):
        found = strategy(t)
        if found is None:
            return NormalForm(t, k)
        t, info = found
        if trace is not None:
            trace(k + 1, info, t)
    if strategy(t) is None:
        return NormalForm(t, fuel)
    return FuelExhausted(t, fuel)


def reduction_sequence(t: Term, fuel: int) -> list[tuple[Term, RedexInfo | None]]:
    """The term followed by each leftmost-outermost reduct, at most ``fuel`` steps."""
    seq: list[tuple[Term, RedexInfo | None]] = [(t, None)]
    for _ in range(fuel):
        found = step(t)
        if found is None:
            break
        t, info = found
        seq.append((t, info))
    return seq


def head_step(t: Term) -> Optional[Term]:
    """One reduction step on the spine of ``t`` (weak head reduction)."""
    hit = contract(t)
    if hit is not None:
        return hit[0]
    if isinstance(t, App):
        fn = t.fn
        if isinstance(fn, App) and isinstance(fn.fn, PrimPlus):
            if not isinstance(fn.arg, IntLit):
                inner = head_step(fn.arg)
                return None if inner is None else App(App(fn.fn, inner), t.arg)
            inner = head_step(t.arg)
            return None if inner is None else App(fn, inner)
        inner = head_step(fn)
        return None if inner is None else App(inner, t.arg)
    if isinstance(t, Sel):
        if isinstance(t.subject, Record):
            return None
        inner = head_step(t.subject)
        return None if inner is None else Sel(inner, t.label)
    if isinstance(t, Merge):
        inner = head_step(t.left)
        return None if inner is None else Merge(inner, t.right)
    return None


def whnf(t: Term, fuel: int = DEFAULT_FUEL) -> NormalizeResult:
    for k in range(fuel):
        nxt = head_step(t)
        if nxt is None:
            return NormalForm(t, k)
        t = nxt
    return FuelExhausted(t, fuel) if head_step(t) is not None else NormalForm(t, fuel)


def whnf_record(t: Term, fuel: int = DEFAULT_FUEL) -> Optional[Record]:
    """Reduce on the spine until a record literal appears.

    Fields are left unevaluated.  Returns ``None`` on fuel exhaustion or when
    the weak head normal form is not a record.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    result = whnf(t, fuel)
    if isinstance(result, NormalForm) and isinstance(result.term, Record):
        return result.term
    return None


def convertible(s: Term, t: Term, fuel: int = DEFAULT_FUEL) -> Optional[bool]:
    """Compare normal forms up to alpha; ``None`` if either fails to normalize."""
    ns, nt = normalize(s, fuel), normalize(t, fuel)
    if isinstance(ns, NormalForm) and isinstance(nt, NormalForm):
        return alpha_eq(ns.term, nt.term)
    return None


def field_value(obj: Term, label: str, fuel: int = DEFAULT_FUEL) -> Optional[Term]:
    """Observe one field of an object: weak-head to a record, then normalize the field."""
    r = whnf_record(obj, fuel)
    if r is None or r.get(label) is None:
        return None
    result = normalize(r.get(label), fuel)
    return result.term if isinstance(result, NormalForm) else None
