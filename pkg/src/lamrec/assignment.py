"""Type assignment: derivation trees, a verifier, a goal-directed checker,
and a brute-force typing oracle over a finite type universe.

Rules (``G`` a context)::

    Ax      x:s in G                        =>  G |- x : s
    ArrI    G, x:s |- M : t                 =>  G |- \\x.M : s -> t
    ArrE    G |- M : s -> t,  G |- N : s    =>  G |- M N : t
    Omega                                   =>  G |- M : w
    IntI    G |- M : s,  G |- M : t         =>  G |- M : s & t
    Sub     G |- M : s,  s <= t             =>  G |- M : t
    Sel     G |- M : {a : s}                =>  G |- M.a : s
    Rec     G |- M : s,  a = M in R         =>  G |- R : {a : s}
    MergeL  G |- M : {a : s},  a not in R   =>  G |- M ++ R : {a : s}
    MergeR  G |- R : {a : s}                =>  G |- M ++ R : {a : s}
    Lit     G |- n : Int,  G |- () : Unit
    PlusTy  G |- (+) : Int -> Int -> Int

The checker is sound but incomplete: application arguments are typed from
the function's own arrow types when its head is a variable, and otherwise
from a pool of candidate argument types supplied as hints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Iterable, Mapping, Optional

import numpy as np

from .reduction import RedexInfo, reduction_sequence, step
from .syntax import (
    App,
    IntLit,
    Lam,
    LamRecError,
    Merge,
    PrimPlus,
    Record,
    Sel,
    Term,
    UnitLit,
    Var,
    free_vars,
    parse_term,
    print_term,
    subterms,
)
from .types import (
    INT,
    OMEGA,
    UNIT_T,
    Arrow,
    ArrowP,
    Atom,
    Field,
    FieldP,
    Inter,
    Omega,
    Path,
    TConst,
    Type,
    arrows,
    nf_type,
    normalize_type,
    parse_type,
    nf_subtype,
    path_subtype,
    path_type,
    print_type,
    subtype,
)

RULES = (
    "Ax", "ArrI", "ArrE", "Omega", "IntI", "Sub",
    "Sel", "Rec", "MergeL", "MergeR", "Lit", "PlusTy",
)

PLUS_TYPE = arrows(INT, INT, INT)


class Context:
    """Immutable finite map from variables to types."""

    __slots__ = ("_items", "_hash")

    def __init__(self, bindings: Mapping[str, Type] | Iterable[tuple[str, Type]] = ()):
        items = dict(bindings)
        self._items = tuple(sorted(items.items()))
        self._hash = hash(self._items)

    def get(self, name: str) -> Optional[Type]:
        for x, t in self._items:
            if x == name:
                return t
        return None

    def __contains__(self, name: str) -> bool:
        return any(x == name for x, _ in self._items)

    def __getitem__(self, name: str) -> Type:
        t = self.get(name)
        if t is None:
            raise KeyError(name)
        return t

    def extend(self, name: str, ty: Type) -> "Context":
        return Context([(x, t) for x, t in self._items if x != name] + [(name, ty)])

    def names(self) -> frozenset[str]:
        return frozenset(x for x, _ in self._items)

    def items(self):
        return self._items

    def restrict(self, names: Iterable[str]) -> "Context":
        names = set(names)
        return Context([(x, t) for x, t in self._items if x in names])

    def __eq__(self, other) -> bool:
        return isinstance(other, Context) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __len__(self) -> int:
        return len(self._items)

    def __repr__(self) -> str:
        return f"Context({dict(self._items)!r})"

    def __str__(self) -> str:
        return ", ".join(f"{x} : {print_type(t)}" for x, t in self._items)


EMPTY = Context()


@dataclass(frozen=True)
class Judgment:
    ctx: Context
    term: Term
    type: Type

    def __str__(self) -> str:
        return f"{self.ctx} |- {print_term(self.term)} : {print_type(self.type)}".lstrip()


@dataclass(frozen=True, eq=False)
class Derivation:
    rule: str
    ctx: Context
    term: Term
    type: Type
    premises: tuple["Derivation", ...] = ()
    data: Mapping[str, str] = field(default_factory=dict)

    @property
    def conclusion(self) -> Judgment:
        return Judgment(self.ctx, self.term, self.type)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def rules_used(self) -> set[str]:
        out = {self.rule}
        for p in self.premises:
            out |= p.rules_used()
        return out


class VerificationError(LamRecError):
    def __init__(self, rule: str, message: str, path: tuple[int, ...]):
        where = ".".join(map(str, path)) or "root"
        super().__init__(f"{rule} at {where}: {message}")
        self.rule = rule
        self.path = path


# ---------------------------------------------------------------------------
# verification


def verify(d: Derivation) -> Judgment:
    """Check every node of ``d``; return the root judgment."""
    _verify(d, (), set())
    return d.conclusion


def _verify(d: Derivation, path: tuple[int, ...], done: set[int]) -> None:
    # shared subderivations are checked once
    if id(d) in done:
        return
    def fail(msg: str):
        raise VerificationError(d.rule, msg, path)

    if d.rule not in RULES:
        fail(f"unknown rule {d.rule!r}")
    missing = free_vars(d.term) - d.ctx.names()
    if missing:
        fail(f"free variables {sorted(missing)} not bound in the context")

    arity = {"Ax": 0, "Omega": 0, "Lit": 0, "PlusTy": 0, "ArrE": 2, "IntI": 2}.get(d.rule, 1)
    if len(d.premises) != arity:
        fail(f"expected {arity} premise(s), got {len(d.premises)}")
    ps = d.premises
    t, ty = d.term, d.type

    def same_ctx(p: Derivation):
        if p.ctx != d.ctx:
            fail("premise context differs from conclusion context")

    if d.rule == "Ax":
        if not isinstance(t, Var):
            fail("subject is not a variable")
        if d.ctx.get(t.name) != ty:
            fail(f"{t.name} : {print_type(ty)} is not in the context")
    elif d.rule == "Omega":
        if not isinstance(ty, Omega):
            fail("conclusion type is not w")
    elif d.rule == "Lit":
        if not ((isinstance(t, IntLit) and ty == INT) or (isinstance(t, UnitLit) and ty == UNIT_T)):
            fail("literal axiom needs n : Int or () : Unit")
    elif d.rule == "PlusTy":
        if not (isinstance(t, PrimPlus) and ty == PLUS_TYPE):
            fail("addition constant has type Int -> Int -> Int")
    elif d.rule == "ArrI":
        (p,) = ps
        if not isinstance(t, Lam):
            fail("subject is not an abstraction")
        if not isinstance(ty, Arrow):
            fail("conclusion type is not an arrow")
        if p.ctx != d.ctx.extend(t.binder, ty.dom):
            fail(f"premise context must extend the conclusion with {t.binder} : {print_type(ty.dom)}")
        if p.term != t.body or p.type != ty.cod:
            fail("premise must type the body at the arrow's codomain")
    elif d.rule == "ArrE":
        f, a = ps
        same_ctx(f), same_ctx(a)
        if not isinstance(t, App) or f.term != t.fn or a.term != t.arg:
            fail("premises must type the function and the argument of an application")
        if f.type != Arrow(a.type, ty):
            fail(
                f"function type {print_type(f.type)} does not match "
                f"{print_type(a.type)} -> {print_type(ty)}"
            )
    elif d.rule == "IntI":
        l, r = ps
        same_ctx(l), same_ctx(r)
        if l.term != t or r.term != t:
            fail("premises must have the same subject")
        if ty != Inter(l.type, r.type):
            fail("conclusion must be the intersection of the premise types")
    elif d.rule == "Sub":
        (p,) = ps
        same_ctx(p)
        if p.term != t:
            fail("premise must have the same subject")
        if not subtype(p.type, ty):
            fail(f"{print_type(p.type)} <= {print_type(ty)} does not hold")
    elif d.rule == "Sel":
        (p,) = ps
        same_ctx(p)
        if not isinstance(t, Sel) or p.term != t.subject:
            fail("premise must type the selected term")
        if p.type != Field(t.label, ty):
            fail(f"premise type must be {{{t.label} : {print_type(ty)}}}")
    elif d.rule == "Rec":
        (p,) = ps
        same_ctx(p)
        if not isinstance(t, Record) or not isinstance(ty, Field):
            fail("Rec types a record literal with a field type")
        m = t.get(ty.label)
        if m is None:
            fail(f"label {ty.label} not in the record")
        if p.term != m or p.type != ty.body:
            fail(f"premise must type the {ty.label} field at {print_type(ty.body)}")
    elif d.rule in ("MergeL", "MergeR"):
        (p,) = ps
        same_ctx(p)
        if not isinstance(t, Merge) or not isinstance(ty, Field):
            fail("merge rules type a merge with a field type")
        if p.type != ty:
            fail("premise type must equal the conclusion type")
        if d.rule == "MergeL":
            if p.term != t.left:
                fail("premise must type the left operand")
            if ty.label in t.right.labels:
                fail(f"side condition {ty.label} not in lbl(R) violated")
        elif p.term != t.right:
            fail("premise must type the right record")

    for i, p in enumerate(ps):
        _verify(p, path + (i,), done)
    done.add(id(d))


# ---------------------------------------------------------------------------
# derivation builders


def ax(ctx: Context, name: str) -> Derivation:
    return Derivation("Ax", ctx, Var(name), ctx[name])


def omega(ctx: Context, t: Term) -> Derivation:
    return Derivation("Omega", ctx, t, OMEGA)


def sub(d: Derivation, ty: Type) -> Derivation:
    if d.type == ty:
        return d
    return Derivation("Sub", d.ctx, d.term, ty, (d,))


def int_i(left: Derivation, right: Derivation) -> Derivation:
    return Derivation("IntI", left.ctx, left.term, Inter(left.type, right.type), (left, right))


def arr_e(fn: Derivation, arg: Derivation) -> Derivation:
    assert isinstance(fn.type, Arrow)
    return Derivation("ArrE", fn.ctx, App(fn.term, arg.term), fn.type.cod, (fn, arg))


def arr_i(ctx: Context, t: Lam, body: Derivation) -> Derivation:
    return Derivation("ArrI", ctx, t, Arrow(body.ctx[t.binder], body.type), (body,))


def _leaf(ctx: Context, t: Term) -> Optional[Derivation]:
    if isinstance(t, IntLit):
        return Derivation("Lit", ctx, t, INT)
    if isinstance(t, UnitLit):
        return Derivation("Lit", ctx, t, UNIT_T)
    if isinstance(t, PrimPlus):
        return Derivation("PlusTy", ctx, t, PLUS_TYPE)
    if isinstance(t, Var) and t.name in ctx:
        return ax(ctx, t.name)
    return None


# ---------------------------------------------------------------------------
# goal-directed checking


@dataclass(frozen=True)
class Hints:
    """Advisory annotations for the checker.

    ``args`` is a pool of candidate argument types tried at every application
    whose argument type cannot be read off the function.  ``at`` adds
    candidates for specific application nodes.  ``within`` replaces the
    hints altogether while checking a given subterm, so each component of a
    larger term can be searched with its own small pool.
    """

    args: tuple[Type, ...] = ()
    at: Mapping[Term, tuple[Type, ...]] = field(default_factory=dict)
    within: Mapping[Term, "Hints"] = field(default_factory=dict)

    def __add__(self, other: "Hints") -> "Hints":
        return Hints(
            tuple(dict.fromkeys(self.args + other.args)),
            {**self.at, **other.at},
            {**self.within, **other.within},
        )

    def __hash__(self):
        return hash(self.args)


NO_HINTS = Hints()


@lru_cache(maxsize=None)
def _sorted_paths(t: Type) -> tuple[Path, ...]:
    return tuple(sorted(normalize_type(t), key=lambda p: print_type(path_type(p))))


@lru_cache(maxsize=None)
def _codomains(types: tuple[Type, ...]) -> tuple[Type, ...]:
    out = []
    for t in types:
        groups: dict[frozenset, set] = {}
        for p in normalize_type(t):
            if isinstance(p, ArrowP):
                groups.setdefault(p.dom, set()).add(p.cod)
        for dom in sorted(groups, key=lambda d: print_type(nf_type(d))):
            out.append(nf_type(groups[dom]))
    return tuple(out)


class Checker:
    """Goal-directed derivation search with memoization.

    Goals are handled whole where the rules allow it: an abstraction gets one
    ``ArrI`` per distinct arrow domain, a record or merge one node per label,
    and an application first tries a single argument type for the whole goal.
    This keeps derivations small.  Not complete: ``None`` means "not found".
    """

    def __init__(self, hints: Hints = NO_HINTS):
        self.hints = hints
        self._memo: dict = {}
        self._synth_memo: dict = {}
        self._scoped: dict[Term, Checker] = {}

    def _scope(self, t: Term) -> Optional["Checker"]:
        h = self.hints.within.get(t)
        if h is None or h is self.hints:
            return None
        if t not in self._scoped:
            self._scoped[t] = Checker(h)
        return self._scoped[t]

    def check(self, ctx: Context, t: Term, goal: Type) -> Optional[Derivation]:
        d = self.check_nf(ctx, t, normalize_type(goal))
        return None if d is None else sub(d, goal)

    def check_nf(self, ctx: Context, t: Term, goal: frozenset) -> Optional[Derivation]:
        """A derivation whose type is below the path set ``goal``."""
        scoped = self._scope(t)
        if scoped is not None:
            return scoped.check_nf(ctx, t, goal)
        key = (ctx, t, goal)
        if key not in self._memo:
            self._memo[key] = self._check(ctx, t, goal)
        return self._memo[key]

    def _check(self, ctx: Context, t: Term, goal: frozenset) -> Optional[Derivation]:
        if not goal:
            return omega(ctx, t)
        leaf = _leaf(ctx, t)
        if leaf is not None:
            return leaf if nf_subtype(normalize_type(leaf.type), goal) else None
        if isinstance(t, Lam):
            if not all(isinstance(p, ArrowP) for p in goal):
                return None
            groups: dict[frozenset, set] = {}
            for p in goal:
                groups.setdefault(p.dom, set()).add(p.cod)
            parts = []
            for dom in sorted(groups, key=lambda d: print_type(nf_type(d))):
                body = self.check_nf(ctx.extend(t.binder, nf_type(dom)), t.body, frozenset(groups[dom]))
                if body is None:
                    return None
                parts.append(arr_i(ctx, t, body))
            return reduce(int_i, parts)
        if isinstance(t, (Record, Merge)):
            if not all(isinstance(p, FieldP) for p in goal):
                return None
            groups = {}
            for p in goal:
                groups.setdefault(p.label, set())
                if p.cod is not None:
                    groups[p.label].add(p.cod)
            parts = []
            for label in sorted(groups):
                d = self._field(ctx, t, label, frozenset(groups[label]))
                if d is None:
                    return None
                parts.append(d)
            return reduce(int_i, parts)
        if isinstance(t, Sel):
            inner = frozenset(FieldP(t.label, p) for p in goal)
            d = self.check_nf(ctx, t.subject, inner)
            if d is None:
                return None
            d = sub(d, Field(t.label, nf_type(goal)))
            return Derivation("Sel", ctx, t, nf_type(goal), (d,))
        if isinstance(t, App):
            return self._app(ctx, t, goal)
        return None

    def _field(self, ctx: Context, t: Term, label: str, body: frozenset) -> Optional[Derivation]:
        ty = Field(label, nf_type(body))
        if isinstance(t, Record):
            m = t.get(label)
            if m is None:
                return None
            d = self.check_nf(ctx, m, body)
            if d is None:
                return None
            return Derivation("Rec", ctx, t, ty, (sub(d, ty.body),), {"label": label})
        target = normalize_type(ty)
        if label in t.right.labels:
            d, rule = self.check_nf(ctx, t.right, target), "MergeR"
        else:
            d, rule = self.check_nf(ctx, t.left, target), "MergeL"
        if d is None:
            return None
        return Derivation(rule, ctx, t, ty, (sub(d, ty),), {"label": label})

    def _app(self, ctx: Context, t: App, goal: frozenset) -> Optional[Derivation]:
        found = self.synth(ctx, t)
        if found:
            parts = []
            for p in sorted(goal, key=str):
                hit = next((d for d, q in found if path_subtype(frozenset((q,)), p)), None)
                if hit is None:
                    parts = None
                    break
                if all(h is not hit for h in parts):
                    parts.append(hit)
            if parts is not None:
                return reduce(int_i, parts)
        whole = nf_type(goal)
        # the argument check does not depend on the goal, so it is shared
        # between goals through the memo table
        for cand in self.candidates(ctx, t):
            arg = self.check(ctx, t.arg, cand)
            if arg is None:
                continue
            fn = self.check(ctx, t.fn, Arrow(cand, whole))
            if fn is not None:
                return arr_e(fn, arg)
        if len(goal) > 1:
            parts = []
            for p in sorted(goal, key=str):
                d = self.check_nf(ctx, t, frozenset((p,)))
                if d is None:
                    return None
                parts.append(d)
            return reduce(int_i, parts)
        return None

    def synth(self, ctx: Context, t: Term) -> tuple[tuple[Derivation, Path], ...]:
        """Paths of neutral terms (variable or constant heads), and of records
        and merges built from them, with derivations."""
        scoped = self._scope(t)
        if scoped is not None:
            return scoped.synth(ctx, t)
        key = (ctx, t)
        if key in self._synth_memo:
            return self._synth_memo[key]
        out: list[tuple[Derivation, Path]] = []
        leaf = _leaf(ctx, t)
        if leaf is not None:
            for q in _sorted_paths(leaf.type):
                out.append((sub(leaf, path_type(q)), q))
        elif isinstance(t, Sel):
            for d, q in self.synth(ctx, t.subject):
                if isinstance(q, FieldP) and q.label == t.label and q.cod is not None:
                    out.append((Derivation("Sel", ctx, t, path_type(q.cod), (d,)), q.cod))
        elif isinstance(t, App):
            for d, q in self.synth(ctx, t.fn):
                if isinstance(q, ArrowP):
                    arg = self.check(ctx, t.arg, nf_type(q.dom))
                    if arg is not None:
                        out.append((arr_e(d, arg), q.cod))
        elif isinstance(t, Record):
            for label, m in t.entries:
                for d, q in self.synth(ctx, m):
                    ty = Field(label, path_type(q))
                    out.append((Derivation("Rec", ctx, t, ty, (d,), {"label": label}), FieldP(label, q)))
        elif isinstance(t, Merge):
            for d, q in self.synth(ctx, t.right):
                out.append((Derivation("MergeR", ctx, t, d.type, (d,), {"label": q.label}), q))
            for d, q in self.synth(ctx, t.left):
                if isinstance(q, FieldP) and q.cod is not None and q.label not in t.right.labels:
                    out.append((Derivation("MergeL", ctx, t, d.type, (d,), {"label": q.label}), q))
        result = tuple(out)
        self._synth_memo[key] = result
        return result

    def candidates(self, ctx: Context, t: App) -> list[Type]:
        found: list[Type] = [OMEGA]
        found += self.hints.at.get(t, ())
        arg = t.arg
        if isinstance(arg, Var) and arg.name in ctx:
            found.append(ctx[arg.name])
        else:
            paths = [q for _, q in self.synth(ctx, arg)]
            if paths:
                found.append(nf_type(paths))
        found += self.hints.args
        # last resort: an argument that is itself a redex often has the
        # codomain of some hinted arrow
        found += _codomains(self.hints.args)
        seen, out = set(), []
        for c in found:
            if c not in seen:
                seen.add(c)
                out.append(c)
        return out


def check(
    ctx: Context | Mapping[str, Type],
    t: Term,
    goal: Type,
    hints: Hints = NO_HINTS,
) -> Optional[Derivation]:
    """Search for a derivation of ``ctx |- t : goal``; ``None`` if not found."""
    if not isinstance(ctx, Context):
        ctx = Context(ctx)
    missing = free_vars(t) - ctx.names()
    if missing:
        raise LamRecError(f"free variables {sorted(missing)} not bound in the context")
    return Checker(hints).check(ctx, t, goal)


# ---------------------------------------------------------------------------
# JSON


def derivation_to_json(d: Derivation, parent_ctx: Context | None = None) -> dict:
    out: dict = {"rule": d.rule, "term": print_term(d.term), "type": print_type(d.type)}
    if parent_ctx is None or d.ctx != parent_ctx:
        out["ctx"] = {x: print_type(t) for x, t in d.ctx.items()}
    if d.data:
        out["data"] = dict(d.data)
    if d.premises:
        inherited = d.ctx
        if d.rule == "ArrI":
            inherited = d.ctx.extend(d.term.binder, d.type.dom)
        out["premises"] = [derivation_to_json(p, inherited) for p in d.premises]
    return out


@lru_cache(maxsize=4096)
def _read_type(text: str) -> Type:
    return parse_type(text)


@lru_cache(maxsize=4096)
def _read_term(text: str) -> Term:
    return parse_term(text, desugar=False)


def derivation_from_json(obj: dict, inherited: Context | None = None) -> Derivation:
    """Load a derivation.  A node without ``ctx`` inherits its parent's
    context, extended by the bound variable below an ``ArrI`` node."""
    try:
        rule = obj["rule"]
        term = _read_term(obj["term"])
        ty = _read_type(obj["type"])
    except KeyError as e:
        raise LamRecError(f"derivation node is missing {e.args[0]!r}") from None
    if "ctx" in obj:
        ctx = Context({x: _read_type(s) for x, s in obj["ctx"].items()})
    elif inherited is not None:
        ctx = inherited
    else:
        ctx = EMPTY
    below = ctx
    if rule == "ArrI" and isinstance(term, Lam) and isinstance(ty, Arrow):
        below = ctx.extend(term.binder, ty.dom)
    premises = tuple(derivation_from_json(p, below) for p in obj.get("premises", ()))
    return Derivation(rule, ctx, term, ty, premises, dict(obj.get("data", {})))


def dump_derivation(d: Derivation, path) -> None:
    with open(path, "w") as fh:
        json.dump(derivation_to_json(d), fh, indent=1)
        fh.write("\n")


def load_derivation(path) -> Derivation:
    with open(path) as fh:
        return derivation_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# bounded typing oracle


class UniverseTooLarge(LamRecError):
    pass


@lru_cache(maxsize=None)
def canonical_paths(t: Type) -> frozenset:
    """Minimal set of canonical paths; equal for types equal under ``<=``."""
    return _minimize(frozenset(_canon_path(p) for p in normalize_type(t)))


def _canon_path(p: Path) -> Path:
    if isinstance(p, ArrowP):
        return ArrowP(_minimize(frozenset(_canon_path(q) for q in p.dom)), _canon_path(p.cod))
    if isinstance(p, FieldP) and p.cod is not None:
        return FieldP(p.label, _canon_path(p.cod))
    return p


def _minimize(paths: frozenset) -> frozenset:
    return frozenset(
        p for p in paths
        if not any(q != p and path_subtype(frozenset((q,)), p) for q in paths)
    )


class Universe:
    """Finite set of types up to equality, with lookup tables for the oracle."""

    def __init__(self, types: Iterable[Type]):
        self.types: list[Type] = []
        self.index: dict[frozenset, int] = {}
        for t in types:
            self.add(t)
        n = len(self.types)
        self.le = np.array(
            [[subtype(a, b) for b in self.types] for a in self.types], dtype=bool
        ).reshape(n, n)
        self.arrow = np.full((n, n), -1, dtype=np.int64)
        self.inter = np.full((n, n), -1, dtype=np.int64)
        for i, a in enumerate(self.types):
            for j, b in enumerate(self.types):
                self.arrow[i, j] = self.find(Arrow(a, b))
                self.inter[i, j] = self.find(Inter(a, b))
        self.labels = sorted({p.label for t in self.types for p in normalize_type(t)
                              if isinstance(p, FieldP)})
        self.field = {
            a: np.array([self.find(Field(a, t)) for t in self.types], dtype=np.int64)
            for a in self.labels
        }
        self.omega = self.find(OMEGA)

    def add(self, t: Type) -> int:
        key = canonical_paths(t)
        if key not in self.index:
            self.index[key] = len(self.types)
            self.types.append(t)
        return self.index[key]

    def find(self, t: Type) -> int:
        return self.index.get(canonical_paths(t), -1)

    def __len__(self) -> int:
        return len(self.types)

    def __contains__(self, t: Type) -> bool:
        return self.find(t) >= 0

    def up(self, t: Type) -> np.ndarray:
        return np.array([subtype(t, u) for u in self.types], dtype=bool)

    def close(self, s: np.ndarray) -> np.ndarray:
        """Close a set under subsumption and intersection introduction."""
        s = s.copy()
        if self.omega >= 0:
            s[self.omega] = True
        while True:
            idx = np.flatnonzero(s)
            new = self.le[idx].any(axis=0)
            meets = self.inter[np.ix_(idx, idx)].ravel()
            new[meets[meets >= 0]] = True
            new |= s
            if (new == s).all():
                return s
            s = new


def type_universe(
    atoms: Iterable[str], depth: int, labels: Iterable[str] = (), max_size: int = 5000
) -> Universe:
    return _universe(tuple(sorted(atoms)), depth, tuple(sorted(labels)), max_size)


@lru_cache(maxsize=16)
def _universe(atoms, depth, labels, max_size) -> Universe:
    level: dict[frozenset, Type] = {}

    def put(t):
        level.setdefault(canonical_paths(t), t)

    put(OMEGA)
    for a in atoms:
        put(TConst(a))
    for _ in range(depth - 1):
        prev = list(level.values())
        for a in prev:
            for label in labels:
                put(Field(label, a))
            for b in prev:
                put(Arrow(a, b))
                put(Inter(a, b))
                if len(level) > max_size:
                    raise UniverseTooLarge(
                        f"type universe exceeds {max_size} types "
                        f"(atoms={list(atoms)}, depth={depth}, labels={list(labels)})"
                    )
    return Universe(level.values())


class TypingOracle:
    """All types of a universe derivable with every judgment's type in the universe."""

    def __init__(self, universe: Universe):
        self.u = universe
        self._memo: dict = {}
        self._plus = universe.up(PLUS_TYPE)
        self._int = universe.up(INT)
        self._unit = universe.up(UNIT_T)

    def types_of(self, ctx: Context, t: Term) -> np.ndarray:
        ctx = ctx.restrict(free_vars(t))
        key = (ctx, t)
        if key not in self._memo:
            self._memo[key] = self.u.close(self._raw(ctx, t))
        return self._memo[key]

    def _raw(self, ctx: Context, t: Term) -> np.ndarray:
        u = self.u
        n = len(u)
        s = np.zeros(n, dtype=bool)
        if isinstance(t, Var):
            return u.up(ctx[t.name])
        if isinstance(t, IntLit):
            return self._int.copy()
        if isinstance(t, UnitLit):
            return self._unit.copy()
        if isinstance(t, PrimPlus):
            return self._plus.copy()
        if isinstance(t, Lam):
            for i, sigma in enumerate(u.types):
                body = self.types_of(ctx.extend(t.binder, sigma), t.body)
                ks = u.arrow[i, body]
                s[ks[ks >= 0]] = True
            return s
        if isinstance(t, App):
            fn = self.types_of(ctx, t.fn)
            arg_idx = np.flatnonzero(self.types_of(ctx, t.arg))
            table = u.arrow[arg_idx]  # rows: argument type, cols: result type
            ok = (table >= 0) & fn[np.where(table >= 0, table, 0)]
            return ok.any(axis=0)
        if isinstance(t, Record):
            for a, m in t.entries:
                if a in u.field:
                    ks = u.field[a][self.types_of(ctx, m)]
                    s[ks[ks >= 0]] = True
            return s
        if isinstance(t, Sel):
            if t.label in u.field:
                subj = self.types_of(ctx, t.subject)
                f = u.field[t.label]
                s = (f >= 0) & subj[np.where(f >= 0, f, 0)]
            return s
        if isinstance(t, Merge):
            left = self.types_of(ctx, t.left)
            right = self.types_of(ctx, t.right)
            for a, f in u.field.items():
                valid = f >= 0
                ks = f[valid]
                src = right if a in t.right.labels else left
                hit = src[ks]
                s[ks[hit]] = True
            return s
        raise TypeError(f"not a term: {t!r}")


def enumerate_types(
    ctx: Context | Mapping[str, Type],
    t: Term,
    atoms: Iterable[str],
    depth: int,
    labels: Iterable[str] | None = None,
    max_size: int = 5000,
) -> list[Type]:
    """Types of the finite universe over ``atoms`` up to ``depth`` that ``t``
    can be given by a derivation using only universe types.

    Labels default to those of the record literals and selections in ``t``.
    One representative per equivalence class is returned.
    """
    if not isinstance(ctx, Context):
        ctx = Context(ctx)
    if labels is None:
        labels = term_labels(t)
    u = type_universe(atoms, depth, labels, max_size)
    hits = TypingOracle(u).types_of(ctx, t)
    return [u.types[i] for i in np.flatnonzero(hits)]


def term_labels(t: Term) -> set[str]:
    out = set()
    for s in subterms(t):
        if isinstance(s, Record):
            out |= s.labels
        elif isinstance(s, Sel):
            out.add(s.label)
    return out


def contains_type(types: Iterable[Type], ty: Type) -> bool:
    return any(subtype(t, ty) and subtype(ty, t) for t in types)


# ---------------------------------------------------------------------------
# invariance under conversion


@dataclass(frozen=True)
class StepResult:
    index: int
    term: Term
    redex: RedexInfo | None
    found: bool


@dataclass(frozen=True)
class InvarianceReport:
    judgment: Judgment
    steps: tuple[StepResult, ...]
    expansions: tuple[StepResult, ...] = ()
    reached_normal_form: bool = False

    @property
    def ok(self) -> bool:
        return all(s.found for s in self.steps + self.expansions)

    @property
    def failures(self) -> list[StepResult]:
        return [s for s in self.steps + self.expansions if not s.found]

    def summary(self) -> str:
        return (
            f"{len(self.steps)} reducts checked, {len(self.expansions)} expansions, "
            f"{len(self.failures)} not found"
            + (", normal form reached" if self.reached_normal_form else "")
        )


def invariance_test(
    d: Derivation,
    fuel: int = 50,
    hints: Hints = NO_HINTS,
    expansions: Iterable[tuple[Term, Term]] = (),
) -> InvarianceReport:
    """Re-check the judgment of ``d`` along the reduction sequence of its subject.

    Each reduct is checked against the same context and type.  A pair
    ``(N, M)`` in ``expansions`` with ``N`` reducing to ``M`` is checked in the
    expansion direction: ``N`` must get the type that ``M`` has in ``d``'s
    context.  A failed check is an incompleteness finding of the checker,
    not a counterexample.
    """
    j = verify(d)
    checker = Checker(hints)
    seq = reduction_sequence(j.term, fuel)
    steps = tuple(
        StepResult(i, t, info, checker.check(j.ctx, t, j.type) is not None)
        for i, (t, info) in enumerate(seq)
    )
    exp = tuple(
        StepResult(i, before, None, checker.check(j.ctx, before, j.type) is not None)
        for i, (before, _after) in enumerate(expansions)
    )
    return InvarianceReport(j, steps, exp, step(seq[-1][0]) is None)
