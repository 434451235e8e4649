"""Classes, mixins and objects as recursive records.

A class is a function from state and ``self`` to a record; an object is a
fixed point of an instantiated class.  A recursive class also abstracts over
``class`` and needs a double fixed point ``Y((Y C) v)``.  A mixin maps a
class to a class by merging a record of added or overridden members onto the
object of its argument class.

The module also ships the standard examples with their recorded types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .assignment import Context, Hints
from .reduction import DEFAULT_FUEL, NormalForm, normalize, whnf_record
from .syntax import (
    App,
    IntLit,
    Lam,
    LamRecError,
    Merge,
    Record,
    Term,
    Var,
    desugar_let,
    free_vars,
    lams,
    parse_term,
)
from .types import (
    INT,
    OMEGA,
    Arrow,
    Field,
    Type,
    conjuncts,
    inter,
    parse_type,
    subtype,
)

__all__ = [
    "B", "Y", "ClassSpec", "ClassTypeSpec", "EncodingError", "Goal", "MixinSpec",
    "StdEntry", "class_type", "compose_mixins", "desugar_let", "elaborate_class",
    "elaborate_mixin", "new_object", "rec_class_type", "run_usage_pipeline",
    "stdlib", "y_arg_type", "y_comb", "y_hints", "y_type", "types",
]


class EncodingError(LamRecError):
    pass


Y = parse_term(r"\f. (\x. f (x x)) (\x. f (x x))")
B = parse_term(r"\f. \g. \x. f (g x)")
DEFS = {"Y": Y, "B": B}


def y_comb() -> Term:
    return Y


def term(source: str) -> Term:
    """Parse with ``Y`` and ``B`` available as named combinators."""
    return parse_term(source, defs=DEFS)


# ---------------------------------------------------------------------------
# fixed-point typings


def y_arg_type(chain: Sequence[Type]) -> Type:
    """``(w -> t1) & (t1 -> t2) & ... & (t{n-1} -> tn)``."""
    if not chain:
        raise EncodingError("a chain needs at least one type")
    parts = [Arrow(OMEGA, chain[0])]
    parts += [Arrow(a, b) for a, b in zip(chain, chain[1:])]
    return inter(*parts)


def y_type(chain: Sequence[Type]) -> Type:
    return Arrow(y_arg_type(chain), chain[-1])


def y_hints(chain: Sequence[Type]) -> tuple[Type, ...]:
    """Types of the self-applied half of ``Y`` along ``chain``.

    With ``r1 = w -> t1`` and ``r{k+1} = rk & (rk -> t{k+1})`` the half
    ``\\x. f (x x)`` has type ``rk -> t{k+1}`` and the argument in ``Y f``
    needs ``r{n-1}``.
    """
    out = [Arrow(OMEGA, chain[0])]
    for t in chain[1:-1]:
        out.append(inter(out[-1], Arrow(out[-1], t)))
    return tuple(out)


def chain_hints(*chains: Sequence[Type], extra: Iterable[Type] = ()) -> Hints:
    args: list[Type] = []
    for c in chains:
        args += y_hints(c)
        args.append(y_arg_type(c))
    args += extra
    return Hints(tuple(dict.fromkeys(args)))


# ---------------------------------------------------------------------------
# class types


@dataclass(frozen=True)
class ClassTypeSpec:
    ground_prefix: tuple[Type, ...]
    instance_chain: tuple[Type, ...]


def _is_record_type(t: Type) -> bool:
    return all(isinstance(c, Field) for c in conjuncts(t))


def class_type(spec: ClassTypeSpec, *, validate: bool = True) -> Type:
    """``t1 -> ... -> (w -> s1) & (s1 -> s2) & ... & (s{n-1} -> sn)``."""
    chain = spec.instance_chain
    if not chain:
        raise EncodingError("instance chain is empty")
    if validate:
        for s in chain:
            if not _is_record_type(s):
                raise EncodingError(f"{s} is not a record type")
        _check_descending(chain)
    t = y_arg_type(chain)
    for g in reversed(spec.ground_prefix):
        t = Arrow(g, t)
    return t


def rec_class_type(chain: Sequence[Type], *, validate: bool = True) -> Type:
    """``(w -> k1) & (k1 -> k2) & ...`` over a chain of class types."""
    if not chain:
        raise EncodingError("class-type chain is empty")
    if validate:
        _check_descending(chain)
    return y_arg_type(chain)


def _check_descending(chain: Sequence[Type]) -> None:
    for i, (a, b) in enumerate(zip(chain, chain[1:])):
        if not subtype(b, a):
            raise EncodingError(f"chain is not descending at position {i + 1}: {b} is not below {a}")


# ---------------------------------------------------------------------------
# specifications


def _as_term(body: Term | str) -> Term:
    return term(body) if isinstance(body, str) else body


NEW_MEMBER = ("new", r"\x'. Y (class x')")


@dataclass(frozen=True)
class ClassSpec:
    """``\\class? \\x1 ... \\xn \\self. {a1 = M1, ...}``."""

    name: str
    state_params: tuple[str, ...]
    members: tuple[tuple[str, Term | str], ...]
    recursive: bool = False
    with_new: bool = False

    def __post_init__(self):
        object.__setattr__(self, "members", tuple((a, _as_term(m)) for a, m in self.members))
        labels = [a for a, _ in self.members]
        if len(set(labels)) != len(labels):
            raise EncodingError(f"{self.name}: duplicate member labels")
        if self.with_new and not self.recursive:
            raise EncodingError(f"{self.name}: a new member needs a recursive class")
        allowed = set(self.state_params) | {"self"} | ({"class"} if self.recursive else set())
        for a, m in self.members:
            stray = free_vars(m) - allowed
            if stray:
                raise EncodingError(f"{self.name}.{a}: unexpected free variables {sorted(stray)}")


@dataclass(frozen=True)
class MixinSpec:
    """``\\super \\class? \\x \\self. Y(super y) ++ delta`` (with ``Y super`` when recursive).

    Members may refer to the super object as ``c``; it is then bound once by
    ``let c = <super object> in c ++ delta``.
    """

    name: str
    state_params: tuple[str, ...]
    forwarded_state: tuple[str, ...]
    delta: tuple[tuple[str, Term | str], ...]
    recursive: bool = False
    with_new: bool = False
    super_object: str = "c"

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple((a, _as_term(m)) for a, m in self.delta))
        labels = [a for a, _ in self.delta]
        if len(set(labels)) != len(labels):
            raise EncodingError(f"{self.name}: duplicate delta labels")
        if not set(self.forwarded_state) <= set(self.state_params):
            raise EncodingError(f"{self.name}: forwarded state must be a subset of the state")
        if self.with_new and not self.recursive:
            raise EncodingError(f"{self.name}: a new member needs a recursive mixin")
        allowed = set(self.state_params) | {"self", "super", self.super_object}
        if self.recursive:
            allowed.add("class")
        for a, m in self.delta:
            stray = free_vars(m) - allowed
            if stray:
                raise EncodingError(f"{self.name}.{a}: unexpected free variables {sorted(stray)}")


def _members(entries, with_new: bool) -> Record:
    entries = list(entries)
    if with_new:
        entries.append((NEW_MEMBER[0], term(NEW_MEMBER[1])))
    return Record(tuple(entries))


def elaborate_class(spec: ClassSpec) -> Term:
    binders = (["class"] if spec.recursive else []) + list(spec.state_params) + ["self"]
    return lams(binders, _members(spec.members, spec.with_new))


def elaborate_mixin(spec: MixinSpec) -> Term:
    inner = App(Y, Var("super")) if spec.recursive else Var("super")
    for y in spec.forwarded_state:
        inner = App(inner, Var(y))
    super_obj = App(Y, inner)
    delta = _members(spec.delta, spec.with_new)
    c = spec.super_object
    if c in free_vars(delta):
        body: Term = App(Lam(c, Merge(Var(c), delta)), super_obj)
    else:
        body = Merge(super_obj, delta)
    binders = ["super"] + (["class"] if spec.recursive else []) + list(spec.state_params) + ["self"]
    return lams(binders, body)


def compose_mixins(outer: Term, inner: Term) -> Term:
    """``B outer inner``, which converts to ``\\x. outer (inner x)``."""
    return App(App(B, outer), inner)


def instantiate(class_term: Term, args: Sequence[Term], recursive: bool) -> Term:
    """``Y(C v)`` or, for a recursive class, ``Y((Y C) v)``."""
    head = App(Y, class_term) if recursive else class_term
    for a in args:
        head = App(head, a)
    return App(Y, head)


def new_object(
    class_term: Term, args: Sequence[Term], recursive: bool = False, fuel: int = DEFAULT_FUEL
) -> Record:
    """Build an object and reduce it to a record literal; fields stay unevaluated."""
    if free_vars(class_term):
        raise EncodingError(f"class term is not closed: {sorted(free_vars(class_term))}")
    r = whnf_record(instantiate(class_term, args, recursive), fuel)
    if r is None:
        raise EncodingError("object construction did not produce a record within the fuel")
    return r


# ---------------------------------------------------------------------------
# recorded types


class _Types:
    """The type families of the standard examples."""

    def __init__(self):
        p = parse_type
        # non-recursive Point
        self.sigma1 = p("{X : Int}")
        self.sigma2 = p("{X : Int, get : Int}")
        self.kappa1 = class_type(ClassTypeSpec((INT,), (self.sigma1, self.sigma2)))
        self.point = self.kappa1
        self.recpoint = Arrow(OMEGA, self.kappa1)
        # Movable over RecPoint
        self.kappa2 = Arrow(
            INT,
            inter(
                Arrow(OMEGA, self.sigma1),
                Arrow(self.sigma1, inter(self.sigma2, Field("move", Arrow(INT, self.sigma2)))),
            ),
        )
        self.movable = Arrow(self.recpoint, rec_class_type([self.kappa1, self.kappa2]))
        # Point2D applied to Point
        xy = p("{X : Int, Y : Int}")
        self.point2d_point = Arrow(
            INT, Arrow(INT, inter(Arrow(OMEGA, xy), Arrow(xy, p("{X : Int, Y : Int, get : Int * Int}"))))
        )
        self.point2d = Arrow(self.point, self.point2d_point)

        state = "get : Int, set : Int -> Int * Unit"
        # stateful Point
        self.sigma_p = (
            p(f"{{{state}, shift : w, new : Int -> w}}"),
            p(f"{{{state}, shift : Int * Unit, new : Int -> w}}"),
        )
        self.sigma_p += (
            inter(p(f"{{{state}, shift : Int * Unit}}"), Field("new", Arrow(INT, self.sigma_p[1]))),
        )
        self.kappa_p = (
            class_type(ClassTypeSpec((INT,), self.sigma_p[:2])),
            class_type(ClassTypeSpec((INT,), self.sigma_p)),
        )
        self.kappa_rec_p = rec_class_type(self.kappa_p)
        # Movable
        base_m = p(f"{{{state}, shift : Int * Unit}}")
        s1m = inter(base_m, p("{move : Int -> Int * Unit, new : Int -> w}"))
        self.sigma_delta_m = inter(
            p("{move : Int -> Int * Unit}"), Field("new", Arrow(INT, s1m))
        )
        self.sigma_m = (s1m, inter(base_m, self.sigma_delta_m))
        self.kappa_m = (
            class_type(ClassTypeSpec((INT,), self.sigma_m[:1])),
            class_type(ClassTypeSpec((INT,), self.sigma_m)),
        )
        self.kappa_rec_m = rec_class_type(self.kappa_m)
        # SetAdapter
        base_s = p("{get : Int, shift : Int * Unit, move : Int -> Int * Unit}")
        s1s = base_s
        s2s = inter(base_s, p("{set : {get : Int} -> Int * Unit}"), Field("new", Arrow(INT, s1s)))
        self.sigma_delta_s = inter(p("{set : {get : Int} -> Int * Unit}"), Field("new", Arrow(INT, s2s)))
        self.sigma_s = (s1s, s2s, inter(base_s, self.sigma_delta_s))
        self.kappa_s = tuple(
            class_type(ClassTypeSpec((INT,), self.sigma_s[: i + 1])) for i in range(3)
        )
        self.kappa_rec_s = rec_class_type(self.kappa_s)

        self.stateful_point = self.kappa_rec_p
        self.stateful_movable = Arrow(self.kappa_rec_p, self.kappa_rec_m)
        self.set_adapter = Arrow(self.kappa_rec_m, self.kappa_rec_s)


@lru_cache(maxsize=1)
def types() -> _Types:
    return _Types()


# ---------------------------------------------------------------------------
# standard library


POINT = ClassSpec("Point", ("x",), (("X", "x"), ("get", "self.X")))

POINT2D = MixinSpec(
    "Point2D",
    ("x", "y"),
    ("x",),
    (("Y", "y"), ("get", "(c.X, self.Y)")),
)

MOVABLE = MixinSpec(
    "Movable",
    ("x",),
    ("x",),
    (("move", r"\dx. Y (class (self.X + dx))"),),
    recursive=True,
)

MOVABLE_AS_PRINTED = MixinSpec(
    "Movable",
    ("x",),
    ("x",),
    (("move", r"\dx. Y ((Y class) (self.X + dx))"),),
    recursive=True,
)

STATEFUL_POINT = ClassSpec(
    "Point",
    ("x",),
    (
        ("get", "x"),
        ("set", r"\x'. (x', ())"),
        ("shift", "self.set (self.get + 1)"),
    ),
    recursive=True,
    with_new=True,
)

STATEFUL_MOVABLE = MixinSpec(
    "Movable",
    ("x",),
    ("x",),
    (("move", r"\dx. c.set (c.get + dx)"),),
    recursive=True,
    with_new=True,
)

SET_ADAPTER = MixinSpec(
    "SetAdapter",
    ("x",),
    ("x",),
    (("set", r"\p. c.set p.get"),),
    recursive=True,
    with_new=True,
)


@dataclass(frozen=True)
class Goal:
    """A typing claim ``ctx |- subject : type`` with the hints that find it."""

    name: str
    type: Type
    subject: Optional[Term] = None  # defaults to the entry's term
    ctx: Context = Context()
    hints: Hints = Hints()
    expect: bool = True
    # for re-checking reducts, where hints keyed on particular nodes stop applying
    reduct_hints: Optional[Hints] = None

    def hints_for_reducts(self) -> Hints:
        return self.hints if self.reduct_hints is None else self.reduct_hints


@dataclass(frozen=True)
class StdEntry:
    name: str
    term: Term
    description: str
    goals: tuple[Goal, ...] = ()
    spec: object = None

    def subject(self, g: Goal) -> Term:
        return self.term if g.subject is None else g.subject


@lru_cache(maxsize=1)
def stdlib() -> dict[str, StdEntry]:
    T = types()
    entries: list[StdEntry] = []

    def add(name, t, description, goals=(), spec=None):
        entries.append(StdEntry(name, t, description, tuple(goals), spec))

    point = elaborate_class(POINT)
    add(
        "point", point, "one-dimensional point class",
        [Goal("point-typing", T.point)], POINT,
    )
    add(
        "Y", Y, "fixed-point combinator",
        [Goal("y-typing", y_type([T.sigma1, T.sigma2]), hints=chain_hints([T.sigma1, T.sigma2]))],
    )
    point2d = elaborate_mixin(POINT2D)
    pd_hints = chain_hints([T.sigma1, T.sigma2], extra=[T.point, T.sigma2])
    add(
        "point2d", point2d, "mixin adding a second coordinate",
        [
            Goal("point2d-typing", T.point2d, hints=pd_hints),
            Goal("point2d-point-typing", T.point2d_point, subject=App(point2d, point), hints=pd_hints),
        ],
        POINT2D,
    )
    add(
        "record-select", term("{a = 1, b = ()}.a"), "selection from a record literal",
        [Goal("record-select-typing", INT)],
    )
    recpoint = Lam("class", point)
    add("recpoint", recpoint, "vacuously recursive point class", [Goal("recpoint-typing", T.recpoint)])
    movable = elaborate_mixin(MOVABLE)
    add(
        "movable", movable, "mixin adding move to a recursive point class",
        [
            Goal(
                "movable-typing", T.movable,
                hints=chain_hints([T.sigma1, T.sigma2], [T.kappa1]),
            )
        ],
        MOVABLE,
    )
    add(
        "movable-as-printed", elaborate_mixin(MOVABLE_AS_PRINTED),
        "the move member with a second fixed point on class, as printed",
        spec=MOVABLE_AS_PRINTED,
    )

    p_hints = chain_hints(T.sigma_p, T.kappa_p)
    stateful_point = elaborate_class(STATEFUL_POINT)
    add("stateful-point", stateful_point, "stateful point class", [Goal("stateful-point-typing", T.stateful_point, hints=p_hints)], STATEFUL_POINT)
    stateful_movable = elaborate_mixin(STATEFUL_MOVABLE)
    m_hints = chain_hints(T.sigma_p, T.kappa_p, T.sigma_m, T.kappa_m, extra=[T.sigma_p[2]])
    add(
        "stateful-movable", stateful_movable, "stateful mixin adding move",
        [Goal("stateful-movable-typing", T.stateful_movable, hints=m_hints)], STATEFUL_MOVABLE,
    )
    set_adapter = elaborate_mixin(SET_ADAPTER)
    s_hints = chain_hints(T.sigma_m, T.kappa_m, T.sigma_s, T.kappa_s, extra=[T.sigma_m[1]])
    add(
        "set-adapter", set_adapter, "stateful mixin overriding set to take a point",
        [Goal("set-adapter-typing", T.set_adapter, hints=s_hints)], SET_ADAPTER,
    )
    sa_mv = compose_mixins(set_adapter, stateful_movable)
    composed = App(sa_mv, stateful_point)
    c_hints = Hints(
        at={
            sa_mv.fn: (T.set_adapter,),
            sa_mv: (T.stateful_movable,),
            composed: (T.stateful_point,),
        },
        within={set_adapter: s_hints, stateful_movable: m_hints, stateful_point: p_hints},
    )
    add(
        "adapted-point", composed, "(SetAdapter o Movable)(Point)",
        [
            Goal(
                "adapted-point-typing", T.kappa_rec_s, hints=c_hints,
                reduct_hints=c_hints + Hints((T.set_adapter, T.stateful_movable, T.stateful_point) + s_hints.args),
            )
        ],
    )

    gamma = Context({"n1": parse_type("S1"), "n2": parse_type("S2"), "n3": parse_type("S3")})
    mr = {i: term(rf"\x. x ++ {{{lab} = n{i}}}") for i, lab in ((1, "a"), (2, "b"), (3, "a"))}
    add(
        "mr1", mr[1], "adds field a", [
            Goal("mr1-omega", parse_type("w -> {a : S1}"), ctx=gamma),
            Goal("mr1-keep-b", parse_type("{b : S2} -> {b : S2}"), ctx=gamma),
            Goal("mr1-extend", parse_type("{b : S2} -> {a : S1, b : S2}"), ctx=gamma),
        ],
    )
    add(
        "mr1-applied", App(mr[1], term("{b = n2}")), "MR1 applied to a record with field b",
        [Goal("mr1-applied-typing", parse_type("{a : S1, b : S2}"), ctx=gamma)],
    )
    add("mr2", mr[2], "adds field b", [Goal("mr2-omega", parse_type("w -> {b : S2}"), ctx=gamma)])
    add("mr3", mr[3], "overrides field a", [Goal("mr3-omega", parse_type("w -> {a : S3}"), ctx=gamma)])
    mr12 = compose_mixins(mr[1], mr[2])
    add(
        "mr1-mr2", mr12, "MR1 after MR2",
        [Goal("mr1-mr2-typing", parse_type("w -> {a : S1, b : S2}"), ctx=gamma,
              hints=Hints((parse_type("{b : S2} -> {a : S1, b : S2}"), parse_type("w -> {b : S2}"))))],
    )
    mr13 = compose_mixins(mr[1], mr[3])
    h13 = Hints((parse_type("w -> {a : S1}"), parse_type("w -> {a : S3}"), parse_type("{a : S3}")))
    add(
        "mr1-mr3", mr13, "MR1 after MR3: the outer field wins",
        [
            Goal("mr1-mr3-typing", parse_type("w -> {a : S1}"), ctx=gamma, hints=h13),
            Goal("mr1-mr3-inner-field", parse_type("w -> {a : S3}"), ctx=gamma, hints=h13, expect=False),
        ],
    )
    return {e.name: e for e in entries}


# ---------------------------------------------------------------------------
# evaluation demos


PIPELINE = r"""
let C = (B SetAdapter Movable) Point in
let p1 = Y ((Y C) 1) in
let p2 = Y ((Y Point) 2) in
let (x, r) = p1.set p2 in
let p1' = p1.new x in
let (x', r') = p1'.move 1 in
let p1'' = p1'.new x' in
RESULT
"""


def pipeline_term(order: str = "adapter-outer", result: str = "p1''.get") -> Term:
    """The usage scenario as one closed term.

    ``result`` is the final expression and may mention any of the bound names
    (``x``, ``x'``, ``p1''`` ...).  ``order="movable-outer"`` swaps the two
    mixins.
    """
    lib = stdlib()
    sa, mv = lib["set-adapter"].term, lib["stateful-movable"].term
    if order == "movable-outer":
        sa, mv = mv, sa
    elif order != "adapter-outer":
        raise ValueError(f"unknown order {order!r}")
    defs = {**DEFS, "SetAdapter": sa, "Movable": mv, "Point": lib["stateful-point"].term}
    return parse_term(PIPELINE.replace("RESULT", result), defs=defs)


def run_usage_pipeline(
    fuel: int = DEFAULT_FUEL, order: str = "adapter-outer", result: str = "p1''.get"
) -> Term:
    result = normalize(pipeline_term(order, result), fuel)
    if not isinstance(result, NormalForm):
        raise EncodingError(f"usage pipeline did not finish within {fuel} steps")
    return result.term


def point_object(n: int = 3) -> Term:
    return instantiate(stdlib()["point"].term, [IntLit(n)], recursive=False)


def movable_object(n: int = 3) -> Term:
    spec = stdlib()["movable"].term
    return instantiate(App(spec, stdlib()["recpoint"].term), [IntLit(n)], recursive=True)
