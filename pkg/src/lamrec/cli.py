"""Command-line front end.

Exit codes: 0 success, 1 semantic negative (subtype false, no derivation
found, fuel exhausted, demo mismatch), 2 usage or input error.  Results go to
stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from . import __version__
from .assignment import (
    Context,
    Hints,
    VerificationError,
    check,
    derivation_to_json,
    dump_derivation,
    enumerate_types,
    load_derivation,
    verify,
)
from .encodings import (
    DEFS,
    movable_object,
    pipeline_term,
    point_object,
    stdlib,
)
from .reduction import DEFAULT_FUEL, NormalForm, field_value, format_trace_line, normalize
from .syntax import App, IntLit, LamRecError, Sel, Term, parse_term, print_term
from .types import parse_type, print_type, subtype

OK, NEGATIVE, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(args, plain: str, data: dict) -> None:
    if args.format == "json":
        print(json.dumps(data, sort_keys=True))
    else:
        print(plain)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _term(inline: Optional[str], path: Optional[str]) -> Term:
    if (inline is None) == (path is None):
        raise UsageError("give a term either with -e TEXT or as a FILE")
    source = inline if inline is not None else _read(path)
    return parse_term(source, defs=DEFS)


# ---------------------------------------------------------------------------
# demos


@dataclass(frozen=True)
class EvalDemo:
    name: str
    description: str
    expected: str
    run: Callable[[int], Optional[Term]]


def _field(obj: Term, label: str, fuel: int) -> Optional[Term]:
    return field_value(obj, label, fuel)


def _normal(t: Term, fuel: int) -> Optional[Term]:
    r = normalize(t, fuel)
    return r.term if isinstance(r, NormalForm) else None


EVAL_DEMOS = (
    EvalDemo(
        "merge-override", "the right record wins on a shared label", "{a = 2}",
        lambda fuel: _normal(parse_term("{a = 1} ++ {a = 2}"), fuel),
    ),
    EvalDemo(
        "point-get", "get of a point built at 3", "3",
        lambda fuel: _field(point_object(3), "get", fuel),
    ),
    EvalDemo(
        "movable-move", "X after moving a movable point at 3 by 4", "7",
        lambda fuel: _field(App(Sel(movable_object(3), "move"), IntLit(4)), "X", fuel),
    ),
    EvalDemo(
        "pipeline", "set, move and read back a composed stateful object", "3",
        lambda fuel: _normal(pipeline_term(), fuel),
    ),
)


def demo_manifest() -> list[tuple[str, str]]:
    """``(name, claim)`` for every demo in run order."""
    out = [(d.name, f"evaluates to {d.expected}") for d in EVAL_DEMOS]
    for entry in stdlib().values():
        for g in entry.goals:
            claim = ("" if g.expect else "no derivation of ") + print_type(g.type)
            out.append((g.name, claim))
    return out


def _goals():
    return {g.name: (e, g) for e in stdlib().values() for g in e.goals}


def run_demo(name: str, fuel: int) -> tuple[bool, str]:
    for d in EVAL_DEMOS:
        if d.name == name:
            value = d.run(fuel)
            shown = "<no value within fuel>" if value is None else print_term(value)
            return shown == d.expected, shown
    goals = _goals()
    if name not in goals:
        raise UsageError(f"unknown demo {name!r}; see `lamrec demo --list`")
    entry, g = goals[name]
    d = check(g.ctx, entry.subject(g), g.type, g.hints)
    if d is not None:
        verify(d)
    found = d is not None
    shown = f"found ({d.size()} nodes)" if found else "not found"
    return found == g.expect, shown


def _cmd_demo(args) -> int:
    if args.list:
        for name, claim in demo_manifest():
            # the claim is a shell comment, so every line runs as is
            print(f"demo {name}  # {claim}")
        return OK
    if args.name is None:
        raise UsageError("demo needs a NAME, 'all' or --list")
    names = [n for n, _ in demo_manifest()] if args.name == "all" else [args.name]
    ok_all = True
    results = {}
    for name in names:
        ok, shown = run_demo(name, args.fuel)
        ok_all &= ok
        results[name] = {"ok": ok, "result": shown}
        if args.format == "plain":
            print(shown if len(names) == 1 else f"{'ok  ' if ok else 'FAIL'} {name}: {shown}")
    if args.format == "json":
        print(json.dumps(results, sort_keys=True))
    return OK if ok_all else NEGATIVE


# ---------------------------------------------------------------------------
# commands


def _cmd_eval(args) -> int:
    t = _term(args.e, args.file)

    def trace(k, info, u):
        print(format_trace_line(k, info, u))

    r = normalize(t, args.fuel, trace=trace if args.trace else None)
    done = isinstance(r, NormalForm)
    _emit(args, print_term(r.term), {"term": print_term(r.term), "steps": r.steps, "normal_form": done})
    if not done:
        print(f"fuel exhausted after {r.steps} steps", file=sys.stderr)
        return NEGATIVE
    return OK


def _cmd_sub(args) -> int:
    result = subtype(parse_type(args.left), parse_type(args.right))
    _emit(args, "true" if result else "false", {"result": result})
    return OK if result else NEGATIVE


def _context(args) -> Context:
    bindings = {}
    if args.ctx:
        try:
            raw = json.loads(_read(args.ctx))
        except json.JSONDecodeError as e:
            raise UsageError(f"{args.ctx}: {e}") from None
        if not isinstance(raw, dict):
            raise UsageError(f"{args.ctx}: expected an object mapping names to types")
        bindings.update({x: parse_type(s) for x, s in raw.items()})
    for b in args.bind or ():
        name, sep, ty = b.partition(":")
        if not sep or not name.strip():
            raise UsageError(f"--bind expects NAME:TYPE, got {b!r}")
        bindings[name.strip()] = parse_type(ty)
    return Context(bindings)


def _hints(path: Optional[str]) -> Hints:
    if path is None:
        return Hints()
    try:
        raw = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: {e}") from None
    if not isinstance(raw, dict) or not isinstance(raw.get("args", []), list):
        raise UsageError(f'{path}: expected {{"args": [TYPE, ...]}}')
    return Hints(tuple(parse_type(s) for s in raw.get("args", [])))


def _split_positional(args, what: str) -> tuple[Optional[str], str]:
    pos = args.positional
    if args.e is not None:
        if len(pos) != 1:
            raise UsageError(f"with -e, {what} takes exactly one TYPE argument")
        return None, pos[0]
    if len(pos) != 2:
        raise UsageError(f"{what} takes FILE TYPE (or -e TEXT TYPE)")
    return pos[0], pos[1]


def _cmd_check(args) -> int:
    path, type_text = _split_positional(args, "check")
    t = _term(args.e, path)
    goal = parse_type(type_text)
    ctx = _context(args)
    d = check(ctx, t, goal, _hints(args.hints))
    if d is None:
        _emit(args, "not found", {"found": False})
        print(f"no derivation found for {print_type(goal)}", file=sys.stderr)
        return NEGATIVE
    j = verify(d)
    if args.out:
        dump_derivation(d, args.out)
    if args.format == "json":
        print(json.dumps(derivation_to_json(d), sort_keys=True))
    else:
        print(j)
    return OK


def _cmd_verify(args) -> int:
    try:
        d = load_derivation(args.file)
    except OSError as e:
        raise UsageError(f"cannot read {args.file}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{args.file}: {e}") from None
    try:
        j = verify(d)
    except VerificationError as e:
        print(f"invalid derivation: {e}", file=sys.stderr)
        _emit(args, "invalid", {"valid": False, "error": str(e)})
        return NEGATIVE
    _emit(args, str(j), {"valid": True, "judgment": str(j), "nodes": d.size()})
    return OK


def _cmd_enum(args) -> int:
    path, _ = (args.positional[0], None) if args.positional else (None, None)
    if len(args.positional) > 1:
        raise UsageError("enum takes at most one FILE")
    t = _term(args.e, path)
    atoms = [a for a in args.atoms.split(",") if a]
    labels = None if args.labels is None else [a for a in args.labels.split(",") if a]
    found = enumerate_types(_context(args), t, atoms, args.depth, labels)
    shown = [print_type(x) for x in found]
    _emit(args, "\n".join(shown), {"types": shown})
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lamrec", description="records, merge and intersection types")
    p.add_argument("--version", action="version", version=f"lamrec {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("plain", "json"), default="plain")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common], help="normalize a term")
    e.add_argument("file", nargs="?")
    e.add_argument("-e", metavar="TEXT", help="inline term")
    e.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    e.add_argument("--trace", action="store_true", help="print every reduction step")
    e.set_defaults(run=_cmd_eval)

    s = sub.add_parser("sub", parents=[common], help="decide LEFT <= RIGHT")
    s.add_argument("left")
    s.add_argument("right")
    s.set_defaults(run=_cmd_sub)

    typing = _Parser(add_help=False)
    typing.add_argument("-e", metavar="TEXT", help="inline term")
    typing.add_argument("--ctx", metavar="FILE", help='JSON object {"x": "TYPE"}')
    typing.add_argument("--bind", action="append", metavar="NAME:TYPE")

    c = sub.add_parser("check", parents=[common, typing], help="search for a derivation")
    c.add_argument("positional", nargs="+", metavar="[FILE] TYPE")
    c.add_argument("--hints", metavar="FILE", help='JSON object {"args": [TYPE, ...]}')
    c.add_argument("--out", metavar="FILE", help="write the derivation as JSON")
    c.set_defaults(run=_cmd_check)

    v = sub.add_parser("verify", parents=[common], help="check a derivation file")
    v.add_argument("file")
    v.set_defaults(run=_cmd_verify)

    n = sub.add_parser("enum", parents=[common, typing], help="types of a term in a finite universe")
    n.add_argument("positional", nargs="*", metavar="FILE")
    n.add_argument("--atoms", default="Int,Unit")
    n.add_argument("--depth", type=int, default=2)
    n.add_argument("--labels", help="comma-separated; default: labels of the term")
    n.set_defaults(run=_cmd_enum)

    d = sub.add_parser("demo", parents=[common], help="run the built-in examples")
    d.add_argument("name", nargs="?", help="a demo name or 'all'")
    d.add_argument("--list", action="store_true", help="print the demo manifest")
    d.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    d.set_defaults(run=_cmd_demo)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a command is required: eval, sub, check, verify, enum or demo")
        if getattr(args, "fuel", 1) <= 0:
            raise UsageError("--fuel must be positive")
        return args.run(args)
    except UsageError as e:
        print(f"lamrec: {e}", file=sys.stderr)
        return USAGE
    except LamRecError as e:
        print(f"lamrec: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
