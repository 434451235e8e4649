import json
import shlex
import subprocess
import sys
from pathlib import Path

import pytest

from lamrec.cli import NEGATIVE, OK, USAGE, demo_manifest, main

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sub_omega_is_not_a_record(capsys):
    code, out, _ = run(capsys, "sub", "w", "{a : w}")
    assert (code, out) == (NEGATIVE, "false\n")


def test_sub_true(capsys):
    code, out, _ = run(capsys, "sub", "{a : w}", "w")
    assert (code, out) == (OK, "true\n")
    code, out, _ = run(capsys, "sub", "--format", "json", "w", "w -> w")
    assert json.loads(out) == {"result": True}


def test_demo_movable_move(capsys):
    code, out, _ = run(capsys, "demo", "movable-move")
    assert (code, out) == (OK, "7\n")


def test_verify_corpus_file(capsys):
    code, out, err = run(capsys, "verify", str(CORPUS / "point_typing.json"))
    assert code == OK and not err
    assert out.startswith("|- \\x. \\self. {X = x, get = self.X} : Int -> ")


def test_eval_and_trace(capsys):
    code, out, _ = run(capsys, "eval", "-e", "(\\x. x + 1) 2", "--trace")
    assert code == OK
    assert out.splitlines() == ["step 1 [beta @ root]: 2 + 1", "step 2 [delta @ root]: 3", "3"]


def test_eval_knows_the_combinators(capsys):
    code, out, _ = run(capsys, "eval", "-e", "B (\\x. x + 1) (\\x. x + 2) 0")
    assert (code, out) == (OK, "3\n")


def test_eval_fuel_exhausted(capsys):
    code, out, err = run(capsys, "eval", "-e", "(\\x. x x) (\\x. x x)", "--fuel", "10")
    assert code == NEGATIVE and "fuel exhausted after 10 steps" in err
    code, out, _ = run(capsys, "eval", "--format", "json", "-e", "Y (\\f. f)", "--fuel", "5")
    assert json.loads(out)["normal_form"] is False


def test_eval_from_file(capsys, tmp_path):
    f = tmp_path / "t.lr"
    f.write_text("{a = 1, b = 2}.b\n")
    assert run(capsys, "eval", str(f))[:2] == (OK, "2\n")


def test_check_out_then_verify(capsys, tmp_path):
    out_file = tmp_path / "d.json"
    code, out, _ = run(capsys, "check", "-e", "\\x. {a = x}", "Int -> {a : Int}", "--out", str(out_file))
    assert code == OK and out.strip().endswith(": Int -> {a : Int}")
    code, out2, _ = run(capsys, "verify", str(out_file))
    assert code == OK and out2 == out


def test_check_with_context_and_hints(capsys, tmp_path):
    ctx = tmp_path / "ctx.json"
    ctx.write_text(json.dumps({"f": "Int -> Unit"}))
    code, out, _ = run(capsys, "check", "-e", "f 1", "Unit", "--ctx", str(ctx))
    assert code == OK
    code, _, _ = run(capsys, "check", "-e", "f 1", "Unit", "--bind", "f:Int -> Unit")
    assert code == OK
    hints = tmp_path / "h.json"
    hints.write_text(json.dumps({"args": ["Int -> Int"]}))
    term = "(\\f. \\x. f (f x)) (\\y. y + 1)"
    assert run(capsys, "check", "-e", term, "Int -> Int")[0] == NEGATIVE
    assert run(capsys, "check", "-e", term, "Int -> Int", "--hints", str(hints))[0] == OK


def test_check_not_found(capsys):
    code, out, err = run(capsys, "check", "-e", "()", "Int")
    assert code == NEGATIVE and out == "not found\n" and err


def test_verify_rejects_tampered_file(capsys, tmp_path):
    data = json.loads((CORPUS / "point_typing.json").read_text())
    data["type"] = "Int -> Int"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, out, err = run(capsys, "verify", str(bad))
    assert code == NEGATIVE and "invalid derivation" in err


def test_enum(capsys):
    code, out, _ = run(capsys, "enum", "-e", "{a = 1}", "--atoms", "Int", "--depth", "2")
    assert code == OK
    assert "{a : Int}" in out.splitlines()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["eval"],
        ["eval", "-e", "x ++ y"],
        ["eval", "-e", "(x"],
        ["eval", "-e", "1", "--fuel", "0"],
        ["eval", "/nonexistent/file"],
        ["sub", "Int"],
        ["sub", "Int ->", "Int"],
        ["check", "-e", "1"],
        ["check", "-e", "1", "Int", "--bind", "nocolon"],
        ["verify", "/nonexistent.json"],
        ["demo"],
        ["demo", "no-such-demo"],
        ["enum", "a", "b"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == USAGE
    assert err.startswith("lamrec: ")


def test_verify_malformed_json_is_an_input_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", str(bad))[0] == USAGE


def test_manifest_lines_are_runnable(capsys):
    code, out, _ = run(capsys, "demo", "--list")
    lines = out.splitlines()
    assert code == OK and len(lines) == len(demo_manifest())
    cheap = [l for l in lines if any(k in l for k in ("merge-override", "point-get", "mr1-mr3"))]
    assert len(cheap) == 4
    for line in cheap:
        assert run(capsys, *shlex.split(line, comments=True))[0] == OK


def test_output_is_deterministic():
    argv = [sys.executable, "-m", "lamrec", "check", "-e", "\\x. \\self. {X = x, get = self.X}",
            "Int -> (w -> {X : Int}) & ({X : Int} -> {X : Int, get : Int})", "--format", "json"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert capsys.readouterr().out.startswith("lamrec ")
