import json
from pathlib import Path

import pytest

from lamrec.assignment import derivation_to_json, load_derivation, verify
from lamrec.encodings import stdlib
from lamrec.types import type_eq

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
FILES = sorted(CORPUS.glob("*.json"))


def test_corpus_is_present():
    assert len(FILES) >= 15


@pytest.mark.parametrize("path", FILES, ids=lambda p: p.stem)
def test_corpus_file_verifies(path):
    d = load_derivation(str(path))
    verify(d)


@pytest.mark.parametrize("path", [p for p in FILES if p.stat().st_size < 200_000], ids=lambda p: p.stem)
def test_corpus_round_trips(path):
    raw = json.loads(path.read_text())
    assert derivation_to_json(load_derivation(str(path))) == raw


def test_corpus_files_match_stdlib_goals():
    goals = {g.name.replace("-", "_"): g for e in stdlib().values() for g in e.goals}
    for path in FILES:
        g = goals[path.stem]
        assert type_eq(verify(load_derivation(str(path))).type, g.type)
