"""Write one derivation file per stdlib typing goal into corpus/.

Usage: python scripts/build_corpus.py [OUTDIR]

Goals whose JSON would exceed the size limit are skipped; the derivation
is a DAG in memory and the tree-shaped JSON repeats shared subtrees.
"""

import json
import sys
from pathlib import Path

from lamrec.assignment import check, derivation_to_json, verify
from lamrec.encodings import stdlib

MAX_BYTES = 8_000_000


def corpus_name(goal_name: str) -> str:
    return goal_name.replace("-", "_") + ".json"


def main(outdir: str = "corpus") -> int:
    out = Path(outdir)
    out.mkdir(exist_ok=True)
    for entry in stdlib().values():
        for g in entry.goals:
            if not g.expect:
                continue
            d = check(g.ctx, entry.subject(g), g.type, g.hints)
            if d is None:
                print(f"FAILED {g.name}", file=sys.stderr)
                return 1
            verify(d)
            text = json.dumps(derivation_to_json(d), indent=1) + "\n"
            if len(text) > MAX_BYTES:
                print(f"skip   {g.name}: {len(text) / 1e6:.0f} MB as a tree")
                continue
            (out / corpus_name(g.name)).write_text(text)
            print(f"wrote  {corpus_name(g.name)} ({d.size()} nodes, {len(text) // 1000} kB)")
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
