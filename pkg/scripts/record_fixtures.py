#!/usr/bin/env python3
"""Regenerate tests/golden/ from the mock oracle.

Runs lexicon expansion and all five pipelines over the bundled mini-corpus
with the scripted mock, then writes the transcript and every derived
artifact. The test suite replays the transcript and expects identical bytes.
"""

import argparse
import sys
from pathlib import Path

from quantsem.kb import atomic_write
from quantsem.minicorpus import mock_table_path, produce_artifacts, write_artifacts
from quantsem.oracle import MockBackend, Oracle, Transcript


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parent.parent / "tests" / "golden")
    ap.add_argument("--mock-table", default=None)
    a = ap.parse_args(argv)
    oracle = Oracle(MockBackend.from_file(a.mock_table or mock_table_path()), Transcript())
    artifacts = produce_artifacts(oracle)
    out = Path(a.out)
    write_artifacts(artifacts, out)
    atomic_write(out / "transcript.jsonl", oracle.transcript.dumps())
    print(f"wrote {len(artifacts) + 1} files to {out} ({len(oracle.transcript)} oracle records)")
    sys.stdout.write(artifacts["table.txt"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
