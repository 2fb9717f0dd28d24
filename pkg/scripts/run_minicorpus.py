#!/usr/bin/env python3
"""Expand the lexicon on the mini-corpus, then score every pipeline.

By default the scripted mock answers; ``--oracle http`` uses the live
endpoint configured by QUANTSEM_LLM_ENDPOINT / QUANTSEM_LLM_MODEL /
QUANTSEM_LLM_KEY, and ``--oracle replay --transcript F`` re-runs a recorded
session.
"""

import argparse
import sys
from pathlib import Path

from quantsem.minicorpus import mock_table_path, produce_artifacts, write_artifacts
from quantsem.oracle import make_oracle


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--oracle", choices=("mock", "http", "replay"), default="mock")
    ap.add_argument("--transcript", help="transcript to replay or append to")
    ap.add_argument("--out", default="minicorpus_run", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args(argv)
    oracle = make_oracle(a.oracle, a.transcript, mock_table_path())
    artifacts = produce_artifacts(oracle, workers=a.workers)
    write_artifacts(artifacts, Path(a.out))
    sys.stdout.write(artifacts["table.txt"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
