"""The bundled 20-fact mini-corpus and the artifacts derived from it.

``produce_artifacts`` runs expansion and then every pipeline through one
oracle, returning each output file's text keyed by relative path. Recording
with the mock and replaying the resulting transcript must give the same
bytes.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .evaluation import load_gold, table
from .expansion import expand_corpus
from .frames import frames_to_pairs, sentence_frames
from .kb import atomic_write, load_seed_kb
from .oracle import Oracle
from .pipeline import PIPELINES, ingest_dataset, run_corpus

COOLING_REPHRASE = "Particles that move more slowly are cooler than particles."


def _data(name: str) -> Path:
    return Path(str(resources.files("quantsem").joinpath("data", name)))


def corpus_path() -> Path:
    return _data("minicorpus.jsonl")


def gold_path() -> Path:
    return _data("minicorpus_gold.sx")


def mock_table_path() -> Path:
    return _data("mock_oracle.sx")


def cooling_frames_text() -> str:
    kb = load_seed_kb()
    fs = sentence_frames(COOLING_REPHRASE, kb)
    pairs = " ".join(p.to_sexp_text() for p in frames_to_pairs(fs))
    return fs.serialize() + f";; pairs\n({pairs})\n"


def produce_artifacts(oracle: Oracle, workers: int = 1) -> dict[str, str]:
    kb = load_seed_kb()
    facts = ingest_dataset(corpus_path())
    report = expand_corpus(facts, kb, oracle)
    out = {
        "expansion_report.jsonl": report.dumps(),
        "kb_delta.sx": report.delta_text(),
        "expanded_kb.sx": kb.dumps(),
        "frames_cooling.sx": cooling_frames_text(),
    }
    gold = load_gold(gold_path())
    rows = []
    for name, cfg in PIPELINES.items():
        run = run_corpus(facts, cfg, kb, oracle, gold, workers=workers, name=name)
        out[f"runs/{name}/forms.sx"] = run.forms_text()
        out[f"runs/{name}/scores.jsonl"] = run.scores_text()
        out[f"runs/{name}/summary.txt"] = run.summary_text()
        rows.append((name, run.summary))
    out["table.txt"] = table(rows)
    return out


def write_artifacts(artifacts: dict[str, str], root) -> None:
    root = Path(root)
    for rel, text in artifacts.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        atomic_write(p, text)
