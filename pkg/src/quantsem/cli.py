"""Command-line interface: ``quantsem {expand,run,eval,inspect}``.

Exit status 0 on success, 1 on usage errors (help is printed), 2 on
runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .evaluation import EvalError, load_gold
from .expansion import expand_corpus
from .frames import frames_to_pairs, interpret, build_frames
from .kb import KBError, atomic_write, load_kb, load_seed_kb, save_kb
from .oracle import OracleError, make_oracle
from .parser import Chart, best_parse, build_tree, tokenize
from .pipeline import (PIPELINES, PipelineError, RunReport, ingest_dataset, loads_forms,
                       pipeline_config, run_corpus, score_forms, summarize)

log = logging.getLogger("quantsem")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(1, f"\n{self.prog}: error: {message}\n")


def _kb(path, auto_register=False):
    return load_kb(path, auto_register) if path else load_seed_kb(auto_register)


def _oracle_args(p):
    p.add_argument("--oracle", choices=("mock", "http", "replay"), default="mock")
    p.add_argument("--mock-table", help="mock rule table (default: the packaged table)")
    p.add_argument("--transcript", help="transcript file; replay reads it, other modes append")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="quantsem", description="Quantity and sign extraction from comparative statements.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="run a pipeline over a dataset and score it")
    p.add_argument("--pipeline", required=True, choices=sorted(PIPELINES))
    p.add_argument("--kb", help="KB file (default: packaged seed KB)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--gold")
    p.add_argument("--report", required=True, help="output directory")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--field", default="para", help="dotted record field holding the fact text")
    p.add_argument("--split", default="test")
    _oracle_args(p)

    p = sub.add_parser("expand", help="diagnose and expand the lexicon over a dataset")
    p.add_argument("--kb", help="KB file (default: packaged seed KB)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-kb", required=True)
    p.add_argument("--report", required=True, help="JSON-lines outcome report")
    p.add_argument("--delta", help="write the new semtrans records here")
    p.add_argument("--field", default="para")
    p.add_argument("--split", default="train")
    _oracle_args(p)

    p = sub.add_parser("eval", help="score an emitted forms file against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--forms", required=True)
    p.add_argument("--kb", help="KB whose taxonomy and label table are used")
    p.add_argument("--report", required=True, help="output directory")
    p.add_argument("--alpha", type=float, default=0.5)

    p = sub.add_parser("inspect", help="show the chart, parse or frames of a sentence")
    p.add_argument("what", choices=("parse", "frames"))
    p.add_argument("sentence")
    p.add_argument("--kb")
    return ap


def cmd_run(a) -> int:
    if a.workers < 1:
        raise UsageError("--workers must be at least 1")
    cfg = pipeline_config(a.pipeline, a.alpha)
    kb = _kb(a.kb)
    facts = ingest_dataset(a.dataset, a.field, a.split)
    gold = load_gold(a.gold) if a.gold else None
    oracle = make_oracle(a.oracle, a.transcript, a.mock_table) if cfg.uses_oracle else None
    report = run_corpus(facts, cfg, kb, oracle, gold, workers=a.workers, name=a.pipeline)
    report.write(a.report)
    sys.stdout.write(report.summary_text())
    return 0


def cmd_expand(a) -> int:
    kb = _kb(a.kb, auto_register=True)
    facts = ingest_dataset(a.dataset, a.field, a.split)
    oracle = make_oracle(a.oracle, a.transcript, a.mock_table)
    report = expand_corpus(facts, kb, oracle)
    save_kb(kb, a.out_kb)
    atomic_write(a.report, report.dumps())
    if a.delta:
        atomic_write(a.delta, report.delta_text())
    t = report.totals()
    print(f"facts {t['facts']}  diagnoses {t['diagnoses']}  relevant {t['relevant_existing']}  "
          f"constructed {t['constructed']}  failed {t['failed']}  new semtrans {t['new_semtrans']}  "
          f"errors {t['errors']}")
    return 0


def cmd_eval(a) -> int:
    kb = _kb(a.kb)
    gold = load_gold(a.gold)
    forms = loads_forms(Path(a.forms).read_text(encoding="utf-8"), kb)
    if not forms:
        raise EvalError("forms file is empty")
    rows = [(f"#{i + 1}", text, pairs) for i, (text, pairs) in enumerate(forms)]
    scored, unscored = score_forms(rows, gold, kb, a.alpha)
    report = RunReport(Path(a.forms).stem, [], scored, summarize(scored), unscored)
    out = Path(a.report)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "scores.jsonl", report.scores_text())
    atomic_write(out / "summary.txt", report.summary_text())
    sys.stdout.write(report.summary_text())
    return 0


def cmd_inspect(a) -> int:
    kb = _kb(a.kb)
    toks = tokenize(a.sentence, kb)
    chart = Chart(toks)
    trees = [build_tree(e, toks) for e in chart.spanning()]
    tree = best_parse(trees)
    if a.what == "parse":
        print("tokens:", " ".join(f"{i}:{t.surface}" for i, t in enumerate(toks)))
        print(chart.dump())
        print(f"spanning parses: {len(trees)}")
    if tree is None:
        print("no parse")
        return 0
    print(tree.category, tree.bracket())
    if a.what == "parse":
        print("SUBJECT:", tree.text(tree.subject))
        if tree.category == "ComparativeSentence":
            print("NOUN:", tree.text(tree.noun))
        for el in tree.elements:
            print(f"element: {el.kind} {el.text(toks)}")
        return 0
    fs = build_frames(interpret(tree, kb), tree)
    sys.stdout.write(fs.serialize())
    diags: list[str] = []
    pairs = frames_to_pairs(fs, diags)
    print(" ".join(p.to_sexp_text() for p in pairs) or "()")
    for d in diags:
        print(";;", d)
    return 0


COMMANDS = {"run": cmd_run, "expand": cmd_expand, "eval": cmd_eval, "inspect": cmd_inspect}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if a.command is None:
        ap.print_help(sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except UsageError as e:
        ap._subparsers._group_actions[0].choices[a.command].print_help(sys.stderr)
        print(f"quantsem {a.command}: error: {e}", file=sys.stderr)
        return 1
    except (OSError, KBError, OracleError, PipelineError, EvalError, ValueError) as e:
        print(f"quantsem {a.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
