import json

import pytest

from conftest import mock_oracle, replay_oracle
from quantsem.evaluation import load_gold
from quantsem.frames import QuantitySign as QS
from quantsem.kb import load_seed_kb
from quantsem.minicorpus import corpus_path, gold_path, produce_artifacts
from quantsem.oracle import Oracle, ReplayBackend, make_oracle
from quantsem.pipeline import (PIPELINES, DatasetError, GroundingFact, PipelineConfig, PipelineError,
                               flatten_cause_effect, ingest_dataset, loads_forms, pipeline_config,
                               read_llm_form, run_corpus, run_fact, select_kb)

COOLING = "When particles move more slowly, temperature is lower and an object feels cooler."


def fact(text, fid="X1"):
    return GroundingFact(fid, text)


# ---- ingest ---------------------------------------------------------------------

def test_ingest_dedup_and_nested_field(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text("\n".join(json.dumps(r) for r in [
        {"id": "a", "q": {"para": "Hot  air rises."}},
        {"id": "b", "q": {"para": "Hot air rises."}},
        {"q": {"para": "Cold air sinks."}},
    ]) + "\n")
    facts = ingest_dataset(p, "q.para", "dev")
    assert [(f.id, f.text) for f in facts] == [("a", "Hot air rises."), ("dev-3", "Cold air sinks.")]


@pytest.mark.parametrize("line", ['{"id": 1}', "{oops", '{"para": 3}'])
def test_ingest_errors(tmp_path, line):
    p = tmp_path / "d.jsonl"
    p.write_text(line + "\n")
    with pytest.raises(DatasetError):
        ingest_dataset(p)


def test_minicorpus_has_twenty_facts():
    assert len(ingest_dataset(corpus_path())) == 20


# ---- configs --------------------------------------------------------------------

def test_config_invariants():
    assert PIPELINES["symbolic"].uses_oracle is False
    assert PipelineConfig("symbolic", True, True) == PipelineConfig("symbolic")
    assert not PipelineConfig("llm_only", True, True).use_rephrase
    assert PIPELINES["hybrid-lex"].uses_oracle is False
    assert all(PIPELINES[n].uses_oracle for n in ("hybrid-rephrase", "hybrid-both", "llm"))
    assert pipeline_config("hybrid-both", 0.25).alpha == 0.25
    with pytest.raises(ValueError):
        PipelineConfig("magic")


def test_select_kb_filters_expanded(kb):
    expand_kb = kb.copy()
    from quantsem.expansion import diagnose

    diagnose("denser", "f", expand_kb, make_oracle("mock"))
    assert select_kb(expand_kb, PIPELINES["hybrid-both"]).semtrans_for("denser", "adjective")
    assert select_kb(expand_kb, PIPELINES["hybrid-rephrase"]).semtrans_for("denser", "adjective") == []
    assert select_kb(expand_kb, PIPELINES["symbolic"]).semtrans_for("denser", "adjective") == []


# ---- run_fact ---------------------------------------------------------------------

def test_symbolic_on_template(kb):
    lf = run_fact(fact("Particles that move more slowly are cooler than particles."), PIPELINES["symbolic"], kb)
    assert lf.pairs == [QS("Speed", "-"), QS("Temperature", "-")]


def test_symbolic_non_template_gives_nothing(kb):
    lf = run_fact(fact(COOLING), PIPELINES["symbolic"], kb)
    assert lf.pairs == [] and lf.diagnostics


def test_rephrase_pipeline(kb):
    lf = run_fact(fact(COOLING), PIPELINES["hybrid-rephrase"], kb, make_oracle("mock"))
    assert lf.pairs == [QS("Speed", "-"), QS("Temperature", "-")]
    assert lf.sentences == ["Particles that move more slowly are cooler than particles."]


def test_rephrase_needs_oracle(kb):
    with pytest.raises(PipelineError):
        run_fact(fact(COOLING), PIPELINES["hybrid-rephrase"], kb)
    with pytest.raises(PipelineError):
        run_fact(fact(COOLING), PIPELINES["llm"], kb)


def test_llm_valid(kb):
    lf = run_fact(fact(COOLING), PIPELINES["llm"], kb, make_oracle("mock"))
    assert lf.pairs == [QS("Speed", "-"), QS("Temperature", "-")]
    assert lf.cause_effect.valid


def test_llm_missing_effect_sign(kb):
    lf = run_fact(fact("Older layers are found deeper."), PIPELINES["llm"], kb, make_oracle("mock"))
    assert lf.cause_effect.invalid == "missing effect-sign"
    assert lf.pairs == [QS("Age", "+"), QS("Depth", "none")]
    assert lf.serialize().endswith(";; invalid: missing effect-sign")
    assert "(effect-sign" not in lf.serialize()


def test_llm_leading_chatter(kb):
    o = mock_oracle('(mock extract :reply "Sure! ((cause age) (effect depth) (cause-sign +) (effect-sign +))")')
    lf = run_fact(fact("x"), PIPELINES["llm"], kb, o)
    assert lf.cause_effect.valid and lf.pairs == [QS("Age", "+"), QS("Depth", "+")]


@pytest.mark.parametrize("raw,reason", [
    ("no idea", "unreadable"),
    ("((cause a) (effect b) (cause-sign up) (effect-sign +))", "bad sign 'up' in cause-sign"),
    ("((cause a b) (effect c) (cause-sign +) (effect-sign +))", "cause arity mismatch (2 quantities, 1 signs)"),
])
def test_llm_invalid_reasons(raw, reason):
    assert read_llm_form(raw).invalid == reason


def test_unmapped_label(kb):
    pairs = flatten_cause_effect(read_llm_form("((cause zorp) (effect speed) (cause-sign +) (effect-sign -))"), kb)
    assert pairs == [QS("unmapped:zorp", "+"), QS("Speed", "-")]


def test_loads_forms_roundtrip(kb):
    lfs = [run_fact(fact(COOLING), PIPELINES["llm"], kb, make_oracle("mock")),
           run_fact(fact("Particles that move more slowly are cooler than particles.", "X2"),
                    PIPELINES["symbolic"], kb)]
    text = "".join(lf.serialize() + "\n" for lf in lfs)
    assert [p for _, p in loads_forms(text, kb)] == [lf.pairs for lf in lfs]


def test_loads_forms_errors(kb):
    with pytest.raises(PipelineError):
        loads_forms("(nope (Speed +))", kb)
    with pytest.raises(PipelineError):
        loads_forms('("a" (Speed))', kb)


# ---- corpus runs ------------------------------------------------------------------------

def test_empty_corpus(kb):
    with pytest.raises(PipelineError):
        run_corpus([], PIPELINES["symbolic"], kb, None)


def test_symbolic_makes_no_oracle_calls(kb):
    o = Oracle(ReplayBackend())
    run_corpus(ingest_dataset(corpus_path()), PIPELINES["symbolic"], kb, o, load_gold(gold_path()))
    assert o.calls.total() == 0
    run_corpus(ingest_dataset(corpus_path()), PIPELINES["hybrid-lex"], kb, o, load_gold(gold_path()))
    assert o.calls.total() == 0


def test_oracle_failure_is_scored_empty(kb):
    rep = run_corpus([fact(COOLING, "F01")], PIPELINES["hybrid-rephrase"], kb, Oracle(ReplayBackend()),
                     load_gold(gold_path()))
    assert rep.errors and rep.forms[0].error
    assert rep.summary.qc == 0.0


@pytest.fixture(scope="module")
def replayed():
    return produce_artifacts(replay_oracle())


def test_golden_replay(replayed, golden):
    for rel, text in replayed.items():
        assert text == (golden / rel).read_text(encoding="utf-8"), rel


def test_mock_run_matches_replay(replayed):
    assert produce_artifacts(make_oracle("mock")) == replayed


def test_workers_match_sequential(replayed):
    assert produce_artifacts(replay_oracle(), workers=4) == replayed


def test_ordering(replayed):
    qc = {}
    for name in PIPELINES:
        summary = json.loads(replayed[f"runs/{name}/scores.jsonl"].splitlines()[-1])["summary"]
        qc[name] = summary["QC"]
    assert qc["hybrid-both"] >= max(qc["hybrid-lex"], qc["hybrid-rephrase"])
    assert min(qc["hybrid-lex"], qc["hybrid-rephrase"]) >= qc["symbolic"]


def test_report_write(tmp_path, kb):
    rep = run_corpus(ingest_dataset(corpus_path()), PIPELINES["symbolic"], kb, None, load_gold(gold_path()))
    rep.write(tmp_path / "out")
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["forms.sx", "scores.jsonl", "summary.txt"]
    assert len((tmp_path / "out" / "forms.sx").read_text().splitlines()) == 20


def test_run_is_deterministic():
    kb = load_seed_kb()
    facts = ingest_dataset(corpus_path())
    a = run_corpus(facts, PIPELINES["symbolic"], kb, None).forms_text()
    b = run_corpus(facts, PIPELINES["symbolic"], kb, None).forms_text()
    assert a == b
