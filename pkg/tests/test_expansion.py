import pytest

from conftest import mock_oracle, replay_oracle
from quantsem.expansion import (CHAIN_EXHAUSTED, CONSTRUCTED, FAILED, RELEVANT_EXISTING, SIGN_UNDETERMINED,
                                CandidatePair, comparative_adjectives, construct_new_semtrans, diagnose,
                                expand_corpus, harvest_candidates)
from quantsem.kb import load_seed_kb
from quantsem.minicorpus import corpus_path
from quantsem.oracle import make_oracle
from quantsem.pipeline import ingest_dataset

FACT = "some fact"


@pytest.fixture
def oracle():
    return make_oracle("mock")


def roles(o):
    return [(r, p.get("word")) for r, p in o.call_log]


# ---- diagnose --------------------------------------------------------------

def test_relevant_existing(kb, oracle):
    out = diagnose("cooler", FACT, kb, oracle, "F1")
    assert out.result == RELEVANT_EXISTING
    assert [(e.frame_type, e.quantity_type) for e in out.entries] == [("FN_Temperature", "Temperature")]
    assert oracle.calls == {"relevance": 1}


def test_no_relevant_triggers_construction(kb, oracle):
    before = kb.dumps()
    out = diagnose("stronger", FACT, kb, oracle, "F05")
    assert out.trigger == "no-relevant" and out.result == CONSTRUCTED
    [e] = out.entries
    assert (e.frame_type, e.quantity_type, e.relation) == ("FN_Level_of_force_exertion", "Strength", "greaterThan")
    assert e.provenance.fact_id == "F05" and e.provenance.timestamp.startswith("2025-01-01T")
    assert kb.dumps() != before and e in kb.semtrans_for("stronger", "adjective")


def test_no_semtrans_trigger(kb, oracle):
    assert diagnose("denser", FACT, kb, oracle).trigger == "no-semtrans"


def test_no_comparison_semtrans_trigger(kb, oracle):
    # "farther" carries only a value semtrans
    out = diagnose("farther", FACT, kb, oracle)
    assert out.trigger == "no-comparison-semtrans"


# ---- harvest -----------------------------------------------------------------

def test_harvest_dense(kb, oracle):
    assert harvest_candidates("dense", FACT, kb, oracle, "denser") == [
        CandidatePair("FN_Misc", "Density", "root")]


def test_harvest_farther(kb, oracle):
    got = harvest_candidates("farther", FACT, kb, oracle, "closer", "antonym(farther)")
    assert got == [CandidatePair("FN_Gradable_proximity", "Distance", "antonym(farther)")]
    # relevance is judged against the word under diagnosis
    assert oracle.call_log[-1][1]["word"] == "closer"


def test_harvest_filters_irrelevant(kb, oracle):
    assert harvest_candidates("strong", FACT, kb, oracle, "stronger") == []
    assert oracle.calls["relevance"] == 2


# ---- construction chain ------------------------------------------------------

def test_stage_a_root(kb, oracle):
    built, src = construct_new_semtrans("denser", FACT, kb, oracle)
    assert src == "root" and built[0].quantity_type == "Density"
    assert oracle.calls["antonym"] == 0


def test_stage_b_antonym(kb, oracle):
    built, src = construct_new_semtrans("closer", FACT, kb, oracle)
    assert src == "antonym(farther)"
    assert (built[0].quantity_type, built[0].relation) == ("Distance", "lessThan")
    # root "close" is tried first and rejected
    assert roles(oracle)[:2] == [("relevance", "closer"), ("antonym", "closer")]
    # the sign is asked with the original adjective
    assert [p["word"] for r, p in oracle.call_log if r == "sign"] == ["closer"]


def test_stage_c_antonym_root(kb, oracle):
    built, src = construct_new_semtrans("stronger", FACT, kb, oracle)
    assert src == "antonym_root(weak)"
    assert built[0].quantity_type == "Strength" and built[0].relation == "greaterThan"
    harvested = [p["frame"] for r, p in oracle.call_log if r == "relevance"]
    assert harvested == ["usefulness", "expertise", "level of force exertion"]


def test_stage_d_exhausted_no_write(kb, oracle):
    before = kb.dumps()
    built, src = construct_new_semtrans("gentler", FACT, kb, oracle)
    assert (built, src) == ([], CHAIN_EXHAUSTED)
    assert kb.dumps() == before
    out = diagnose("gentler", FACT, kb, oracle)
    assert out.result == FAILED and out.stage == CHAIN_EXHAUSTED and out.entries == []


def test_sign_undetermined_no_write(kb):
    o = mock_oracle('(mock relevance :reply "yes")\n(mock sign :reply "maybe")')
    before = kb.dumps()
    out = diagnose("denser", FACT, kb, o)
    assert out.result == FAILED and out.stage == SIGN_UNDETERMINED
    assert kb.dumps() == before
    assert any("dropping" in d for d in o.diagnostics)


def test_antonym_dedup(kb):
    o = mock_oracle('(mock antonym :reply "farther, far, farther")\n(mock relevance :reply "no")')
    assert construct_new_semtrans("closer", FACT, kb, o) == ([], CHAIN_EXHAUSTED)
    # close (root), farther, far; the root of farther is far and is not harvested twice
    assert o.calls["relevance"] == 3


# ---- corpus ------------------------------------------------------------------

def test_comparative_adjectives(kb):
    assert comparative_adjectives("Objects that are closer have stronger gravity than objects.", kb) == [
        "closer", "stronger"]


def test_sequential_visibility(kb, oracle):
    facts = [("F05", "If the current passing through the circuit breaker increases, the electromagnet becomes stronger."),
             ("F16", "The closer objects are to each other, the stronger the gravitational pull between them.")]
    rep = expand_corpus(facts, kb, oracle)
    strong = [o for o in rep.outcomes if o.adjective == "stronger"]
    assert [o.result for o in strong] == [CONSTRUCTED, RELEVANT_EXISTING]
    assert strong[1].entries == strong[0].entries
    assert [e.word for e in rep.delta] == ["stronger", "closer"]


def test_delta_excludes_preexisting(kb, oracle):
    facts = [("F07", "Denser rocks are heavier than rocks.")]
    expand_corpus(facts, kb, oracle)
    again = expand_corpus(facts, kb, make_oracle("mock"))
    assert again.delta == [] and again.totals()[RELEVANT_EXISTING] == 2


def test_empty_corpus(kb, oracle):
    before = kb.dumps()
    rep = expand_corpus([], kb, oracle)
    assert rep.totals()["facts"] == 0 and rep.delta == [] and kb.dumps() == before
    assert oracle.backend_calls == 0


def test_oracle_error_recorded(kb):
    from quantsem.oracle import Oracle, ReplayBackend

    rep = expand_corpus([("X1", "Slopes are steep.")], kb, Oracle(ReplayBackend()))
    assert rep.errors and rep.errors[0]["fact_id"] == "X1"


def test_auto_register_restored(kb, oracle):
    kb.auto_register = False
    expand_corpus([("F07", "Denser rocks are heavier than rocks.")], kb, oracle)
    assert kb.auto_register is False


def test_golden_replay(golden):
    kb = load_seed_kb()
    rep = expand_corpus(ingest_dataset(corpus_path()), kb, replay_oracle())
    assert rep.dumps() == (golden / "expansion_report.jsonl").read_text()
    assert rep.delta_text() == (golden / "kb_delta.sx").read_text()
    assert kb.dumps() == (golden / "expanded_kb.sx").read_text()


def test_mock_matches_replay():
    a, b = load_seed_kb(), load_seed_kb()
    facts = ingest_dataset(corpus_path())
    assert expand_corpus(facts, a, make_oracle("mock")).dumps() == expand_corpus(facts, b, replay_oracle()).dumps()
    assert a == b
