"""Lexicon diagnosis and new-semtrans construction.

For each comparative adjective in a grounding fact: keep the existing
comparison semtrans the oracle judges relevant, or build new ones by
borrowing value-bearing frame/quantity pairs from the root form, then each
antonym, then each antonym's root. New entries go straight into the KB so
later diagnoses in the same run see them.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

from .frames import render_term, sign_to_relation
from .kb import KnowledgeBase, Provenance, SemtransEntry, filter_comparison
from .oracle import Oracle, OracleError, SignUndetermined
from .parser import identify_comparatives, is_template_sentence, tokenize

log = logging.getLogger(__name__)

COMPARISON_ROLES = (("isa", ":EVENT", "ComparisonEvent"),
                    ("comparer", ":EVENT", ":SUBJECT"),
                    ("comparee", ":EVENT", ":NOUN"))

RELEVANT_EXISTING = "relevant_existing"
CONSTRUCTED = "constructed"
FAILED = "failed"
CHAIN_EXHAUSTED = "chain-exhausted"
SIGN_UNDETERMINED = "sign-undetermined"


@dataclass(frozen=True)
class CandidatePair:
    frame_type: str
    quantity_type: str
    source: str  # root | antonym(<w>) | antonym_root(<w>)


@dataclass
class DiagnosisOutcome:
    adjective: str
    fact_id: str
    result: str
    entries: list[SemtransEntry] = field(default_factory=list)
    stage: str | None = None       # last stage for failures
    trigger: str | None = None     # why construction was entered
    source: str | None = None      # which chain stage produced the entries
    calls: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "fact_id": self.fact_id,
            "adjective": self.adjective,
            "result": self.result,
            "stage": self.stage,
            "trigger": self.trigger,
            "source": self.source,
            "entries": [_entry_json(e) for e in self.entries],
            "calls": dict(sorted(self.calls.items())),
        }


def _entry_json(e: SemtransEntry) -> dict:
    return {"word": e.word, "pos": e.pos, "frame_type": e.frame_type,
            "quantity_type": e.quantity_type, "relation": e.relation}


@dataclass
class ExpansionReport:
    outcomes: list[DiagnosisOutcome] = field(default_factory=list)
    delta: list[SemtransEntry] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    facts: int = 0

    def totals(self) -> dict:
        c = Counter(o.result for o in self.outcomes)
        return {"facts": self.facts, "diagnoses": len(self.outcomes),
                RELEVANT_EXISTING: c[RELEVANT_EXISTING], CONSTRUCTED: c[CONSTRUCTED],
                FAILED: c[FAILED], "new_semtrans": len(self.delta), "errors": len(self.errors)}

    def dumps(self) -> str:
        lines = [json.dumps(o.to_json(), sort_keys=True) for o in self.outcomes]
        lines += [json.dumps({"error": e}, sort_keys=True) for e in self.errors]
        lines.append(json.dumps({"totals": self.totals()}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def delta_text(self) -> str:
        from .sexpr import dumps

        return "".join(dumps(e.to_sexp()) + "\n" for e in self.delta)


def _calls_since(oracle: Oracle, before: Counter) -> dict[str, int]:
    return {k: v for k, v in (oracle.calls - before).items() if v}


def harvest_candidates(word: str, fact: str, kb: KnowledgeBase, oracle: Oracle,
                       adjective: str | None = None, source: str = "root") -> list[CandidatePair]:
    """Relevant (frame, quantity) pairs from ``word``'s value-bearing semtrans.

    Relevance is judged against ``adjective`` (the word under diagnosis),
    which defaults to ``word`` itself.
    """
    adjective = adjective or word
    seen, out = set(), []
    for pos in ("adjective", "adverb"):
        for s in kb.semtrans_for(word, pos):
            if s.value is None:
                continue
            q = kb.quantity_type_of_value(s.value)
            if q is None or (s.frame_type, q) in seen:
                continue
            seen.add((s.frame_type, q))
            if oracle.judge_relevance(render_term(kb, s.frame_type), render_term(kb, q), adjective, fact):
                out.append(CandidatePair(s.frame_type, q, source))
    return out


def _chain(adjective: str, fact: str, kb: KnowledgeBase, oracle: Oracle, pos: str):
    """Yield candidate lists stage by stage; the caller stops at the first non-empty one."""
    harvested: set[str] = set()

    def harvest(word, source):
        harvested.add(word)
        return harvest_candidates(word, fact, kb, oracle, adjective, source)

    lex = kb.lookup_word(adjective, pos)
    if lex is not None and lex.root != adjective:
        yield harvest(lex.root, "root")
    antonyms = oracle.antonyms(adjective)
    for a in antonyms:
        if a not in harvested:
            yield harvest(a, f"antonym({a})")
    for a in antonyms:
        lex_a = kb.lookup_word(a, pos) or kb.lookup_word(a, "adverb")
        if lex_a is not None and lex_a.root != a and lex_a.root not in harvested:
            yield harvest(lex_a.root, f"antonym_root({lex_a.root})")


def construct_new_semtrans(adjective: str, fact: str, kb: KnowledgeBase, oracle: Oracle,
                           fact_id: str = "", pos: str = "adjective"):
    """Entries built and added, plus the chain stage that produced them.

    Returns ``([], CHAIN_EXHAUSTED)`` when no stage yields a relevant pair and
    ``([], SIGN_UNDETERMINED)`` when every found pair lost its sign.
    """
    pairs: list[CandidatePair] = []
    for cands in _chain(adjective, fact, kb, oracle, pos):
        if cands:
            pairs = cands
            break
    if not pairs:
        return [], CHAIN_EXHAUSTED
    built = []
    for p in pairs:
        try:
            sign, key = oracle.influence_sign(render_term(kb, p.quantity_type), adjective, fact)
        except SignUndetermined as e:
            oracle.note(f"dropping ({p.frame_type}, {p.quantity_type}) for {adjective}: {e}")
            continue
        entry = SemtransEntry(
            word=adjective, pos=pos, frame_type=p.frame_type, quantity_type=p.quantity_type,
            relation=sign_to_relation(sign), roles=COMPARISON_ROLES,
            provenance=Provenance("expanded", fact_id, oracle.timestamp_of(key)),
        )
        kb.add_semtrans(entry)
        built.append(entry)
    if not built:
        return [], SIGN_UNDETERMINED
    return built, pairs[0].source


def diagnose(adjective: str, fact: str, kb: KnowledgeBase, oracle: Oracle,
             fact_id: str = "", pos: str = "adjective") -> DiagnosisOutcome:
    before = Counter(oracle.calls)
    entries = kb.semtrans_for(adjective, pos)
    trigger = None
    if not entries:
        trigger = "no-semtrans"
    else:
        comparison = filter_comparison(entries)
        if not comparison:
            trigger = "no-comparison-semtrans"
        else:
            relevant = [e for e in comparison
                        if oracle.judge_relevance(render_term(kb, e.frame_type),
                                                  render_term(kb, e.quantity_type), adjective, fact)]
            if relevant:
                return DiagnosisOutcome(adjective, fact_id, RELEVANT_EXISTING, relevant,
                                        calls=_calls_since(oracle, before))
            trigger = "no-relevant"
    built, stage = construct_new_semtrans(adjective, fact, kb, oracle, fact_id, pos)
    calls = _calls_since(oracle, before)
    if built:
        return DiagnosisOutcome(adjective, fact_id, CONSTRUCTED, built, trigger=trigger,
                                source=stage, calls=calls)
    return DiagnosisOutcome(adjective, fact_id, FAILED, stage=stage, trigger=trigger, calls=calls)


def comparative_adjectives(sentence: str, kb: KnowledgeBase) -> list[str]:
    """Distinct comparative adjectives, left to right."""
    toks = tokenize(sentence, kb)
    out = []
    for i in identify_comparatives(toks):
        if toks[i].entry("adjective") is not None and toks[i].entry("adjective").is_comparative:
            if toks[i].surface not in out:
                out.append(toks[i].surface)
    return out


def expand_corpus(facts, kb: KnowledgeBase, oracle: Oracle) -> ExpansionReport:
    """Sequentially diagnose every comparative adjective of every fact.

    ``facts`` is a list of (id, text) pairs or objects with ``id``/``text``.
    """
    report = ExpansionReport()
    before = {e.key for e in kb.all_semtrans()}
    saved = kb.auto_register
    kb.auto_register = True
    try:
        for item in facts:
            fid, text = (item.id, item.text) if hasattr(item, "text") else item
            report.facts += 1
            try:
                resp = oracle.rephrase(text, lambda s: is_template_sentence(s, kb))
                sentences = resp.value or [text]
                done: list[str] = []
                for sent in sentences:
                    for adj in comparative_adjectives(sent, kb):
                        if adj in done:
                            continue
                        done.append(adj)
                        out = diagnose(adj, text, kb, oracle, fid)
                        report.outcomes.append(out)
            except OracleError as e:
                log.warning("fact %s: %s", fid, e)
                report.errors.append({"fact_id": fid, "message": str(e)})
    finally:
        kb.auto_register = saved
    # constructed entries already in the KB before the run are not new
    for out in report.outcomes:
        if out.result != CONSTRUCTED:
            continue
        for e in out.entries:
            if e.key not in before:
                before.add(e.key)
                report.delta.append(e)
    return report


__all__ = [
    "CandidatePair", "DiagnosisOutcome", "ExpansionReport", "harvest_candidates",
    "construct_new_semtrans", "diagnose", "expand_corpus", "comparative_adjectives",
]
