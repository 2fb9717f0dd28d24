"""Dataset ingestion, the five pipeline configurations, and run reports."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import (DEFAULT_ALPHA, EvalError, FactScores, GoldSpec, Matching, PipelineScores,
                         ScoredFact, aggregate, match_quantities, normalize_text, score_fact, table)
from .frames import QuantitySign, frames_to_pairs, merge_pairs, sentence_frames
from .kb import KnowledgeBase, atomic_write
from .oracle import Oracle, OracleError
from .parser import is_template_sentence
from .sexpr import SexpError, Symbol, dumps, find_form, read_all

log = logging.getLogger(__name__)


class PipelineError(Exception):
    pass


class DatasetError(PipelineError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    mode: str  # symbolic | hybrid | llm_only
    use_rephrase: bool = False
    use_expanded_kb: bool = False
    alpha: float = float(DEFAULT_ALPHA)

    def __post_init__(self):
        if self.mode not in ("symbolic", "hybrid", "llm_only"):
            raise ValueError(f"unknown pipeline mode {self.mode!r}")
        if self.mode != "hybrid":
            # symbolic forces both flags off; llm_only ignores them
            object.__setattr__(self, "use_rephrase", False)
            object.__setattr__(self, "use_expanded_kb", False)

    @property
    def uses_oracle(self) -> bool:
        return self.mode == "llm_only" or self.use_rephrase


PIPELINES = {
    "symbolic": PipelineConfig("symbolic"),
    "hybrid-lex": PipelineConfig("hybrid", use_rephrase=False, use_expanded_kb=True),
    "hybrid-rephrase": PipelineConfig("hybrid", use_rephrase=True, use_expanded_kb=False),
    "hybrid-both": PipelineConfig("hybrid", use_rephrase=True, use_expanded_kb=True),
    "llm": PipelineConfig("llm_only"),
}


def pipeline_config(name: str, alpha: float | None = None) -> PipelineConfig:
    cfg = PIPELINES[name]
    if alpha is not None:
        cfg = PipelineConfig(cfg.mode, cfg.use_rephrase, cfg.use_expanded_kb, alpha)
    return cfg


# ---------------------------------------------------------------------------
# datasets

@dataclass(frozen=True)
class GroundingFact:
    id: str
    text: str
    split: str = "train"


def _select(record, path: str):
    cur = record
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise KeyError(path)
        cur = cur[part]
    return cur


def ingest_dataset(path, field_path: str = "para", split: str = "train",
                   id_field: str = "id") -> list[GroundingFact]:
    """Distinct facts from a JSON-lines file, first occurrence kept."""
    p = Path(path)
    facts: list[GroundingFact] = []
    seen: set[str] = set()
    total = 0
    with open(p, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            total += 1
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{p}: record {n}: {e}") from e
            try:
                text = _select(rec, field_path)
            except KeyError:
                raise DatasetError(f"{p}: record {n}: missing field {field_path!r}") from None
            if not isinstance(text, str):
                raise DatasetError(f"{p}: record {n}: field {field_path!r} is not text")
            text = normalize_text(text)
            if not text or text in seen:
                continue
            seen.add(text)
            rid = rec.get(id_field) if isinstance(rec, dict) else None
            facts.append(GroundingFact(str(rid) if rid is not None else f"{split}-{n}", text, split))
    log.info("%s: %d records, %d distinct %s facts", p, total, len(facts), split)
    return facts


# ---------------------------------------------------------------------------
# logical forms

SIGN_TOKENS = {"+": "+", "-": "-", "−": "-"}


@dataclass
class CauseEffectForm:
    causes: list[str] = field(default_factory=list)
    effects: list[str] = field(default_factory=list)
    cause_signs: list[str] = field(default_factory=list)
    effect_signs: list[str] = field(default_factory=list)
    invalid: str | None = None
    missing: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return self.invalid is None

    def to_items(self) -> list:
        """Clauses as read; absent clauses stay absent."""
        lists = (self.causes, self.effects, self.cause_signs, self.effect_signs)
        return [[Symbol(c), *map(Symbol, xs)] for c, xs in zip(_CLAUSES, lists)
                if c not in self.missing]


_CLAUSES = ("cause", "effect", "cause-sign", "effect-sign")


def _collect(form, found: dict):
    if not isinstance(form, list):
        return
    if form and isinstance(form[0], Symbol) and str(form[0]).lower() in _CLAUSES:
        found.setdefault(str(form[0]).lower(), [str(x).lower() for x in form[1:]])
        return
    for x in form:
        _collect(x, found)


def read_llm_form(raw: str) -> CauseEffectForm:
    """Strict reader for the cause/effect form; never repairs, only flags."""
    form = find_form(raw or "")
    found: dict[str, list[str]] = {}
    _collect(form, found)
    if not found:
        return CauseEffectForm(invalid="unreadable", missing=_CLAUSES)
    ce = CauseEffectForm(found.get("cause", []), found.get("effect", []),
                         found.get("cause-sign", []), found.get("effect-sign", []))
    ce.missing = tuple(c for c in _CLAUSES if c not in found)
    if ce.missing:
        ce.invalid = f"missing {ce.missing[0]}"
        return ce
    for clause in ("cause-sign", "effect-sign"):
        bad = [s for s in found[clause] if s not in SIGN_TOKENS]
        if bad:
            ce.invalid = f"bad sign {bad[0]!r} in {clause}"
            return ce
    ce.cause_signs = [SIGN_TOKENS[s] for s in ce.cause_signs]
    ce.effect_signs = [SIGN_TOKENS[s] for s in ce.effect_signs]
    if len(ce.cause_signs) != len(ce.causes):
        ce.invalid = f"cause arity mismatch ({len(ce.causes)} quantities, {len(ce.cause_signs)} signs)"
    elif len(ce.effect_signs) != len(ce.effects):
        ce.invalid = f"effect arity mismatch ({len(ce.effects)} quantities, {len(ce.effect_signs)} signs)"
    return ce


def normalize_label(kb: KnowledgeBase, label: str) -> str:
    """Quantity type for an LLM label; unknown labels get a type nothing matches."""
    return kb.quantity_for_label(label) or f"unmapped:{label}"


def flatten_cause_effect(ce: CauseEffectForm, kb: KnowledgeBase) -> list[QuantitySign]:
    """Positional sign assignment; a missing sign becomes ``none``."""
    pairs = []
    for labels, signs in ((ce.causes, ce.cause_signs), (ce.effects, ce.effect_signs)):
        for i, label in enumerate(labels):
            s = signs[i] if i < len(signs) and signs[i] in ("+", "-") else "none"
            pairs.append(QuantitySign(normalize_label(kb, label), s))
    return merge_pairs(pairs)


@dataclass
class LogicalForm:
    fact_id: str
    text: str
    pairs: list[QuantitySign] = field(default_factory=list)
    cause_effect: CauseEffectForm | None = None
    sentences: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    error: str | None = None

    def serialize(self) -> str:
        if self.cause_effect is not None:
            body = dumps([self.text, *self.cause_effect.to_items()])
            if not self.cause_effect.valid:
                body += f" ;; invalid: {self.cause_effect.invalid}"
        else:
            body = dumps([self.text, *([Symbol(p.quantity_type), Symbol(p.sign)] for p in self.pairs)])
        if self.error:
            body += f" ;; error: {self.error}"
        return body


def loads_forms(text: str, kb: KnowledgeBase) -> list[tuple[str, list[QuantitySign]]]:
    """Read an emitted forms file back into (fact text, pairs) for scoring."""
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        try:
            forms = read_all(line)
        except SexpError as e:
            raise PipelineError(f"forms line {n}: {e}") from e
        for form in forms:
            if not (isinstance(form, list) and form and isinstance(form[0], str)
                    and not isinstance(form[0], Symbol)):
                raise PipelineError(f"forms line {n}: expected (\"<fact>\" ...)")
            items = form[1:]
            heads = {str(it[0]) for it in items if isinstance(it, list) and it}
            if heads & set(_CLAUSES):
                ce = read_llm_form(dumps(items))
                out.append((normalize_text(form[0]), flatten_cause_effect(ce, kb)))
            else:
                pairs = []
                for it in items:
                    if not (isinstance(it, list) and len(it) == 2):
                        raise PipelineError(f"forms line {n}: bad pair {dumps(it)}")
                    pairs.append(QuantitySign(str(it[0]), str(it[1])))
                out.append((normalize_text(form[0]), pairs))
    return out


# ---------------------------------------------------------------------------
# running

def select_kb(kb: KnowledgeBase, config: PipelineConfig) -> KnowledgeBase:
    """The expanded KB, or its builtin-only view."""
    if config.mode == "hybrid" and config.use_expanded_kb:
        return kb if kb.frozen else kb.snapshot()
    return kb.builtin_view()


def _run_symbolic(fact: GroundingFact, config: PipelineConfig, kb: KnowledgeBase,
                  oracle: Oracle | None) -> LogicalForm:
    lf = LogicalForm(fact.id, fact.text)
    sentences = [fact.text]
    if config.use_rephrase:
        if oracle is None:
            raise PipelineError("rephrasing pipelines need an oracle")
        resp = oracle.rephrase(fact.text, lambda s: is_template_sentence(s, kb))
        if resp.value:
            sentences = list(resp.value)
    lf.sentences = sentences
    pairs: list[QuantitySign] = []
    for s in sentences:
        fs = sentence_frames(s, kb)
        if fs is None:
            lf.diagnostics.append(f"no parse: {s}")
            continue
        lf.diagnostics += [f"unresolved: {u}" for u in fs.unresolved]
        pairs += frames_to_pairs(fs, lf.diagnostics)
    lf.pairs = merge_pairs(pairs, lf.diagnostics)
    return lf


def _run_llm(fact: GroundingFact, kb: KnowledgeBase, oracle: Oracle) -> LogicalForm:
    raw = oracle.extract_logical_form(fact.text)
    ce = read_llm_form(raw)
    lf = LogicalForm(fact.id, fact.text, flatten_cause_effect(ce, kb), ce)
    if not ce.valid:
        lf.diagnostics.append(f"invalid: {ce.invalid}")
    return lf


def run_fact(fact: GroundingFact, config: PipelineConfig, kb: KnowledgeBase,
             oracle: Oracle | None = None, _selected: bool = False) -> LogicalForm:
    view = kb if _selected else select_kb(kb, config)
    if config.mode == "llm_only":
        if oracle is None:
            raise PipelineError("the llm pipeline needs an oracle")
        return _run_llm(fact, view, oracle)
    return _run_symbolic(fact, config, view, oracle)


@dataclass
class RunReport:
    pipeline: str
    forms: list[LogicalForm]
    scored: list[ScoredFact]
    summary: PipelineScores | None
    unscored: list[str] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def forms_text(self) -> str:
        return "".join(lf.serialize() + "\n" for lf in self.forms)

    def scores_text(self) -> str:
        lines = [json.dumps(s.to_json(), sort_keys=True) for s in self.scored]
        lines.append(json.dumps({"summary": self.summary_json()}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def summary_json(self) -> dict:
        s = self.summary
        return {
            "pipeline": self.pipeline,
            "QC": None if s is None else round(s.qc, 10),
            "CSA": None if s is None or s.csa is None else round(s.csa, 10),
            "OP": None if s is None else round(s.op, 10),
            "facts": len(self.forms), "scored": 0 if s is None else s.facts,
            "csa_defined": 0 if s is None else s.csa_facts,
            "unscored": self.unscored, "errors": len(self.errors),
        }

    def summary_text(self) -> str:
        if self.summary is None:
            return f"{self.pipeline}: no scored facts\n"
        out = table([(self.pipeline, self.summary)])
        if self.unscored:
            out += f"unscored facts: {', '.join(self.unscored)}\n"
        if self.errors:
            out += f"facts with errors: {', '.join(e['fact_id'] for e in self.errors)}\n"
        return out

    def write(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        atomic_write(d / "forms.sx", self.forms_text())
        atomic_write(d / "scores.jsonl", self.scores_text())
        atomic_write(d / "summary.txt", self.summary_text())


def score_forms(forms: list[tuple[str, str, list[QuantitySign]]], gold: dict[str, GoldSpec],
                kb: KnowledgeBase, alpha) -> tuple[list[ScoredFact], list[str]]:
    scored, unscored = [], []
    for fid, text, pairs in forms:
        spec = gold.get(normalize_text(text))
        if spec is None:
            unscored.append(fid)
            scored.append(ScoredFact(fid, text, None, None, pairs))
            continue
        m: Matching = match_quantities(spec, pairs, kb.taxonomy, alpha)
        s: FactScores = score_fact(spec, pairs, m)
        scored.append(ScoredFact(fid, text, s, m, pairs))
    return scored, unscored


def summarize(scored: list[ScoredFact]) -> PipelineScores | None:
    vals = [s.scores for s in scored if s.scores is not None]
    return aggregate(vals) if vals else None


def run_corpus(facts: list[GroundingFact], config: PipelineConfig, kb: KnowledgeBase,
               oracle: Oracle | None = None, gold: dict[str, GoldSpec] | None = None,
               workers: int = 1, name: str | None = None) -> RunReport:
    if not facts:
        raise PipelineError("empty corpus")
    view = select_kb(kb, config)

    def one(fact: GroundingFact) -> LogicalForm:
        try:
            return run_fact(fact, config, view, oracle, _selected=True)
        except OracleError as e:
            log.warning("fact %s: %s", fact.id, e)
            return LogicalForm(fact.id, fact.text, error=str(e))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            forms = list(pool.map(one, facts))
    else:
        forms = [one(f) for f in facts]
    forms.sort(key=lambda lf: lf.fact_id)
    errors = [{"fact_id": lf.fact_id, "message": lf.error} for lf in forms if lf.error]
    scored, unscored = score_forms([(lf.fact_id, lf.text, lf.pairs) for lf in forms],
                                   gold or {}, view, config.alpha)
    return RunReport(name or config.mode, forms, scored, summarize(scored), unscored, errors)


__all__ = [
    "PipelineConfig", "PIPELINES", "pipeline_config", "GroundingFact", "ingest_dataset",
    "CauseEffectForm", "read_llm_form", "flatten_cause_effect", "normalize_label", "LogicalForm",
    "loads_forms", "run_fact", "run_corpus", "RunReport", "select_kb", "score_forms", "summarize",
    "PipelineError", "DatasetError", "EvalError",
]
