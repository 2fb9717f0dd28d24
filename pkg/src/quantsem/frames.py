"""Semantic interpretation: comparative elements to quantity and ordinal frames.

A comparison yields two quantity frames of one quantity type (one for the
SUBJECT entity, one for the NOUN entity or its gap) and an ordinal frame
relating them. Frames project to (quantity type, sign) pairs read from the
SUBJECT side: lessThan is ``-``, greaterThan is ``+``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .kb import KnowledgeBase, QualValue
from .parser import ComparativeElement, Gap, ParseTree, head_token

SIGNS = ("+", "-", "none")
MARKER_RELATION = {"more": "greaterThan", "less": "lessThan", "fewer": "lessThan"}
_FLIP = {"lessThan": "greaterThan", "greaterThan": "lessThan"}


@dataclass(frozen=True)
class QuantitySign:
    quantity_type: str
    sign: str

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"bad sign {self.sign!r}")

    def to_sexp_text(self) -> str:
        return f"({self.quantity_type} {self.sign})"


def relation_to_sign(relation: str) -> str:
    return {"lessThan": "-", "greaterThan": "+"}.get(relation, "none")


def sign_to_relation(sign: str) -> str:
    return {"-": "lessThan", "+": "greaterThan"}[sign]


@dataclass(frozen=True)
class Entity:
    """Discourse entity: ``particle1`` style id, or the gap placeholder."""

    name: str
    gap: bool = False

    def sexp(self) -> str:
        return "(GapFn :NOUN)" if self.gap else self.name


GAP_ENTITY = Entity("GAP", gap=True)


@dataclass(frozen=True)
class Reading:
    quantity_type: str
    relation: str
    frame_type: str | None = None
    value: QualValue | None = None
    source: str = "semtrans"


@dataclass
class SemanticChoice:
    element: ComparativeElement | None
    subject: Entity
    noun: Entity | None
    readings: list[Reading] = field(default_factory=list)
    word: str = ""

    @property
    def resolved(self) -> bool:
        return bool(self.readings)


@dataclass(frozen=True)
class QuantityFrame:
    id: str
    entity: Entity
    quantity_type: str
    value: QualValue | None = None

    def serialize(self) -> str:
        i = self.id
        lines = [f"({i}",
                 f"  (isa {i} QuantityFrame) (quantityType {i} {self.quantity_type})"]
        tail = f"  (quantityEntity {i} {self.entity.sexp()})"
        if self.value is not None:
            lines.append(tail)
            tail = f"  (quantityValue {i} {self.value.cyc()})"
        lines.append(tail + ")")
        return "\n".join(lines)


@dataclass(frozen=True)
class OrdinalFrame:
    id: str
    relation: str
    quantity1: QuantityFrame
    quantity2: QuantityFrame

    def __post_init__(self):
        if self.relation not in _FLIP:
            raise ValueError(f"ordinal relation must be lessThan/greaterThan, got {self.relation}")
        if self.quantity1.quantity_type != self.quantity2.quantity_type:
            raise ValueError("ordinal frame sides disagree on quantity type")
        if self.quantity1.entity == self.quantity2.entity and not self.quantity2.entity.gap:
            raise ValueError("ordinal frame compares an entity with itself")

    def serialize(self) -> str:
        i = self.id
        return (f"({i}\n"
                f"  (isa {i} OrdinalFrame) (OrdinalReln {i} {self.relation})\n"
                f"  (quantity1 {i} {self.quantity1.id}) (quantity2 {i} {self.quantity2.id}))")


@dataclass
class FrameSet:
    sentence: str
    quantity_frames: list[QuantityFrame] = field(default_factory=list)
    ordinal_frames: list[OrdinalFrame] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)

    def serialize(self) -> str:
        out = [f";; {self.sentence}"]
        by_type: dict[str, list[QuantityFrame]] = {}
        for q in self.quantity_frames:
            by_type.setdefault(q.quantity_type, []).append(q)
        for qtype, frames in by_type.items():
            out.append(f";; quantity frames for {qtype}")
            out.extend(f.serialize() for f in frames)
        if self.ordinal_frames:
            out.append(";; ordinal frames")
            out.extend(o.serialize() for o in self.ordinal_frames)
        for u in self.unresolved:
            out.append(f";; unresolved: {u}")
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# interpretation

def _root(tree: ParseTree, idx: int) -> str:
    tok = tree.tokens[idx]
    e = tok.entry("noun") or tok.lex
    return e.root if e is not None else tok.surface


def _noun_quantity(kb: KnowledgeBase, tree: ParseTree, idx: int | None) -> str | None:
    if idx is None:
        return None
    tok = tree.tokens[idx]
    return kb.quantity_for_noun(tok.surface) or kb.quantity_for_noun(_root(tree, idx))


def _read_element(el: ComparativeElement, tree: ParseTree, kb: KnowledgeBase) -> list[Reading]:
    toks = tree.tokens
    if el.kind in ("adjective", "adverb"):
        word = toks[el.head].surface
        out = []
        override = _noun_quantity(kb, tree, el.noun)
        for s in kb.semtrans_for(word, el.pos):
            if s.relation == "none":
                continue
            if override:
                out.append(Reading(override, s.relation, s.frame_type, None, "noun"))
            else:
                out.append(Reading(s.quantity_type, s.relation, s.frame_type))
        return _dedup(out)
    marker = toks[el.marker].surface
    rel = MARKER_RELATION.get(marker)
    if rel is None:
        return []
    if el.kind == "degree-noun":
        q = _noun_quantity(kb, tree, el.head)
        return [Reading(q, rel, None, None, "degree")] if q else []
    # degree-modifier: the positive word's qualitative value fixes type and polarity
    out = []
    for s in kb.semtrans_for(toks[el.head].surface, el.pos):
        if s.value is None:
            continue
        q = kb.quantity_type_of_value(s.value)
        if q is None:
            continue
        r = rel if s.value.direction == "high" else _FLIP[rel]
        out.append(Reading(q, r, s.frame_type, None, "degree"))
    return _dedup(out)


def _dedup(readings: list[Reading]) -> list[Reading]:
    seen, out = set(), []
    for r in readings:
        k = (r.quantity_type, r.relation)
        if k not in seen:
            seen.add(k)
            out.append(r)
    return out


def _entities(tree: ParseTree) -> tuple[Entity, Entity | None]:
    subj = Entity(f"{_root(tree, head_token(tree.subject))}1")
    if tree.noun is None:
        return subj, None
    if isinstance(tree.noun, Gap):
        return subj, GAP_ENTITY
    name = _root(tree, head_token(tree.noun))
    return subj, Entity(f"{name}{2 if f'{name}1' == subj.name else 1}")


def interpret(tree: ParseTree, kb: KnowledgeBase) -> list[SemanticChoice]:
    """One choice per comparative element; declaratives yield the value reading."""
    subj, noun = _entities(tree)
    choices = []
    if tree.category == "DeclarativeSentence":
        tok = tree.tokens[tree.predicate_adjective]
        readings = []
        for s in kb.semtrans_for(tok.surface, "adjective"):
            if s.value is None:
                continue
            q = kb.quantity_type_of_value(s.value) or s.quantity_type
            if q:
                readings.append(Reading(q, "none", s.frame_type, s.value, "value"))
        choices.append(SemanticChoice(None, subj, None, readings, tok.surface))
        return choices
    for el in tree.elements:
        choices.append(SemanticChoice(el, subj, noun, _read_element(el, tree, kb),
                                      el.text(tree.tokens)))
    return choices


def _sentence_hash(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:6]


def build_frames(choices: list[SemanticChoice], tree: ParseTree) -> FrameSet:
    sentence = " ".join(t.surface for t in tree.tokens)
    h = _sentence_hash(sentence)
    fs = FrameSet(sentence)
    nq = no = 0
    for ch in choices:
        if not ch.resolved:
            fs.unresolved.append(ch.word)
            continue
        for r in ch.readings:
            if r.relation == "none":
                nq += 1
                fs.quantity_frames.append(
                    QuantityFrame(f"QuantityFrame-{h}-{nq}", ch.subject, r.quantity_type, r.value))
                continue
            q1 = QuantityFrame(f"QuantityFrame-{h}-{nq + 1}", ch.subject, r.quantity_type)
            q2 = QuantityFrame(f"QuantityFrame-{h}-{nq + 2}", ch.noun or GAP_ENTITY, r.quantity_type)
            nq += 2
            no += 1
            fs.quantity_frames += [q1, q2]
            fs.ordinal_frames.append(OrdinalFrame(f"OrdinalFrame-{h}-{no}", r.relation, q1, q2))
    return fs


def merge_pairs(pairs: list[QuantitySign], diagnostics: list[str] | None = None) -> list[QuantitySign]:
    """Merge by quantity type in first-appearance order; disagreement gives ``none``."""
    signs: dict[str, str] = {}
    for p in pairs:
        prev = signs.get(p.quantity_type)
        if prev is None:
            signs[p.quantity_type] = p.sign
        elif prev != p.sign and prev != "none":
            signs[p.quantity_type] = "none"
            if diagnostics is not None:
                diagnostics.append(f"conflicting signs for {p.quantity_type}")
    return [QuantitySign(q, s) for q, s in signs.items()]


def frames_to_pairs(fs: FrameSet, diagnostics: list[str] | None = None) -> list[QuantitySign]:
    raw = [QuantitySign(o.quantity1.quantity_type, relation_to_sign(o.relation))
           for o in fs.ordinal_frames]
    return merge_pairs(raw, diagnostics)


def sentence_frames(text: str, kb: KnowledgeBase) -> FrameSet | None:
    """tokenize, parse, pick, interpret, build; None when no parse."""
    from .parser import parse_text

    tree = parse_text(text, kb)
    if tree is None:
        return None
    return build_frames(interpret(tree, kb), tree)


_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def render_term(kb: KnowledgeBase | None, identifier: str) -> str:
    """Readable name for a frame or quantity identifier."""
    if kb is not None and kb.frame_types.get(identifier):
        return kb.frame_types[identifier]
    s = identifier
    if s[:3].lower() == "fn_":
        s = s[3:]
    words = []
    for part in s.split("_"):
        words += [w for w in _CAMEL.split(part) if w]
    return " ".join(w.lower() for w in words)
