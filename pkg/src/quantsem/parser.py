"""Tokenizer and bottom-up chart parser for regularized comparative sentences.

The grammar is deliberately small. It covers the rephrasing template
(``NP that is/has CE is/has CE than NP``), relative clauses, prepositional
modifiers, degree phrases (``more/less`` + noun, adjective or adverb),
comparative adverbs after a verb, and copular declaratives (``X is ADJ``).
Anything else fails to parse and is left to the rephrasing step.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field

from .kb import KnowledgeBase, LexicalEntry

SENTENCE_FINAL = {".", "!", "?"}
RELATIVIZERS = {"that", "which", "who"}

_WORD = re.compile(r"[A-Za-z0-9]+(?:['\-][A-Za-z0-9]+)*|[^\w\s]")


@dataclass(frozen=True)
class Token:
    surface: str
    span: tuple[int, int]
    entries: tuple[LexicalEntry, ...] = ()

    @property
    def lex(self) -> LexicalEntry | None:
        return self.entries[0] if self.entries else None

    @property
    def is_punct(self) -> bool:
        return not self.surface[0].isalnum()

    def entry(self, pos: str) -> LexicalEntry | None:
        for e in self.entries:
            if e.pos == pos:
                return e
        return None


def tokenize(text: str, kb: KnowledgeBase | None = None) -> list[Token]:
    """Lowercased word tokens with punctuation split off, annotated from the lexicon."""
    tokens = []
    for m in _WORD.finditer(text):
        surface = m.group().lower()
        entries = tuple(kb.entries_for(surface)) if kb is not None else ()
        tokens.append(Token(surface, m.span(), entries))
    return tokens


def _is_comparative(tok: Token, pos: str) -> bool:
    e = tok.entry(pos)
    return e is not None and e.is_comparative


def identify_comparatives(tokens: list[Token]) -> list[int]:
    """Indices of comparative adjectives and adverbs."""
    return [i for i, t in enumerate(tokens)
            if _is_comparative(t, "adjective") or _is_comparative(t, "adverb")]


def find_degree_markers(tokens: list[Token]) -> list[int]:
    """Indices of more/less/fewer used as degree markers (DegreePhrase candidates)."""
    return [i for i, t in enumerate(tokens) if _is_comparative(t, "determiner")]


# ---------------------------------------------------------------------------
# grammar

@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]


def _rules(spec: str) -> list[Rule]:
    out = []
    for line in spec.strip().splitlines():
        lhs, alts = line.split("->")
        for alt in alts.split("|"):
            out.append(Rule(lhs.strip(), tuple(alt.split())))
    return out


GRAMMAR = _rules("""
CS    -> SUBJ PRED | SUBJ PRED THANP
DS    -> SUBJ COP ADJ
THANP -> THAN NP
SUBJ  -> NP | NP REL RC
RC    -> COP CE | V CE | COP PP | V PP | V
PRED  -> COP CE | V CE
CE    -> CADJ | CADV | DEG NOM | DEG ADJ | DEG ADV | CADJ NOM | DET CADJ NOM | CE PP
NP    -> NOM | DET NOM | DEG NOM | NP PP | PRON
NOM   -> N | ADJ NOM | CADJ NOM | N NOM
PP    -> P NP
""")

ROOTS = {"CS": "ComparativeSentence", "DS": "DeclarativeSentence"}


def preterminals(tok: Token) -> list[str]:
    """Grammar categories a token can fill. Unknown words are nouns."""
    if tok.is_punct:
        return ["PUNCT"]
    if tok.surface == "than":
        return ["THAN"]
    if not tok.entries:
        return ["N"]
    cats = []
    for e in tok.entries:
        if e.pos == "noun":
            cat = "N"
        elif e.pos == "adjective":
            cat = "CADJ" if e.is_comparative else "ADJ" if e.degree == "positive" else None
        elif e.pos == "adverb":
            cat = "CADV" if e.is_comparative else "ADV"
        elif e.pos == "determiner":
            cat = "DEG" if e.is_comparative else "DET"
        elif e.pos == "relativizer":
            cat = "REL"
        else:
            cat = {"preposition": "P", "copula": "COP", "verb": "V", "pronoun": "PRON"}.get(e.pos)
        if cat and cat not in cats:
            cats.append(cat)
    return cats


@dataclass(eq=False)
class ChartEdge:
    category: str
    start: int
    end: int
    children: tuple = ()
    complete: bool = True
    rule: Rule | None = None
    token: int | None = None
    dot: int = 0

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def next_symbol(self) -> str | None:
        if self.complete:
            return None
        return self.rule.rhs[self.dot]

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def bracket(self, tokens: list[Token] | None = None) -> str:
        if self.token is not None:
            word = tokens[self.token].surface if tokens else str(self.token)
            return f"({self.category} {word})"
        return f"({self.category} " + " ".join(c.bracket(tokens) for c in self.children) + ")"

    def leaves(self) -> list[int]:
        if self.token is not None:
            return [self.token]
        return [i for c in self.children for i in c.leaves()]


class Chart:
    """Allen-style bottom-up chart: tokens are read left to right, each
    completed constituent proposes the rules it can start and extends the
    active arcs waiting for it."""

    def __init__(self, tokens: list[Token], grammar: list[Rule] = GRAMMAR, max_edges: int = 200_000):
        self.tokens = tokens
        self.by_first: dict[str, list[Rule]] = {}
        for r in grammar:
            self.by_first.setdefault(r.rhs[0], []).append(r)
        self.complete: list[ChartEdge] = []
        self.active: list[ChartEdge] = []
        self._complete_at: dict[int, list[ChartEdge]] = {}
        self._active_at: dict[int, list[ChartEdge]] = {}
        self._agenda: deque[ChartEdge] = deque()
        self.max_edges = max_edges
        self.overflow = False
        # sentence-final punctuation sits outside the parse
        n = len(tokens)
        while n and tokens[n - 1].surface in SENTENCE_FINAL:
            n -= 1
        self.n_words = n
        self._run()

    def _run(self):
        for i in range(self.n_words):
            for cat in preterminals(self.tokens[i]):
                self._agenda.append(ChartEdge(cat, i, i + 1, token=i))
            while self._agenda:
                if len(self.complete) + len(self.active) > self.max_edges:
                    self.overflow = True
                    return
                self._add_complete(self._agenda.popleft())

    def _add_complete(self, e: ChartEdge):
        self.complete.append(e)
        self._complete_at.setdefault(e.start, []).append(e)
        for rule in self.by_first.get(e.category, ()):
            self._add_arc(rule, 1, e.start, e.end, (e,))
        for arc in list(self._active_at.get(e.start, ())):
            if arc.next_symbol == e.category:
                self._add_arc(arc.rule, arc.dot + 1, arc.start, e.end, arc.children + (e,))

    def _add_arc(self, rule, dot, start, end, children):
        if dot == len(rule.rhs):
            self._agenda.append(ChartEdge(rule.lhs, start, end, children, True, rule))
            return
        arc = ChartEdge(rule.lhs, start, end, children, False, rule, dot=dot)
        self.active.append(arc)
        self._active_at.setdefault(end, []).append(arc)
        for e in list(self._complete_at.get(end, ())):
            if e.category == arc.next_symbol:
                self._add_arc(rule, dot + 1, start, e.end, children + (e,))

    def spanning(self) -> list[ChartEdge]:
        if self.n_words == 0:
            return []
        return [e for e in self.complete
                if e.category in ROOTS and e.start == 0 and e.end == self.n_words]

    def dump(self) -> str:
        lines = []
        for e in self.complete:
            lines.append(f"[{e.start:>2},{e.end:>2}] {e.category:<6} {e.bracket(self.tokens)}")
        for a in self.active:
            rhs = list(a.rule.rhs)
            rhs.insert(a.dot, "*")
            lines.append(f"[{a.start:>2},{a.end:>2}] {a.category:<6} -> {' '.join(rhs)}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# parse trees

@dataclass(frozen=True)
class Gap:
    """Elided comparee; carries the subject's head noun."""

    head: str


@dataclass(frozen=True)
class ComparativeElement:
    """One comparative element of a sentence.

    kind is ``adjective`` (comparative adjective, optionally modifying
    ``noun``), ``adverb``, ``degree-noun`` (more/less + noun) or
    ``degree-modifier`` (more/less + positive adjective or adverb).
    """

    kind: str
    head: int
    marker: int | None = None
    noun: int | None = None
    pos: str = "adjective"
    in_subject: bool = False

    @property
    def degree_token(self) -> int:
        return self.marker if self.marker is not None else self.head

    def text(self, tokens: list[Token]) -> str:
        idx = [i for i in (self.marker, self.head) if i is not None]
        if self.noun is not None and self.noun not in idx:
            idx.append(self.noun)
        return " ".join(tokens[i].surface for i in sorted(idx))


@dataclass
class ParseTree:
    category: str
    root: ChartEdge
    tokens: list[Token]
    subject: ChartEdge
    noun: ChartEdge | Gap | None
    elements: list[ComparativeElement] = field(default_factory=list)
    predicate_adjective: int | None = None

    def text(self, edge: ChartEdge | Gap | None) -> str:
        if edge is None:
            return ""
        if isinstance(edge, Gap):
            return f"GAP({edge.head})"
        return " ".join(self.tokens[i].surface for i in edge.leaves())

    @property
    def gap_count(self) -> int:
        return int(isinstance(self.noun, Gap))

    def depth(self) -> int:
        return self.root.depth()

    def bracket(self) -> str:
        return self.root.bracket(self.tokens)


def head_token(edge: ChartEdge) -> int:
    """Rightmost noun of a NOM; left NP of ``NP PP``."""
    if edge.token is not None:
        return edge.token
    cat = edge.category
    kids = edge.children
    if cat == "NP":
        if kids[0].category == "NP":
            return head_token(kids[0])
        return head_token(kids[-1])
    if cat == "NOM":
        return head_token(kids[-1])
    if cat == "SUBJ":
        return head_token(kids[0])
    return head_token(kids[-1])


def _pos_of(cat: str) -> str:
    return "adverb" if cat in ("ADV", "CADV") else "adjective"


def _elements(edge: ChartEdge, in_subject: bool, out: list):
    cat = edge.category
    kids = edge.children
    if cat == "THANP" or edge.token is not None:
        return
    if cat == "CE":
        cats = tuple(k.category for k in kids)
        if cats == ("CE", "PP"):
            _elements(kids[0], in_subject, out)
            _elements(kids[1], in_subject, out)
            return
        if cats in (("CADJ",), ("CADV",)):
            out.append(ComparativeElement("adjective" if cats[0] == "CADJ" else "adverb",
                                          kids[0].token, pos=_pos_of(cats[0]), in_subject=in_subject))
        elif cats == ("DEG", "NOM"):
            out.append(ComparativeElement("degree-noun", head_token(kids[1]), marker=kids[0].token,
                                          in_subject=in_subject))
            _elements(kids[1], in_subject, out)
        elif cats in (("DEG", "ADJ"), ("DEG", "ADV")):
            out.append(ComparativeElement("degree-modifier", kids[1].token, marker=kids[0].token,
                                          pos=_pos_of(cats[1]), in_subject=in_subject))
        elif cats[-2:] == ("CADJ", "NOM"):
            out.append(ComparativeElement("adjective", kids[-2].token, noun=head_token(kids[-1]),
                                          in_subject=in_subject))
            _elements(kids[-1], in_subject, out)
        return
    if cat == "NOM" and kids[0].category == "CADJ":
        out.append(ComparativeElement("adjective", kids[0].token, noun=head_token(kids[1]),
                                      in_subject=in_subject))
        _elements(kids[1], in_subject, out)
        return
    if cat == "NP" and kids[0].category == "DEG":
        out.append(ComparativeElement("degree-noun", head_token(kids[1]), marker=kids[0].token,
                                      in_subject=in_subject))
        _elements(kids[1], in_subject, out)
        return
    for k in kids:
        _elements(k, in_subject, out)


def _is_bare(np: ChartEdge) -> bool:
    """NP that is a single noun, optionally with a determiner."""
    if np.category != "NP":
        return False
    kids = np.children
    if len(kids) == 2 and kids[0].category == "DET":
        nom = kids[1]
    elif len(kids) == 1 and kids[0].category == "NOM":
        nom = kids[0]
    else:
        return False
    return len(nom.children) == 1 and nom.children[0].category == "N"


def build_tree(root: ChartEdge, tokens: list[Token]) -> ParseTree:
    subj = root.children[0]
    subj_head = tokens[head_token(subj)].surface
    elements: list[ComparativeElement] = []
    _elements(subj, True, elements)
    if root.category == "DS":
        return ParseTree(ROOTS["DS"], root, tokens, subj, None, elements,
                         predicate_adjective=root.children[2].token)
    _elements(root.children[1], False, elements)
    noun: ChartEdge | Gap
    if len(root.children) == 3:
        np = root.children[2].children[1]
        if _is_bare(np) and tokens[head_token(np)].surface == subj_head:
            noun = Gap(subj_head)
        else:
            noun = np
    else:
        noun = Gap(subj_head)
    return ParseTree(ROOTS["CS"], root, tokens, subj, noun, elements)


def chart_parse(tokens: list[Token]) -> Chart:
    return Chart(tokens)


def parse(tokens: list[Token]) -> list[ParseTree]:
    """All complete spanning parses, in chart discovery order."""
    chart = Chart(tokens)
    return [build_tree(e, tokens) for e in chart.spanning()]


def best_parse(parses: list[ParseTree]) -> ParseTree | None:
    """Most comparative elements, then fewest GAPs, then shallowest, then first."""
    if not parses:
        return None
    return min(enumerate(parses),
               key=lambda ip: (-len(ip[1].elements), ip[1].gap_count, ip[1].depth(), ip[0]))[1]


def parse_text(text: str, kb: KnowledgeBase) -> ParseTree | None:
    return best_parse(parse(tokenize(text, kb)))


def is_template_sentence(text: str, kb: KnowledgeBase) -> bool:
    """True when the sentence has a ComparativeSentence parse."""
    return any(t.category == "ComparativeSentence" for t in parse(tokenize(text, kb)))
