"""Lexicon, semtrans facts, and the quantity-type taxonomy.

The KB is the one mutable store in the system: expansion writes new semtrans
into it with :meth:`KnowledgeBase.add_semtrans`, pipelines read frozen
snapshots. On disk it is one parenthesized record per line::

    (lex "cooler" adjective :root "cool" :degree comparative)
    (semtrans "cooler" adjective :frame FN_Temperature :qtype Temperature :reln lessThan)
    (qtype-partial Size SpatialQuantity)
"""

from __future__ import annotations

import copy
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .sexpr import SexpError, Symbol, dumps, keyword_args, read_all

POS_TAGS = (
    "noun", "verb", "adjective", "adverb", "determiner", "preposition",
    "copula", "pronoun", "conjunction", "relativizer",
)
DEGREES = ("positive", "comparative", "superlative")
RELATIONS = ("lessThan", "greaterThan", "none")

COMPARISON_ROLES = (
    ("isa", ":EVENT", "ComparisonEvent"),
    ("comparer", ":EVENT", ":SUBJECT"),
    ("comparee", ":EVENT", ":NOUN"),
)

ADDED = "added"
DUPLICATE = "duplicate"


class KBError(Exception):
    pass


class KBParseError(KBError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class UnresolvedIdentifier(KBError):
    pass


class FrozenKB(KBError):
    pass


@dataclass(frozen=True, order=True)
class QualValue:
    """``high-amount-of(Q)`` or ``low-amount-of(Q)``."""

    direction: str
    quantity: str

    def __post_init__(self):
        if self.direction not in ("high", "low"):
            raise ValueError(f"bad value direction {self.direction!r}")

    @classmethod
    def from_sexp(cls, form) -> "QualValue":
        if (not isinstance(form, list) or len(form) != 2
                or form[0] not in ("high-amount-of", "low-amount-of")):
            raise ValueError(f"bad qualitative value {dumps(form)}")
        return cls(str(form[0]).split("-", 1)[0], str(form[1]))

    def to_sexp(self) -> list:
        return [Symbol(f"{self.direction}-amount-of"), Symbol(self.quantity)]

    def cyc(self) -> str:
        fn = "HighAmountFn" if self.direction == "high" else "LowAmountFn"
        return f"({fn} {self.quantity})"

    def __str__(self):
        return f"{self.direction}-amount-of({self.quantity})"


@dataclass(frozen=True)
class LexicalEntry:
    surface: str
    pos: str
    root: str = ""
    degree: str = "positive"
    self_root: bool = False

    def __post_init__(self):
        if self.pos not in POS_TAGS:
            raise ValueError(f"unknown part of speech {self.pos!r}")
        if self.degree not in DEGREES:
            raise ValueError(f"unknown degree {self.degree!r}")
        if not self.root:
            object.__setattr__(self, "root", self.surface)
        if self.degree != "positive" and self.root == self.surface and not self.self_root:
            raise ValueError(f"{self.surface}: non-positive degree needs a distinct root")

    @property
    def is_comparative(self) -> bool:
        return self.degree == "comparative"


@dataclass(frozen=True)
class Provenance:
    kind: str = "builtin"
    fact_id: str | None = None
    timestamp: str | None = None

    def to_sexp(self):
        if self.kind == "builtin":
            return Symbol("builtin")
        return [Symbol("expanded"), self.fact_id or "", self.timestamp or ""]

    @classmethod
    def from_sexp(cls, form) -> "Provenance":
        if form == "builtin":
            return BUILTIN
        if isinstance(form, list) and len(form) == 3 and form[0] == "expanded":
            return cls("expanded", str(form[1]), str(form[2]))
        raise ValueError(f"bad provenance {dumps(form)}")


BUILTIN = Provenance()


@dataclass(frozen=True)
class SemtransEntry:
    word: str
    pos: str
    frame_type: str
    quantity_type: str | None = None
    relation: str = "none"
    roles: tuple = ()
    value: QualValue | None = None
    provenance: Provenance = BUILTIN
    # binding template / group patterns, kept verbatim
    extras: str = ""

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if self.relation != "none" and not self.quantity_type:
            raise ValueError(f"{self.word}: comparison semtrans needs a quantity type")
        if self.pos not in POS_TAGS:
            raise ValueError(f"unknown part of speech {self.pos!r}")

    @property
    def key(self) -> tuple:
        return (self.word, self.pos, self.frame_type, self.quantity_type or "", self.relation)

    @property
    def is_comparison(self) -> bool:
        return self.relation != "none"

    def to_sexp(self) -> list:
        out = [Symbol("semtrans"), self.word, Symbol(self.pos), Symbol(":frame"), Symbol(self.frame_type)]
        if self.quantity_type:
            out += [Symbol(":qtype"), Symbol(self.quantity_type)]
        if self.relation != "none":
            out += [Symbol(":reln"), Symbol(self.relation)]
        if self.value is not None:
            out += [Symbol(":value"), self.value.to_sexp()]
        if self.roles:
            out += [Symbol(":roles"), [[Symbol(x) for x in r] for r in self.roles]]
        if self.extras:
            out += [Symbol(":extras"), self.extras]
        out += [Symbol(":provenance"), self.provenance.to_sexp()]
        return out


def filter_comparison(entries):
    """Keep only the entries that imply a comparison event."""
    return [e for e in entries if e.is_comparison]


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        if p != x:
            p = self.parent[x] = self.find(p)
        return p

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


@dataclass
class QuantityTaxonomy:
    nodes: set = field(default_factory=set)
    equivalences: set = field(default_factory=set)
    partial_edges: set = field(default_factory=set)

    def __post_init__(self):
        self._uf = None

    def _classes(self) -> _UnionFind:
        if self._uf is None:
            uf = _UnionFind()
            for a, b in self.equivalences:
                uf.union(a, b)
            self._uf = uf
        return self._uf

    def add_node(self, q: str):
        self.nodes.add(q)

    def add_equivalence(self, a: str, b: str):
        pair = tuple(sorted((a, b)))
        if pair in self.equivalences:
            return
        self.equivalences.add(pair)
        self._uf = None
        try:
            self._check()
        except KBError:
            self.equivalences.discard(pair)
            self._uf = None
            raise

    def add_partial(self, specific: str, general: str):
        edge = (specific, general)
        if edge in self.partial_edges:
            return
        self.partial_edges.add(edge)
        try:
            self._check()
        except KBError:
            self.partial_edges.discard(edge)
            raise

    def equivalent(self, a: str, b: str) -> bool:
        if a == b:
            return True
        uf = self._classes()
        return uf.find(a) == uf.find(b)

    def partial(self, a: str, b: str) -> bool:
        """True when a partial-credit edge links the classes of a and b, either way."""
        if self.equivalent(a, b):
            return False
        uf = self._classes()
        ca, cb = uf.find(a), uf.find(b)
        for x, y in self.partial_edges:
            cx, cy = uf.find(x), uf.find(y)
            if (cx, cy) in ((ca, cb), (cb, ca)):
                return True
        return False

    def _check(self):
        uf = self._classes()
        graph: dict[str, set] = {}
        for x, y in self.partial_edges:
            cx, cy = uf.find(x), uf.find(y)
            if cx == cy:
                raise KBError(f"partial edge {x} -> {y} joins equivalent types")
            graph.setdefault(cx, set()).add(cy)
        state: dict[str, int] = {}

        def visit(n):
            state[n] = 1
            for m in graph.get(n, ()):
                if state.get(m) == 1:
                    raise KBError(f"partial edges form a cycle through {m}")
                if m not in state:
                    visit(m)
            state[n] = 2

        for n in sorted(graph):
            if n not in state:
                visit(n)


# canonical record order for save_kb
_KINDS = ("frame-type", "qtype", "qtype-equiv", "qtype-partial", "value-map",
          "qnoun", "label", "lex", "semtrans")


class KnowledgeBase:
    def __init__(self, auto_register: bool = False):
        self.lexicon: dict[tuple[str, str], LexicalEntry] = {}
        self.semtrans: dict[tuple[str, str], list[SemtransEntry]] = {}
        self.taxonomy = QuantityTaxonomy()
        self.frame_types: dict[str, str | None] = {}
        self.value_map: dict[QualValue, str] = {}
        self.noun_quantities: dict[str, str] = {}
        self.labels: dict[str, str] = {}
        self.auto_register = auto_register
        self.frozen = False
        self._lock = threading.Lock()
        self._by_surface: dict[str, list[LexicalEntry]] = {}

    # -- identifier tables -------------------------------------------------
    def add_frame_type(self, name: str, label: str | None = None):
        self.frame_types[name] = label

    def add_quantity_type(self, name: str):
        self.taxonomy.add_node(name)

    def _resolve(self, frame_type=None, qtypes=()):
        missing = []
        if frame_type is not None and frame_type not in self.frame_types:
            missing.append(frame_type)
        missing += [q for q in qtypes if q and q not in self.taxonomy.nodes]
        if not missing:
            return
        if not self.auto_register:
            raise UnresolvedIdentifier(", ".join(missing))
        if frame_type is not None and frame_type not in self.frame_types:
            self.add_frame_type(frame_type)
        for q in qtypes:
            if q:
                self.add_quantity_type(q)

    # -- lexicon -----------------------------------------------------------
    def add_lex(self, entry: LexicalEntry):
        key = (entry.surface, entry.pos)
        if key in self.lexicon:
            raise KBError(f"duplicate lexical entry {key}")
        self.lexicon[key] = entry
        self._by_surface.setdefault(entry.surface, []).append(entry)

    def lookup_word(self, surface: str, pos: str) -> LexicalEntry | None:
        return self.lexicon.get((surface, pos))

    def entries_for(self, surface: str) -> list[LexicalEntry]:
        return list(self._by_surface.get(surface, ()))

    # -- semtrans ----------------------------------------------------------
    def semtrans_for(self, word: str, pos: str) -> list[SemtransEntry]:
        return list(self.semtrans.get((word, pos), ()))

    def add_semtrans(self, entry: SemtransEntry) -> str:
        with self._lock:
            if self.frozen:
                raise FrozenKB("KB snapshot is read-only")
            bucket = self.semtrans.get((entry.word, entry.pos), [])
            if any(e.key == entry.key for e in bucket):
                return DUPLICATE
            qtypes = [entry.quantity_type]
            if entry.value is not None:
                qtypes.append(entry.value.quantity)
            self._resolve(entry.frame_type, qtypes)
            self.semtrans.setdefault((entry.word, entry.pos), []).append(entry)
            return ADDED

    def all_semtrans(self) -> list[SemtransEntry]:
        return [e for bucket in self.semtrans.values() for e in bucket]

    def expanded_entries(self) -> list[SemtransEntry]:
        return [e for e in self.all_semtrans() if e.provenance.kind == "expanded"]

    # -- value / noun / label tables ---------------------------------------
    def add_value_map(self, value: QualValue, qtype: str):
        self._resolve(None, [value.quantity, qtype])
        self.value_map[value] = qtype

    def quantity_type_of_value(self, value: QualValue) -> str | None:
        return self.value_map.get(value)

    def add_noun_quantity(self, noun: str, qtype: str):
        self._resolve(None, [qtype])
        self.noun_quantities[noun] = qtype

    def quantity_for_noun(self, noun: str) -> str | None:
        return self.noun_quantities.get(noun)

    def add_label(self, label: str, qtype: str):
        self._resolve(None, [qtype])
        self.labels[label] = qtype

    def quantity_for_label(self, label: str) -> str | None:
        return self.labels.get(label.strip().lower())

    # -- snapshots -----------------------------------------------------------
    def snapshot(self) -> "KnowledgeBase":
        """Deep, read-only copy safe to share between workers."""
        with self._lock:
            kb = copy.copy(self)
            kb.lexicon = dict(self.lexicon)
            kb._by_surface = {k: list(v) for k, v in self._by_surface.items()}
            kb.semtrans = {k: list(v) for k, v in self.semtrans.items()}
            kb.taxonomy = copy.deepcopy(self.taxonomy)
            kb.frame_types = dict(self.frame_types)
            kb.value_map = dict(self.value_map)
            kb.noun_quantities = dict(self.noun_quantities)
            kb.labels = dict(self.labels)
            kb._lock = threading.Lock()
        kb.frozen = True
        return kb

    def builtin_view(self) -> "KnowledgeBase":
        """Read-only snapshot without any expanded semtrans."""
        kb = self.snapshot()
        kb.semtrans = {}
        for k, bucket in self.semtrans.items():
            keep = [e for e in bucket if e.provenance.kind == "builtin"]
            if keep:
                kb.semtrans[k] = keep
        return kb

    def copy(self) -> "KnowledgeBase":
        kb = self.snapshot()
        kb.frozen = False
        return kb

    # -- serialization -------------------------------------------------------
    def records(self) -> list[list]:
        """All records by kind; semtrans keep per-word order since readings follow it."""
        out = []
        for name in sorted(self.frame_types):
            label = self.frame_types[name]
            rec = [Symbol("frame-type"), Symbol(name)]
            out.append(rec + [label] if label else rec)
        out += [[Symbol("qtype"), Symbol(q)] for q in sorted(self.taxonomy.nodes)]
        out += [[Symbol("qtype-equiv"), Symbol(a), Symbol(b)] for a, b in sorted(self.taxonomy.equivalences)]
        out += [[Symbol("qtype-partial"), Symbol(a), Symbol(b)] for a, b in sorted(self.taxonomy.partial_edges)]
        out += [[Symbol("value-map"), v.to_sexp(), Symbol(q)] for v, q in sorted(self.value_map.items())]
        out += [[Symbol("qnoun"), n, Symbol(q)] for n, q in sorted(self.noun_quantities.items())]
        out += [[Symbol("label"), n, Symbol(q)] for n, q in sorted(self.labels.items())]
        for key in sorted(self.lexicon):
            e = self.lexicon[key]
            rec = [Symbol("lex"), e.surface, Symbol(e.pos)]
            if e.root != e.surface:
                rec += [Symbol(":root"), e.root]
            if e.degree != "positive":
                rec += [Symbol(":degree"), Symbol(e.degree)]
            if e.self_root:
                rec += [Symbol(":self-root"), Symbol("t")]
            out.append(rec)
        for key in sorted(self.semtrans):
            out += [e.to_sexp() for e in self.semtrans[key]]
        return out

    def dumps(self) -> str:
        return "".join(dumps(r) + "\n" for r in self.records())

    def __eq__(self, other):
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return self.dumps() == other.dumps()

    __hash__ = None


def _sym(x, what):
    if not isinstance(x, Symbol):
        raise ValueError(f"{what} must be a symbol, got {dumps(x)}")
    return str(x)


def _text(x, what):
    if not isinstance(x, str):
        raise ValueError(f"{what} must be text, got {dumps(x)}")
    return str(x)


def _semtrans_from(args) -> SemtransEntry:
    pos_args, kw = keyword_args(args, 0)
    if len(pos_args) != 2:
        raise ValueError("semtrans needs word and part of speech")
    roles = tuple(tuple(str(s) for s in r) for r in kw.get("roles", []))
    value = kw.get("value")
    return SemtransEntry(
        word=_text(pos_args[0], "word"),
        pos=_sym(pos_args[1], "pos"),
        frame_type=_sym(kw["frame"], "frame"),
        quantity_type=_sym(kw["qtype"], "qtype") if "qtype" in kw else None,
        relation=_sym(kw.get("reln", Symbol("none")), "reln"),
        roles=roles,
        value=QualValue.from_sexp(value) if value not in (None, "nil") else None,
        provenance=Provenance.from_sexp(kw.get("provenance", Symbol("builtin"))),
        extras=str(kw.get("extras", "")),
    )


def loads_kb(text: str, auto_register: bool = False) -> KnowledgeBase:
    """Parse KB text. Records may appear in any order; identifiers are
    resolved after every record has been read."""
    parsed: dict[str, list] = {k: [] for k in _KINDS}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        try:
            forms = read_all(line)
        except SexpError as exc:
            raise KBParseError(lineno, str(exc)) from None
        if len(forms) != 1 or not isinstance(forms[0], list) or not forms[0]:
            raise KBParseError(lineno, "expected one parenthesized record")
        rec = forms[0]
        kind = rec[0]
        if kind not in parsed:
            raise KBParseError(lineno, f"unknown record kind {dumps(kind)}")
        parsed[kind].append((lineno, rec[1:]))

    kb = KnowledgeBase(auto_register=auto_register)

    def each(kind, fn):
        for lineno, args in parsed[kind]:
            try:
                fn(args)
            except (ValueError, KeyError, IndexError, KBError) as exc:
                raise KBParseError(lineno, f"{kind}: {exc}") from None

    def frame_type(a):
        kb.add_frame_type(_sym(a[0], "frame type"), _text(a[1], "label") if len(a) > 1 else None)

    def lex(a):
        pos_args, kw = keyword_args(a)
        kb.add_lex(LexicalEntry(
            _text(pos_args[0], "surface"), _sym(pos_args[1], "pos"),
            root=_text(kw.get("root", ""), "root"),
            degree=_sym(kw.get("degree", Symbol("positive")), "degree"),
            self_root=kw.get("self-root") == "t",
        ))

    def semtrans(a):
        entry = _semtrans_from(a)
        if kb.add_semtrans(entry) == DUPLICATE:
            raise KBError(f"duplicate semtrans {entry.key}")

    each("frame-type", frame_type)
    each("qtype", lambda a: kb.add_quantity_type(_sym(a[0], "qtype")))
    each("qtype-equiv", lambda a: kb.taxonomy.add_equivalence(_sym(a[0], "qtype"), _sym(a[1], "qtype")))
    each("qtype-partial", lambda a: kb.taxonomy.add_partial(_sym(a[0], "qtype"), _sym(a[1], "qtype")))
    each("value-map", lambda a: kb.add_value_map(QualValue.from_sexp(a[0]), _sym(a[1], "qtype")))
    each("qnoun", lambda a: kb.add_noun_quantity(_text(a[0], "noun"), _sym(a[1], "qtype")))
    each("label", lambda a: kb.add_label(_text(a[0], "label"), _sym(a[1], "qtype")))
    each("lex", lex)
    each("semtrans", semtrans)
    # taxonomy references must resolve too
    for lineno, args in parsed["qtype-equiv"] + parsed["qtype-partial"]:
        for q in args[:2]:
            if q not in kb.taxonomy.nodes:
                if not auto_register:
                    raise KBParseError(lineno, f"unresolved quantity type {q}")
                kb.add_quantity_type(str(q))
    return kb


def load_kb(path, auto_register: bool = False) -> KnowledgeBase:
    return loads_kb(Path(path).read_text(encoding="utf-8"), auto_register=auto_register)


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_kb(kb: KnowledgeBase, path):
    atomic_write(path, kb.dumps())


def seed_kb_path() -> Path:
    return Path(__file__).with_name("data") / "seed_kb.sx"


def load_seed_kb(auto_register: bool = False) -> KnowledgeBase:
    return load_kb(seed_kb_path(), auto_register=auto_register)
