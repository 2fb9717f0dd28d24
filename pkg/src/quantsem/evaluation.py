"""Quantity coverage (QC), conditional sign accuracy (CSA) and overall pair score (OP).

Scores are computed in exact rational arithmetic. Gold quantities are
matched one-to-one to predictions by maximum total weight, where an
identical or equivalent type weighs 1 and a partial taxonomy edge weighs
alpha.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .frames import SIGNS, QuantitySign
from .kb import QuantityTaxonomy
from .sexpr import SexpError, Symbol, read_all

DEFAULT_ALPHA = Fraction(1, 2)


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class GoldSpec:
    fact: str
    signs: tuple[tuple[str, str], ...]  # (quantity type, sign), in file order
    fact_id: str | None = None

    def __post_init__(self):
        seen = set()
        for q, s in self.signs:
            if s not in SIGNS:
                raise EvalError(f"bad gold sign {s!r} for {q}")
            if q in seen:
                raise EvalError(f"duplicate gold quantity {q}")
            seen.add(q)

    @property
    def quantities(self) -> list[str]:
        return [q for q, _ in self.signs]

    def sign_of(self, q: str) -> str:
        return dict(self.signs)[q]


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[str, int | None, Fraction], ...]  # gold q, pred index, weight
    unmatched_predictions: int = 0

    @property
    def total(self) -> Fraction:
        return sum((w for _, _, w in self.pairs), Fraction(0))


@dataclass(frozen=True)
class FactScores:
    qc: Fraction
    csa: Fraction | None
    op: Fraction
    unmatched_predictions: int = 0


@dataclass(frozen=True)
class PipelineScores:
    qc: float
    csa: float | None
    op: float
    facts: int
    csa_facts: int

    def row(self, name: str = "") -> str:
        csa = "N/A" if self.csa is None else f"{self.csa:.2f}"
        return f"{name:<16}{self.qc:>8.2f}{csa:>8}{self.op:>8.2f}"


def table(rows: list[tuple[str, PipelineScores]]) -> str:
    lines = [f"{'pipeline':<16}{'QC':>8}{'CSA':>8}{'OP':>8}"]
    lines += [s.row(name) for name, s in rows]
    return "\n".join(lines) + "\n"


def _alpha(alpha) -> Fraction:
    a = Fraction(alpha).limit_denominator(10**9) if isinstance(alpha, float) else Fraction(alpha)
    if not 0 < a < 1:
        raise EvalError(f"alpha must lie in (0, 1), got {alpha}")
    return a


def match_weight(gold: str, pred: str, taxonomy: QuantityTaxonomy, alpha=DEFAULT_ALPHA) -> Fraction:
    a = _alpha(alpha)
    if gold == pred or taxonomy.equivalent(gold, pred):
        return Fraction(1)
    if taxonomy.partial(gold, pred):
        return a
    return Fraction(0)


def match_quantities(gold: GoldSpec, pred: list[QuantitySign], taxonomy: QuantityTaxonomy,
                     alpha=DEFAULT_ALPHA) -> Matching:
    """Maximum-weight one-to-one assignment.

    Ties prefer more identical-type matches, then the lexicographically
    smallest prediction index per gold quantity in gold order.
    """
    a = _alpha(alpha)
    golds = gold.quantities
    w = [[match_weight(g, p.quantity_type, taxonomy, a) for p in pred] for g in golds]
    exact = [[int(g == p.quantity_type) for p in pred] for g in golds]
    useful = [j for j in range(len(pred)) if any(w[i][j] for i in range(len(golds)))]

    @lru_cache(maxsize=None)
    def best(i: int, used: frozenset) -> tuple[Fraction, int, tuple]:
        if i == len(golds):
            return Fraction(0), 0, ()
        tw, te, rest = best(i + 1, used)
        choice = (tw, te, (None,) + rest)
        for j in useful:
            if j in used or not w[i][j]:
                continue
            tw, te, rest = best(i + 1, used | {j})
            cand = (tw + w[i][j], te + exact[i][j], (j,) + rest)
            if _better(cand, choice):
                choice = cand
        return choice

    _, _, assign = best(0, frozenset())
    pairs = tuple((g, j, w[i][j] if j is not None else Fraction(0))
                  for i, (g, j) in enumerate(zip(golds, assign)))
    matched = {j for j in assign if j is not None}
    return Matching(pairs, len(pred) - len(matched))


def _rank(assign: tuple) -> tuple:
    return tuple((1, 0) if j is None else (0, j) for j in assign)


def _better(a, b) -> bool:
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] > b[1]
    return _rank(a[2]) < _rank(b[2])


def score_fact(gold: GoldSpec, pred: list[QuantitySign], matching: Matching) -> FactScores:
    n = len(gold.quantities)
    if n == 0:
        raise EvalError("gold spec has no quantities")
    total = matching.total
    qc = total / n
    if total == 0:
        return FactScores(Fraction(0), None, Fraction(0), matching.unmatched_predictions)
    correct = Fraction(0)
    for q, j, wt in matching.pairs:
        if j is not None and pred[j].sign == gold.sign_of(q):
            correct += wt
    csa = correct / total
    op = (total + correct) / (2 * n)
    return FactScores(qc, csa, op, matching.unmatched_predictions)


def evaluate(gold: GoldSpec, pred: list[QuantitySign], taxonomy: QuantityTaxonomy,
             alpha=DEFAULT_ALPHA) -> FactScores:
    return score_fact(gold, pred, match_quantities(gold, pred, taxonomy, alpha))


def aggregate(scores: list[FactScores]) -> PipelineScores:
    if not scores:
        raise EvalError("cannot aggregate an empty score list")
    n = len(scores)
    qc = sum((s.qc for s in scores), Fraction(0)) / n
    op = sum((s.op for s in scores), Fraction(0)) / n
    defined = [s.csa for s in scores if s.csa is not None]
    csa = float(sum(defined, Fraction(0)) / len(defined) * 100) if defined else None
    return PipelineScores(float(qc * 100), csa, float(op * 100), n, len(defined))


# ---------------------------------------------------------------------------
# gold files

_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    return _WS.sub(" ", text).strip()


def parse_pairs(items) -> list[tuple[str, str]]:
    out = []
    for it in items:
        if not (isinstance(it, list) and len(it) == 2 and all(isinstance(x, Symbol) for x in it)):
            raise EvalError(f"expected (<QType> <sign>), got {it!r}")
        out.append((str(it[0]), str(it[1])))
    return out


def loads_gold(text: str) -> dict[str, GoldSpec]:
    """Gold records keyed by normalized fact text."""
    specs: dict[str, GoldSpec] = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        try:
            for form in read_all(line):
                if not (isinstance(form, list) and len(form) >= 2 and form[0] == "gold"
                        and isinstance(form[1], str) and not isinstance(form[1], Symbol)):
                    raise EvalError('expected (gold "<fact text>" (<QType> <sign>) ...)')
                fact = normalize_text(form[1])
                specs[fact] = GoldSpec(fact, tuple(parse_pairs(form[2:])))
        except (SexpError, EvalError) as e:
            raise EvalError(f"gold line {n}: {e}") from e
    return specs


def load_gold(path) -> dict[str, GoldSpec]:
    return loads_gold(Path(path).read_text(encoding="utf-8"))


@dataclass
class ScoredFact:
    fact_id: str
    text: str
    scores: FactScores | None
    matching: Matching | None = None
    pairs: list[QuantitySign] = field(default_factory=list)

    def to_json(self) -> dict:
        s = self.scores
        rec = {"fact_id": self.fact_id, "text": self.text,
               "pred": [[p.quantity_type, p.sign] for p in self.pairs]}
        if s is None:
            rec["scored"] = False
            return rec
        rec.update({
            "scored": True,
            "qc": _num(s.qc), "csa": None if s.csa is None else _num(s.csa), "op": _num(s.op),
            "unmatched_predictions": s.unmatched_predictions,
            "matching": [[g, None if j is None else self.pairs[j].quantity_type, _num(w)]
                         for g, j, w in self.matching.pairs],
        })
        return rec


def _num(x: Fraction) -> float:
    return round(float(x), 12)
