"""Word-level evaluation: accuracy and Levenshtein-based distances.

Strings are compared as sequences of Unicode scalar values, so a diacritic
letter costs exactly one edit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class EvalPair:
    gold: str
    pred: str


@dataclass(frozen=True)
class EvalReport:
    n: int
    word_accuracy: float
    avg_norm_edit: float
    avg_edit: float
    avg_edit_misclassified: float | None
    avg_gold_length: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **extra) -> str:
        return json.dumps({**extra, **self.to_dict()}, ensure_ascii=False)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(cur[j - 1] + 1, prev[j] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_edit(pair: EvalPair) -> float:
    longest = max(len(pair.gold), len(pair.pred))
    if longest == 0:
        return 0.0
    return levenshtein(pair.gold, pair.pred) / longest


def _nonempty(pairs: Sequence[EvalPair]) -> Sequence[EvalPair]:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one evaluation pair")
    return pairs


def word_accuracy(pairs: Iterable[EvalPair]) -> float:
    pairs = _nonempty(pairs)
    return sum(p.gold == p.pred for p in pairs) / len(pairs)


def avg_norm_edit(pairs: Iterable[EvalPair]) -> float:
    pairs = _nonempty(pairs)
    return sum(normalized_edit(p) for p in pairs) / len(pairs)


def avg_edit(pairs: Iterable[EvalPair]) -> float:
    pairs = _nonempty(pairs)
    return sum(levenshtein(p.gold, p.pred) for p in pairs) / len(pairs)


def avg_edit_misclassified(pairs: Iterable[EvalPair]) -> float | None:
    """Mean distance over the wrong predictions only; None if there are none."""
    wrong = [p for p in _nonempty(pairs) if p.gold != p.pred]
    if not wrong:
        return None
    return sum(levenshtein(p.gold, p.pred) for p in wrong) / len(wrong)


def evaluate(pairs: Iterable[EvalPair], fold: bool = False) -> EvalReport:
    pairs = _nonempty(pairs)
    if fold:
        pairs = [EvalPair(p.gold.lower(), p.pred.lower()) for p in pairs]
    n = len(pairs)
    dists = [levenshtein(p.gold, p.pred) for p in pairs]
    norms = [d / max(len(p.gold), len(p.pred)) if d else 0.0 for d, p in zip(dists, pairs)]
    wrong = [d for d, p in zip(dists, pairs) if p.gold != p.pred]
    return EvalReport(
        n=n,
        word_accuracy=(n - len(wrong)) / n,
        avg_norm_edit=sum(norms) / n,
        avg_edit=sum(dists) / n,
        avg_edit_misclassified=sum(wrong) / len(wrong) if wrong else None,
        avg_gold_length=sum(len(p.gold) for p in pairs) / n,
    )
