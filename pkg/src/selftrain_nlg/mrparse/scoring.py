"""Slot-level precision, recall and F-score of a parser against gold MRs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .outcome import ParseOutcome


@dataclass(frozen=True)
class AttributeScore:
    precision: float
    recall: float
    f: float
    tp: int
    fp: int
    fn: int


def _prf(tp: int, fp: int, fn: int) -> AttributeScore:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return AttributeScore(p, r, f, tp, fp, fn)


def _predicted(result) -> set[tuple[str, str]]:
    if isinstance(result, ParseOutcome):
        return result.slots()
    if result is None:
        return set()
    return set(result.slots)  # a bare MeaningRepresentation


def parser_fscore(parser, pairs) -> tuple[dict[str, AttributeScore], float]:
    """Score ``parser`` (utterance -> ParseOutcome or MR) on (gold MR, utterance) pairs.

    ``pairs`` may be a Dataset. Predictions use the lenient reading, so a
    conflicting parse still contributes its values. Undefined precision or recall
    count as 0. The macro average runs over attributes that occur in the gold
    MRs or the predictions.
    """
    if hasattr(pairs, "pairs"):
        pairs = pairs.pairs()
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    attrs: dict[str, None] = {}
    for mr, utt in pairs:
        gold = set(mr.slots)
        pred = _predicted(parser(utt))
        for a, _ in gold | pred:
            attrs.setdefault(a)
        for a, _ in pred - gold:
            fp[a] += 1
        for a, _ in gold - pred:
            fn[a] += 1
        for a, _ in pred & gold:
            tp[a] += 1
    scores = {a: _prf(tp[a], fp[a], fn[a]) for a in attrs}
    macro = sum(s.f for s in scores.values()) / len(scores) if scores else 0.0
    return scores, macro
