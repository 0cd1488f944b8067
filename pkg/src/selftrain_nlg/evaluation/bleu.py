"""Corpus-level BLEU with multi-reference clipping."""

from __future__ import annotations

import math
from collections import Counter


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(hyp_len: int, ref_lens) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


def bleu_stats(hyps, refs, max_n: int = 4):
    """Per-order (clipped matches, hypothesis n-gram totals), hypothesis length and effective reference length."""
    if len(hyps) != len(refs):
        raise ValueError(f"corpus_bleu: {len(hyps)} hypotheses but {len(refs)} reference sets")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref_set in zip(hyps, refs):
        hyp = list(hyp)
        ref_set = [list(r) for r in ref_set]
        if not ref_set:
            raise ValueError("corpus_bleu: every hypothesis needs at least one reference")
        hyp_len += len(hyp)
        ref_len += _closest_ref_len(len(hyp), [len(r) for r in ref_set])
        for n in range(1, max_n + 1):
            h = _ngrams(hyp, n)
            best: Counter = Counter()
            for r in ref_set:
                best |= _ngrams(r, n)
            matches[n - 1] += sum(min(c, best[g]) for g, c in h.items())
            totals[n - 1] += sum(h.values())
    return matches, totals, hyp_len, ref_len


def corpus_bleu(hyps, refs, max_n: int = 4) -> float:
    """BLEU in [0, 100]: geometric mean of modified n-gram precisions times the brevity penalty.

    The brevity penalty compares the total hypothesis length with the sum of the
    closest reference lengths (ties resolved to the shorter reference). Orders for
    which the hypotheses contain no n-grams at all are left out of the mean; any
    order with n-grams but no matches gives 0 (no smoothing).
    """
    matches, totals, c, r = bleu_stats(hyps, refs, max_n)
    if c == 0:
        return 0.0
    logs = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        logs.append(math.log(m / t))
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(sum(logs) / len(logs))
