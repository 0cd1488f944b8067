"""Length statistics of generated text."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus.text import PUNCTUATION, TERMINALS, as_tokens


@dataclass(frozen=True)
class SurfaceStats:
    words: float
    sentences: float
    count: int


def count_words(tokens) -> int:
    return sum(1 for t in tokens if t not in PUNCTUATION)


def count_sentences(tokens) -> int:
    """Segments closed by terminal punctuation (or the end) that contain a word; at least 1 if nonempty."""
    n, open_words = 0, False
    for t in tokens:
        if t in TERMINALS:
            if open_words:
                n += 1
            open_words = False
        elif t not in PUNCTUATION:
            open_words = True
    if open_words:
        n += 1
    return max(n, 1) if tokens else 0


def surface_stats(utts) -> SurfaceStats:
    toks = [as_tokens(u) for u in utts]
    if not toks:
        return SurfaceStats(0.0, 0.0, 0)
    w = [count_words(t) for t in toks]
    s = [count_sentences(t) for t in toks]
    return SurfaceStats(sum(w) / len(w), sum(s) / len(s), len(toks))
