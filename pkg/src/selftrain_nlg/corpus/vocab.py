"""Token <-> index vocabularies."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
OUTPUT_SPECIALS = (PAD, BOS, EOS, UNK)
INPUT_SPECIALS = (PAD,)


class Vocab:
    def __init__(self, tokens):
        self.tokens = list(tokens)
        self._index = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok):
        return tok in self._index

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def __getitem__(self, tok: str) -> int:
        return self._index[tok]

    def get(self, tok: str, default: int | None = None) -> int | None:
        return self._index.get(tok, default)

    @property
    def pad(self) -> int:
        return self._index[PAD]

    @property
    def bos(self) -> int:
        return self._index[BOS]

    @property
    def eos(self) -> int:
        return self._index[EOS]

    @property
    def unk(self) -> int:
        return self._index[UNK]

    def encode(self, tokens, unk: bool = True) -> list[int]:
        if unk and UNK in self._index:
            u = self._index[UNK]
            return [self._index.get(t, u) for t in tokens]
        return [self._index[t] for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.tokens[int(i)] for i in ids]

    def to_json(self) -> str:
        return json.dumps({"tokens": self.tokens}, ensure_ascii=False, indent=0)

    @classmethod
    def from_json(cls, text: str) -> "Vocab":
        return cls(json.loads(text)["tokens"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocab":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def vocab_from_counts(counts: Counter, specials=OUTPUT_SPECIALS, extra=()) -> Vocab:
    """Specials first, then tokens by descending frequency, ties broken lexicographically."""
    for tok in extra:
        counts.setdefault(tok, 0)
    ordered = sorted((t for t in counts if t not in specials), key=lambda t: (-counts[t], t))
    return Vocab(list(specials) + ordered)
