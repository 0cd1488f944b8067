"""Tokenization and (de)lexicalization of reference utterances."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from .mr import MeaningRepresentation
from .schema import DONTCARE, DomainSchema

_TOKEN_RE = re.compile(
    r"""
      (?<!\S)-s(?![\w-])    # plural marker of the Laptops/TVs references: "laptop -s"
    | \d+(?:\.\d+)?         # numbers, incl. decimals such as weights
    | \w+(?:'\w+)*          # words, keeping internal apostrophes: "don't"
    | \S                    # punctuation, currency signs
    """,
    re.X,
)
# all-caps words are placeholders (NAME, NEAR, WEIGHT_1) and are kept verbatim
PLACEHOLDER_RE = re.compile(r"[A-Z]{3,}(?:_\d+)?")
PUNCTUATION = frozenset(".,!?;:-'\"()")
TERMINALS = frozenset(".!?")


def is_placeholder(token: str) -> bool:
    return PLACEHOLDER_RE.fullmatch(token) is not None


def tokenize(text: str) -> list[str]:
    """Lowercase and split off punctuation.

    >>> tokenize("Near The Six Bells, for less than £20.")
    ['near', 'the', 'six', 'bells', ',', 'for', 'less', 'than', '£', '20', '.']
    """
    out = []
    for tok in _TOKEN_RE.findall(text):
        out.append(tok if is_placeholder(tok) else tok.lower())
    return out


def detokenize(tokens) -> str:
    return " ".join(tokens)


@dataclass(frozen=True)
class Utterance:
    tokens: tuple[str, ...]
    raw: str = ""

    @classmethod
    def from_text(cls, text: str) -> "Utterance":
        return cls(tuple(tokenize(text)), text)

    @property
    def text(self) -> str:
        return detokenize(self.tokens)

    def __len__(self):
        return len(self.tokens)


def as_tokens(utt) -> tuple[str, ...]:
    """Accept an :class:`Utterance`, a token sequence, or raw text."""
    if isinstance(utt, Utterance):
        return utt.tokens
    if isinstance(utt, str):
        return tuple(tokenize(utt))
    return tuple(utt)


class DelexMiss(LookupError):
    """A slot value chosen for delexicalization does not occur in the utterance."""

    def __init__(self, attribute: str, value: str):
        super().__init__(f"value {value!r} of attribute {attribute!r} not found in utterance")
        self.attribute = attribute
        self.value = value


def _find(tokens: list[str], span: list[str]) -> list[int]:
    n = len(span)
    return [i for i in range(len(tokens) - n + 1) if tokens[i : i + n] == span]


def placeholder_names(mr: MeaningRepresentation, schema: DomainSchema, attrs) -> list[tuple[str, str, str]]:
    """(attribute, value, placeholder) per delexicalized slot; repeated attributes get ``_1``, ``_2`` suffixes."""
    attrs = set(attrs)
    counts = Counter(a for a, v in mr.slots if a in attrs and v != DONTCARE)
    seen: Counter = Counter()
    out = []
    for a, v in mr.slots:
        if a not in attrs or v == DONTCARE:
            continue
        seen[a] += 1
        base = schema.placeholder(a)
        out.append((a, v, f"{base}_{seen[a]}" if counts[a] > 1 else base))
    return out


def delexicalize(utt, mr: MeaningRepresentation, slots, schema: DomainSchema):
    """Replace every verbatim (case-insensitive) occurrence of the chosen slot values with placeholders.

    Returns ``(Utterance, mapping)`` where mapping is placeholder -> original value.
    Slots whose MR value already is the placeholder are left alone.
    """
    tokens = list(as_tokens(utt))
    mapping: dict[str, str] = {}
    todo = []
    for a, v, ph in placeholder_names(mr, schema, slots):
        if v == schema.placeholder(a) or is_placeholder(v):
            continue
        todo.append((a, v, ph))
    # longest values first so that a value nested in another is not split
    todo.sort(key=lambda t: -len(tokenize(t[1])))
    for a, v, ph in todo:
        span = tokenize(v)
        hits = _find(tokens, span)
        if not hits:
            raise DelexMiss(a, v)
        out, i = [], 0
        while i < len(tokens):
            if tokens[i : i + len(span)] == span:
                out.append(ph)
                i += len(span)
            else:
                out.append(tokens[i])
                i += 1
        tokens = out
        mapping[ph] = v
    return Utterance(tuple(tokens), detokenize(tokens)), mapping


def relexicalize(utt, mapping: dict[str, str]) -> Utterance:
    out = []
    for tok in as_tokens(utt):
        if tok in mapping:
            out.extend(tokenize(mapping[tok]))
        else:
            out.append(tok)
    return Utterance(tuple(out), detokenize(out))


def relex_mapping(mr: MeaningRepresentation, schema: DomainSchema, attrs) -> dict[str, str]:
    """Placeholder -> value mapping used to fill a generated delexicalized utterance from its MR."""
    return {ph: v for _, v, ph in placeholder_names(mr, schema, attrs) if not is_placeholder(v)}
