"""Datasets of (MR, references) examples and their on-disk formats."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .linearize import all_input_tokens, delex_attributes, linearize
from .mr import MeaningRepresentation, MRSyntaxError, parse_mr, serialize_mr, validate_mr
from .schema import DomainSchema, SchemaError
from .text import DelexMiss, Utterance, delexicalize
from .vocab import INPUT_SPECIALS, OUTPUT_SPECIALS, Vocab, vocab_from_counts

log = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")


class CorpusError(ValueError):
    """A malformed corpus row."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.path = path
        self.line = line


class CorpusSchemaError(SchemaError):
    """A corpus row names an attribute or value outside the schema."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Example:
    mr: MeaningRepresentation
    refs: tuple[Utterance, ...]


@dataclass
class Dataset:
    schema: DomainSchema
    examples: list[Example] = field(default_factory=list)
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        for ex in self.examples:
            if not ex.refs:
                raise ValueError(f"example {ex.mr} has no reference")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def pairs(self):
        """Flatten to one (mr, utterance) pair per reference."""
        for ex in self.examples:
            for ref in ex.refs:
                yield ex.mr, ref

    def grouped(self) -> list[Example]:
        """Merge examples sharing an MR into multi-reference examples (first-seen order)."""
        groups: dict[MeaningRepresentation, list[Utterance]] = {}
        for ex in self.examples:
            groups.setdefault(ex.mr.canonical(self.schema), []).extend(ex.refs)
        return [Example(mr, tuple(refs)) for mr, refs in groups.items()]


def _read_mr(text: str, schema: DomainSchema, path, line: int) -> MeaningRepresentation:
    try:
        mr = parse_mr(text, default_act=schema.default_act)
    except MRSyntaxError as e:
        raise CorpusError(str(e), path, line) from None
    try:
        validate_mr(mr, schema)
    except SchemaError as e:
        raise CorpusSchemaError(str(e), path, line) from None
    return mr


def load_e2e_corpus(path, schema: DomainSchema, split: str = "train") -> Dataset:
    """Read a two-column ``mr,ref`` CSV file; one example per row, duplicates kept."""
    path = Path(path)
    examples = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if line == 1 and [c.strip().lower() for c in row] == ["mr", "ref"]:
                continue
            if len(row) != 2:
                raise CorpusError(f"expected 2 fields (mr, ref), got {len(row)}", path, line)
            mr = _read_mr(row[0], schema, path, line)
            examples.append(Example(mr, (Utterance.from_text(row[1]),)))
    return Dataset(schema, examples, split)


def load_da_corpus(path, schema: DomainSchema, split: str = "train") -> Dataset:
    """Read a JSON list of ``{"mr": "act(a[v], ...)", "refs": [...]}`` records (Laptops/TVs style)."""
    path = Path(path)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    examples = []
    for i, rec in enumerate(records, 1):
        refs = rec.get("refs") or []
        if isinstance(refs, str):
            refs = [refs]
        if not refs:
            raise CorpusError("record has no references", path, i)
        mr = _read_mr(rec["mr"], schema, path, i)
        examples.append(Example(mr, tuple(Utterance.from_text(r) for r in refs)))
    return Dataset(schema, examples, split)


def load_corpus(path, schema: DomainSchema, split: str = "train") -> Dataset:
    if Path(path).suffix == ".json":
        return load_da_corpus(path, schema, split)
    return load_e2e_corpus(path, schema, split)


def write_e2e_corpus(path, rows, schema: DomainSchema | None = None) -> None:
    """Write (mr, text) rows in the two-column CSV format."""
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["mr", "ref"])
        for mr, text in rows:
            w.writerow([serialize_mr(mr, schema, with_act=False), text])


def write_da_corpus(path, dataset: Dataset) -> None:
    records = [
        {"mr": serialize_mr(ex.mr, dataset.schema), "refs": [r.raw or r.text for r in ex.refs]}
        for ex in dataset.examples
    ]
    Path(path).write_text(json.dumps(records, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def prepare_pair(mr: MeaningRepresentation, utt, mode: str, schema: DomainSchema):
    """Encoder tokens and (delexicalized) decoder tokens for one pair. Raises DelexMiss."""
    x = linearize(mr, mode, schema)
    attrs = delex_attributes(schema, mode)
    y, _ = delexicalize(utt, mr, attrs, schema)
    return x, list(y.tokens)


def training_pairs(ds: Dataset, mode: str):
    """All prepared pairs of ``ds``; references whose values cannot be delexicalized are dropped."""
    out, missed = [], 0
    for mr, utt in ds.pairs():
        try:
            x, y = prepare_pair(mr, utt, mode, ds.schema)
        except DelexMiss as e:
            missed += 1
            log.debug("dropping reference %r: %s", utt.text, e)
            continue
        if not y:
            continue
        out.append((mr, x, y))
    if missed:
        log.warning("dropped %d of %d references whose slot values could not be delexicalized", missed, missed + len(out))
    return out


def build_vocab(ds: Dataset, mode: str) -> tuple[Vocab, Vocab]:
    """Input and output vocabularies; inputs cover every token the schema can linearize to."""
    if not len(ds):
        raise ValueError("cannot build a vocabulary from an empty dataset")
    in_counts: Counter = Counter()
    out_counts: Counter = Counter()
    for _, x, y in training_pairs(ds, mode):
        in_counts.update(x)
        out_counts.update(y)
    in_vocab = vocab_from_counts(in_counts, INPUT_SPECIALS, extra=all_input_tokens(ds.schema, mode))
    out_vocab = vocab_from_counts(out_counts, OUTPUT_SPECIALS)
    return in_vocab, out_vocab
