"""Template realizer for restaurant-domain MRs.

Used to build the bundled toy domain and the exhaustive template corpus the
rule parser is checked against. Each (attribute, value) has a handful of
phrasings; ``realize`` picks one per slot and chains the clauses into one or
more sentences.
"""

from __future__ import annotations

import itertools
import random

from .mr import MeaningRepresentation
from .schema import DomainSchema
from .text import Utterance

PHRASES: dict[str, dict[str, list[str]]] = {
    "eatType": {
        "coffee shop": ["is a coffee shop", "is a coffee shop venue"],
        "pub": ["is a pub", "is a pub venue"],
        "restaurant": ["is a restaurant", "is a restaurant venue"],
    },
    "food": {
        v: [f"serves {v.lower()} food", f"offers {v.lower()} food", f"provides {v.lower()} food"]
        for v in ["Chinese", "English", "Fast food", "French", "Indian", "Italian", "Japanese"]
    },
    "priceRange": {
        "cheap": ["has cheap prices", "is cheap"],
        "moderate": ["has moderate prices", "is moderately priced"],
        "high": ["has high prices", "is expensive"],
        "less than £20": ["costs less than £20", "has a price range of less than £20"],
        "£20-25": ["has a price range of £20-25", "costs £20-25"],
        "more than £30": ["costs more than £30", "has a price range of more than £30"],
    },
    "customerRating": {
        "low": ["has a low customer rating", "is rated low by customers"],
        "average": ["has an average customer rating", "is rated average by customers"],
        "high": ["has a high customer rating", "is highly rated"],
        "1 out of 5": ["has a customer rating of 1 out of 5", "is rated 1 out of 5"],
        "3 out of 5": ["has a customer rating of 3 out of 5", "is rated 3 out of 5"],
        "5 out of 5": ["has a customer rating of 5 out of 5", "is rated 5 out of 5"],
    },
    "area": {
        "city centre": ["is in the city centre", "is located in the city centre"],
        "riverside": ["is in the riverside area", "is located by the riverside"],
    },
    "familyFriendly": {
        "yes": ["is family friendly", "is kid friendly", "is child friendly"],
        "no": ["is not family friendly", "is not kid friendly", "is not child friendly"],
    },
    "near": {"*": ["is near {v}", "is located near {v}"]},
}


def _clause(attr: str, value: str, variant: int) -> str:
    table = PHRASES[attr]
    options = table.get(value) or table["*"]
    return options[variant % len(options)].format(v=value)


def n_variants(attr: str, value: str) -> int:
    table = PHRASES[attr]
    return len(table.get(value) or table["*"])


def realize(mr: MeaningRepresentation, rng: random.Random | None = None, variants: dict | None = None,
            order=None, per_sentence: int = 2) -> Utterance:
    """Render ``mr`` as text. ``name`` is the sentence subject; other slots become clauses.

    ``variants`` pins the phrasing per attribute; otherwise ``rng`` picks (first variant without rng).
    """
    subject = mr.get("name", "it")
    slots = [(a, v) for a, v in mr.slots if a != "name"]
    if order is not None:
        slots = [slots[i] for i in order]
    elif rng is not None:
        rng.shuffle(slots)
    clauses = []
    for a, v in slots:
        if variants and a in variants:
            k = variants[a]
        elif rng is not None:
            k = rng.randrange(n_variants(a, v))
        else:
            k = 0
        clauses.append(_clause(a, v, k))
    if not clauses:
        return Utterance.from_text(f"{subject} is a venue .")
    sentences = []
    for i in range(0, len(clauses), per_sentence):
        chunk = clauses[i : i + per_sentence]
        head = subject if i == 0 else "it"
        sentences.append(f"{head} " + " and ".join(chunk) + " .")
    return Utterance.from_text(" ".join(sentences))


def template_corpus(schema: DomainSchema, name: str | None = None) -> list[tuple[MeaningRepresentation, Utterance]]:
    """Every phrasing of every (attribute, value) pair, each in a two-slot MR with ``name``.

    Value-free ``near`` is realized for each vocabulary value. The result covers the
    full schema, so a parser that recovers all of it has precision and recall 1.0 on it.
    """
    name_attr = schema.attribute("name")
    name = name or name_attr.placeholder or name_attr.values[0]
    out = []
    for attr in schema.attributes:
        if attr.name == "name":
            continue
        for value in attr.values:
            for k in range(n_variants(attr.name, value)):
                mr = MeaningRepresentation(schema.default_act, (("name", name), (attr.name, value)))
                out.append((mr, realize(mr, variants={attr.name: k})))
    return out


def combination_corpus(schema: DomainSchema, sizes=(2, 3), name: str = "NAME", seed: int = 0, per_combo: int = 1):
    """Multi-slot templated pairs over every attribute combination of the given sizes (values drawn by ``seed``)."""
    rng = random.Random(seed)
    others = [a for a in schema.attribute_names if a != "name"]
    out = []
    for size in sizes:
        for combo in itertools.combinations(others, size):
            for _ in range(per_combo):
                slots = [("name", name)] + [(a, rng.choice(schema.attribute(a).values)) for a in combo]
                mr = MeaningRepresentation(schema.default_act, tuple(slots)).canonical(schema)
                out.append((mr, realize(mr, rng)))
    return out


def toy_splits(schema: DomainSchema, seed: int = 0, n_train: int = 300, n_valid: int = 40, n_test: int = 30,
               max_train_size: int = 3):
    """Train/valid/test pairs for the toy domain.

    Train and valid MRs carry at most ``max_train_size`` slots; the test MRs are
    distinct full combinations never seen in training, so realizing them needs
    generalization to longer inputs.
    """
    rng = random.Random(seed)
    others = [a for a in schema.attribute_names if a != "name"]
    names = schema.attribute("name").values

    def draw(size):
        combo = rng.sample(others, size - 1)
        slots = [("name", rng.choice(names))] + [(a, rng.choice(schema.attribute(a).values)) for a in combo]
        return MeaningRepresentation(schema.default_act, tuple(slots)).canonical(schema)

    def pairs(n, sizes):
        out = []
        for _ in range(n):
            mr = draw(rng.choice(sizes))
            out.append((mr, realize(mr, rng)))
        return out

    short = list(range(2, max_train_size + 1))
    train, valid = pairs(n_train, short), pairs(n_valid, short)
    full = len(others) + 1
    combos = 1
    for a in others:
        combos *= len(schema.attribute(a).values)
    if n_test > combos:
        raise ValueError(f"only {combos} distinct full combinations exist, {n_test} requested")
    test, seen = [], set()
    while len(test) < n_test:
        mr = draw(full)
        if mr.delexicalized(schema, ["name"]) in seen:
            continue
        seen.add(mr.delexicalized(schema, ["name"]))
        test.append((mr, realize(mr, rng)))
    return train, valid, test
