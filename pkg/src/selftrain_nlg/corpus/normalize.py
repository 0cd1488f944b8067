"""Consistency fixes for E2E train/valid MRs whose references disagree with them.

Two kinds of rule:

* amend: add ``attr[value]`` when the attribute is missing but a cue appears in the
  reference (venues called restaurants get ``eatType[restaurant]``);
* remap: swap a verbal value and its numeric twin depending on whether the reference
  mentions a numeric amount (``cheap`` <-> ``less than £20``).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from ..errors import ConfigError
from .dataset import Dataset, Example
from .mr import MeaningRepresentation
from .schema import DomainSchema

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmendRule:
    attribute: str
    value: str
    cue: str


@dataclass(frozen=True)
class RemapRule:
    attribute: str
    verbal: str
    numeric: str
    numeric_cue: str


@dataclass
class NormalizationRules:
    amend: list[AmendRule] = field(default_factory=list)
    remap: list[RemapRule] = field(default_factory=list)
    # rating remaps mirror the price rule in both directions; the alternative is verbal -> numeric only
    symmetric_rating: bool = True

    def validate(self, schema: DomainSchema) -> None:
        for r in self.amend:
            self._check(schema, r.attribute, [r.value])
        for r in self.remap:
            self._check(schema, r.attribute, [r.verbal, r.numeric])

    @staticmethod
    def _check(schema: DomainSchema, attr: str, values) -> None:
        if not schema.has_attribute(attr):
            raise ConfigError(f"normalization rule references unknown attribute {attr!r}")
        a = schema.attribute(attr)
        for v in values:
            if v not in a.values:
                raise ConfigError(f"normalization rule references unknown value {attr}[{v}]")


_PRICE_CUE = r"£\s*\d+|\d+\s*(?:pounds|quid|£)"


def _rating_cue(stars: int) -> str:
    return rf"\b{stars}\s*(?:out\s+of\s+5|/\s*5|stars?)\b"


def default_e2e_rules() -> NormalizationRules:
    return NormalizationRules(
        amend=[AmendRule("eatType", "restaurant", r"\brestaurant\b")],
        remap=[
            RemapRule("priceRange", "cheap", "less than £20", _PRICE_CUE),
            RemapRule("customerRating", "low", "1 out of 5", _rating_cue(1)),
            RemapRule("customerRating", "average", "3 out of 5", _rating_cue(3)),
            RemapRule("customerRating", "high", "5 out of 5", _rating_cue(5)),
        ],
    )


def _replace(mr: MeaningRepresentation, attr: str, value: str) -> MeaningRepresentation:
    return MeaningRepresentation(mr.act, tuple((a, value if a == attr else v) for a, v in mr.slots))


def normalize_mr(mr: MeaningRepresentation, text: str, rules: NormalizationRules, edits: list | None = None):
    for r in rules.amend:
        if r.attribute not in mr and re.search(r.cue, text):
            mr = MeaningRepresentation(mr.act, mr.slots + ((r.attribute, r.value),))
            if edits is not None:
                edits.append(("amend", r.attribute, None, r.value, text))
    for r in rules.remap:
        value = mr.get(r.attribute)
        numeric = re.search(r.numeric_cue, text) is not None
        new = value
        if value == r.verbal and numeric:
            new = r.numeric
        elif value == r.numeric and not numeric:
            if r.attribute == "customerRating" and not rules.symmetric_rating:
                continue
            new = r.verbal
        if new != value:
            mr = _replace(mr, r.attribute, new)
            if edits is not None:
                edits.append(("remap", r.attribute, value, new, text))
    return mr


def normalize_dataset(ds: Dataset, rules: NormalizationRules, edits: list | None = None) -> Dataset:
    """Apply ``rules`` to a train or valid split; the test split is returned untouched.

    Every edit is logged and, when ``edits`` is given, appended to it as
    ``(kind, attribute, old, new, reference)``.
    """
    rules.validate(ds.schema)
    if ds.split == "test":
        return ds
    out = []
    for ex in ds.examples:
        fixed = []
        for ref in ex.refs:
            local: list = []
            mr = normalize_mr(ex.mr, ref.text, rules, local)
            for e in local:
                log.info("normalize %s %s: %s -> %s (%r)", e[0], e[1], e[2], e[3], e[4])
            if edits is not None:
                edits.extend(local)
            fixed.append((mr.canonical(ds.schema) if local else ex.mr, ref))
        mrs = {mr for mr, _ in fixed}
        if len(mrs) == 1:
            out.append(Example(fixed[0][0], ex.refs))
        else:
            out.extend(Example(mr, (ref,)) for mr, ref in fixed)
    return Dataset(ds.schema, out, ds.split)
