"""Attribute realization errors estimated with the rule parser."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..mrparse.rules import RulePack, rule_parse

KINDS = ("missing", "wrong", "hallucinated")

# column order and headers of the E2E error table
E2E_COLUMNS = (
    ("name", "Name"),
    ("near", "Near"),
    ("familyFriendly", "FamilyFriendly"),
    ("area", "Area"),
    ("customerRating", "CustomerRating"),
    ("food", "Food"),
    ("priceRange", "PriceRange"),
    ("eatType", "EatType"),
)


@dataclass
class SlotErrorReport:
    attributes: list[str]
    counts: dict[str, Counter] = field(default_factory=dict)  # attribute -> Counter over KINDS
    rows: list[dict] = field(default_factory=list)  # per output: {"index", "mr", "errors": {attr: {kind: n}}}

    @property
    def total(self) -> int:
        return sum(sum(c.values()) for c in self.counts.values())

    def attribute_total(self, attr: str) -> int:
        return sum(self.counts.get(attr, Counter()).values())

    def kind_total(self, kind: str) -> int:
        return sum(c[kind] for c in self.counts.values())

    def columns(self) -> list[tuple[str, str]]:
        if set(self.attributes) == {a for a, _ in E2E_COLUMNS}:
            return list(E2E_COLUMNS)
        return [(a, a) for a in self.attributes]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_attribute": {a: {k: self.counts[a][k] for k in KINDS} for a in self.attributes},
            "rows": self.rows,
        }


def attribute_errors(gold: set, pred: set) -> dict[str, int]:
    """Error counts for one attribute of one output.

    Gold without any parsed value is missing; a parsed value without gold is
    hallucinated; parsed values that disagree with the gold are wrong values.
    """
    if not gold and not pred:
        return {}
    if not pred:
        return {"missing": len(gold)}
    if not gold:
        return {"hallucinated": len(pred)}
    n = max(len(gold - pred), len(pred - gold))
    return {"wrong": n} if n else {}


def slot_errors(outputs, pack: RulePack, delex_attrs=()) -> SlotErrorReport:
    """Count missing, wrong-value and hallucinated attributes of (MR, utterance) outputs.

    Parsing is lenient: conflicting matches are scored, not discarded.
    ``delex_attrs`` lists attributes whose MR values should be compared as
    placeholders (for delexicalized outputs).
    """
    outputs = list(outputs)
    if not outputs:
        raise ValueError("slot_errors needs at least one output")
    schema = pack.schema
    attrs = list(schema.attribute_names)
    report = SlotErrorReport(attrs, {a: Counter() for a in attrs})
    for i, (mr, utt) in enumerate(outputs):
        if delex_attrs:
            mr = mr.delexicalized(schema, delex_attrs)
        parsed = rule_parse(utt, pack).values
        errs = {}
        for a in attrs:
            e = attribute_errors(set(mr.values(a)), set(parsed.get(a, ())))
            if e:
                errs[a] = e
                report.counts[a].update(e)
        report.rows.append({"index": i, "mr": str(mr), "errors": errs})
    return report
