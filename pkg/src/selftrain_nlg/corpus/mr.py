"""Meaning representations and their ``act(attr[value], ...)`` string form."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from .schema import DONTCARE, DomainSchema, SchemaError


class MRSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class MeaningRepresentation:
    act: str
    slots: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple((str(a), str(v)) for a, v in self.slots))

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.slots)

    def __len__(self):
        return len(self.slots)

    def __contains__(self, attr):
        return any(a == attr for a, _ in self.slots)

    def get(self, attr: str, default=None):
        for a, v in self.slots:
            if a == attr:
                return v
        return default

    def values(self, attr: str) -> list[str]:
        return [v for a, v in self.slots if a == attr]

    def as_dict(self) -> dict[str, str]:
        """Attribute -> value; only meaningful when attributes do not repeat."""
        return dict(self.slots)

    def canonical(self, schema: DomainSchema) -> "MeaningRepresentation":
        """Reorder slots into schema order; repeated attributes keep their item grouping."""
        seen: Counter = Counter()
        keyed = []
        for pos, (a, v) in enumerate(self.slots):
            keyed.append(((seen[a], schema.index(a), pos), (a, v)))
            seen[a] += 1
        return MeaningRepresentation(self.act, tuple(s for _, s in sorted(keyed)))

    def delexicalized(self, schema: DomainSchema, attrs) -> "MeaningRepresentation":
        """Replace the values of ``attrs`` with their placeholder token ("don't care" is kept)."""
        attrs = set(attrs)
        return MeaningRepresentation(
            self.act,
            tuple((a, schema.placeholder(a) if a in attrs and v != DONTCARE else v) for a, v in self.slots),
        )

    def __str__(self):
        inner = ", ".join(f"{a}[{v}]" for a, v in self.slots)
        return f"{self.act}({inner})"


_ITEM = r"\s*([A-Za-z_][\w]*)\s*\[([^\[\]]*)\]\s*"
_ITEM_RE = re.compile(_ITEM)
_LIST_RE = re.compile(rf"(?:{_ITEM}(?:,{_ITEM})*)?")
_ACT_RE = re.compile(r"\s*([A-Za-z_][\w]*)\s*\((.*)\)\s*", re.S)


def parse_mr(text: str, default_act: str = "inform") -> MeaningRepresentation:
    """Parse ``act(a[v], b[w])`` or the bare E2E form ``a[v], b[w]``.

    >>> parse_mr("name[The Mill], food[Italian]")
    MeaningRepresentation(act='inform', slots=(('name', 'The Mill'), ('food', 'Italian')))
    """
    m = _ACT_RE.fullmatch(text)
    if m:
        act, body = m.group(1), m.group(2)
    else:
        act, body = default_act, text
    if body.strip() and not _LIST_RE.fullmatch(body):
        raise MRSyntaxError(f"malformed MR string: {text!r}")
    slots = tuple((a, v.strip()) for a, v in _ITEM_RE.findall(body))
    return MeaningRepresentation(act, slots)


def serialize_mr(mr: MeaningRepresentation, schema: DomainSchema | None = None, with_act: bool = True) -> str:
    if schema is not None:
        mr = mr.canonical(schema)
    inner = ", ".join(f"{a}[{v}]" for a, v in mr.slots)
    return f"{mr.act}({inner})" if with_act else inner


def validate_mr(mr: MeaningRepresentation, schema: DomainSchema) -> MeaningRepresentation:
    """Raise :class:`SchemaError` unless ``mr`` is well formed under ``schema``."""
    act = schema.act(mr.act)
    counts = Counter(mr.attributes)
    for a, v in mr.slots:
        attr = schema.attribute(a)
        # delexicalized MRs carry the placeholder in place of the value
        if not attr.accepts(v) and not (a in schema.delexicalize and v == schema.placeholder(a)):
            raise SchemaError(f"value {v!r} not in vocabulary of {a!r}")
    if not act.repeats:
        dup = [a for a, c in counts.items() if c > 1]
        if dup:
            raise SchemaError(f"act {mr.act!r} does not allow repeated attributes {dup}")
    for req in act.required:
        if req not in counts:
            raise SchemaError(f"act {mr.act!r} requires attribute {req!r}")
    return mr


def is_valid_mr(mr: MeaningRepresentation, schema: DomainSchema) -> bool:
    try:
        validate_mr(mr, schema)
    except SchemaError:
        return False
    return True
