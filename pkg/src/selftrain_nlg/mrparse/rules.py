"""Regular-expression rule packs and the rule-based MR parser.

Pack file format (UTF-8 text, one directive per line)::

    # comment (only when ``#`` is the first non-blank character)
    [act]                       # dialogue-act cues: pattern => act
    [attribute food]            # value patterns for one attribute
    @placeholder FOOD           # optional: token FOOD / FOOD_1 ... means "value present"
    italian => Italian
    {VALUE} food => *           # expands once per vocabulary value

A rule line is split on its last `` => ``. The pattern is a Python regular
expression matched against the utterance's lowercased tokens joined by single
spaces; it is anchored to token boundaries, so ``pub`` never matches inside
``pubs``. ``{VALUE}`` stands for the escaped, tokenized vocabulary value, and
must be used with the ``*`` target. Literal ``{``, ``}`` and regex metacharacters
follow Python ``re`` escaping rules.
"""

from __future__ import annotations

import re
from collections import OrderedDict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..corpus.mr import MeaningRepresentation, validate_mr
from ..corpus.schema import DomainSchema, SchemaError
from ..corpus.text import as_tokens, tokenize
from .outcome import ParseOutcome

_SECTION_RE = re.compile(r"\[\s*(act|attribute)\s*([^\]]*?)\s*\]")


class RulePackError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or '<rules>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class Rule:
    regex: re.Pattern
    value: str
    pattern: str  # as written, for diagnostics
    line: int


@dataclass
class AttributeRules:
    rules: list[Rule] = field(default_factory=list)
    placeholder: re.Pattern | None = None


@dataclass
class RulePack:
    name: str
    schema: DomainSchema
    attributes: "OrderedDict[str, AttributeRules]"
    acts: list[Rule]

    def reachable(self) -> set[tuple[str, str]]:
        """(attribute, value) pairs some rule can produce, placeholders included."""
        out = {(a, r.value) for a, ar in self.attributes.items() for r in ar.rules}
        for a, ar in self.attributes.items():
            if ar.placeholder is not None:
                out.add((a, self.schema.placeholder(a)))
        return out

    def unreachable(self) -> list[tuple[str, str]]:
        reach = self.reachable()
        missing = []
        for attr in self.schema.attributes:
            ph = self.schema.placeholder(attr.name)
            if (attr.name, ph) in reach:
                continue
            missing.extend((attr.name, v) for v in attr.values if (attr.name, v) not in reach)
        return missing


def _compile(pattern: str, line: int, source) -> re.Pattern:
    try:
        return re.compile(rf"(?<!\S)(?:{pattern})(?!\S)")
    except re.error as e:
        raise RulePackError(f"bad pattern {pattern!r}: {e}", line, source) from None


def value_regex(value: str) -> str:
    return " ".join(re.escape(t) for t in tokenize(value.lower()))


def parse_rule_pack(text: str, schema: DomainSchema, name: str = "rules", source=None) -> RulePack:
    attributes: OrderedDict[str, AttributeRules] = OrderedDict()
    acts: list[Rule] = []
    section: tuple[str, str] | None = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.fullmatch(line)
        if m:
            kind, arg = m.group(1), m.group(2)
            if kind == "attribute":
                if not schema.has_attribute(arg):
                    raise RulePackError(f"unknown attribute {arg!r}", no, source)
                attributes.setdefault(arg, AttributeRules())
            elif arg:
                raise RulePackError("[act] takes no argument", no, source)
            section = (kind, arg)
            continue
        if section is None:
            raise RulePackError("rule outside of a section", no, source)
        if line.startswith("@"):
            parts = line.split()
            if parts[0] != "@placeholder" or len(parts) != 2 or section[0] != "attribute":
                raise RulePackError(f"unknown directive {line!r}", no, source)
            attributes[section[1]].placeholder = re.compile(rf"{re.escape(parts[1])}(?:_\d+)?")
            continue
        if " => " not in line:
            raise RulePackError("expected 'pattern => value'", no, source)
        pattern, value = (s.strip() for s in line.rsplit(" => ", 1))
        if section[0] == "act":
            if value not in schema.dialogue_acts:
                raise RulePackError(f"unknown dialogue act {value!r}", no, source)
            acts.append(Rule(_compile(pattern, no, source), value, pattern, no))
            continue
        attr = schema.attribute(section[1])
        bucket = attributes[section[1]].rules
        if value == "*":
            if "{VALUE}" not in pattern:
                raise RulePackError("'*' target needs a {VALUE} pattern", no, source)
            for v in attr.values:
                expanded = pattern.replace("{VALUE}", f"(?:{value_regex(v)})")
                bucket.append(Rule(_compile(expanded, no, source), v, pattern, no))
            continue
        if "{VALUE}" in pattern:
            raise RulePackError("{VALUE} patterns must target '*'", no, source)
        if not attr.accepts(value):
            raise RulePackError(f"value {value!r} not in the vocabulary of {attr.name!r}", no, source)
        bucket.append(Rule(_compile(pattern, no, source), value, pattern, no))
    return RulePack(name, schema, attributes, acts)


def load_rule_pack(name_or_path, schema: DomainSchema) -> RulePack:
    """Load a pack file, or a bundled pack by name (``e2e``, ``toy``, ``laptop``, ``tv``)."""
    p = Path(str(name_or_path))
    if p.suffix == ".rules" or p.exists():
        if not p.exists():
            raise FileNotFoundError(f"rule pack not found: {p}")
        return parse_rule_pack(p.read_text(encoding="utf-8"), schema, p.stem, str(p))
    res = resources.files("selftrain_nlg.mrparse") / "packs" / f"{name_or_path}.rules"
    if not res.is_file():
        raise FileNotFoundError(f"no bundled rule pack named {name_or_path!r}")
    return parse_rule_pack(res.read_text(encoding="utf-8"), schema, str(name_or_path), f"{name_or_path}.rules")


def _find(rules: list[Rule], text: str) -> list[tuple[str, int, int]]:
    hits = []
    for r in rules:
        hits.extend((r.value, m.start(), m.end()) for m in r.regex.finditer(text))
    # a match lying strictly inside a longer match of another value is subsumed by it
    # ("not family friendly" beats the "family friendly" inside it)
    kept = []
    for v, s, e in hits:
        if any(s2 <= s and e <= e2 and (s2, e2) != (s, e) and v2 != v for v2, s2, e2 in hits):
            continue
        kept.append((v, s, e))
    return sorted(kept, key=lambda h: (h[1], h[2]))


def _distinct(hits) -> tuple[str, ...]:
    return tuple(dict.fromkeys(v for v, _, _ in hits))


def rule_parse(utt, pack: RulePack, schema: DomainSchema | None = None) -> ParseOutcome:
    """Parse ``utt`` with ``pack``.

    One distinct value per attribute (repeats of the same value are fine); two or
    more distinct values invalidate the parse unless the act allows repeated
    attributes. The act comes from the cue patterns (exactly one act must
    match) or is the schema default when the pack has no act section. The result
    must also satisfy the schema, so E2E parses without a name are invalid.
    """
    schema = schema or pack.schema
    tokens = as_tokens(utt)
    text = " ".join(tokens)
    evidence: dict = {}
    values: dict[str, tuple[str, ...]] = {}
    for attr, ar in pack.attributes.items():
        hits = _find(ar.rules, text)
        found = list(_distinct(hits))
        if ar.placeholder is not None:
            ph = [t for t in tokens if ar.placeholder.fullmatch(t)]
            if ph:
                evidence.setdefault(attr, []).extend((t, None, None) for t in ph)
                found.extend([schema.placeholder(attr)] * max(1, len(set(ph))))
        if hits:
            evidence.setdefault(attr, []).extend(hits)
        if found:
            values[attr] = tuple(found)
    lenient = {a: tuple(dict.fromkeys(vs)) for a, vs in values.items()}

    if pack.acts:
        act_hits = _find(pack.acts, text)
        acts = _distinct(act_hits)
        evidence["@act"] = act_hits
        if len(acts) != 1:
            reason = "no dialogue-act cue" if not acts else f"conflicting dialogue acts {list(acts)}"
            return ParseOutcome(None, False, lenient, evidence, acts[0] if acts else None, reason)
        act = acts[0]
    else:
        act = schema.default_act

    repeats = schema.act(act).repeats
    slots = []
    for attr, vs in values.items():
        distinct = tuple(dict.fromkeys(vs))
        if not repeats and len(distinct) > 1:
            return ParseOutcome(None, False, lenient, evidence, act, f"conflicting values for {attr}: {list(distinct)}")
        slots.extend((attr, v) for v in (vs if repeats else distinct))
    mr = MeaningRepresentation(act, tuple(slots)).canonical(schema)
    try:
        validate_mr(mr, schema)
    except SchemaError as e:
        return ParseOutcome(None, False, lenient, evidence, act, str(e))
    return ParseOutcome(mr, True, lenient, evidence, act)


class RuleParser:
    """Callable wrapper so rule and classifier parsers share one interface."""

    kind = "rules"

    def __init__(self, pack: RulePack):
        self.pack = pack

    def __call__(self, utt) -> ParseOutcome:
        return rule_parse(utt, self.pack)
