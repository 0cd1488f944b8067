"""Encoder input sequences for MRs.

Three layouts are supported:

``e2e-lex``
    one token per schema attribute in schema order, ``<attr>_n/a`` when absent.
``e2e-delex``
    as above, but delexicalized attributes are encoded by presence only
    (``near_present``) and attributes required by every act (``name``) are dropped.
``da-variable``
    dialogue-act token followed by one token per slot; binary and don't-care
    values are folded into the token (``is_for_biz_yes``, ``family_dont_care``),
    delexicalized dictionary slots emit the bare attribute token.
"""

from __future__ import annotations

from .mr import MeaningRepresentation
from .schema import DONTCARE, DomainSchema, slug

MODES = ("e2e-lex", "e2e-delex", "da-variable")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"unknown linearization mode {mode!r}; expected one of {MODES}")
    return mode


def delex_attributes(schema: DomainSchema, mode: str) -> tuple[str, ...]:
    """Attributes whose values are replaced by placeholders in the utterances for ``mode``."""
    check_mode(mode)
    return () if mode == "e2e-lex" else schema.delexicalize


def _always_required(schema: DomainSchema, attr: str) -> bool:
    return all(attr in act.required for act in schema.acts)


def _slot_token(schema: DomainSchema, attr: str, value: str, delex: bool) -> str:
    a = schema.attribute(attr)
    if value == DONTCARE:
        return f"{a.token}_dont_care"
    if a.kind == "binary":
        return f"{a.token}_{slug(value)}"
    if delex:
        return a.token
    return f"{a.token}_{slug(value)}"


def linearize(mr: MeaningRepresentation, mode: str, schema: DomainSchema) -> list[str]:
    check_mode(mode)
    if mode == "da-variable":
        mr = mr.canonical(schema)
        delex = set(schema.delexicalize)
        return [schema.act(mr.act).token] + [_slot_token(schema, a, v, a in delex) for a, v in mr.slots]
    delex = set(schema.delexicalize) if mode == "e2e-delex" else set()
    out = []
    for attr in schema.attributes:
        value = mr.get(attr.name)
        if attr.name in delex:
            if _always_required(schema, attr.name):
                continue
            out.append(f"{attr.token}_present" if value is not None else f"{attr.token}_n/a")
        elif value is None:
            out.append(f"{attr.token}_n/a")
        else:
            out.append(f"{attr.token}_{slug(value)}")
    return out


def all_input_tokens(schema: DomainSchema, mode: str) -> list[str]:
    """Every token ``linearize`` can emit for a valid MR, so novel MRs never fall outside the input vocabulary."""
    check_mode(mode)
    toks: list[str] = []
    if mode == "da-variable":
        toks += [a.token for a in schema.acts]
        delex = set(schema.delexicalize)
        for a in schema.attributes:
            if a.dontcare:
                toks.append(f"{a.token}_dont_care")
            if a.kind == "binary":
                toks += [f"{a.token}_{slug(v)}" for v in a.values if v != DONTCARE]
            elif a.name in delex:
                toks.append(a.token)
            else:
                toks += [f"{a.token}_{slug(v)}" for v in a.values if v != DONTCARE]
        return toks
    delex = set(schema.delexicalize) if mode == "e2e-delex" else set()
    for a in schema.attributes:
        if a.name in delex:
            if not _always_required(schema, a.name):
                toks += [f"{a.token}_present", f"{a.token}_n/a"]
            continue
        toks.append(f"{a.token}_n/a")
        toks += [f"{a.token}_{slug(v)}" for v in a.values]
    return toks
