"""Domain schemas: dialogue acts, attributes and their closed value vocabularies."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

DONTCARE = "don't care"
BINARY_VALUES = ("yes", "no")
KINDS = ("dictionary", "binary")


class SchemaError(ValueError):
    """An MR or config refers to an attribute, value or act the schema does not know."""


def slug(text: str) -> str:
    """Lowercase, drop apostrophes and join words with underscores (``don't care`` -> ``dont_care``)."""
    text = text.lower().replace("'", "")
    return re.sub(r"\s+", "_", text.strip())


@dataclass(frozen=True)
class AttributeDef:
    name: str
    kind: str
    values: tuple[str, ...]
    token: str
    dontcare: bool = False
    placeholder: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if not self.values:
            raise SchemaError(f"attribute {self.name!r}: empty value vocabulary")
        if self.kind == "binary" and set(self.values) != set(BINARY_VALUES) | ({DONTCARE} if self.dontcare else set()):
            raise SchemaError(f"binary attribute {self.name!r} must have values yes/no")

    def accepts(self, value: str) -> bool:
        return value in self.values or (self.placeholder is not None and value == self.placeholder)


@dataclass(frozen=True)
class ActDef:
    name: str
    token: str
    required: tuple[str, ...] = ()
    repeats: bool = False


@dataclass(frozen=True)
class DomainSchema:
    """Registry of the acts and attributes of one dataset.

    Attribute order is significant: it is the fixed encoder layout for the
    E2E-style encodings and the canonical order of serialized MRs.
    """

    name: str
    acts: tuple[ActDef, ...]
    attributes: tuple[AttributeDef, ...]
    delexicalize: tuple[str, ...] = ()
    fixed_layout: bool = False
    _by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError(f"schema {self.name!r}: duplicate attribute names")
        if not self.acts:
            raise SchemaError(f"schema {self.name!r}: no dialogue acts")
        object.__setattr__(self, "_by_name", {a.name: a for a in self.attributes})
        for act in self.acts:
            for req in act.required:
                if req not in self._by_name:
                    raise SchemaError(f"act {act.name!r} requires unknown attribute {req!r}")
        for attr in self.delexicalize:
            if attr not in self._by_name:
                raise SchemaError(f"cannot delexicalize unknown attribute {attr!r}")

    @property
    def dialogue_acts(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.acts)

    @property
    def default_act(self) -> str:
        return self.acts[0].name

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def attribute(self, name: str) -> AttributeDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"schema {self.name!r} has no attribute {name!r}") from None

    def act(self, name: str) -> ActDef:
        for act in self.acts:
            if act.name == name:
                return act
        raise SchemaError(f"schema {self.name!r} has no dialogue act {name!r}")

    def has_attribute(self, name: str) -> bool:
        return name in self._by_name

    def index(self, name: str) -> int:
        return self.attribute_names.index(name)

    def placeholder(self, name: str) -> str:
        attr = self.attribute(name)
        return attr.placeholder or name.upper()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "fixed_layout": self.fixed_layout,
            "delexicalize": list(self.delexicalize),
            "acts": [
                {"name": a.name, "token": a.token, "required": list(a.required), "repeats": a.repeats}
                for a in self.acts
            ],
            "attributes": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "token": a.token,
                    "dontcare": a.dontcare,
                    "placeholder": a.placeholder,
                    "values": [v for v in a.values if v != DONTCARE],
                }
                for a in self.attributes
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSchema":
        attrs = []
        for a in d["attributes"]:
            kind = a.get("kind", "dictionary")
            values = list(a.get("values") or (BINARY_VALUES if kind == "binary" else ()))
            if a.get("dontcare"):
                values.append(DONTCARE)
            attrs.append(
                AttributeDef(
                    name=a["name"],
                    kind=kind,
                    values=tuple(values),
                    token=a.get("token") or slug(a["name"]),
                    dontcare=bool(a.get("dontcare", False)),
                    placeholder=a.get("placeholder"),
                )
            )
        acts = tuple(
            ActDef(
                name=a["name"],
                token=a.get("token") or slug(a["name"]),
                required=tuple(a.get("required", ())),
                repeats=bool(a.get("repeats", False)),
            )
            for a in d["acts"]
        )
        return cls(
            name=d["name"],
            acts=acts,
            attributes=tuple(attrs),
            delexicalize=tuple(d.get("delexicalize", ())),
            fixed_layout=bool(d.get("fixed_layout", False)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DomainSchema":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_schema(name_or_path: str) -> DomainSchema:
    """Load a bundled schema by name (``e2e``, ``laptop``, ``tv``, ``toy``) or from a file path."""
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return DomainSchema.load(p)
    try:
        text = resources.files("selftrain_nlg.data").joinpath(f"{name_or_path}.schema.json").read_text("utf-8")
    except FileNotFoundError:
        raise SchemaError(f"no bundled schema named {name_or_path!r}") from None
    return DomainSchema.from_dict(json.loads(text))
