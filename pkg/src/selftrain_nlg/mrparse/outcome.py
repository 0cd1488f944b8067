"""Parse results shared by the rule and classifier parsers."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..corpus.mr import MeaningRepresentation


@dataclass(frozen=True)
class ParseOutcome:
    """Result of parsing one utterance.

    ``values`` is the lenient reading (every distinct value found per attribute,
    in order of first occurrence) used for scoring; ``mr`` is set only when the
    parse is valid. ``evidence`` holds matched spans (rules) or class
    probabilities (classifiers).
    """

    mr: MeaningRepresentation | None
    valid: bool
    values: dict[str, tuple[str, ...]] = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    act: str | None = None
    reason: str = ""

    def __post_init__(self):
        if self.valid != (self.mr is not None):
            raise ValueError("a valid parse carries an MR and an invalid one does not")

    def slots(self) -> set[tuple[str, str]]:
        return {(a, v) for a, vs in self.values.items() for v in vs}
