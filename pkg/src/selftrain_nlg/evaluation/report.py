"""Plain-text and JSON renderings of evaluation results."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .slots import KINDS, SlotErrorReport
from .surface import SurfaceStats

OMITTED = ("METEOR", "ROUGE-L", "D-Level")


@dataclass
class QualityReport:
    bleu: float | None
    surface: SurfaceStats

    def to_dict(self) -> dict:
        return {"bleu": self.bleu, "words_per_utterance": self.surface.words,
                "sentences_per_utterance": self.surface.sentences, "count": self.surface.count,
                "omitted_metrics": list(OMITTED)}


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))  # noqa: E731
    return "\n".join([fmt(header), "  ".join("-" * w for w in widths)] + [fmt(r) for r in rows])


def slot_table(reports: dict[str, SlotErrorReport]) -> str:
    """One row per system, one column per attribute plus ``All`` (collapsed error counts)."""
    first = next(iter(reports.values()))
    cols = first.columns()
    header = ["System"] + [h for _, h in cols] + ["All"]
    rows = [[name] + [str(r.attribute_total(a)) for a, _ in cols] + [str(r.total)] for name, r in reports.items()]
    return _table(header, rows)


def breakdown_table(report: SlotErrorReport) -> str:
    cols = report.columns()
    header = ["Kind"] + [h for _, h in cols] + ["All"]
    rows = [[k] + [str(report.counts[a][k]) for a, _ in cols] + [str(report.kind_total(k))] for k in KINDS]
    return _table(header, rows)


def quality_text(q: QualityReport) -> str:
    bleu = "n/a" if q.bleu is None else f"{q.bleu:.2f}"
    return (f"BLEU {bleu}\nwords/utterance {q.surface.words:.2f}\nsentences/utterance {q.surface.sentences:.2f}\n"
            f"utterances {q.surface.count}\nnot computed: {', '.join(OMITTED)}")


def to_json(obj) -> str:
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    elif hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)
