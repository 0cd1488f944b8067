"""Automatic evaluation: slot errors, corpus BLEU, surface statistics."""

from .bleu import bleu_stats, corpus_bleu
from .report import QualityReport, breakdown_table, quality_text, slot_table, to_json
from .slots import E2E_COLUMNS, KINDS, SlotErrorReport, attribute_errors, slot_errors
from .surface import SurfaceStats, count_sentences, count_words, surface_stats

__all__ = [
    "E2E_COLUMNS", "KINDS", "QualityReport", "SlotErrorReport", "SurfaceStats", "attribute_errors", "bleu_stats",
    "breakdown_table", "corpus_bleu", "count_sentences", "count_words", "quality_text", "slot_errors",
    "slot_table", "surface_stats", "to_json",
]
