"""Loading, normalizing, linearizing and delexicalizing MR/utterance corpora."""

from .dataset import (
    CorpusError,
    CorpusSchemaError,
    Dataset,
    Example,
    build_vocab,
    load_corpus,
    load_da_corpus,
    load_e2e_corpus,
    prepare_pair,
    training_pairs,
    write_da_corpus,
    write_e2e_corpus,
)
from .linearize import MODES, all_input_tokens, delex_attributes, linearize
from .mr import MeaningRepresentation, MRSyntaxError, is_valid_mr, parse_mr, serialize_mr, validate_mr
from .normalize import AmendRule, NormalizationRules, RemapRule, default_e2e_rules, normalize_dataset
from .schema import DONTCARE, AttributeDef, DomainSchema, SchemaError, load_schema
from .text import DelexMiss, Utterance, delexicalize, detokenize, relex_mapping, relexicalize, tokenize
from .vocab import BOS, EOS, PAD, UNK, Vocab

__all__ = [
    "AmendRule", "AttributeDef", "BOS", "CorpusError", "CorpusSchemaError", "DONTCARE", "Dataset",
    "DelexMiss", "DomainSchema", "EOS", "Example", "MODES", "MRSyntaxError", "MeaningRepresentation",
    "NormalizationRules", "PAD", "RemapRule", "SchemaError", "UNK", "Utterance", "Vocab",
    "all_input_tokens", "build_vocab", "default_e2e_rules", "delex_attributes", "delexicalize",
    "detokenize", "is_valid_mr", "linearize", "load_corpus", "load_da_corpus", "load_e2e_corpus",
    "load_schema", "normalize_dataset", "parse_mr", "prepare_pair", "relex_mapping", "relexicalize",
    "serialize_mr", "tokenize", "training_pairs", "validate_mr", "write_da_corpus", "write_e2e_corpus",
]
