"""Recover MRs from utterances: regular-expression rule packs and CNN attribute classifiers."""

from .classifier import (
    ACT_KEY,
    NA,
    AttributeClassifier,
    ClassifierConfig,
    ClassifierParser,
    ConstantClassifier,
    clf_parse,
    load_classifiers,
    macro_f1,
    save_classifiers,
    train_classifiers,
)
from .outcome import ParseOutcome
from .rules import RulePack, RulePackError, RuleParser, load_rule_pack, parse_rule_pack, rule_parse
from .scoring import AttributeScore, parser_fscore

__all__ = [
    "ACT_KEY", "AttributeClassifier", "AttributeScore", "ClassifierConfig", "ClassifierParser",
    "ConstantClassifier", "NA", "ParseOutcome", "RulePack", "RulePackError", "RuleParser", "clf_parse",
    "load_classifiers", "load_rule_pack", "macro_f1", "parse_rule_pack", "parser_fscore", "rule_parse",
    "save_classifiers", "train_classifiers",
]
