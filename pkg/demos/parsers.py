"""Rule parser versus CNN classifier parser on a few hand-written sentences.

The rule pack is precise on phrasings it knows and says nothing about the rest;
the classifiers generalize from the toy training data but can be unsure.
"""

from importlib import resources

from selftrain_nlg.corpus import load_corpus, load_schema
from selftrain_nlg.mrparse import ClassifierConfig, ClassifierParser, RuleParser, load_rule_pack, train_classifiers

data = resources.files("selftrain_nlg.data")
schema = load_schema("toy")
rules = RuleParser(load_rule_pack("toy", schema))
clfs = train_classifiers(load_corpus(data / "toy_train.csv", schema),
                         load_corpus(data / "toy_valid.csv", schema, "valid"),
                         ClassifierConfig(epochs=30), mode="e2e-delex")
neural = ClassifierParser(clfs, schema)

sentences = [
    "NAME serves italian food and is kid friendly .",
    "NAME is not family friendly and has high prices .",
    "NAME offers french food . it is cheap .",
    "NAME serves italian and french food .",
    "NAME is a lovely spot by the river .",
]
for text in sentences:
    print(text)
    for label, parser in (("rules", rules), ("classifier", neural)):
        out = parser(text)
        verdict = str(out.mr) if out.valid else f"invalid ({out.reason})"
        print(f"  {label:<10} {verdict}")
