import csv
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftrain_nlg.corpus import (
    CorpusError,
    CorpusSchemaError,
    Dataset,
    DelexMiss,
    Example,
    MeaningRepresentation,
    NormalizationRules,
    AmendRule,
    Utterance,
    build_vocab,
    default_e2e_rules,
    delexicalize,
    detokenize,
    linearize,
    load_da_corpus,
    load_e2e_corpus,
    load_schema,
    normalize_dataset,
    parse_mr,
    relexicalize,
    serialize_mr,
    tokenize,
    training_pairs,
    validate_mr,
)
from selftrain_nlg.corpus.templates import combination_corpus, template_corpus, toy_splits
from selftrain_nlg.errors import ConfigError

from conftest import toy_dataset


def write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["mr", "ref"])
        w.writerows(rows)


# loading ---------------------------------------------------------------------------

def test_load_mr_string(tmp_path, e2e_schema):
    write_csv(tmp_path / "a.csv", [["name[The Golden Curry], near[The Six Bells], familyFriendly[yes]", "x ."]])
    ds = load_e2e_corpus(tmp_path / "a.csv", e2e_schema)
    mr = ds.examples[0].mr
    assert mr.act == "inform"
    assert mr.as_dict() == {"name": "The Golden Curry", "near": "The Six Bells", "familyFriendly": "yes"}


def test_load_empty_file(tmp_path, e2e_schema):
    (tmp_path / "empty.csv").write_text("")
    assert len(load_e2e_corpus(tmp_path / "empty.csv", e2e_schema)) == 0


def test_three_row_round_trip(tmp_path, e2e_schema):
    rows = [
        ["name[Aromi], eatType[coffee shop], area[city centre]", "Aromi is a coffee shop in the city centre."],
        ["name[Zizzi], food[Italian], priceRange[cheap]", "Zizzi serves cheap Italian food."],
        ["name[Zizzi], food[Italian], priceRange[cheap]", "Zizzi serves cheap Italian food."],
    ]
    write_csv(tmp_path / "a.csv", rows)
    ds = load_e2e_corpus(tmp_path / "a.csv", e2e_schema)
    assert len(ds) == 3  # duplicate rows are kept
    order = list(e2e_schema.attribute_names)
    for (src, _), ex in zip(rows, ds.examples):
        # string-level oracle: split on "], " and sort items by schema position
        items = sorted((s.strip().rstrip("]") + "]" for s in src.split("],")), key=lambda s: order.index(s.split("[")[0]))
        assert serialize_mr(ex.mr.canonical(e2e_schema), e2e_schema, with_act=False) == ", ".join(items)


def test_load_errors_carry_line_numbers(tmp_path, e2e_schema):
    write_csv(tmp_path / "bad.csv", [["name[Aromi]", "ok ."], ["name[Aromi", "broken ."]])
    with pytest.raises(CorpusError, match=":3:"):
        load_e2e_corpus(tmp_path / "bad.csv", e2e_schema)
    write_csv(tmp_path / "bad2.csv", [["name[Aromi], colour[red]", "x ."]])
    with pytest.raises(CorpusSchemaError, match=":2:"):
        load_e2e_corpus(tmp_path / "bad2.csv", e2e_schema)
    write_csv(tmp_path / "bad3.csv", [["name[Aromi], food[Martian]", "x ."]])
    with pytest.raises(CorpusSchemaError):
        load_e2e_corpus(tmp_path / "bad3.csv", e2e_schema)


def test_da_fixture_loads():
    from importlib import resources

    for name in ("laptop", "tv"):
        schema = load_schema(name)
        with resources.as_file(resources.files("selftrain_nlg") / "data" / f"{name}_fixture.json") as p:
            ds = load_da_corpus(p, schema)
        assert len(ds) > 0
        for ex in ds.examples:
            assert parse_mr(serialize_mr(ex.mr, schema)) == ex.mr.canonical(schema)


# schema and MRs ----------------------------------------------------------------------

def test_e2e_schema_layout(e2e_schema):
    assert e2e_schema.attribute_names == ("eatType", "near", "area", "familyFriendly", "customerRating",
                                          "priceRange", "food", "name")
    assert e2e_schema.attribute("familyFriendly").values == ("yes", "no")


def test_e2e_mr_requires_name(e2e_schema):
    with pytest.raises(Exception):
        validate_mr(parse_mr("food[Italian]"), e2e_schema)


def test_repeats_only_for_compare():
    schema = load_schema("laptop")
    validate_mr(parse_mr("compare(name[Atlas 89], family[satellite], name[Hera 37], family[tecra])"), schema)
    with pytest.raises(Exception):
        validate_mr(parse_mr("inform(name[Atlas 89], name[Hera 37])"), schema)


# normalization ------------------------------------------------------------------------

def _one(mr_text, ref, split="train"):
    schema = load_schema("e2e")
    return Dataset(schema, [Example(parse_mr(mr_text), (Utterance.from_text(ref),))], split)


def test_normalize_amends_eattype():
    ds = normalize_dataset(_one("name[Aromi], food[Italian]", "Aromi is a restaurant serving Italian food."),
                           default_e2e_rules())
    assert ds.examples[0].mr.get("eatType") == "restaurant"


def test_normalize_consistent_unchanged():
    ds = _one("name[Aromi], eatType[pub]", "Aromi is a pub.")
    assert normalize_dataset(ds, default_e2e_rules()).examples[0].mr == ds.examples[0].mr


def test_normalize_price_remap():
    ds = normalize_dataset(_one("name[Aromi], priceRange[cheap]", "Aromi costs less than £20."), default_e2e_rules())
    assert ds.examples[0].mr.get("priceRange") == "less than £20"
    ds = normalize_dataset(_one("name[Aromi], priceRange[less than £20]", "Aromi is cheap."), default_e2e_rules())
    assert ds.examples[0].mr.get("priceRange") == "cheap"


def test_normalize_rating_remap():
    ds = normalize_dataset(_one("name[Aromi], customerRating[high]", "Aromi is rated 5 out of 5."),
                           default_e2e_rules())
    assert ds.examples[0].mr.get("customerRating") == "5 out of 5"


def test_normalize_leaves_test_split():
    ds = _one("name[Aromi], food[Italian]", "Aromi is a restaurant.", split="test")
    assert normalize_dataset(ds, default_e2e_rules()) is ds


def test_normalize_rejects_unknown_attribute():
    rules = NormalizationRules(amend=[AmendRule("colour", "red", "red")])
    with pytest.raises(ConfigError):
        normalize_dataset(_one("name[Aromi]", "x"), rules)


def test_normalize_logs_edits(caplog):
    edits = []
    with caplog.at_level(logging.INFO):
        normalize_dataset(_one("name[Aromi], priceRange[cheap]", "under £20"), default_e2e_rules(), edits)
    assert edits and edits[0][:4] == ("remap", "priceRange", "cheap", "less than £20")


# delexicalization ------------------------------------------------------------------------

def test_delexicalize_example(e2e_schema):
    u = Utterance.from_text("Near The Six Bells is a venue that is children friendly named The Golden Curry.")
    mr = parse_mr("name[The Golden Curry], near[The Six Bells], familyFriendly[yes]")
    d, mapping = delexicalize(u, mr, {"name", "near"}, e2e_schema)
    assert d.text == "near NEAR is a venue that is children friendly named NAME ."
    assert mapping == {"NAME": "The Golden Curry", "NEAR": "The Six Bells"}
    assert relexicalize(d, mapping).tokens == u.tokens


def test_delexicalize_no_slots(e2e_schema):
    u = Utterance.from_text("Aromi is a pub.")
    d, mapping = delexicalize(u, parse_mr("name[Aromi]"), set(), e2e_schema)
    assert d.tokens == u.tokens and mapping == {}


def test_delex_miss(e2e_schema):
    with pytest.raises(DelexMiss) as e:
        delexicalize(Utterance.from_text("it is a pub ."), parse_mr("name[Aromi]"), {"name"}, e2e_schema)
    assert e.value.attribute == "name"


def test_indexed_placeholders():
    schema = load_schema("laptop")
    mr = parse_mr("compare(name[Atlas 89], family[satellite], name[Hera 37], family[tecra])")
    u = Utterance.from_text("the atlas 89 is a satellite while the hera 37 is a tecra")
    d, mapping = delexicalize(u, mr, ["name", "family"], schema)
    assert set(mapping) == {"NAME_1", "NAME_2", "FAMILY_1", "FAMILY_2"}
    assert relexicalize(d, mapping).tokens == u.tokens


def test_delex_round_trip_on_corpus(e2e_schema):
    for mr, u in template_corpus(e2e_schema, name="The Golden Curry"):
        try:
            d, m = delexicalize(u, mr, e2e_schema.delexicalize, e2e_schema)
        except DelexMiss:
            continue
        assert relexicalize(d, m).tokens == u.tokens


def test_training_pairs_drop_delex_miss(caplog):
    schema = load_schema("e2e")
    ds = Dataset(schema, [Example(parse_mr("name[Aromi]"), (Utterance.from_text("it is a pub ."),)),
                          Example(parse_mr("name[Aromi]"), (Utterance.from_text("Aromi is a pub ."),))])
    with caplog.at_level(logging.WARNING):
        pairs = training_pairs(ds, "e2e-delex")
    assert len(pairs) == 1 and "dropped 1" in caplog.text


# linearization -------------------------------------------------------------------------

def test_linearize_e2e(e2e_schema):
    mr = parse_mr("name[The Mill], near[Avalon], food[Italian]")
    assert linearize(mr, "e2e-lex", e2e_schema) == [
        "eat_type_n/a", "near_avalon", "area_n/a", "fam_friend_n/a", "cust_rating_n/a", "price_range_n/a",
        "food_italian", "name_the_mill"]
    delex = linearize(mr, "e2e-delex", e2e_schema)
    assert len(delex) == 7 and "near_present" in delex and not any(t.startswith("name") for t in delex)


def test_linearize_da():
    schema = load_schema("laptop")
    mr = parse_mr("inform_count(count[40], family[don't care], batteryRating[excellent])")
    assert linearize(mr, "da-variable", schema) == ["inform_count", "count", "family_dont_care", "batteryrating"]


@st.composite
def e2e_mrs(draw):
    schema = load_schema("e2e")
    slots = [("name", draw(st.sampled_from(schema.attribute("name").values)))]
    for a in schema.attribute_names[:-1]:
        if draw(st.booleans()):
            slots.append((a, draw(st.sampled_from(schema.attribute(a).values))))
    return MeaningRepresentation("inform", tuple(draw(st.permutations(slots))))


@settings(max_examples=150, deadline=None)
@given(e2e_mrs())
def test_linearized_lengths(mr):
    schema = load_schema("e2e")
    assert len(linearize(mr, "e2e-lex", schema)) == 8
    assert len(linearize(mr, "e2e-delex", schema)) == 7


@settings(max_examples=150, deadline=None)
@given(e2e_mrs())
def test_serialize_parse_identity(mr):
    schema = load_schema("e2e")
    canon = mr.canonical(schema)
    text = serialize_mr(canon, schema)
    assert parse_mr(text) == canon
    assert serialize_mr(parse_mr(text).canonical(schema), schema) == text


# tokenizer --------------------------------------------------------------------------------

def test_tokenizer_conventions():
    assert tokenize("less than £20") == ["less", "than", "£", "20"]
    assert tokenize("laptop -s with NAME_1") == ["laptop", "-s", "with", "NAME_1"]


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("abcXYZ £20.,!?'- ")), max_size=40))
def test_tokenize_idempotent(text):
    once = detokenize(tokenize(text))
    assert detokenize(tokenize(once)) == once


# vocabulary ---------------------------------------------------------------------------------

def test_minimal_vocab():
    schema = load_schema("toy")
    ds = Dataset(schema, [Example(parse_mr("name[Aromi]"), (Utterance(("a", "b"), "a b"),))])
    _, out = build_vocab(ds, "e2e-lex")
    assert out.tokens == ["<pad>", "<bos>", "<eos>", "<unk>", "a", "b"]


def test_vocab_deterministic_and_covering(tmp_path):
    ds1, ds2 = toy_dataset(40), toy_dataset(40)
    (i1, o1), (i2, o2) = build_vocab(ds1, "e2e-delex"), build_vocab(ds2, "e2e-delex")
    i1.save(tmp_path / "a.json")
    i2.save(tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert o1 == o2
    for _, x, _ in training_pairs(ds1, "e2e-delex"):
        assert all(t in i1 for t in x)


# bundled toy data ----------------------------------------------------------------------------

def test_toy_splits_hold_out_full_combinations(toy_schema):
    train, valid, test = toy_splits(toy_schema, 0, n_train=50)
    assert max(len(m) for m, _ in train + valid) <= 3
    assert all(len(m) == 4 for m, _ in test)
    delexed = {m.delexicalized(toy_schema, ["name"]) for m, _ in test}
    assert len(delexed) == len(test)
    with pytest.raises(ValueError):
        toy_splits(toy_schema, 0, n_test=1000)


def test_combination_corpus_sizes(e2e_schema):
    pairs = combination_corpus(e2e_schema, sizes=(2,))
    assert len(pairs) == 21 and all(len(m) == 3 for m, _ in pairs)
