import json
from importlib import resources

import pytest

from selftrain_nlg.cli import build_config, main
from selftrain_nlg.errors import ConfigError
from selftrain_nlg.neuralcore import checkpoint
from selftrain_nlg.seq2seq import Seq2SeqModel

DATA = resources.files("selftrain_nlg.data")
SMALL = ["-c", "toy", "--set", "model.embed_dim=8", "--set", "model.hidden_dim=8", "--set", "training.epochs=2",
         "--set", "retraining.epochs=1", "--set", "training.valid_every=1", "-q"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", *SMALL, "-o", str(out)]) == 0
    return out


def _mrs_file(tmp_path, extra_bad=False):
    lines = ["name[Aromi], food[Italian]", "name[Zizzi], priceRange[cheap], familyFriendly[no]"]
    if extra_bad:
        lines.insert(1, "name[Aromi], colour[red]")
    p = tmp_path / "mrs.txt"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_train_writes_checkpoint_log_and_config(trained):
    assert (trained / "p0.ckpt").exists()
    log = (trained / "p0.train.jsonl").read_text().splitlines()
    assert len(log) == 2 and json.loads(log[0])["epoch"] == 1
    resolved = json.loads((trained / "train.config.json").read_text())
    assert resolved["model"]["hidden_dim"] == 8 and resolved["parser_label"] == "q_R (rules)"


def test_zero_epochs_checkpoint_is_initialization(tmp_path):
    assert main(["train", *SMALL, "--epochs", "0", "-o", str(tmp_path)]) == 0
    a = Seq2SeqModel.load(tmp_path / "p0.ckpt")
    fresh = Seq2SeqModel(a.config, a.in_vocab, a.out_vocab, a.schema, a.mode, a.seed)
    assert all(x.data.tobytes() == y.data.tobytes() for x, y in zip(a.params, fresh.params))


def test_default_e2e_resolved_config(tmp_path):
    code = main(["train", "--schema", "e2e", "--train", str(tmp_path / "missing.csv"), "-o", str(tmp_path), "-q"])
    assert code == 2
    resolved = json.loads((tmp_path / "train.config.json").read_text())
    t = resolved["training"]
    assert (t["epochs"], t["batch_size"], t["lr"], t["weight_decay"], t["dropout"]) == (500, 128, 0.25, 0.0001, 0.25)
    assert resolved["retraining"]["epochs"] == 50
    assert resolved["model"]["embed_dim"] == 512 and resolved["mode"] == "e2e-delex"
    sel = resolved["selftrain"]
    assert (sel["iterations"], sel["samples_per_mr"], sel["keep_k"]) == (25000, 200, 20)


def test_parser_label_classifier():
    cfg = build_config({"parser": "classifier"})
    assert cfg.to_dict()["parser_label"] == "q_phi (classifier)"


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError):
        build_config({"bogus": 1})
    with pytest.raises(ConfigError):
        build_config({"model": {"depth": 3}})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"training": {"epoch": 3}}))
    assert main(["train", "-c", str(bad), "-o", str(tmp_path), "-q"]) == 2


def test_flag_precedence():
    cfg = build_config({"training": {"epochs": 7, "lr": 0.5}}, {"training": {"epochs": 3}})
    assert cfg.training.epochs == 3 and cfg.training.lr == 0.5


def test_decode_equivalences(trained, tmp_path):
    mrs = _mrs_file(tmp_path)
    ck = str(trained / "p0.ckpt")
    base = ["decode", *SMALL, "--checkpoint", ck, "--mrs", str(mrs), "-o", str(tmp_path)]
    assert main([*base, "--strategy", "greedy", "--out", str(tmp_path / "g.txt")]) == 0
    assert main([*base, "--strategy", "beam", "--width", "1", "--out", str(tmp_path / "b.txt")]) == 0
    assert main([*base, "--strategy", "noise", "--sigma0", "0", "--n", "4", "--k", "2",
                 "--out", str(tmp_path / "n.txt")]) == 0
    g = (tmp_path / "g.txt").read_bytes()
    assert g == (tmp_path / "b.txt").read_bytes() == (tmp_path / "n.txt").read_bytes()
    assert len(g.decode().splitlines()) == 2


def test_decode_noise_samples_and_workers(trained, tmp_path):
    mrs = _mrs_file(tmp_path)
    args = ["decode", *SMALL, "--checkpoint", str(trained / "p0.ckpt"), "--mrs", str(mrs), "-o", str(tmp_path),
            "--strategy", "noise", "--sigma0", "1.0", "--n", "200", "--k", "20"]
    assert main([*args, "--out", str(tmp_path / "a.txt")]) == 0
    assert main([*args, "--workers", "2", "--out", str(tmp_path / "b.txt")]) == 0
    a = (tmp_path / "a.txt.samples.jsonl").read_text()
    assert a == (tmp_path / "b.txt.samples.jsonl").read_text()
    recs = [json.loads(x) for x in a.splitlines()]
    assert 0 < len(recs) <= 40 and all(r["sigma0"] == 1.0 for r in recs)


def test_decode_invalid_line(trained, tmp_path, capsys):
    mrs = _mrs_file(tmp_path, extra_bad=True)
    code = main(["decode", *SMALL, "--checkpoint", str(trained / "p0.ckpt"), "--mrs", str(mrs), "-o", str(tmp_path),
                 "--strategy", "greedy", "--out", str(tmp_path / "o.txt")])
    assert code == 1
    lines = (tmp_path / "o.txt").read_text().split("\n")
    assert lines[1] == "" and lines[0] and lines[2]


def test_parse_modes(tmp_path, capsys):
    utts = tmp_path / "u.txt"
    utts.write_text("Aromi serves italian food .\nit serves italian and french food .\n")
    assert main(["parse", "-c", "toy", "-q", "-o", str(tmp_path), "--utterances", str(utts)]) == 0
    recs = [json.loads(x) for x in (tmp_path / "parse.jsonl").read_text().splitlines()]
    assert recs[0]["valid"] and recs[0]["mr"] == "inform(food[Italian], name[Aromi])"
    assert not recs[1]["valid"]
    assert main(["parse", "-c", "toy", "-q", "-o", str(tmp_path), "--score", str(DATA / "toy_valid.csv")]) == 0
    assert json.loads((tmp_path / "parse.score.json").read_text())["macro_f"] == 1.0
    assert main(["parse", "-c", "toy", "-q", "-o", str(tmp_path)]) == 0


def test_missing_rule_pack(tmp_path):
    assert main(["parse", "-c", "toy", "-q", "-o", str(tmp_path), "--rule-pack", str(tmp_path / "no.rules")]) == 2


def test_selftrain_zero_iterations_refuses(tmp_path, capsys):
    code = main(["selftrain", *SMALL, "-o", str(tmp_path), "--iterations", "0"])
    assert code == 2
    assert "empty" in capsys.readouterr().err


def test_selftrain_small_run(tmp_path):
    args = ["selftrain", *SMALL, "--seed", "1", "-o", str(tmp_path), "--iterations", "3", "--set", "selftrain.samples_per_mr=20",
            "--set", "selftrain.keep_k=5", "--set", "model.max_decode_len=20"]
    assert main(args) == 0
    for name in ("p0.ckpt", "p1.ckpt", "augmented.csv", "augmented.provenance.jsonl", "augment.report.json",
                 "p0.test.txt", "p1.test.txt", "slot_errors.json"):
        assert (tmp_path / name).exists(), name
    summary = json.loads((tmp_path / "selftrain.summary.json").read_text())
    assert set(summary["1"]) == {"augmented", "union", "p0_errors", "p1_errors"}
    header = (tmp_path / "selftrain.report.txt").read_text().splitlines()[0].split()
    assert header[0] == "System" and header[-1] == "All"
    assert main([*args, "-o", str(tmp_path / "b"), "--error-budget", "-1"]) == 1


def test_evaluate(tmp_path):
    refs = DATA / "toy_test.csv"
    from selftrain_nlg.corpus import load_corpus, load_schema

    groups = load_corpus(refs, load_schema("toy"), "test").grouped()
    outs = tmp_path / "outs.txt"
    outs.write_text("\n".join(g.refs[0].text for g in groups) + "\n")
    base = ["evaluate", "-c", "toy", "-q", "--outputs", str(outs), "--references", str(refs)]
    assert main([*base, "-o", str(tmp_path / "a")]) == 0
    assert main([*base, "-o", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "evaluate.json").read_bytes()
    assert a == (tmp_path / "b" / "evaluate.json").read_bytes()
    assert (tmp_path / "a" / "evaluate.txt").read_bytes() == (tmp_path / "b" / "evaluate.txt").read_bytes()
    rep = json.loads(a)
    assert rep["quality"]["bleu"] == pytest.approx(100.0)
    assert isinstance(rep["slot_errors"]["total"], int)
    outs.write_text("only one line\n")
    assert main([*base, "-o", str(tmp_path / "c")]) == 2


def test_evaluate_e2e_table_columns(tmp_path):
    mrs = tmp_path / "m.txt"
    mrs.write_text("name[The Eagle], food[Italian], eatType[pub]\n")
    outs = tmp_path / "o.txt"
    outs.write_text("The Eagle is a pub .\n")
    assert main(["evaluate", "--schema", "e2e", "-q", "-o", str(tmp_path), "--outputs", str(outs),
                 "--mrs", str(mrs), "--error-budget", "0"]) == 1
    header = (tmp_path / "evaluate.txt").read_text().splitlines()[0].split()
    assert header == ["System", "Name", "Near", "FamilyFriendly", "Area", "CustomerRating", "Food", "PriceRange",
                      "EatType", "All"]


def test_ingest(tmp_path):
    assert main(["ingest", "-c", "toy", "-q", "-o", str(tmp_path)]) == 0
    stats = json.loads((tmp_path / "ingest" / "stats.json").read_text())
    assert stats["train"]["examples"] == 600 and stats["test"]["examples"] == 30


def test_missing_corpus(tmp_path):
    assert main(["train", "-c", "toy", "-q", "--train", str(tmp_path / "nope.csv"), "-o", str(tmp_path)]) == 2


def test_corrupt_checkpoint(trained, tmp_path):
    bad = tmp_path / "bad.ckpt"
    blob = bytearray((trained / "p0.ckpt").read_bytes())
    blob[0] ^= 1
    bad.write_bytes(bytes(blob))
    mrs = _mrs_file(tmp_path)
    assert main(["decode", *SMALL, "--checkpoint", str(bad), "--mrs", str(mrs), "-o", str(tmp_path)]) == 2
    assert checkpoint.CheckpointError
