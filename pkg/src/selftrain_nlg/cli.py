"""Command-line interface: ingest, train, decode, parse, selftrain, evaluate.

Configuration is a JSON file whose keys mirror :class:`PipelineConfig`;
command-line flags override the file, which overrides the defaults. Corpus
paths in a config file are resolved relative to that file. Every command
writes the fully resolved configuration next to its outputs.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import (
    CorpusError,
    Dataset,
    MRSyntaxError,
    SchemaError,
    default_e2e_rules,
    load_corpus,
    load_schema,
    normalize_dataset,
    parse_mr,
    serialize_mr,
    validate_mr,
    write_da_corpus,
    write_e2e_corpus,
)
from .corpus.linearize import MODES
from .decode import NoiseSpec, ancestral_sample, beam, greedy_batch, sample_batch_topk, sample_record, write_samples
from .errors import ConfigError
from .evaluation import QualityReport, breakdown_table, corpus_bleu, quality_text, slot_errors, slot_table, surface_stats
from .mrparse import (
    ClassifierConfig,
    ClassifierParser,
    RulePackError,
    RuleParser,
    load_classifiers,
    load_rule_pack,
    parser_fscore,
    save_classifiers,
    train_classifiers,
)
from .neuralcore.checkpoint import CheckpointError
from .neuralcore.rng import RngStream
from .selftrain import SelfTrainConfig, build_augmentation, legal_sizes, retrain, write_augmentation
from .seq2seq import ModelConfig, Seq2SeqModel, TrainConfig, train

log = logging.getLogger("selftrain_nlg")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
STRATEGIES = ("greedy", "beam", "noise", "sample")
BUNDLED_CONFIGS = {"toy": "toy_quickstart.json"}
RECIPES = {"laptop": TrainConfig.laptop, "tv": TrainConfig.tv}


class ContractError(ValueError):
    """Inputs violate a command's contract (for example misaligned files)."""


class ValidationFailure(RuntimeError):
    """A run completed but failed a check such as the error budget."""


@dataclass
class DecodeConfig:
    strategy: str = "greedy"
    width: int = 8
    sigma0: float = 1.0
    n: int = 1
    k: int = 1
    temperature: float = 1.0
    seed: int = 1

    def validate(self) -> "DecodeConfig":
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"decode.strategy must be one of {STRATEGIES}")
        if self.width < 1 or self.n < 1 or self.k < 1 or self.k > self.n:
            raise ConfigError("decode needs width >= 1 and 1 <= k <= n")
        if self.sigma0 < 0 or self.temperature < 0:
            raise ConfigError("sigma0 and temperature must be non-negative")
        return self


@dataclass
class PipelineConfig:
    schema: str = "e2e"
    mode: str = "e2e-delex"
    train: str | None = None
    valid: str | None = None
    test: str | None = None
    output_dir: str = "runs/default"
    rule_pack: str | None = None  # defaults to the pack bundled under the schema name
    classifiers: str | None = None  # checkpoint; trained from ``train`` when absent
    parser: str = "rules"
    threshold: float = 0.5
    normalize: bool = True
    seeds: list = field(default_factory=lambda: [1])
    workers: int = 1
    error_budget: int | None = None
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=TrainConfig.e2e)
    retraining: TrainConfig = field(default_factory=TrainConfig.e2e_retrain)
    selftrain: SelfTrainConfig = field(default_factory=SelfTrainConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)

    def validate(self) -> "PipelineConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.parser not in ("rules", "classifier"):
            raise ConfigError("parser must be 'rules' or 'classifier'")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must be in [0, 1]")
        self.model.validate()
        self.training.validate()
        self.retraining.validate()
        self.classifier.validate()
        self.decode.validate()
        self.selftrain.parser = self.parser
        self.selftrain.threshold = self.threshold
        self.selftrain.validate()
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parser_label"] = "q_R (rules)" if self.parser == "rules" else "q_phi (classifier)"
        return d


SECTIONS = {"model": ModelConfig, "training": TrainConfig, "retraining": TrainConfig, "selftrain": SelfTrainConfig,
            "classifier": ClassifierConfig, "decode": DecodeConfig}
PATH_KEYS = ("train", "valid", "test", "rule_pack", "classifiers")


def _section(cls, base, values: dict, where: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    if "sizes" in values and values["sizes"] is not None:
        values = {**values, "sizes": tuple(values["sizes"])}
    return dataclasses.replace(base, **values)


def _default_training(schema: str) -> TrainConfig:
    return RECIPES.get(schema, TrainConfig.e2e)()


def build_config(file_values: dict | None = None, overrides: dict | None = None, base_dir: Path | None = None):
    """Merge defaults, file values and flag overrides (in increasing precedence) into a validated config."""
    merged: dict = {}
    for layer in (file_values or {}), (overrides or {}):
        for k, v in layer.items():
            if k in SECTIONS and isinstance(v, dict):
                merged.setdefault(k, {}).update(v)
            else:
                merged[k] = v
    names = {f.name for f in dataclasses.fields(PipelineConfig)} | {"comment"}
    unknown = sorted(set(merged) - names)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    merged.pop("comment", None)
    schema = merged.get("schema", "e2e")
    cfg = PipelineConfig(schema=schema, training=_default_training(schema))
    if schema not in RECIPES:
        cfg.retraining = TrainConfig.e2e_retrain()
    else:
        cfg.retraining = _default_training(schema)
    for k, v in merged.items():
        if k in SECTIONS:
            setattr(cfg, k, _section(SECTIONS[k], getattr(cfg, k), v, k))
        elif k in PATH_KEYS and v is not None and base_dir is not None and not Path(v).is_absolute():
            candidate = base_dir / v
            setattr(cfg, k, str(candidate) if (k != "rule_pack" or candidate.exists()) else v)
        else:
            setattr(cfg, k, v)
    try:
        return cfg.validate()
    except TypeError as e:
        raise ConfigError(str(e)) from None


def read_config_file(spec: str) -> tuple[dict, Path]:
    if spec in BUNDLED_CONFIGS:
        ref = resources.files("selftrain_nlg") / "data" / BUNDLED_CONFIGS[spec]
        with resources.as_file(ref) as p:
            path = Path(p)
    else:
        path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"config file not found: {spec}")
    try:
        values = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return values, path.parent


def _parse_set(items) -> dict:
    out: dict = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.split(".")
        if len(parts) > 2:
            raise ConfigError(f"--set key too deep: {key}")
        if len(parts) == 2:
            out.setdefault(parts[0], {})[parts[1]] = value
        else:
            out[key] = value
    return out


def flag_overrides(args) -> dict:
    o = _parse_set(getattr(args, "set", None))
    direct = {"schema": "schema", "mode": "mode", "train": "train", "valid": "valid", "test": "test",
              "output_dir": "output_dir", "parser": "parser", "workers": "workers", "rule_pack": "rule_pack",
              "classifiers": "classifiers", "error_budget": "error_budget"}
    for attr, key in direct.items():
        v = getattr(args, attr, None)
        if v is not None:
            o[key] = v
    if getattr(args, "seed", None) is not None:
        o["seeds"] = list(args.seed)
    nested = {"epochs": ("training", "epochs"), "retrain_epochs": ("retraining", "epochs"),
              "iterations": ("selftrain", "iterations"), "strategy": ("decode", "strategy"),
              "width": ("decode", "width"), "sigma0": ("decode", "sigma0"), "n": ("decode", "n"),
              "k": ("decode", "k"), "temperature": ("decode", "temperature")}
    for attr, (sec, key) in nested.items():
        v = getattr(args, attr, None)
        if v is not None:
            o.setdefault(sec, {})[key] = v
    if getattr(args, "command", None) == "selftrain" and getattr(args, "sigma0", None) is not None:
        o.setdefault("selftrain", {})["sigma0"] = args.sigma0
    return o


def resolve(args) -> PipelineConfig:
    file_values, base = ({}, None)
    if args.config:
        file_values, base = read_config_file(args.config)
    return build_config(file_values, flag_overrides(args), base)


def write_resolved(cfg: PipelineConfig, out_dir: Path, command: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{command}.config.json"
    path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# shared helpers -------------------------------------------------------------------

def _require(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"no {what} corpus configured")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} corpus not found: {p}")
    return p


def _load(cfg: PipelineConfig, which: str, split: str) -> Dataset:
    return load_corpus(_require(getattr(cfg, which), which), load_schema(cfg.schema), split)


def _maybe(cfg: PipelineConfig, which: str, split: str) -> Dataset | None:
    return _load(cfg, which, split) if getattr(cfg, which) else None


def _normalized(cfg: PipelineConfig, ds: Dataset | None) -> Dataset | None:
    if ds is None or not cfg.normalize or cfg.schema != "e2e":
        return ds
    return normalize_dataset(ds, default_e2e_rules())


def _pack(cfg: PipelineConfig, schema):
    return load_rule_pack(cfg.rule_pack or cfg.schema, schema)


def _parser(cfg: PipelineConfig, schema, train_ds: Dataset | None, valid_ds: Dataset | None, out_dir: Path):
    if cfg.parser == "rules":
        return RuleParser(_pack(cfg, schema))
    if cfg.classifiers:
        clfs, _, _ = load_classifiers(cfg.classifiers)
    else:
        if train_ds is None:
            raise ConfigError("classifier parser needs a classifiers checkpoint or a training corpus")
        clfs = train_classifiers(train_ds, valid_ds, cfg.classifier, cfg.mode)
        save_classifiers(out_dir / "classifiers.ckpt", clfs, schema, cfg.mode)
    return ClassifierParser(clfs, schema, cfg.threshold)


def _test_mrs(ds: Dataset) -> list:
    return [ex.mr for ex in ds.grouped()]


def _greedy_texts(model: Seq2SeqModel, mrs) -> list[str]:
    return [" ".join(s.relexicalized(mr, model)) for mr, s in zip(mrs, greedy_batch(mrs, model))]


def _read_mr_lines(path: Path, schema):
    """(line number, MR or error message) for each non-blank line; corpus files yield their grouped MRs."""
    if path.suffix in (".csv", ".json"):
        return [(i, ex.mr) for i, ex in enumerate(load_corpus(path, schema, "test").grouped(), 1)]
    out = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            mr = parse_mr(line, default_act=schema.default_act)
            validate_mr(mr, schema)
            out.append((i, mr.canonical(schema)))
        except (MRSyntaxError, SchemaError) as e:
            out.append((i, f"{path}:{i}: {e}"))
    return out


# commands --------------------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig, args) -> int:
    out = Path(cfg.output_dir)
    write_resolved(cfg, out / "ingest", "ingest")
    stats = {}
    for which, split in (("train", "train"), ("valid", "valid"), ("test", "test")):
        if not getattr(cfg, which):
            continue
        ds = _load(cfg, which, split)
        edits: list = []
        if cfg.normalize and cfg.schema == "e2e":
            ds = normalize_dataset(ds, default_e2e_rules(), edits)
        target = out / "ingest" / f"{split}{Path(getattr(cfg, which)).suffix}"
        if target.suffix == ".json":
            write_da_corpus(target, ds)
        else:
            write_e2e_corpus(target, [(mr, u.raw or u.text) for mr, u in ds.pairs()], ds.schema)
        stats[split] = {"examples": len(ds), "references": sum(len(e.refs) for e in ds.examples),
                        "distinct_mrs": len(ds.grouped()), "normalization_edits": len(edits),
                        "sizes": {a: s for a, s in legal_sizes(ds).items()}}
        log.info("%s: %s", split, stats[split])
    (out / "ingest" / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_train(cfg: PipelineConfig, args) -> int:
    out = Path(cfg.output_dir)
    write_resolved(cfg, out, "train")
    train_ds = _normalized(cfg, _load(cfg, "train", "train"))
    valid_ds = _normalized(cfg, _maybe(cfg, "valid", "valid"))
    tcfg = dataclasses.replace(cfg.training, seed=cfg.seeds[0])
    model, tlog = train(train_ds, valid_ds, tcfg, cfg.model, cfg.mode, log_path=out / "p0.train.jsonl", progress=True)
    model.save(out / "p0.ckpt")
    print(f"p0 checkpoint: {out / 'p0.ckpt'} (best epoch {tlog.best_epoch}, valid BLEU {tlog.best_bleu})")
    return EXIT_OK


def _decode_one(model, mr, dcfg: DecodeConfig, index: int):
    """Returns (best text, extra sample records)."""
    if dcfg.strategy == "greedy":
        s = greedy_batch([mr], model)[0]
        return " ".join(s.relexicalized(mr, model)), []
    if dcfg.strategy == "beam":
        s = beam(mr, model, dcfg.width)[0]
        return " ".join(s.relexicalized(mr, model)), []
    rng = RngStream(dcfg.seed, (20, index))
    if dcfg.strategy == "sample":
        s = ancestral_sample(mr, model, dcfg.temperature, rng)
        return " ".join(s.relexicalized(mr, model)), []
    kept = sample_batch_topk(mr, model, NoiseSpec(dcfg.sigma0, rng), dcfg.n, dcfg.k)
    recs = [sample_record(mr, s, dcfg.sigma0, dcfg.seed, model.schema, " ".join(s.relexicalized(mr, model)))
            for s in kept]
    return recs[0]["text"], recs


_DECODE: dict = {}


def _decode_init(model, dcfg):
    _DECODE.update(model=model, dcfg=dcfg)


def _decode_task(item):
    index, mr = item
    return _decode_one(_DECODE["model"], mr, _DECODE["dcfg"], index)


def cmd_decode(cfg: PipelineConfig, args) -> int:
    out_dir = Path(cfg.output_dir)
    write_resolved(cfg, out_dir, "decode")
    ckpt = Path(args.checkpoint or out_dir / "p0.ckpt")
    if not ckpt.exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    model = Seq2SeqModel.load(ckpt)
    mrs_path = Path(args.mrs) if args.mrs else _require(cfg.test, "test")
    if not mrs_path.exists():
        raise ConfigError(f"MR file not found: {mrs_path}")
    items = _read_mr_lines(mrs_path, model.schema)
    good = [(i, mr) for i, mr in items if not isinstance(mr, str)]
    dcfg = cfg.decode
    if dcfg.strategy == "greedy":
        texts = _greedy_texts(model, [mr for _, mr in good])
        results = [(t, []) for t in texts]
    elif cfg.workers > 1 and len(good) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(cfg.workers, _decode_init, (model, dcfg)) as pool:
            results = pool.map(_decode_task, good)
    else:
        results = [_decode_one(model, mr, dcfg, i) for i, mr in good]
    by_line = {i: r for (i, _), r in zip(good, results)}
    errors = [mr for _, mr in items if isinstance(mr, str)]
    for e in errors:
        log.error("invalid MR: %s", e)
    target = Path(args.out) if args.out else out_dir / f"decode.{dcfg.strategy}.txt"
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as f:
        for i, _ in items:
            f.write((by_line[i][0] if i in by_line else "") + "\n")
    if dcfg.strategy == "noise":
        write_samples(target.with_name(target.name + ".samples.jsonl"), [r for _, recs in results for r in recs])
    log.info("wrote %d outputs to %s", len(items), target)
    return EXIT_INVALID if errors else EXIT_OK


def cmd_parse(cfg: PipelineConfig, args) -> int:
    out_dir = Path(cfg.output_dir)
    write_resolved(cfg, out_dir, "parse")
    schema = load_schema(cfg.schema)
    train_ds = _maybe(cfg, "train", "train") if cfg.parser == "classifier" and not cfg.classifiers else None
    valid_ds = _maybe(cfg, "valid", "valid") if train_ds is not None else None
    parser = _parser(cfg, schema, _normalized(cfg, train_ds), _normalized(cfg, valid_ds), out_dir)
    status = EXIT_OK
    if args.score:
        ds = _normalized(cfg, load_corpus(_require(args.score, "scoring"), schema, "valid"))
        scores, macro = parser_fscore(parser, list(ds.pairs()))
        report = {"macro_f": macro, "per_attribute": {a: asdict(s) for a, s in scores.items()}}
        (out_dir / "parse.score.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"macro-F {macro:.4f}")
    if args.utterances:
        lines = Path(args.utterances).read_text(encoding="utf-8").splitlines()
        target = Path(args.out) if args.out else out_dir / "parse.jsonl"
        with target.open("w", encoding="utf-8") as f:
            for i, line in enumerate(lines, 1):
                o = parser(line)
                rec = {"line": i, "text": line, "valid": o.valid,
                       "mr": serialize_mr(o.mr, schema) if o.mr is not None else None, "reason": o.reason}
                f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        log.info("parsed %d utterances into %s", len(lines), target)
    if not args.score and not args.utterances and cfg.parser == "rules":
        pack = _pack(cfg, schema)
        missing = pack.unreachable()
        print(f"rule pack {pack.name}: {len(missing)} unreachable (attribute, value) pairs")
        status = EXIT_INVALID if missing else EXIT_OK
    return status


def _seed_dir(out: Path, seed: int, many: bool) -> Path:
    return out / f"seed-{seed}" if many else out


def cmd_selftrain(cfg: PipelineConfig, args) -> int:
    out = Path(cfg.output_dir)
    write_resolved(cfg, out, "selftrain")
    schema = load_schema(cfg.schema)
    train_ds = _normalized(cfg, _load(cfg, "train", "train"))
    valid_ds = _normalized(cfg, _maybe(cfg, "valid", "valid"))
    test_ds = _maybe(cfg, "test", "test") or valid_ds
    if test_ds is None:
        raise ConfigError("selftrain needs a test or valid corpus for the before/after error report")
    pack = _pack(cfg, schema)  # also the evaluation pack; a missing pack is a config error
    mrs = _test_mrs(test_ds)
    many = len(cfg.seeds) > 1
    tables, summary = {}, {}
    for seed in cfg.seeds:
        d = _seed_dir(out, seed, many)
        d.mkdir(parents=True, exist_ok=True)
        if args.checkpoint:
            p0 = Seq2SeqModel.load(args.checkpoint)
        else:
            p0, _ = train(train_ds, valid_ds, dataclasses.replace(cfg.training, seed=seed), cfg.model, cfg.mode,
                          log_path=d / "p0.train.jsonl")
            p0.save(d / "p0.ckpt")
        parser = _parser(cfg, schema, train_ds, valid_ds, d)
        stcfg = dataclasses.replace(cfg.selftrain, seed=seed)
        aug, report = build_augmentation(p0, parser, stcfg, train_ds, workers=cfg.workers)
        write_augmentation(d / "augmented", aug, schema)
        (d / "augment.report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                                               encoding="utf-8")
        log.info("seed %d: %d augmented pairs", seed, len(aug))
        if not aug:
            raise ConfigError("augmentation produced no pairs (0 iterations or every sample rejected); "
                              "refusing to train p1 on an empty augmentation set")
        p1, _, union = retrain(train_ds, aug, dataclasses.replace(cfg.retraining, seed=seed), cfg.model, cfg.mode,
                               valid_ds, log_path=d / "p1.train.jsonl")
        p1.save(d / "p1.ckpt")
        reps = {}
        for name, model in (("p0", p0), ("p1", p1)):
            texts = _greedy_texts(model, mrs)
            (d / f"{name}.test.txt").write_text("\n".join(texts) + "\n", encoding="utf-8")
            reps[name] = slot_errors(list(zip(mrs, texts)), pack)
        (d / "slot_errors.json").write_text(
            json.dumps({k: r.to_dict() for k, r in reps.items()}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        label = f"seed {seed}" if many else ""
        for name, r in reps.items():
            tables[f"{name} {label}".strip()] = r
        summary[seed] = {"augmented": len(aug), "union": len(union), "p0_errors": reps["p0"].total,
                         "p1_errors": reps["p1"].total}
    text = slot_table(tables)
    (out / "selftrain.report.txt").write_text(text + "\n", encoding="utf-8")
    (out / "selftrain.summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                                encoding="utf-8")
    print(text)
    if cfg.error_budget is not None and any(s["p1_errors"] > cfg.error_budget for s in summary.values()):
        raise ValidationFailure(f"p1 slot errors exceed the budget of {cfg.error_budget}")
    return EXIT_OK


def evaluate_outputs(texts: list[str], mrs: list, refs: list | None, pack) -> dict:
    """Slot errors, BLEU (when references are given) and surface statistics; returns a report dict."""
    if len(texts) != len(mrs) or (refs is not None and len(refs) != len(texts)):
        raise ContractError(f"misaligned inputs: {len(texts)} outputs for {len(mrs)} MRs")
    hyps = [t.split() for t in texts]
    slots = slot_errors(list(zip(mrs, hyps)), pack)
    bleu = corpus_bleu(hyps, refs) if refs is not None else None
    quality = QualityReport(bleu, surface_stats(hyps))
    return {"slots": slots, "quality": quality}


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    out = Path(cfg.output_dir)
    write_resolved(cfg, out, "evaluate")
    schema = load_schema(cfg.schema)
    pack = _pack(cfg, schema)
    if not args.outputs:
        raise ConfigError("evaluate needs --outputs")
    texts = Path(args.outputs).read_text(encoding="utf-8").splitlines()
    if args.mrs:
        items = _read_mr_lines(Path(args.mrs), schema)
        bad = [m for _, m in items if isinstance(m, str)]
        if bad:
            raise ContractError(bad[0])
        mrs, refs = [m for _, m in items], None
    else:
        groups = load_corpus(_require(args.references or cfg.test, "reference"), schema, "test").grouped()
        mrs = [g.mr for g in groups]
        refs = [[list(r.tokens) for r in g.refs] for g in groups]
    res = evaluate_outputs(texts, mrs, refs, pack)
    slots, quality = res["slots"], res["quality"]
    text = "\n\n".join([slot_table({"output": slots}), breakdown_table(slots), quality_text(quality)])
    (out / "evaluate.txt").write_text(text + "\n", encoding="utf-8")
    (out / "evaluate.json").write_text(
        json.dumps({"slot_errors": slots.to_dict(), "quality": quality.to_dict()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    print(text)
    if cfg.error_budget is not None and slots.total > cfg.error_budget:
        raise ValidationFailure(f"{slots.total} slot errors exceed the budget of {cfg.error_budget}")
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "train": cmd_train, "decode": cmd_decode, "parse": cmd_parse,
            "selftrain": cmd_selftrain, "evaluate": cmd_evaluate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON config file, or 'toy' for the bundled quickstart")
    common.add_argument("--schema")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--train", help="training corpus (CSV or JSON)")
    common.add_argument("--valid")
    common.add_argument("--test")
    common.add_argument("--output-dir", "-o", dest="output_dir")
    common.add_argument("--seed", type=int, action="append", help="repeat for several seeds")
    common.add_argument("--workers", type=int)
    common.add_argument("--parser", choices=("rules", "classifier"))
    common.add_argument("--rule-pack", dest="rule_pack")
    common.add_argument("--classifiers", help="classifier checkpoint")
    common.add_argument("--error-budget", dest="error_budget", type=int)
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key, e.g. --set model.hidden_dim=64")
    common.add_argument("--quiet", "-q", action="store_true")

    p = argparse.ArgumentParser(prog="selftrain-nlg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="validate, normalize and summarize corpora")
    t = sub.add_parser("train", parents=[common], help="train the base generator p0")
    t.add_argument("--epochs", type=int)
    d = sub.add_parser("decode", parents=[common], help="generate utterances for MRs")
    d.add_argument("--checkpoint")
    d.add_argument("--mrs", help="one MR per line, or a corpus file")
    d.add_argument("--out")
    d.add_argument("--strategy", choices=STRATEGIES)
    d.add_argument("--width", type=int)
    d.add_argument("--sigma0", type=float)
    d.add_argument("--n", type=int)
    d.add_argument("--k", type=int)
    d.add_argument("--temperature", type=float)
    q = sub.add_parser("parse", parents=[common], help="parse utterances into MRs or score a parser")
    q.add_argument("--utterances", help="one utterance per line")
    q.add_argument("--score", help="corpus to score the parser on (macro-F)")
    q.add_argument("--out")
    s = sub.add_parser("selftrain", parents=[common], help="run p0 -> augmentation -> p1 and report slot errors")
    s.add_argument("--checkpoint", help="reuse this p0 instead of training one")
    s.add_argument("--epochs", type=int)
    s.add_argument("--retrain-epochs", dest="retrain_epochs", type=int)
    s.add_argument("--iterations", type=int)
    s.add_argument("--sigma0", type=float)
    e = sub.add_parser("evaluate", parents=[common], help="slot errors, BLEU and surface statistics")
    e.add_argument("--outputs", help="one generated utterance per line")
    e.add_argument("--references", help="corpus with MRs and references (grouped by MR)")
    e.add_argument("--mrs", help="MR file, for slot errors without BLEU")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, args)
    except ValidationFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, ContractError, CorpusError, SchemaError, RulePackError, CheckpointError, MRSyntaxError,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
