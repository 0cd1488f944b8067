"""Minibatch SGD training with validation-BLEU model selection."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..corpus.dataset import Dataset, build_vocab, training_pairs
from ..corpus.vocab import Vocab
from ..errors import ConfigError, NumericalError
from ..neuralcore.params import sgd_step
from ..neuralcore.rng import RngStream
from .model import ModelConfig, Seq2SeqModel

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 128
    lr: float = 0.25
    weight_decay: float = 1e-4
    dropout: float = 0.25
    seed: int = 1
    selection: str = "bleu"
    max_norm: float | None = None
    valid_every: int = 1

    def validate(self) -> "TrainConfig":
        if self.epochs < 0 or self.batch_size <= 0 or self.lr <= 0 or self.weight_decay < 0 or self.valid_every <= 0:
            raise ConfigError("epochs >= 0, batch_size > 0, lr > 0, weight_decay >= 0 and valid_every > 0 required")
        if self.selection != "bleu":
            raise ConfigError("model selection metric must be 'bleu'")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        return self

    # published recipes
    @classmethod
    def e2e(cls, **kw) -> "TrainConfig":
        return cls(**{"epochs": 500, "batch_size": 128, "lr": 0.25, "weight_decay": 1e-4, "dropout": 0.25, **kw})

    @classmethod
    def e2e_retrain(cls, **kw) -> "TrainConfig":
        return cls.e2e(**{"epochs": 50, **kw})

    @classmethod
    def laptop(cls, **kw) -> "TrainConfig":
        return cls.e2e(**{"epochs": 300, "lr": 0.1, **kw})

    @classmethod
    def tv(cls, **kw) -> "TrainConfig":
        return cls.e2e(**{"epochs": 300, "lr": 0.25, **kw})


@dataclass
class TrainLog:
    entries: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_bleu: float = -math.inf

    def append(self, entry: dict, path=None):
        self.entries.append(entry)
        if path is not None:
            with Path(path).open("a", encoding="utf-8") as f:
                f.write(json.dumps(entry, sort_keys=True) + "\n")


def validation_bleu(model: Seq2SeqModel, valid: Dataset, batch_size: int = 64) -> float:
    """Corpus BLEU of relexicalized greedy decodes against all references of each validation MR."""
    from ..decode import greedy_batch
    from ..evaluation.bleu import corpus_bleu

    groups = valid.grouped()
    if not groups:
        return 0.0
    outs = greedy_batch([g.mr for g in groups], model, batch_size)
    hyps = [o.relexicalized(g.mr, model) for o, g in zip(outs, groups)]
    return corpus_bleu(hyps, [[r.tokens for r in g.refs] for g in groups])


def new_model(train_ds: Dataset, mode: str, model_cfg: ModelConfig, seed: int,
              vocabs: tuple[Vocab, Vocab] | None = None) -> Seq2SeqModel:
    in_vocab, out_vocab = vocabs or build_vocab(train_ds, mode)
    return Seq2SeqModel(model_cfg, in_vocab, out_vocab, train_ds.schema, mode, seed)


def train(train_ds: Dataset, valid_ds: Dataset | None, cfg: TrainConfig, model_cfg: ModelConfig, mode: str,
          model: Seq2SeqModel | None = None, log_path=None, progress: bool = False):
    """Train a generator; returns ``(best model, TrainLog)``.

    Each epoch shuffles with stream ``(seed, 1, epoch)`` and draws dropout masks
    from ``(seed, 2, epoch, batch)``. After every ``valid_every`` epochs the
    greedy validation BLEU is logged and the parameters with the highest BLEU
    (earliest on ties) are kept. Without a validation set the last epoch wins.
    """
    cfg.validate()
    model_cfg.dropout = cfg.dropout
    if model is None:
        model = new_model(train_ds, mode, model_cfg, cfg.seed)
    model.config.dropout = cfg.dropout
    pairs = training_pairs(train_ds, mode)
    if not pairs:
        raise ConfigError("no usable training pairs")
    X = [model.input_ids(x) for _, x, _ in pairs]
    Y = [model.output_ids(y) for _, _, y in pairs]
    N = len(pairs)
    tlog = TrainLog()
    if log_path is not None:
        Path(log_path).write_text("", encoding="utf-8")
    best_state = model.params.state()
    use_valid = valid_ds is not None and len(valid_ds) > 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = RngStream(cfg.seed, (1, epoch)).permutation(N)
        total = 0.0
        for b, lo in enumerate(range(0, N, cfg.batch_size)):
            idx = order[lo : lo + cfg.batch_size]
            model.params.zero_grads()
            try:
                loss = model.batch_nll([X[i] for i in idx], [Y[i] for i in idx], training=True,
                                       rng=RngStream(cfg.seed, (2, epoch, b)))
                total += loss.item()
                (loss * (1.0 / len(idx))).backward()
            except NumericalError as e:
                raise TrainingDiverged(f"non-finite value at epoch {epoch}, batch {b}: {e}") from None
            sgd_step(model.params, cfg.lr, cfg.weight_decay, cfg.max_norm)
            if not all(np.isfinite(p.data).all() for p in model.params):
                raise TrainingDiverged(f"parameters became non-finite at epoch {epoch}, batch {b}")
        entry = {"epoch": epoch, "train_loss": total / N}
        if use_valid and (epoch % cfg.valid_every == 0 or epoch == cfg.epochs):
            bleu = validation_bleu(model, valid_ds)
            entry["valid_bleu"] = bleu
            if bleu > tlog.best_bleu:
                tlog.best_bleu, tlog.best_epoch = bleu, epoch
                best_state = model.params.state()
        elif not use_valid:
            tlog.best_epoch = epoch
            best_state = model.params.state()
        entry["seconds"] = round(time.perf_counter() - t0, 3)
        tlog.append(entry, log_path)
        if progress:
            log.info("epoch %d loss %.4f%s", epoch, entry["train_loss"],
                     f" bleu {entry['valid_bleu']:.2f}" if "valid_bleu" in entry else "")
    model.params.load_state(best_state)
    return model, tlog


def config_dict(cfg) -> dict:
    return asdict(cfg)
