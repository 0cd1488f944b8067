"""Per-attribute convolutional text classifiers.

Each attribute gets its own network: 50-dim token embeddings, unigram, bigram
and trigram filters with 50 feature maps each, max-pooling over positions,
a ReLU, a 150->50 ReLU layer and a softmax over the attribute's values plus
``n/a``. Dialogue-act domains add one more classifier over the acts.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from ..corpus.dataset import Dataset
from ..corpus.linearize import delex_attributes
from ..corpus.mr import MeaningRepresentation, validate_mr
from ..corpus.schema import DONTCARE, DomainSchema, SchemaError
from ..corpus.text import DelexMiss, as_tokens, delexicalize
from ..corpus.vocab import PAD, UNK, Vocab, vocab_from_counts
from ..errors import ConfigError
from ..neuralcore import checkpoint
from ..neuralcore.layers import add_linear, linear
from ..neuralcore.params import ParamStore, init_uniform, sgd_step
from ..neuralcore.rng import RngStream
from ..neuralcore.tensor import (
    concat,
    cross_entropy,
    dropout,
    getitem,
    masked_max,
    no_grad,
    relu,
    reshape,
    softmax_np,
    take,
)
from .outcome import ParseOutcome

log = logging.getLogger(__name__)

NA = "n/a"
ACT_KEY = "@act"
EMBED_DIM = 50
WIDTHS = (1, 2, 3)
FEATURES = 50
HIDDEN = 50
FORMAT = "cnn-attribute-classifiers"


@dataclass
class ClassifierConfig:
    epochs: int = 30
    lr: float = 0.25
    weight_decay: float = 1e-4
    dropout: float = 0.25
    batch_size: int = 32
    seed: int = 1
    init_scale: float = 0.1

    def validate(self) -> "ClassifierConfig":
        if self.epochs < 0 or self.lr <= 0 or self.weight_decay < 0 or self.batch_size <= 0:
            raise ConfigError("classifier epochs >= 0, lr > 0, weight_decay >= 0, batch_size > 0 required")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        return self


class AttributeClassifier:
    def __init__(self, attribute: str, classes, vocab: Vocab, seed: int = 0, init_scale: float = 0.1,
                 dropout_rate: float = 0.25):
        self.attribute = attribute
        self.classes = list(classes)
        self.vocab = vocab
        self.dropout_rate = dropout_rate
        self.params = ParamStore()
        rng = RngStream(seed, (3,))
        s = init_scale
        self.emb = self.params.add("emb", init_uniform(rng, (len(vocab), EMBED_DIM), s))
        self.filters = [add_linear(self.params, f"conv{w}", w * EMBED_DIM, FEATURES, rng, s) for w in WIDTHS]
        self.hidden = add_linear(self.params, "hidden", FEATURES * len(WIDTHS), HIDDEN, rng, s)
        self.output = add_linear(self.params, "output", HIDDEN, len(self.classes), rng, s)

    def encode(self, utts) -> tuple[np.ndarray, np.ndarray]:
        seqs = [self.vocab.encode(as_tokens(u), unk=True) for u in utts]
        L = max(max((len(s) for s in seqs), default=1), max(WIDTHS))
        ids = np.full((len(seqs), L), self.vocab[PAD], dtype=np.int64)
        lengths = np.array([len(s) for s in seqs])
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = s
        return ids, lengths

    def logits(self, ids: np.ndarray, lengths: np.ndarray, training: bool = False, rng=None):
        B, L = ids.shape
        rate = self.dropout_rate
        e = dropout(take(self.emb, ids), rate, training, rng)
        pooled = []
        for w, f in zip(WIDTHS, self.filters):
            n = L - w + 1
            idx = np.arange(n)[:, None] + np.arange(w)[None, :]
            win = reshape(getitem(e, (slice(None), idx)), (B, n, w * EMBED_DIM))
            conv = linear(win, f)
            # windows running past the end see padding; keep at least the first window
            valid = (np.arange(n)[None, :] + w <= lengths[:, None]) | (np.arange(n)[None, :] == 0)
            pooled.append(masked_max(conv, valid, axis=1))
        h = dropout(relu(concat(pooled, axis=-1)), rate, training, rng)
        h = dropout(relu(linear(h, self.hidden)), rate, training, rng)
        return linear(h, self.output)

    def predict_proba(self, utts) -> np.ndarray:
        if not len(utts):
            return np.zeros((0, len(self.classes)))
        with no_grad():
            ids, lengths = self.encode(utts)
            return softmax_np(self.logits(ids, lengths).data, axis=1)

    def meta(self) -> dict:
        return {"attribute": self.attribute, "classes": self.classes, "vocab": self.vocab.tokens,
                "dropout": self.dropout_rate, "kind": "cnn"}


class ConstantClassifier:
    """Stand-in for an attribute whose training labels never vary."""

    def __init__(self, attribute: str, classes, constant: str):
        self.attribute = attribute
        self.classes = list(classes)
        self.constant = constant

    def predict_proba(self, utts) -> np.ndarray:
        p = np.zeros((len(utts), len(self.classes)))
        p[:, self.classes.index(self.constant)] = 1.0
        return p

    def meta(self) -> dict:
        return {"attribute": self.attribute, "classes": self.classes, "constant": self.constant, "kind": "constant"}


def attribute_classes(schema: DomainSchema, attr: str, mode: str | None) -> list[str]:
    a = schema.attribute(attr)
    if mode is not None and attr in delex_attributes(schema, mode):
        return [NA, schema.placeholder(attr)] + ([DONTCARE] if a.dontcare else [])
    return [NA] + list(a.values)


def labelled_examples(ds: Dataset, mode: str | None):
    """(tokens, MR) per reference; in delexicalized modes both sides carry placeholders."""
    out = []
    attrs = delex_attributes(ds.schema, mode) if mode is not None else ()
    for mr, utt in ds.pairs():
        if attrs:
            try:
                utt, _ = delexicalize(utt, mr, attrs, ds.schema)
            except DelexMiss:
                continue
            mr = mr.delexicalized(ds.schema, attrs)
        out.append((utt.tokens, mr))
    return out


def label_of(mr: MeaningRepresentation, key: str) -> str:
    if key == ACT_KEY:
        return mr.act
    vs = mr.values(key)
    return vs[0] if vs else NA  # repeated attributes are labelled by their first value


def macro_f1(gold, pred) -> float:
    classes = sorted(set(gold) | set(pred))
    fs = []
    for c in classes:
        tp = sum(g == c and p == c for g, p in zip(gold, pred))
        fp = sum(g != c and p == c for g, p in zip(gold, pred))
        fn = sum(g == c and p != c for g, p in zip(gold, pred))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        fs.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return float(np.mean(fs)) if fs else 0.0


def _fit(clf: AttributeClassifier, X, y, Xv, yv, cfg: ClassifierConfig, key_id: int) -> tuple[float, int]:
    """Best epoch by validation macro-F1; ties go to the lower validation NLL, then the earlier epoch."""
    N = len(X)
    best = (-1.0, 0)
    best_nll = np.inf
    best_state = clf.params.state()
    target = np.array([clf.classes.index(c) for c in y])
    gold_v = np.array([clf.classes.index(c) for c in yv])
    for epoch in range(1, cfg.epochs + 1):
        order = RngStream(cfg.seed, (4, key_id, epoch)).permutation(N)
        for b, lo in enumerate(range(0, N, cfg.batch_size)):
            idx = order[lo : lo + cfg.batch_size]
            ids, lengths = clf.encode([X[i] for i in idx])
            clf.params.zero_grads()
            loss = cross_entropy(clf.logits(ids, lengths, True, RngStream(cfg.seed, (5, key_id, epoch, b))),
                                 target[idx])
            (loss * (1.0 / len(idx))).backward()
            sgd_step(clf.params, cfg.lr, cfg.weight_decay)
        probs = clf.predict_proba(Xv)
        f1 = macro_f1(yv, [clf.classes[i] for i in probs.argmax(axis=1)])
        nll = -float(np.mean(np.log(np.maximum(probs[np.arange(len(gold_v)), gold_v], 1e-300))))
        if f1 > best[0] or (f1 == best[0] and nll < best_nll):
            best, best_nll = (f1, epoch), nll
            best_state = clf.params.state()
    clf.params.load_state(best_state)
    return best


def train_classifiers(train_ds: Dataset, valid_ds: Dataset | None, cfg: ClassifierConfig | None = None,
                      mode: str | None = None, attributes=None, report: dict | None = None) -> dict:
    """One classifier per attribute (plus the act for multi-act schemas), each selected by validation macro-F1.

    Without a validation set the training set is used for selection.
    """
    cfg = (cfg or ClassifierConfig()).validate()
    schema = train_ds.schema
    train = labelled_examples(train_ds, mode)
    valid = labelled_examples(valid_ds, mode) if valid_ds is not None and len(valid_ds) else train
    if not train:
        raise ConfigError("no training examples for the classifiers")
    counts: Counter = Counter(t for toks, _ in train for t in toks)
    vocab = vocab_from_counts(counts, (PAD, UNK))
    keys = list(attributes or schema.attribute_names)
    if attributes is None and len(schema.acts) > 1:
        keys.append(ACT_KEY)
    out = {}
    for key_id, key in enumerate(keys):
        classes = list(schema.dialogue_acts) if key == ACT_KEY else attribute_classes(schema, key, mode)
        y = [label_of(mr, key) for _, mr in train]
        unknown = set(y) - set(classes)
        if unknown:
            raise SchemaError(f"labels {sorted(unknown)} not among the classes of {key!r}")
        observed = set(y)
        if len(observed) == 1:
            (only,) = observed
            log.warning("attribute %s has a single observed class %r; using a constant classifier", key, only)
            out[key] = ConstantClassifier(key, classes, only)
            continue
        clf = AttributeClassifier(key, classes, vocab, seed=cfg.seed * 1000 + key_id, init_scale=cfg.init_scale,
                                  dropout_rate=cfg.dropout)
        f1, epoch = _fit(clf, [t for t, _ in train], y, [t for t, _ in valid], [label_of(m, key) for _, m in valid],
                         cfg, key_id)
        if report is not None:
            report[key] = {"valid_macro_f1": f1, "best_epoch": epoch}
        out[key] = clf
    return out


def clf_parse(utt, classifiers: dict, schema: DomainSchema, threshold: float = 0.5) -> ParseOutcome:
    return ClassifierParser(classifiers, schema, threshold).parse_many([utt])[0]


class ClassifierParser:
    kind = "classifier"

    def __init__(self, classifiers: dict, schema: DomainSchema, threshold: float = 0.5):
        self.classifiers = classifiers
        self.schema = schema
        self.threshold = threshold

    def __call__(self, utt) -> ParseOutcome:
        return self.parse_many([utt])[0]

    def parse_many(self, utts) -> list[ParseOutcome]:
        """Argmax class per attribute; any argmax probability below the threshold (``n/a`` included) invalidates."""
        utts = [as_tokens(u) for u in utts]
        probs = {k: c.predict_proba(utts) for k, c in self.classifiers.items()}
        out = []
        for i in range(len(utts)):
            evidence, values, slots = {}, {}, []
            act = self.schema.default_act
            low = []
            for key, clf in self.classifiers.items():
                p = probs[key][i]
                j = int(np.argmax(p))
                label = clf.classes[j]
                evidence[key] = dict(zip(clf.classes, map(float, p)))
                if p[j] < self.threshold:
                    low.append(key)
                if key == ACT_KEY:
                    act = label
                elif label != NA:
                    values[key] = (label,)
                    slots.append((key, label))
            if low:
                out.append(ParseOutcome(None, False, values, evidence, act, f"low confidence for {low}"))
                continue
            mr = MeaningRepresentation(act, tuple(slots)).canonical(self.schema)
            try:
                validate_mr(mr, self.schema)
            except SchemaError as e:
                out.append(ParseOutcome(None, False, values, evidence, act, str(e)))
                continue
            out.append(ParseOutcome(mr, True, values, evidence, act))
        return out


# persistence -------------------------------------------------------------------

def save_classifiers(path, classifiers: dict, schema: DomainSchema, mode: str | None = None) -> None:
    tensors, metas = {}, {}
    for key, clf in classifiers.items():
        metas[key] = clf.meta()
        if isinstance(clf, AttributeClassifier):
            for name, arr in clf.params.state().items():
                tensors[f"{key}/{name}"] = arr
    checkpoint.save(path, tensors, {"format": FORMAT, "classifiers": metas, "schema": schema.to_dict(),
                                    "mode": mode, "architecture": asdict(_Arch())})


@dataclass
class _Arch:
    embed_dim: int = EMBED_DIM
    widths: tuple = WIDTHS
    features: int = FEATURES
    hidden: int = HIDDEN


def load_classifiers(path):
    """Return ``(classifiers, schema, mode)``."""
    tensors, meta = checkpoint.load(path)
    if meta.get("format") != FORMAT:
        raise checkpoint.CheckpointError("not a classifier checkpoint")
    out = {}
    for key, m in meta["classifiers"].items():
        if m["kind"] == "constant":
            out[key] = ConstantClassifier(key, m["classes"], m["constant"])
            continue
        clf = AttributeClassifier(key, m["classes"], Vocab(m["vocab"]), dropout_rate=m["dropout"])
        clf.params.load_state({n[len(key) + 1 :]: a for n, a in tensors.items() if n.startswith(key + "/")})
        out[key] = clf
    return out, DomainSchema.from_dict(meta["schema"]), meta.get("mode")
