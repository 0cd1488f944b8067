"""One round of self-training: sample novel MRs, generate candidates, keep parser-validated pairs, retrain.

For fixed-layout (E2E-style) schemas an MR of size ``S`` is the name plus a
uniformly drawn set of ``S - 1`` other attributes whose values are drawn with
probability inversely proportional to their training frequency. For
dialogue-act schemas every (act, size) combination seen in training is
sampled, with attributes uniform and required attributes always included.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus.dataset import Dataset, Example, prepare_pair, write_da_corpus, write_e2e_corpus
from .corpus.linearize import delex_attributes
from .corpus.mr import MeaningRepresentation
from .corpus.schema import DONTCARE, DomainSchema
from .corpus.text import DelexMiss, Utterance, as_tokens
from .decode import NoiseSpec, sample_batch_topk
from .errors import ConfigError
from .neuralcore.rng import RngStream

log = logging.getLogger(__name__)


# MR sampling ----------------------------------------------------------------------

class AttributeFrequencyTable:
    def __init__(self, schema: DomainSchema, counts: dict[str, Counter] | None = None):
        self.schema = schema
        self.counts = {a.name: Counter({v: 0 for v in a.values}) for a in schema.attributes}
        for a, c in (counts or {}).items():
            self.counts[a].update(c)

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "AttributeFrequencyTable":
        table = cls(ds.schema)
        for ex in ds.examples:
            for a, v in ex.mr.slots:
                if v in table.counts[a]:
                    table.counts[a][v] += 1
        return table

    def probabilities(self, attr: str) -> tuple[list[str], np.ndarray]:
        """Values of ``attr`` and their sampling probabilities, proportional to 1 / max(count, 1)."""
        values = list(self.schema.attribute(attr).values)
        inv = np.array([1.0 / max(self.counts[attr][v], 1) for v in values])
        return values, inv / inv.sum()

    def to_dict(self) -> dict:
        return {a: dict(c) for a, c in self.counts.items()}


def _required(schema: DomainSchema, act: str) -> list[str]:
    return list(schema.act(act).required)


def sample_e2e_mr(schema: DomainSchema, size: int, freq: AttributeFrequencyTable, rng: RngStream,
                  act: str | None = None) -> MeaningRepresentation:
    act = act or schema.default_act
    required = _required(schema, act)
    others = [a for a in schema.attribute_names if a not in required]
    if not len(required) < size <= len(required) + len(others) or size < 2:
        raise ConfigError(f"MR size {size} outside [{max(2, len(required) + 1)}, {len(required) + len(others)}]")
    pick = sorted(rng.choice(len(others), size=size - len(required), replace=False))
    slots = []
    for a in required + [others[i] for i in pick]:
        values, p = freq.probabilities(a)
        slots.append((a, values[_draw(p, rng)]))
    return MeaningRepresentation(act, tuple(slots)).canonical(schema)


def _draw(p: np.ndarray, rng: RngStream) -> int:
    c = np.cumsum(p)
    return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), len(p) - 1))


def legal_sizes(ds: Dataset) -> dict[str, list[int]]:
    """Act -> sorted MR sizes (slot counts) observed in ``ds``."""
    out: dict[str, set] = defaultdict(set)
    for ex in ds.examples:
        out[ex.mr.act].add(len(ex.mr))
    return {a: sorted(s) for a, s in sorted(out.items())}


def sample_da_mr(schema: DomainSchema, act: str, size: int, rng: RngStream, legal: dict | None = None,
                 delex: bool = True) -> MeaningRepresentation:
    """Random MR for ``act`` with ``size`` slots; compare-style acts split the slots over two items."""
    if legal is not None and size not in legal.get(act, ()):
        raise ConfigError(f"({act}, {size}) was never observed in training data")
    spec = schema.act(act)
    required = _required(schema, act)
    others = [a for a in schema.attribute_names if a not in required]
    per_item = -(-size // 2) if spec.repeats else size
    if per_item < len(required) or per_item > len(required) + len(others):
        raise ConfigError(f"size {size} impossible for act {act!r}")
    pick = sorted(rng.choice(len(others), size=per_item - len(required), replace=False)) if others else []
    attrs = required + [others[i] for i in pick]
    items = [attrs, attrs[: size - per_item]] if spec.repeats else [attrs]
    delexed = set(schema.delexicalize) if delex else set()
    slots = []
    for item in items:
        for a in item:
            ad = schema.attribute(a)
            if a in delexed:
                choices = [schema.placeholder(a)] + ([DONTCARE] if ad.dontcare else [])
            else:
                choices = list(ad.values)
            slots.append((a, choices[int(rng.integers(len(choices)))]))
    return MeaningRepresentation(act, tuple(slots)).canonical(schema)


# augmentation ----------------------------------------------------------------------

@dataclass
class SelfTrainConfig:
    iterations: int = 25000
    samples_per_mr: int = 200
    keep_k: int = 20
    sigma0: float = 1.0
    sizes: tuple[int, ...] | None = None  # E2E-style schemas: defaults to 3..number of attributes
    parser: str = "rules"
    seed: int = 1
    dedup_against_train: bool = True
    dedup_within_run: bool = True
    threshold: float = 0.5

    def validate(self, schema: DomainSchema | None = None) -> "SelfTrainConfig":
        if self.iterations < 0 or self.samples_per_mr < 1 or self.keep_k < 1:
            raise ConfigError("iterations >= 0, samples_per_mr >= 1 and keep_k >= 1 required")
        if self.keep_k > self.samples_per_mr:
            raise ConfigError("keep_k cannot exceed samples_per_mr")
        if self.sigma0 < 0:
            raise ConfigError("sigma0 must be non-negative")
        if self.parser not in ("rules", "classifier"):
            raise ConfigError("parser must be 'rules' or 'classifier'")
        if schema is not None and self.sizes is not None and schema.fixed_layout:
            lo = len(_required(schema, schema.default_act)) + 1
            bad = [s for s in self.sizes if not max(2, lo) <= s <= len(schema.attributes)]
            if bad:
                raise ConfigError(f"MR sizes {bad} invalid for schema {schema.name!r}")
        return self

    def size_range(self, schema: DomainSchema) -> tuple[int, ...]:
        return tuple(self.sizes) if self.sizes is not None else tuple(range(3, len(schema.attributes) + 1))


@dataclass(frozen=True)
class Provenance:
    seed: int
    stream: tuple[int, ...]
    sigma0: float
    source_mr: str
    avg_ll: float


@dataclass(frozen=True)
class AugmentedExample:
    mr: MeaningRepresentation
    utt: Utterance
    provenance: Provenance


@dataclass
class SizeReport:
    iterations: int = 0
    drawn: int = 0
    retained: int = 0  # after top-k
    deduped: int = 0
    rejected: int = 0  # invalid parse
    kept: int = 0


@dataclass
class AugmentationReport:
    per_size: dict[str, SizeReport] = field(default_factory=dict)

    @property
    def kept(self) -> int:
        return sum(r.kept for r in self.per_size.values())

    def to_dict(self) -> dict:
        return {k: asdict(v) for k, v in self.per_size.items()}


def training_surfaces(ds: Dataset, mode: str) -> set[tuple[str, ...]]:
    """Reference token sequences as the generator would emit them."""
    out = set()
    for mr, utt in ds.pairs():
        try:
            out.add(tuple(prepare_pair(mr, utt, mode, ds.schema)[1]))
        except DelexMiss:
            continue
    return out


def _plan(model, cfg: SelfTrainConfig, train_ds: Dataset | None):
    schema = model.schema
    if schema.fixed_layout:
        return [(schema.default_act, s) for s in cfg.size_range(schema)]
    if train_ds is None:
        raise ConfigError("dialogue-act schemas need the training set to enumerate legal (act, size) pairs")
    legal = legal_sizes(train_ds)
    sizes = [(a, s) for a, ss in legal.items() for s in ss]
    if cfg.sizes is not None:
        sizes = [(a, s) for a, s in sizes if s in cfg.sizes]
    return sizes


def _iteration(p0, parser, cfg: SelfTrainConfig, task, freq, legal, delex, want_log=False):
    """One sampling iteration: MR draw, noise-injection batch, top-k, within-batch dedup, parse."""
    act, size, stream = task
    schema = p0.schema
    rng = RngStream(cfg.seed, stream)
    if schema.fixed_layout:
        mr = sample_e2e_mr(schema, size, freq, rng.child(0), act)
    else:
        mr = sample_da_mr(schema, act, size, rng.child(0), legal, delex)
    draws: list | None = [] if want_log else None
    survivors = sample_batch_topk(mr, p0, NoiseSpec(cfg.sigma0, rng.child(1)), cfg.samples_per_mr, cfg.keep_k,
                                  set(), draws)
    if hasattr(parser, "parse_many"):
        outcomes = parser.parse_many([s.tokens for s in survivors])
    else:
        outcomes = [parser(s.tokens) for s in survivors]
    return mr, survivors, outcomes, draws


_WORKER: dict = {}


def _worker_init(p0, parser, cfg, freq, legal, delex):
    _WORKER.update(p0=p0, parser=parser, cfg=cfg, freq=freq, legal=legal, delex=delex)


def _worker_run(task):
    w = _WORKER
    return _iteration(w["p0"], w["parser"], w["cfg"], task, w["freq"], w["legal"], w["delex"])


def build_augmentation(p0, parser, cfg: SelfTrainConfig, train_ds: Dataset | None = None,
                       freq: AttributeFrequencyTable | None = None, draw_log: list | None = None,
                       workers: int = 1):
    """Run the sampling and filtering loop; returns ``(augmented examples, AugmentationReport)``.

    ``parser`` maps a token sequence to a ParseOutcome (``parse_many`` is used
    when available). Iteration ``t`` of size ``S`` draws from stream
    ``(seed, 10, S, t)`` (dialogue-act schemas add the act index), so the
    result depends only on the configuration and seeds. Iterations may run on
    ``workers`` processes; deduplication and bookkeeping happen afterwards in
    iteration order, so the output does not depend on scheduling.
    """
    schema = p0.schema
    cfg.validate(schema)
    if freq is None:
        freq = AttributeFrequencyTable.from_dataset(train_ds) if train_ds is not None else AttributeFrequencyTable(schema)
    base_seen = training_surfaces(train_ds, p0.mode) if (cfg.dedup_against_train and train_ds is not None) else set()
    legal = legal_sizes(train_ds) if train_ds is not None and not schema.fixed_layout else None
    delex = bool(delex_attributes(schema, p0.mode))
    acts = list(schema.dialogue_acts)
    tasks, keys = [], []
    for act, size in _plan(p0, cfg, train_ds):
        key = str(size) if schema.fixed_layout else f"{act}/{size}"
        for it in range(cfg.iterations):
            tasks.append((act, size, (10, size, it) if schema.fixed_layout else (10, acts.index(act), size, it)))
            keys.append(key)

    if workers > 1 and len(tasks) > 1 and draw_log is None:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(workers, _worker_init, (p0, parser, cfg, freq, legal, delex)) as pool:
            results = pool.imap(_worker_run, tasks, chunksize=max(1, len(tasks) // (8 * workers)))
            return _collect(tasks, keys, results, cfg, base_seen)
    results = (_iteration(p0, parser, cfg, t, freq, legal, delex, draw_log is not None) for t in tasks)
    return _collect(tasks, keys, results, cfg, base_seen, draw_log)


def _collect(tasks, keys, results, cfg: SelfTrainConfig, base_seen: set, draw_log: list | None = None):
    report = AugmentationReport()
    out: list[AugmentedExample] = []
    seen = set(base_seen)
    for (act, size, stream), key, (mr, survivors, outcomes, draws) in zip(tasks, keys, results):
        if draw_log is not None:
            draw_log.extend(draws)
        rep = report.per_size.setdefault(key, SizeReport())
        if not cfg.dedup_within_run:
            seen = set(base_seen)
        retained = min(cfg.keep_k, cfg.samples_per_mr)
        rep.iterations += 1
        rep.drawn += cfg.samples_per_mr
        rep.retained += retained
        rep.deduped += retained - len(survivors)
        source = str(mr)
        for s, o in zip(survivors, outcomes):
            if s.tokens in seen:
                rep.deduped += 1
                continue
            seen.add(s.tokens)
            if not o.valid:
                rep.rejected += 1
                continue
            rep.kept += 1
            out.append(AugmentedExample(o.mr, Utterance(s.tokens, " ".join(s.tokens)),
                                        Provenance(cfg.seed, stream, cfg.sigma0, source, s.avg_ll)))
    for key, rep in report.per_size.items():
        log.info("size %s: %s", key, asdict(rep))
    return out, report


# retraining ------------------------------------------------------------------------

def union_dataset(base: Dataset, aug, mode: str) -> Dataset:
    """``base`` plus augmented pairs as single-reference examples, minus exact duplicates of base pairs."""
    schema = base.schema
    attrs = delex_attributes(schema, mode)
    seen = set()
    for mr, utt in base.pairs():
        try:
            y = prepare_pair(mr, utt, mode, schema)[1]
        except DelexMiss:
            continue
        seen.add((mr.delexicalized(schema, attrs).canonical(schema), tuple(y)))
    extra = []
    for a in aug:
        k = (a.mr.delexicalized(schema, attrs).canonical(schema), tuple(as_tokens(a.utt)))
        if k in seen:
            continue
        seen.add(k)
        extra.append(Example(a.mr, (a.utt,)))
    return Dataset(schema, list(base.examples) + extra, base.split)


def retrain(base: Dataset, aug, train_cfg, model_cfg, mode: str, valid: Dataset | None = None,
            allow_empty: bool = False, log_path=None):
    """Train p1 from fresh initialization on base plus augmentation; returns ``(p1, TrainLog, union)``."""
    from .seq2seq.train import train

    aug = list(aug)
    if not aug and not allow_empty:
        raise ConfigError("the augmentation set is empty; refusing to retrain")
    union = union_dataset(base, aug, mode)
    p1, tlog = train(union, valid, train_cfg, model_cfg, mode, log_path=log_path)
    return p1, tlog, union


# persistence -----------------------------------------------------------------------

def write_augmentation(prefix, aug, schema: DomainSchema) -> tuple[Path, Path]:
    """Write the pairs in the corpus format and a provenance sidecar (JSON lines, same order)."""
    prefix = Path(prefix)
    sidecar = prefix.with_name(prefix.name + ".provenance.jsonl")
    if schema.fixed_layout:
        corpus = prefix.with_name(prefix.name + ".csv")
        write_e2e_corpus(corpus, [(a.mr, a.utt.text) for a in aug], schema)
    else:
        corpus = prefix.with_name(prefix.name + ".json")
        write_da_corpus(corpus, Dataset(schema, [Example(a.mr, (a.utt,)) for a in aug]))
    with sidecar.open("w", encoding="utf-8") as f:
        for a in aug:
            p = asdict(a.provenance)
            p["stream"] = list(p["stream"])
            f.write(json.dumps(p, sort_keys=True, ensure_ascii=False) + "\n")
    return corpus, sidecar


def read_augmentation(corpus, sidecar, schema: DomainSchema) -> list[AugmentedExample]:
    from .corpus.dataset import load_corpus

    ds = load_corpus(corpus, schema)
    with Path(sidecar).open(encoding="utf-8") as f:
        provs = [json.loads(line) for line in f if line.strip()]
    if len(provs) != len(ds.examples):
        raise ValueError("provenance sidecar does not match the corpus")
    return [
        AugmentedExample(ex.mr, ex.refs[0], Provenance(p["seed"], tuple(p["stream"]), p["sigma0"], p["source_mr"],
                                                      p["avg_ll"]))
        for ex, p in zip(ds.examples, provs)
    ]
