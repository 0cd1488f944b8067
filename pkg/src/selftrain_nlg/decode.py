"""Greedy, beam, ancestral and noise-injection decoding.

Noise injection perturbs the top decoder layer's state at 1-based step ``i``
with ``eps_i ~ N(0, sigma0**2 / i * I)`` and then decodes greedily; the noise
shrinks as the utterance grows, so early steps explore and later steps stay
fluent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus.mr import MeaningRepresentation, serialize_mr
from .corpus.text import relex_mapping, relexicalize
from .errors import ConfigError
from .neuralcore.rng import RngStream
from .neuralcore.tensor import Tensor, log_softmax_np, no_grad
from .seq2seq.model import EncoderCache, Seq2SeqModel

TEMPERATURE_FLOOR = 1e-6


@dataclass(frozen=True)
class DecodedSample:
    tokens: tuple[str, ...]  # surface tokens, EOS stripped
    token_logprobs: tuple[float, ...]  # one per emitted step, EOS included when reached
    finished: bool = True  # False when the length cap stopped decoding

    @property
    def avg_ll(self) -> float:
        return float(np.mean(self.token_logprobs)) if self.token_logprobs else 0.0

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def relexicalized(self, mr: MeaningRepresentation, model: Seq2SeqModel) -> tuple[str, ...]:
        return relexicalize(self.tokens, relex_mapping(mr, model.schema, model.delex_attrs)).tokens


@dataclass
class NoiseSpec:
    sigma0: float
    rng: RngStream
    rescore_clean: bool = False  # score avg_ll under the unperturbed model instead

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ConfigError("sigma0 must be non-negative")

    def std(self, step: int) -> float:
        return self.sigma0 / np.sqrt(step)

    def draw(self, step: int, dim: int, rng: RngStream | None = None) -> np.ndarray:
        """Noise vector for 1-based ``step``."""
        return (rng or self.rng).normal(0.0, self.std(step), size=dim)


# shared batched loop ---------------------------------------------------------

def _run(model: Seq2SeqModel, inputs, choose, noise=None) -> list[DecodedSample]:
    """Decode a batch step by step. ``choose(logp, step)`` picks token ids from (B, V) log-probs;
    ``noise(step)`` returns a (B, H) perturbation or None."""
    V = model.out_vocab
    eos = V.eos
    with no_grad():
        cache = model.encode_batch(inputs)
        B = len(inputs)
        states = model.initial_states(cache)
        prev = np.full(B, V.bos, dtype=np.int64)
        done = np.zeros(B, dtype=bool)
        ids: list[list[int]] = [[] for _ in range(B)]
        lps: list[list[float]] = [[] for _ in range(B)]
        for step in range(1, model.config.max_decode_len + 1):
            eps = noise(step) if noise is not None else None
            logits, states, _ = model.decoder_step(prev, states, cache, noise=eps)
            logp = log_softmax_np(logits.data, axis=1)
            tok = choose(logp, step)
            for b in np.flatnonzero(~done):
                t = int(tok[b])
                lps[b].append(float(logp[b, t]))
                if t == eos:
                    done[b] = True
                else:
                    ids[b].append(t)
            if done.all():
                break
            prev = tok
    return [DecodedSample(tuple(V.decode(i)), tuple(lp), bool(d)) for i, lp, d in zip(ids, lps, done)]


def _argmax(logp, step):
    return np.argmax(logp, axis=1)  # first maximum, i.e. lowest index on ties


def greedy(mr, model: Seq2SeqModel) -> DecodedSample:
    return _run(model, [mr], _argmax)[0]


def greedy_batch(mrs, model: Seq2SeqModel, batch_size: int = 64) -> list[DecodedSample]:
    out = []
    for i in range(0, len(mrs), batch_size):
        out.extend(_run(model, list(mrs[i : i + batch_size]), _argmax))
    return out


def ancestral_sample(mr, model: Seq2SeqModel, temperature: float, rng: RngStream) -> DecodedSample:
    """Draw each token from ``softmax(logits / temperature)``; log-probs are those of that distribution.

    ``temperature < 1e-6`` is treated as the zero limit and decodes greedily.
    """
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    if temperature < TEMPERATURE_FLOOR:
        return greedy(mr, model)

    def choose(logp, step):
        return np.array([_draw(row, temperature, rng) for row in logp])

    sample = _run(model, [mr], choose)[0]
    if temperature == 1.0:
        return sample
    # recover the tempered log-probs of the chosen tokens
    return _retemper(model, mr, sample, temperature)


def _draw(logp_row, temperature, rng) -> int:
    p = np.exp(log_softmax_np(logp_row / temperature))
    c = np.cumsum(p)
    return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), len(p) - 1))


def _retemper(model, mr, sample: DecodedSample, temperature: float) -> DecodedSample:
    V = model.out_vocab
    ids = model.out_vocab.encode(sample.tokens, unk=False)
    gold = ids + ([V.eos] if sample.finished else [])
    prev = [V.bos] + ids
    lps = []
    with no_grad():
        cache = model.encode_batch([mr])
        states = model.initial_states(cache)
        for p, g in zip(prev, gold):
            logits, states, _ = model.decoder_step([p], states, cache)
            lps.append(float(log_softmax_np(logits.data[0] / temperature)[g]))
    return DecodedSample(sample.tokens, tuple(lps), sample.finished)


def _noise_batch(model, mr, spec: NoiseSpec, streams) -> list[DecodedSample]:
    H = model.config.hidden_dim
    if spec.sigma0 == 0.0:
        samples = _run(model, [mr] * len(streams), _argmax)
    else:
        samples = _run(model, [mr] * len(streams), _argmax,
                       noise=lambda step: np.stack([spec.draw(step, H, s) for s in streams]))
    if spec.rescore_clean:
        samples = [_rescore(model, mr, s) for s in samples]
    return samples


def _rescore(model, mr, s: DecodedSample) -> DecodedSample:
    ids = model.out_vocab.encode(s.tokens, unk=False)
    lp = model.token_logprobs([mr], [ids])[0]
    if not s.finished:
        lp = lp[:-1]
    return DecodedSample(s.tokens, tuple(float(x) for x in lp), s.finished)


def noise_inject_sample(mr, model: Seq2SeqModel, spec: NoiseSpec) -> DecodedSample:
    """Greedy decoding over noise-perturbed top-layer decoder states, drawing from ``spec.rng``."""
    return _noise_batch(model, mr, spec, [spec.rng])[0]


def sample_batch_topk(mr, model: Seq2SeqModel, spec: NoiseSpec, n: int = 200, k: int = 20, seen: set | None = None,
                      log: list | None = None) -> list[DecodedSample]:
    """Draw ``n`` noise-injection samples, keep the ``k`` best by avg_ll, drop surfaces already in ``seen``.

    Sample ``j`` uses the stream ``spec.rng.child(j)``, so results do not depend
    on how the batch is scheduled. The full draw is appended to ``log`` when
    given. Survivors are added to ``seen``; duplicates within the batch keep only
    their best-ranked copy.
    """
    if not n >= 1 or not k >= 1:
        raise ConfigError("sample_batch_topk needs n >= 1 and k >= 1")
    streams = [spec.rng.child(j) for j in range(n)]
    draws = _noise_batch(model, mr, spec, streams)
    if log is not None:
        log.extend(draws)
    order = sorted(range(n), key=lambda j: (-draws[j].avg_ll, j))[:k]
    seen = set() if seen is None else seen
    kept = []
    for j in order:
        if draws[j].tokens in seen:
            continue
        seen.add(draws[j].tokens)
        kept.append(draws[j])
    return kept


# beam search ----------------------------------------------------------------

def _select(cache: EncoderCache, rows) -> EncoderCache:
    rows = np.asarray(rows)
    return EncoderCache(
        Tensor(cache.states.data[rows]),
        Tensor(cache.proj.data[rows]),
        cache.mask[rows],
        [Tensor(f.data[rows]) for f in cache.final],
    )


def beam(mr, model: Seq2SeqModel, width: int) -> list[DecodedSample]:
    """Beam search ranked by average log-likelihood; returns up to ``width`` samples, best first.

    Each step expands every live hypothesis by every token and keeps the
    ``width`` best expansions (all live hypotheses have equal length, so their
    sum and mean orderings agree). Expansions ending in EOS retire; the rest stay
    live. At the length cap live hypotheses retire unfinished.
    """
    if width < 1:
        raise ConfigError("beam width must be >= 1")
    V = model.out_vocab
    eos, Vn = V.eos, len(V)
    done: list[tuple[float, int, DecodedSample]] = []
    with no_grad():
        base = model.encode_batch([mr])
        live_ids: list[list[int]] = [[]]
        live_lps: list[list[float]] = [[]]
        states = model.initial_states(base)
        cache = base
        prev = np.array([V.bos])
        rank = 0
        for step in range(1, model.config.max_decode_len + 1):
            logits, states, _ = model.decoder_step(prev, states, cache)
            logp = log_softmax_np(logits.data, axis=1)
            if len(live_lps) == 1:
                flat = logp[0]  # same order as the totals, without the rounding of adding a constant
            else:
                flat = (np.array([sum(lp) for lp in live_lps])[:, None] + logp).reshape(-1)
            order = np.argsort(-flat, kind="stable")[:width]
            keep_rows, keep_tok = [], []
            new_ids, new_lps = [], []
            for c in order:
                h, t = divmod(int(c), Vn)
                lps = live_lps[h] + [float(logp[h, t])]
                if t == eos:
                    s = DecodedSample(tuple(V.decode(live_ids[h])), tuple(lps), True)
                    done.append((s.avg_ll, rank, s))
                    rank += 1
                else:
                    keep_rows.append(h)
                    keep_tok.append(t)
                    new_ids.append(live_ids[h] + [t])
                    new_lps.append(lps)
            if not keep_rows:
                break
            if step == model.config.max_decode_len:
                for ids, lps in zip(new_ids, new_lps):
                    s = DecodedSample(tuple(V.decode(ids)), tuple(lps), False)
                    done.append((s.avg_ll, rank, s))
                    rank += 1
                break
            states = [Tensor(h.data[keep_rows]) for h in states]
            cache = _select(base, np.zeros(len(keep_rows), dtype=np.int64))
            prev = np.array(keep_tok)
            live_ids, live_lps = new_ids, new_lps
    done.sort(key=lambda d: (-d[0], d[1]))
    return [s for _, _, s in done[:width]]


# sample dumps -----------------------------------------------------------------

def sample_record(mr, sample: DecodedSample, sigma0: float, seed: int, schema=None, text: str | None = None) -> dict:
    return {
        "mr": serialize_mr(mr, schema),
        "text": sample.text if text is None else text,
        "avg_ll": sample.avg_ll,
        "sigma0": sigma0,
        "seed": seed,
    }


def write_samples(path, records) -> None:
    """One JSON object per line: mr, text, avg_ll, sigma0, seed."""
    with Path(path).open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def read_samples(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
