"""Two-layer GRU encoder-decoder with feed-forward attention."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..corpus.linearize import check_mode, delex_attributes, linearize
from ..corpus.mr import MeaningRepresentation
from ..corpus.schema import DomainSchema
from ..corpus.text import as_tokens
from ..corpus.vocab import Vocab
from ..errors import ConfigError
from ..neuralcore import checkpoint
from ..neuralcore.layers import add_attention, add_gru, add_linear, attend, gru_recur
from ..neuralcore.params import ParamStore
from ..neuralcore.rng import RngStream
from ..neuralcore.tensor import (
    Tensor,
    concat,
    cross_entropy,
    dropout,
    log_softmax_np,
    matmul,
    no_grad,
    reshape,
    stack,
    take,
)

FORMAT = "seq2seq-gru-attn"


class EncodingError(KeyError):
    """An input token is outside the closed input vocabulary."""


@dataclass
class ModelConfig:
    embed_dim: int = 512
    hidden_dim: int = 512
    layers: int = 2
    dropout: float = 0.25
    max_decode_len: int = 60
    attention_dim: int | None = None  # defaults to hidden_dim
    init_scale: float = 0.1

    def validate(self) -> "ModelConfig":
        if self.layers != 2:
            raise ConfigError("the generator has exactly 2 GRU layers")
        if min(self.embed_dim, self.hidden_dim, self.max_decode_len) <= 0:
            raise ConfigError("model dimensions and max_decode_len must be positive")
        if self.attention_dim is not None and self.attention_dim <= 0:
            raise ConfigError("attention_dim must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        return self

    @property
    def att_dim(self) -> int:
        return self.attention_dim or self.hidden_dim


@dataclass
class EncoderCache:
    states: Tensor  # (B, L, H) top-layer outputs
    proj: Tensor  # (B, L, A) states @ W_enc, reused at every decoder step
    mask: np.ndarray  # (B, L) bool
    final: list  # per-layer final state, (B, H)


class Seq2SeqModel:
    def __init__(self, config: ModelConfig, in_vocab: Vocab, out_vocab: Vocab, schema: DomainSchema,
                 mode: str, seed: int = 0):
        self.config = config.validate()
        self.in_vocab, self.out_vocab = in_vocab, out_vocab
        self.schema = schema
        self.mode = check_mode(mode)
        self.seed = seed
        self.params = ParamStore()
        rng = RngStream(seed, (0,))
        c, s = config, config.init_scale
        p = self.params
        self.enc_emb = p.add("enc.emb", rng.uniform(-s, s, (len(in_vocab), c.embed_dim)))
        self.enc_gru = [add_gru(p, f"enc.gru{i}", c.embed_dim if i == 0 else c.hidden_dim, c.hidden_dim, rng, s)
                        for i in range(c.layers)]
        self.dec_emb = p.add("dec.emb", rng.uniform(-s, s, (len(out_vocab), c.embed_dim)))
        self.dec_gru = [add_gru(p, f"dec.gru{i}", c.embed_dim if i == 0 else c.hidden_dim, c.hidden_dim, rng, s)
                        for i in range(c.layers)]
        self.att = add_attention(p, "att", c.hidden_dim, c.hidden_dim, c.att_dim, rng, s)
        self.out = add_linear(p, "out", 2 * c.hidden_dim, len(out_vocab), rng, s)

    # inputs ---------------------------------------------------------------
    @property
    def delex_attrs(self) -> tuple[str, ...]:
        return delex_attributes(self.schema, self.mode)

    def input_ids(self, mr_or_tokens) -> list[int]:
        toks = linearize(mr_or_tokens, self.mode, self.schema) if isinstance(mr_or_tokens, MeaningRepresentation) \
            else list(mr_or_tokens)
        missing = [t for t in toks if t not in self.in_vocab]
        if missing:
            raise EncodingError(f"input tokens not in vocabulary: {missing}")
        return self.in_vocab.encode(toks, unk=False)

    def output_ids(self, tokens) -> list[int]:
        return self.out_vocab.encode(as_tokens(tokens), unk=True)

    def _pad(self, seqs, pad: int):
        L = max(len(s) for s in seqs)
        ids = np.full((len(seqs), L), pad, dtype=np.int64)
        mask = np.zeros((len(seqs), L), dtype=bool)
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = s
            mask[i, : len(s)] = True
        return ids, mask

    # encoder --------------------------------------------------------------
    def encode_batch(self, inputs, training: bool = False, rng: RngStream | None = None) -> EncoderCache:
        """Run the encoder over a batch of input id sequences (or MRs)."""
        seqs = [s if not isinstance(s, MeaningRepresentation) else self.input_ids(s) for s in inputs]
        if any(len(s) == 0 for s in seqs):
            raise EncodingError("empty encoder input")
        ids, mask = self._pad(seqs, self.in_vocab.pad)
        rate = self.config.dropout
        B, L = ids.shape
        H = self.config.hidden_dim
        x = dropout(take(self.enc_emb, ids), rate, training, rng)
        full = bool(mask.all())
        final = []
        for layer in self.enc_gru:
            xw = matmul(x, layer["W"]) + layer["b"]
            h = Tensor(np.zeros((B, H)))
            outs = []
            for t in range(L):
                h_new = gru_recur(xw[:, t], h, layer["U_zr"], layer["U_h"])
                if full or mask[:, t].all():
                    h = h_new
                else:
                    m = mask[:, t : t + 1].astype(np.float64)
                    h = h + (h_new - h) * m
                outs.append(h)
            final.append(h)
            x = dropout(stack(outs, axis=1), rate, training, rng)
        return EncoderCache(x, matmul(x, self.att["W_enc"]), mask, final)

    def encode(self, mr) -> np.ndarray:
        """Top-layer encoder states (L, H) for one MR, eval mode."""
        with no_grad():
            return self.encode_batch([mr]).states.data[0].copy()

    # decoder --------------------------------------------------------------
    def decoder_step(self, prev, states, cache: EncoderCache, training: bool = False, rng=None, noise=None):
        """One decoder step.

        ``prev`` holds the previous token ids (B,), ``states`` the per-layer (B, H)
        states. ``noise`` (B, H), when given, is added to the top-layer state before
        attention and the output projection; the perturbed state is carried forward.
        Returns ``(logits (B, V), new_states, attention_weights)``.
        """
        x = dropout(take(self.dec_emb, np.asarray(prev, dtype=np.int64)), self.config.dropout, training, rng)
        xw0 = matmul(x, self.dec_gru[0]["W"]) + self.dec_gru[0]["b"]
        top, new, ctx, w = self._step(xw0, states, cache, training, rng, noise)
        logits = matmul(concat([top, ctx], axis=-1), self.out["W"]) + self.out["b"]
        return logits, new, w

    def _step(self, xw0, states, cache, training, rng, noise=None):
        rate = self.config.dropout
        new = []
        inp = None
        last = len(self.dec_gru) - 1
        for i, layer in enumerate(self.dec_gru):
            xw = xw0 if i == 0 else matmul(inp, layer["W"]) + layer["b"]
            h = gru_recur(xw, states[i], layer["U_zr"], layer["U_h"])
            if i == last and noise is not None:
                h = h + np.asarray(noise, dtype=np.float64)
            new.append(h)
            inp = dropout(h, rate, training, rng)
        q = matmul(inp, self.att["W_dec"]) + self.att["b"]
        ctx, w = attend(cache.proj, q, self.att["v"], cache.states, cache.mask)
        return inp, new, ctx, w

    def initial_states(self, cache: EncoderCache):
        return list(cache.final)

    # loss -------------------------------------------------------------------
    def batch_nll(self, inputs, targets, training: bool = False, rng=None, reduce: bool = True):
        """Teacher-forced summed token NLL (EOS included) over a batch.

        ``inputs`` are MRs or input id lists, ``targets`` output id lists (no BOS/EOS).
        With ``reduce`` the summed Tensor is returned, otherwise per-example floats.
        """
        if any(len(t) == 0 for t in targets):
            raise ValueError("empty target utterance")
        V = self.out_vocab
        cache = self.encode_batch(inputs, training, rng)
        y_in = [[V.bos] + list(t) for t in targets]
        y_out = [list(t) + [V.eos] for t in targets]
        ids_in, mask = self._pad(y_in, V.pad)
        ids_out, _ = self._pad(y_out, V.pad)
        B, T = ids_in.shape
        rate = self.config.dropout
        emb = dropout(take(self.dec_emb, ids_in), rate, training, rng)
        xw0 = matmul(emb, self.dec_gru[0]["W"]) + self.dec_gru[0]["b"]
        states = self.initial_states(cache)
        feats = []
        for t in range(T):
            top, states, ctx, _ = self._step(xw0[:, t], states, cache, training, rng)
            feats.append(concat([top, ctx], axis=-1))
        logits = matmul(stack(feats, axis=1), self.out["W"]) + self.out["b"]
        flat = reshape(logits, (B * T, len(V)))
        weights = mask.reshape(-1).astype(np.float64)
        if reduce:
            return cross_entropy(flat, ids_out.reshape(-1), weights)
        ls = log_softmax_np(flat.data, axis=1)
        tok = -ls[np.arange(B * T), ids_out.reshape(-1)] * weights
        return tok.reshape(B, T).sum(axis=1)

    def token_logprobs(self, inputs, targets) -> list[np.ndarray]:
        """Eval-mode teacher-forced log p of every target token followed by EOS, per example."""
        out = []
        with no_grad():
            for x, y in zip(inputs, targets):
                cache = self.encode_batch([x])
                V = self.out_vocab
                prev = [V.bos] + list(y)
                gold = list(y) + [V.eos]
                states = self.initial_states(cache)
                lps = []
                for p, g in zip(prev, gold):
                    logits, states, _ = self.decoder_step([p], states, cache)
                    lps.append(log_softmax_np(logits.data, axis=1)[0, g])
                out.append(np.array(lps))
        return out

    # persistence ----------------------------------------------------------
    def meta(self) -> dict:
        return {
            "format": FORMAT,
            "config": asdict(self.config),
            "in_vocab": self.in_vocab.tokens,
            "out_vocab": self.out_vocab.tokens,
            "schema": self.schema.to_dict(),
            "mode": self.mode,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        checkpoint.save(path, self.params.state(), self.meta())

    @classmethod
    def load(cls, path) -> "Seq2SeqModel":
        tensors, meta = checkpoint.load(path)
        if meta.get("format") != FORMAT:
            raise checkpoint.CheckpointError(f"not a generator checkpoint (format {meta.get('format')!r})")
        model = cls(ModelConfig(**meta["config"]), Vocab(meta["in_vocab"]), Vocab(meta["out_vocab"]),
                    DomainSchema.from_dict(meta["schema"]), meta["mode"], meta.get("seed", 0))
        model.params.load_state(tensors)
        return model

    def copy(self) -> "Seq2SeqModel":
        m = Seq2SeqModel(self.config, self.in_vocab, self.out_vocab, self.schema, self.mode, self.seed)
        m.params.load_state(self.params.state())
        return m


def sequence_nll(mr, utt, model: Seq2SeqModel, training: bool = False, rng=None) -> Tensor:
    """Teacher-forced ``-sum_i log p(y_i | y_<i, x)`` over the (already delexicalized) utterance plus EOS."""
    y = model.output_ids(utt)
    if not y:
        raise ValueError("empty utterance")
    return model.batch_nll([mr], [y], training, rng)
