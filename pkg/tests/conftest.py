import random

import numpy as np
import pytest

from selftrain_nlg.corpus import Dataset, Example, MeaningRepresentation, Vocab, build_vocab, load_schema
from selftrain_nlg.corpus.templates import realize
from selftrain_nlg.seq2seq import ModelConfig, Seq2SeqModel


def toy_pairs(n, seed=0, max_extra=3):
    schema = load_schema("toy")
    rng = random.Random(seed)
    others = [a for a in schema.attribute_names if a != "name"]
    out = []
    for _ in range(n):
        k = rng.randint(1, max_extra)
        combo = rng.sample(others, k)
        slots = [("name", rng.choice(schema.attribute("name").values))]
        slots += [(a, rng.choice(schema.attribute(a).values)) for a in combo]
        mr = MeaningRepresentation("inform", tuple(slots)).canonical(schema)
        out.append((mr, realize(mr, rng)))
    return out


def toy_dataset(n=60, seed=0, split="train", max_extra=3):
    schema = load_schema("toy")
    return Dataset(schema, [Example(m, (u,)) for m, u in toy_pairs(n, seed, max_extra)], split)


def random_mrs(schema, n, seed=0):
    rng = random.Random(seed)
    others = [a for a in schema.attribute_names if a != "name"]
    out = []
    for _ in range(n):
        combo = rng.sample(others, rng.randint(0, len(others)))
        slots = [("name", rng.choice(schema.attribute("name").values))]
        slots += [(a, rng.choice(schema.attribute(a).values)) for a in combo]
        out.append(MeaningRepresentation("inform", tuple(slots)).canonical(schema))
    return out


def tiny_model(dim=8, seed=3, mode="e2e-delex", scale=0.5, ds=None, max_len=12):
    """Untrained model with large-ish random weights so outputs are not degenerate."""
    ds = ds or toy_dataset(40)
    in_v, out_v = build_vocab(ds, mode)
    cfg = ModelConfig(embed_dim=dim, hidden_dim=dim, dropout=0.0, max_decode_len=max_len, init_scale=scale)
    return Seq2SeqModel(cfg, in_v, out_v, ds.schema, mode, seed)


@pytest.fixture(scope="session")
def toy_schema():
    return load_schema("toy")


@pytest.fixture(scope="session")
def e2e_schema():
    return load_schema("e2e")


@pytest.fixture(scope="session")
def toy_ds():
    return toy_dataset(60)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_vocab_model():
    """Output vocabulary of exactly four entries, for exhaustive decoding checks."""
    schema = load_schema("toy")
    ds = toy_dataset(10)
    in_v, _ = build_vocab(ds, "e2e-delex")
    out_v = Vocab(["<pad>", "<bos>", "<eos>", "a"])
    cfg = ModelConfig(embed_dim=6, hidden_dim=6, dropout=0.0, max_decode_len=3, init_scale=1.0)
    return Seq2SeqModel(cfg, in_v, out_v, schema, "e2e-delex", 11)


def fd_comparison(f, params, eps=1e-5):
    """Per-coordinate autodiff vs central difference: (max relative error, max abs error, roundoff scale).

    The roundoff scale ``eps_mach * |f| / eps`` is the absolute resolution of the
    finite-difference oracle itself; gradients near or below it cannot be checked
    to a tight relative tolerance in double precision.
    """
    from selftrain_nlg.neuralcore.tensor import no_grad

    params = list(params)
    for p in params:
        p.zero_grad()
    f0 = f()
    f0.backward()
    worst_rel = worst_abs = 0.0
    for p in params:
        flat = p.data.reshape(-1)
        g = p.grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            with no_grad():
                flat[i] = orig + eps
                up = f().item()
                flat[i] = orig - eps
                down = f().item()
            flat[i] = orig
            fd = (up - down) / (2 * eps)
            worst_abs = max(worst_abs, abs(g[i] - fd))
            worst_rel = max(worst_rel, abs(g[i] - fd) / max(abs(g[i]), abs(fd), 1e-8))
    return worst_rel, worst_abs, np.finfo(float).eps * abs(f0.item()) / eps


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
