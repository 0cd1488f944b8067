"""GRU cell, feed-forward attention and affine layers built on :mod:`tensor`.

The GRU recurrence and the attention read are fused ops with hand-written
backward passes; they dominate training time, and the tape overhead of a
dozen tiny elementwise nodes per step would be the bottleneck otherwise.
Both are covered by finite-difference checks in the test suite.
"""

from __future__ import annotations

import numpy as np

from .params import ParamStore, init_uniform
from .tensor import NEG_INF, Tensor, _node, matmul, reshape, softmax_np, tensor


class DimensionError(ValueError):
    pass


# GRU ---------------------------------------------------------------------
# Gate blocks are packed column-wise as [update z | reset r | candidate]:
#   W (in, 3H), U_zr (H, 2H), U_h (H, H), b (3H,)

def add_gru(store: ParamStore, prefix: str, in_dim: int, hidden: int, rng, scale: float = 0.1) -> dict:
    return {
        "W": store.add(f"{prefix}.W", init_uniform(rng, (in_dim, 3 * hidden), scale)),
        "U_zr": store.add(f"{prefix}.U_zr", init_uniform(rng, (hidden, 2 * hidden), scale)),
        "U_h": store.add(f"{prefix}.U_h", init_uniform(rng, (hidden, hidden), scale)),
        "b": store.add(f"{prefix}.b", np.zeros(3 * hidden)),
    }


def pack_gru(Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh) -> dict:
    """Pack per-gate matrices (input->hidden as (in, H)) into the layout used by :func:`gru_cell`."""
    return {
        "W": Tensor(np.concatenate([Wz, Wr, Wh], axis=1), requires_grad=True),
        "U_zr": Tensor(np.concatenate([Uz, Ur], axis=1), requires_grad=True),
        "U_h": Tensor(np.asarray(Uh, dtype=np.float64), requires_grad=True),
        "b": Tensor(np.concatenate([bz, br, bh]), requires_grad=True),
    }


def _sig(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gru_recur(xw: Tensor, h: Tensor, U_zr: Tensor, U_h: Tensor) -> Tensor:
    """One GRU step given the precomputed input projection ``xw = x @ W + b``."""
    H = h.shape[-1]
    hz = h.data @ U_zr.data
    z = _sig(xw.data[..., :H] + hz[..., :H])
    r = _sig(xw.data[..., H : 2 * H] + hz[..., H:])
    rh = r * h.data
    c = np.tanh(xw.data[..., 2 * H :] + rh @ U_h.data)
    out = h.data + z * (c - h.data)

    def back(g):
        dz = g * (c - h.data)
        da_c = g * z * (1.0 - c * c)
        drh = da_c @ U_h.data.T
        da_z = dz * z * (1.0 - z)
        da_r = drh * h.data * r * (1.0 - r)
        da_zr = np.concatenate([da_z, da_r], axis=-1)
        dxw = np.concatenate([da_zr, da_c], axis=-1)
        dh = g * (1.0 - z) + drh * r + da_zr @ U_zr.data.T
        h2 = h.data.reshape(-1, H)
        dU_zr = h2.T @ da_zr.reshape(-1, 2 * H)
        dU_h = rh.reshape(-1, H).T @ da_c.reshape(-1, H)
        return dxw, dh, dU_zr, dU_h

    return _node(out, (xw, h, U_zr, U_h), back, "gru")


def gru_cell(x, h, params: dict) -> Tensor:
    """``h' = (1 - z) * h + z * tanh(W_h x + U_h (r * h) + b_h)`` with sigmoid gates z, r.

    ``x`` is (in,) or (B, in); ``h`` is (H,) or (B, H).
    """
    x, h = tensor(x), tensor(h)
    W, U_zr, U_h, b = params["W"], params["U_zr"], params["U_h"], params["b"]
    H = U_h.shape[0]
    if W.shape[0] != x.shape[-1] or h.shape[-1] != H or W.shape[1] != 3 * H or U_zr.shape != (H, 2 * H):
        raise DimensionError(f"GRU dimensions inconsistent: x{x.shape} h{h.shape} W{W.shape} U_h{U_h.shape}")
    return gru_recur(matmul(x, W) + b, h, U_zr, U_h)


# attention ---------------------------------------------------------------

def add_attention(store: ParamStore, prefix: str, enc_dim: int, dec_dim: int, att_dim: int, rng,
                  scale: float = 0.1) -> dict:
    return {
        "W_enc": store.add(f"{prefix}.W_enc", init_uniform(rng, (enc_dim, att_dim), scale)),
        "W_dec": store.add(f"{prefix}.W_dec", init_uniform(rng, (dec_dim, att_dim), scale)),
        "b": store.add(f"{prefix}.b", np.zeros(att_dim)),
        "v": store.add(f"{prefix}.v", init_uniform(rng, (att_dim,), scale)),
    }


def attend(enc_proj: Tensor, query: Tensor, v: Tensor, enc: Tensor, mask=None):
    """Fused read: ``s_j = v . tanh(enc_proj_j + query)``, weights = softmax(s), context = sum_j w_j enc_j.

    Shapes: enc_proj (B, L, A), query (B, A), v (A,), enc (B, L, H), mask (B, L) bool.
    Returns ``(context Tensor (B, H), weights ndarray (B, L))``; the weights are not differentiable.
    """
    e = np.tanh(enc_proj.data + query.data[:, None, :])
    s = e @ v.data
    if mask is not None:
        s = np.where(mask, s, NEG_INF)
    w = softmax_np(s, axis=1)
    ctx = np.einsum("bl,blh->bh", w, enc.data)

    def back(g):
        dw = np.einsum("bh,blh->bl", g, enc.data)
        ds = w * (dw - (w * dw).sum(axis=1, keepdims=True))
        de = ds[:, :, None] * v.data
        dv = np.einsum("bl,bla->a", ds, e)
        da = de * (1.0 - e * e)
        denc = w[:, :, None] * g[:, None, :]
        return da, da.sum(axis=1), dv, denc

    return _node(ctx, (enc_proj, query, v, enc), back, "attention"), w


def attention(dec, enc, params: dict, mask=None):
    """Feed-forward attention of one decoder state over encoder states.

    ``dec`` (H,) with ``enc`` (L, H), or batched (B, H) with (B, L, H).
    """
    dec, enc = tensor(dec), tensor(enc)
    if enc.ndim < 2 or enc.shape[-2] == 0:
        raise DimensionError("attention over an empty encoder sequence")
    single = dec.ndim == 1
    if single:
        dec = reshape(dec, (1, -1))
        enc = reshape(enc, (1,) + enc.shape)
        mask = None if mask is None else np.asarray(mask)[None]
    q = matmul(dec, params["W_dec"]) + params["b"]
    ctx, w = attend(matmul(enc, params["W_enc"]), q, params["v"], enc, mask)
    if single:
        return reshape(ctx, (-1,)), w[0]
    return ctx, w


# affine --------------------------------------------------------------------

def add_linear(store: ParamStore, prefix: str, in_dim: int, out_dim: int, rng, scale: float = 0.1) -> dict:
    return {
        "W": store.add(f"{prefix}.W", init_uniform(rng, (in_dim, out_dim), scale)),
        "b": store.add(f"{prefix}.b", np.zeros(out_dim)),
    }


def linear(x, params: dict) -> Tensor:
    return matmul(x, params["W"]) + params["b"]
