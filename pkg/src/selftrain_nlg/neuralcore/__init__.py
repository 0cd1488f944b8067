"""Minimal float64 autodiff core: GRU, attention, affine layers, losses, SGD, checkpoints."""

from . import checkpoint
from .checkpoint import CheckpointError
from .gradcheck import grad_check
from .layers import (
    DimensionError,
    add_attention,
    add_gru,
    add_linear,
    attend,
    attention,
    gru_cell,
    gru_recur,
    linear,
    pack_gru,
)
from .params import ParamStore, init_uniform, sgd_step
from .rng import RngStream
from .tensor import (
    NEG_INF,
    Tensor,
    concat,
    cross_entropy,
    dropout,
    log_softmax,
    log_softmax_np,
    masked_max,
    matmul,
    no_grad,
    reduce_sum,
    relu,
    reshape,
    sigmoid,
    softmax,
    softmax_np,
    stack,
    take,
    tanh,
    tensor,
)

__all__ = [
    "CheckpointError", "DimensionError", "NEG_INF", "ParamStore", "RngStream", "Tensor", "add_attention",
    "add_gru", "add_linear", "attend", "attention", "checkpoint", "concat", "cross_entropy", "dropout",
    "grad_check", "gru_cell", "gru_recur", "init_uniform", "linear", "log_softmax", "log_softmax_np",
    "masked_max", "matmul", "no_grad", "pack_gru", "reduce_sum", "relu", "reshape", "sgd_step", "sigmoid",
    "softmax", "softmax_np", "stack", "take", "tanh", "tensor",
]
