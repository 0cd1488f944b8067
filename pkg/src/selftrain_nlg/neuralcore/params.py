"""Parameter containers and the SGD update."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .tensor import Tensor


class ParamStore:
    """Ordered name -> parameter tensor map; each parameter carries its gradient buffer."""

    def __init__(self):
        self._params: OrderedDict[str, Tensor] = OrderedDict()

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter {name!r} already exists")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def zero_grads(self):
        for p in self._params.values():
            p.grad[...] = 0.0

    def state(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self._params.items()}

    def load_state(self, state: dict[str, np.ndarray]):
        if set(state) != set(self._params):
            missing = set(self._params) ^ set(state)
            raise KeyError(f"parameter names differ: {sorted(missing)}")
        for k, p in self._params.items():
            v = np.asarray(state[k], dtype=np.float64)
            if v.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {k}: {v.shape} vs {p.data.shape}")
            p.data[...] = v

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float((p.grad ** 2).sum()) for p in self._params.values())))

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self._params.values())


def init_uniform(rng, shape, scale: float = 0.1) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)


def sgd_step(params: ParamStore, lr: float, weight_decay: float = 0.0, max_norm: float | None = None) -> None:
    """In place ``p <- p - lr * (g + weight_decay * p)``; gradients are left for the caller to zero.

    ``max_norm`` optionally rescales the gradients to that global L2 norm first.
    """
    scale = 1.0
    if max_norm is not None:
        norm = params.grad_norm()
        if norm > max_norm:
            scale = max_norm / norm
    for p in params:
        p.data -= lr * (scale * p.grad + weight_decay * p.data)
