"""Central finite-difference check of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError
from .tensor import no_grad


def grad_check(f, params, eps: float = 1e-5, max_coords: int | None = None, rng=None) -> float:
    """Max over checked coordinates of ``|g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8)``.

    ``f`` is a zero-argument callable returning a scalar Tensor computed from
    ``params`` (an iterable of leaf Tensors). With ``max_coords`` set, that many
    coordinates per parameter are sampled with ``rng`` instead of checking all.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    f().backward()
    analytic = [p.grad.copy() for p in params]
    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = (rng or np.random.default_rng(0)).choice(flat.size, size=max_coords, replace=False)
        for i in idx:
            orig = flat[i]
            with no_grad():
                flat[i] = orig + eps
                up = f().item()
                flat[i] = orig - eps
                down = f().item()
            flat[i] = orig
            fd = (up - down) / (2.0 * eps)
            ad = ga.reshape(-1)[i]
            if not (np.isfinite(fd) and np.isfinite(ad)):
                raise NumericalError("non-finite gradient in grad_check")
            err = abs(ad - fd) / max(abs(ad), abs(fd), 1e-8)
            worst = max(worst, err)
    return worst
