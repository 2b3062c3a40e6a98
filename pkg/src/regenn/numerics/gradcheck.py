"""Central finite-difference checks against the tape's analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from regenn.numerics.tensor import Tape, Tensor


def numeric_gradient(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-6) -> list[np.ndarray]:
    grads = []
    for p in params:
        flat = p.data.reshape(-1)
        g = np.zeros(flat.size)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = f().item()
            flat[k] = orig - h
            down = f().item()
            flat[k] = orig
            g[k] = (up - down) / (2.0 * h)
        grads.append(g.reshape(p.shape))
    return grads


def analytic_gradient(f: Callable[[], Tensor], params: Sequence[Tensor]) -> list[np.ndarray]:
    for p in params:
        p.requires_grad = True
        p.grad = None
    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    return [np.zeros(p.shape) if p.grad is None else p.grad.copy() for p in params]


def finite_difference_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-6) -> float:
    """Largest ``|analytic - numeric| / max(1, |numeric|)`` over every coordinate.

    ``f`` is a closure over ``params`` returning a scalar tensor; the
    parameters are perturbed in place and restored afterwards.
    """
    analytic = analytic_gradient(f, params)
    numeric = numeric_gradient(f, params, h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        if a.size:
            err = np.abs(a - n) / np.maximum(1.0, np.abs(n))
            worst = max(worst, float(err.max()))
    return worst
