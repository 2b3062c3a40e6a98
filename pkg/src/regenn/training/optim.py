"""Adam, global-norm gradient clipping and reduce-on-plateau scheduling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from regenn.numerics import Tensor


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[Tensor]) -> "AdamState":
        return cls([np.zeros(p.shape) for p in params], [np.zeros(p.shape) for p in params])


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState, learning_rate: float) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for k, (p, g) in enumerate(zip(params, grads)):
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * (g * g)
        m_hat = state.m[k] / c1
        v_hat = state.v[k] / c2
        p.data = p.data - learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


def global_norm(grads: Sequence[np.ndarray]) -> float:
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    return math.sqrt(total)


def clip_gradients(grads: Sequence[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Rescale all gradients together when their joint L2 norm exceeds ``max_norm``.

    ``max_norm == 0`` disables clipping.
    """
    if max_norm < 0:
        raise ValueError(f"max_norm must be >= 0, got {max_norm}")
    grads = list(grads)
    if max_norm == 0:
        return grads
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    factor = max_norm / norm
    return [g * factor for g in grads]


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without
    a relative improvement larger than ``threshold``."""

    lr: float
    factor: float = 0.95
    patience: int = 25
    threshold: float = 0.1
    best: float = math.inf
    bad_epochs: int = 0
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"scheduler factor must lie in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ValueError(f"scheduler patience must be >= 1, got {self.patience}")

    def step(self, metric: float) -> float:
        if metric < self.best * (1.0 - self.threshold):
            self.best = metric
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr *= self.factor
                self.bad_epochs = 0
        self.history.append(self.lr)
        return self.lr


def plateau_scheduler(state: PlateauScheduler, validation_mae: float) -> float:
    return state.step(validation_mae)
