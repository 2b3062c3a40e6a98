"""Linear shortcut from the input window to the forecast horizon."""

from __future__ import annotations

import math

import numpy as np

from regenn.numerics import ShapeError, Tensor, as_tensor, matmul, reshape, transpose
from regenn.numerics.module import Module, uniform_init


class Autoregression(Module):
    """``Y_lambda[s, j, v] = sum_i W[i, j] * Y[s, i, v] + b[j]``.

    One ``window x horizon`` map shared by every sample and variable.
    """

    def __init__(self, window: int, horizon: int, rng: np.random.Generator):
        super().__init__()
        self.window = window
        self.horizon = horizon
        bound = 1.0 / math.sqrt(window)
        self.add_param("W", uniform_init(rng, (window, horizon), bound))
        self.add_param("b", uniform_init(rng, (horizon,), bound))

    def forward(self, y) -> Tensor:
        y = as_tensor(y)
        if y.ndim != 3 or y.shape[1] != self.window:
            raise ShapeError(f"autoregression expects s x {self.window} x v, got {y.shape}")
        return matmul(transpose(self.W), y) + reshape(self.b, (self.horizon, 1))


def autoregression(y, params: Autoregression) -> Tensor:
    return params.forward(y)
