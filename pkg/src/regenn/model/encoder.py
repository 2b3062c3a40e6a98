"""Single-head self-attention encoder over the variable axis."""

from __future__ import annotations

import math

import numpy as np

from regenn.numerics import (
    RngStream,
    ShapeError,
    Tensor,
    as_tensor,
    dropout,
    layer_norm,
    matmul,
    relu,
    scale,
    softmax,
    transpose,
)
from regenn.numerics.module import Module, uniform_init


def self_attention(x: Tensor) -> Tensor:
    """Scaled dot-product attention with ``Q = K = V = x`` (``x``: s x seq x d)."""
    d = x.shape[-1]
    scores = scale(matmul(x, transpose(x, (0, 2, 1))), 1.0 / math.sqrt(d))
    return matmul(softmax(scores), x)


class Encoder(Module):
    """Attention, then a position-wise feed-forward block, each with residual + layer norm.

    Variables form the attended sequence and the window is the feature
    axis, so the encoding keeps the ``s x w x v`` shape of its input. There
    are no query/key/value projections.
    """

    def __init__(self, window: int, d_ff: int, dropout_p: float, rng: np.random.Generator):
        super().__init__()
        self.window = window
        self.d_ff = d_ff
        self.dropout_p = dropout_p
        self.add_param("W_iota", uniform_init(rng, (window, d_ff), 1.0 / math.sqrt(window)))
        self.add_param("b_iota", uniform_init(rng, (d_ff,), 1.0 / math.sqrt(window)))
        self.add_param("W_eps", uniform_init(rng, (d_ff, window), 1.0 / math.sqrt(d_ff)))
        self.add_param("b_eps", uniform_init(rng, (window,), 1.0 / math.sqrt(d_ff)))
        self.add_param("gamma1", np.ones(window))
        self.add_param("beta1", np.zeros(window))
        self.add_param("gamma2", np.ones(window))
        self.add_param("beta2", np.zeros(window))

    def forward(self, y: Tensor, rng: RngStream | None = None) -> Tensor:
        y = as_tensor(y)
        if y.ndim != 3 or y.shape[1] != self.window:
            raise ShapeError(f"encoder expects s x {self.window} x v, got {y.shape}")
        p, training = self.dropout_p, self.training
        x = transpose(y, (0, 2, 1))
        h = layer_norm(x + dropout(self_attention(x), p, training, rng), self.gamma1, self.beta1)
        ff = dropout(relu(matmul(h, self.W_iota) + self.b_iota), p, training, rng)
        ff = matmul(ff, self.W_eps) + self.b_eps
        out = layer_norm(h + dropout(ff, p, training, rng), self.gamma2, self.beta2)
        return transpose(out, (0, 2, 1))


def encoder_forward(y, params: Encoder, training: bool = False, rng: RngStream | None = None) -> Tensor:
    was = params.training
    params.train(training)
    try:
        return params.forward(y, rng)
    finally:
        params.train(was)
