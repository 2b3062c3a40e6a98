"""Activations, regularisers and the cosine-matrix similarity."""

from __future__ import annotations

import numpy as np

from regenn.numerics.rng import RngStream
from regenn.numerics.tensor import ShapeError, Tensor, as_tensor, make

LAYER_NORM_EPS = 1e-5


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split on sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(x.data)
    return make("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return make("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, shifted by the row maximum."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    return make("softmax", y, (x,),
                lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu, "softmax": softmax}


def activation(kind: str, x: Tensor) -> Tensor:
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {sorted(ACTIVATIONS)}") from None
    return fn(as_tensor(x))


def dropout(x: Tensor, p: float, training: bool, rng: RngStream | None) -> Tensor:
    """Inverted dropout: survivors are scaled by ``1/(1-p)`` at train time."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an RngStream")
    keep = (rng.uniform(x.shape) >= p) / (1.0 - p)
    return make("dropout", x.data * keep, (x,), lambda g: (g * keep,))


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalise each last-axis slice to zero mean, unit (biased) variance."""
    n = x.shape[-1]
    if gamma.shape != (n,) or beta.shape != (n,):
        raise ShapeError(f"layer_norm: gamma/beta {gamma.shape}/{beta.shape} vs last axis {n}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gd = gamma.data
    lead = tuple(range(x.ndim - 1))

    def back(g):
        dxhat = g * gd
        dx = inv / n * (n * dxhat - dxhat.sum(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return make("layer_norm", xhat * gd + beta.data, (x, gamma, beta), back)


def cosine_similarity_matrix(a: np.ndarray) -> np.ndarray:
    """Plain-array cosine-matrix similarity; zero rows give zero entries."""
    return _cosine_forward(np.asarray(a, dtype=np.float64))[0]


def _cosine_forward(a: np.ndarray):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"cosine similarity needs a square matrix, got {a.shape}")
    norms = np.sqrt((a * a).sum(axis=1))
    nonzero = norms > 0
    safe = np.where(nonzero, norms, 1.0)
    unit = a / safe[:, None]
    unit[~nonzero] = 0.0
    s = unit @ unit.T
    s = 0.5 * (s + s.T)
    np.clip(s, -1.0, 1.0, out=s)
    idx = np.flatnonzero(nonzero)
    s[idx, idx] = 1.0
    return s, unit, safe, nonzero


def cosine_matrix_similarity(a: Tensor) -> Tensor:
    """Pairwise cosine similarity between the rows of a square matrix."""
    s, unit, safe, nonzero = _cosine_forward(a.data)

    def back(g):
        du = (g + g.T) @ unit
        proj = (du * unit).sum(axis=1, keepdims=True)
        da = (du - proj * unit) / safe[:, None]
        da[~nonzero] = 0.0
        return (da,)

    return make("cosine", s, (a,), back)
