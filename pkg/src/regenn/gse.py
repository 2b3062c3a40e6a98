"""Graph Soft Evolution layers (source and target) and evolution-weight export."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from regenn.numerics.module import Module, uniform_init
from regenn.numerics import (
    RngStream,
    ShapeError,
    Tensor,
    as_tensor,
    cosine_matrix_similarity,
    cosine_similarity_matrix,
    dropout,
    matmul,
)


def _check_square(a: Tensor, v: int, what: str) -> None:
    if a.shape != (v, v):
        raise ShapeError(f"{what}: expected a {v}x{v} matrix, got {a.shape}")


def gse_source_forward(A, Y, params: "GseSource", training: bool = False, rng: RngStream | None = None):
    """Source layer: evolve the shared graph and mix it into the window tensor.

    Returns ``(Y_alpha, A_mu, A_eta)``; ``A_mu`` is handed to the target layer.
    """
    A, Y = as_tensor(A), as_tensor(Y)
    v = params.n_vars
    _check_square(A, v, "gse source adjacency")
    if Y.ndim != 3 or Y.shape[2] != v:
        raise ShapeError(f"gse source: input must be s x w x {v}, got {Y.shape}")
    a_mu = matmul(params.W_mu, A) + params.b_mu
    a_eta = params.W_eta * cosine_matrix_similarity(a_mu) + params.b_eta
    mixed = dropout(matmul(Y, a_eta), params.dropout_p, training, rng)
    y_alpha = matmul(mixed, params.W_alpha) + params.b_alpha
    return y_alpha, a_mu, a_eta


def gse_target_forward(A_mu, Y_tilde, params: "GseTarget"):
    """Target layer: re-learn the source's graph and scale the decoded tensor by it.

    Returns ``(Y_psi, A_phi, A_psi)``.
    """
    A_mu, Y_tilde = as_tensor(A_mu), as_tensor(Y_tilde)
    v = params.n_vars
    _check_square(A_mu, v, "gse target adjacency")
    if Y_tilde.ndim != 3 or Y_tilde.shape[2] != v:
        raise ShapeError(f"gse target: input must be s x z x {v}, got {Y_tilde.shape}")
    a_phi = matmul(params.W_mu, A_mu) + params.b_mu
    a_psi = params.W_eta * cosine_matrix_similarity(a_phi) + params.b_eta
    return matmul(Y_tilde, a_psi), a_phi, a_psi


class GseSource(Module):
    def __init__(self, n_vars: int, dropout_p: float, rng: np.random.Generator):
        super().__init__()
        self.n_vars = n_vars
        self.dropout_p = dropout_p
        bound = 1.0 / math.sqrt(n_vars)
        for name, shape in (("W_mu", (n_vars, n_vars)), ("b_mu", (n_vars,)),
                            ("W_eta", (n_vars, n_vars)), ("b_eta", (n_vars,)),
                            ("W_alpha", (n_vars, n_vars)), ("b_alpha", (n_vars,))):
            self.add_param(name, uniform_init(rng, shape, bound))

    def forward(self, A, Y, rng=None):
        return gse_source_forward(A, Y, self, self.training, rng)


class GseTarget(Module):
    # no dropout and no output projection: this layer produces the model's output
    def __init__(self, n_vars: int, rng: np.random.Generator):
        super().__init__()
        self.n_vars = n_vars
        bound = 1.0 / math.sqrt(n_vars)
        for name, shape in (("W_mu", (n_vars, n_vars)), ("b_mu", (n_vars,)),
                            ("W_eta", (n_vars, n_vars)), ("b_eta", (n_vars,))):
            self.add_param(name, uniform_init(rng, shape, bound))

    def forward(self, A_mu, Y_tilde):
        return gse_target_forward(A_mu, Y_tilde, self)


class ModelNeverRunError(RuntimeError):
    pass


@dataclass
class EvolutionWeights:
    A_input: np.ndarray
    A_mu: np.ndarray
    A_phi: np.ndarray
    A_psi: np.ndarray
    cos_input: np.ndarray
    cos_phi: np.ndarray

    def matrices(self) -> dict[str, np.ndarray]:
        return {"A_input": self.A_input, "A_mu": self.A_mu, "A_phi": self.A_phi,
                "A_psi": self.A_psi, "cos_input": self.cos_input, "cos_phi": self.cos_phi}

    def view_distance(self) -> float:
        """Frobenius distance between the input and evolved cosine views."""
        return float(np.linalg.norm(self.cos_input - self.cos_phi))


def extract_evolution_weights(model) -> EvolutionWeights:
    """Graph matrices materialised by the model's most recent forward pass."""
    cache = getattr(model, "evolution_cache", None)
    if not cache:
        raise ModelNeverRunError("model has no evolution weights yet; run a forward pass with GSE enabled")
    a_in = cache["A_input"]
    return EvolutionWeights(
        A_input=a_in.copy(), A_mu=cache["A_mu"].copy(), A_phi=cache["A_phi"].copy(),
        A_psi=cache["A_psi"].copy(), cos_input=cosine_similarity_matrix(a_in),
        cos_phi=cosine_similarity_matrix(cache["A_phi"]),
    )
