"""Float64 tensors, the differentiation tape and shared primitives."""

from regenn.numerics.functional import (
    LAYER_NORM_EPS,
    activation,
    cosine_matrix_similarity,
    cosine_similarity_matrix,
    dropout,
    layer_norm,
    relu,
    sigmoid,
    softmax,
    tanh,
)
from regenn.numerics.gradcheck import analytic_gradient, finite_difference_check, numeric_gradient
from regenn.numerics.rng import RngStream
from regenn.numerics.tensor import (
    NonScalarLossError,
    ShapeError,
    Tape,
    Tensor,
    absolute,
    add,
    as_tensor,
    backward,
    batch_matmul,
    flip,
    matmul,
    mean,
    mul,
    reshape,
    scale,
    sub,
    transpose,
    tsum,
)

__all__ = [
    "LAYER_NORM_EPS", "NonScalarLossError", "RngStream", "ShapeError", "Tape", "Tensor",
    "absolute", "activation", "add", "analytic_gradient", "as_tensor", "backward",
    "batch_matmul", "cosine_matrix_similarity", "cosine_similarity_matrix", "dropout",
    "finite_difference_check", "flip", "layer_norm", "matmul", "mean", "mul",
    "numeric_gradient", "relu", "reshape", "scale", "sigmoid", "softmax", "sub", "tanh",
    "transpose", "tsum",
]
