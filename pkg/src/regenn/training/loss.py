from __future__ import annotations

import numpy as np

from regenn.numerics import ShapeError, Tensor, as_tensor
from regenn.numerics.tensor import make


def mae_loss(pred, target) -> Tensor:
    """Mean absolute error over every element; subgradient 0 at ties."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mae_loss: prediction {pred.shape} vs target {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    sign = np.sign(diff)
    return make("mae", np.array(np.abs(diff).mean()), (pred, target),
                lambda g: (g * sign / n, -g * sign / n))
