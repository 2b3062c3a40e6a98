"""Per-variable min-max scaling to [0, 1] and its inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCOPES = ("train", "all")


@dataclass
class NormStats:
    minimum: np.ndarray
    maximum: np.ndarray
    scope: str = "train"

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def to_dict(self) -> dict:
        return {"min": [float(x) for x in self.minimum], "max": [float(x) for x in self.maximum],
                "scope": self.scope}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(np.asarray(d["min"], dtype=np.float64), np.asarray(d["max"], dtype=np.float64),
                   d.get("scope", "train"))


def fit_stats(values: np.ndarray, scope: str = "train", train_len: int | None = None) -> NormStats:
    """Extrema per variable, over the first ``train_len`` timestamps or all of them."""
    if scope not in SCOPES:
        raise ValueError(f"normalisation scope must be one of {SCOPES}, got {scope!r}")
    values = np.asarray(values, dtype=np.float64)
    if scope == "train":
        if train_len is None or train_len < 1:
            raise ValueError("train-only normalisation needs the training length")
        values = values[:, :train_len]
    return NormStats(values.min(axis=(0, 1)), values.max(axis=(0, 1)), scope)


def apply_stats(values: np.ndarray, stats: NormStats) -> np.ndarray:
    span = stats.span
    safe = np.where(span > 0, span, 1.0)
    out = (np.asarray(values, dtype=np.float64) - stats.minimum) / safe
    return np.where(span > 0, out, 0.0)


def normalize(values: np.ndarray, scope: str = "train", train_len: int | None = None):
    stats = fit_stats(values, scope, train_len)
    return apply_stats(values, stats), stats


def denormalize(values: np.ndarray, stats: NormStats) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * stats.span + stats.minimum
