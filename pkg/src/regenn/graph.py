"""Co-occurrence graph of variables built from the training region."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from regenn import kernels
from regenn.errors import DataError


class EmptyTensorError(DataError):
    pass


@dataclass
class CoOccurrenceGraph:
    adjacency: np.ndarray
    variable_names: list[str] = field(default_factory=list)
    source_timestamps: int = 0

    def __post_init__(self):
        if not self.variable_names:
            self.variable_names = [f"var{i}" for i in range(self.adjacency.shape[0])]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", *self.variable_names])
            for name, row in zip(self.variable_names, self.adjacency):
                writer.writerow([name, *(repr(float(x)) for x in row)])

    @classmethod
    def from_csv(cls, path) -> "CoOccurrenceGraph":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        names = rows[0][1:]
        adj = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        return cls(adj, names)


def build_cooccurrence(train: np.ndarray, variable_names=None) -> CoOccurrenceGraph:
    """Sum ``T[i,j,u] + T[i,j,v]`` over every (sample, timestamp) where both are non-zero.

    ``train`` is the ``s x w x v`` training slice only. The diagonal follows
    the same rule, giving twice the sum of a variable's non-zero values.
    """
    values = np.ascontiguousarray(train, dtype=np.float64)
    if values.ndim != 3 or 0 in values.shape:
        raise EmptyTensorError(f"co-occurrence needs a non-empty s x w x v tensor, got {values.shape}")
    adj = kernels.impl().cooccurrence(values)
    return CoOccurrenceGraph(adj, list(variable_names or []), values.shape[1])


def edge_weight(train: np.ndarray, u: int, v: int) -> float:
    """Scalar edge weight ``f(u, v)``, evaluated directly from its definition."""
    values = np.asarray(train, dtype=np.float64)
    n = values.shape[2]
    if not (0 <= u < n and 0 <= v < n):
        raise IndexError(f"variable index ({u}, {v}) out of range for {n} variables")
    total = 0.0
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            a, b = values[i, j, u], values[i, j, v]
            if a != 0.0 and b != 0.0:
                total += a + b
    return total
