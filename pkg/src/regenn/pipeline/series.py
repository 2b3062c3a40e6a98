from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from regenn.errors import DataError


@dataclass
class SeriesTensor:
    """Samples x timestamps x variables cube with its axis labels."""

    values: np.ndarray
    sample_ids: list[str] = field(default_factory=list)
    variable_names: list[str] = field(default_factory=list)
    timestamp_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise DataError(f"series tensor must be s x t x v, got shape {self.values.shape}")
        s, t, v = self.values.shape
        self.sample_ids = list(self.sample_ids) or [f"sample{i}" for i in range(s)]
        self.variable_names = list(self.variable_names) or [f"var{i}" for i in range(v)]
        self.timestamp_labels = list(self.timestamp_labels) or [str(i) for i in range(t)]
        for labels, n, axis in ((self.sample_ids, s, "sample"), (self.variable_names, v, "variable"),
                                (self.timestamp_labels, t, "timestamp")):
            if len(labels) != n:
                raise DataError(f"{len(labels)} {axis} labels for an axis of length {n}")
        if not np.isfinite(self.values).all():
            raise DataError("series tensor contains non-finite values")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray) -> "SeriesTensor":
        return SeriesTensor(values, self.sample_ids, self.variable_names, self.timestamp_labels)

    def prefix(self, t: int) -> "SeriesTensor":
        """The first ``t`` timestamps."""
        return SeriesTensor(self.values[:, :t], self.sample_ids, self.variable_names, self.timestamp_labels[:t])
