"""Time-axis split plans and stride-1 sliding windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from regenn.errors import DataError


class PlanError(DataError):
    pass


class RegionTooShortError(DataError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    """Window length, validation length and forecast horizon, in timestamps.

    The training length is whatever precedes validation and test; pass
    ``train`` to pin it explicitly.
    """

    window: int
    validation: int
    test: int
    train: int | None = None

    def __post_init__(self):
        for name in ("window", "validation", "test"):
            if getattr(self, name) < 1:
                raise PlanError(f"split plan {name} must be positive, got {getattr(self, name)}")

    @classmethod
    def parse(cls, text: str) -> "SplitPlan":
        """``"7-7-14"`` -> window 7, validation 7, test 14."""
        try:
            w, v, z = (int(p) for p in text.split("-"))
        except ValueError:
            raise PlanError(f"split plan {text!r} is not of the form window-validation-test") from None
        return cls(w, v, z)

    @property
    def horizon(self) -> int:
        return self.test

    def train_len(self, t: int) -> int:
        w = t - self.validation - self.test if self.train is None else self.train
        if self.train is not None and w + self.validation + self.test != t:
            raise PlanError(f"plan {self} needs {w + self.validation + self.test} timestamps, series has {t}")
        if w < self.window:
            raise PlanError(f"{t} timestamps leave {w} for training, fewer than the window {self.window} "
                            f"(validation {self.validation}, test {self.test})")
        return w

    def bounds(self, t: int) -> tuple[int, int, int]:
        """End indices of the train, validation and test regions."""
        w = self.train_len(t)
        return w, w + self.validation, w + self.validation + self.test

    def label(self) -> str:
        return f"{self.window}-{self.validation}-{self.test}"


def split(values: np.ndarray, plan: SplitPlan):
    """Contiguous (train, validation, test) slices along the time axis."""
    w, v_end, t_end = plan.bounds(values.shape[1])
    return values[:, :w], values[:, w:v_end], values[:, v_end:t_end]


@dataclass
class WindowBatch:
    inputs: np.ndarray
    targets: np.ndarray
    start: int


def window_starts(n: int, window: int, horizon: int) -> range:
    if n < window + horizon:
        raise RegionTooShortError(f"region of {n} timestamps cannot hold a {window}-step window "
                                  f"plus a {horizon}-step target")
    return range(n - window - horizon + 1)


def make_windows(region: np.ndarray, window: int, horizon: int) -> list[WindowBatch]:
    """Every (input, target) pair with stride 1, in start order."""
    region = np.asarray(region, dtype=np.float64)
    return [WindowBatch(region[:, s:s + window], region[:, s + window:s + window + horizon], s)
            for s in window_starts(region.shape[1], window, horizon)]
