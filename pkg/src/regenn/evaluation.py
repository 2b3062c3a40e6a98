"""Forecast metrics on the original scale: MAE, RMSE and MSLE."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from regenn.errors import DataError
from regenn.numerics import ShapeError
from regenn.pipeline.normalize import NormStats, denormalize
from regenn.pipeline.windows import RegionTooShortError, SplitPlan


class MsleDomainError(DataError):
    pass


@dataclass
class MetricTriple:
    mae: float
    rmse: float
    msle: float


@dataclass
class MetricsReport:
    mae: float
    rmse: float
    msle: float
    n: int
    per_variable: dict[str, MetricTriple] = field(default_factory=dict)
    per_sample: dict[str, MetricTriple] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_variable_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", "mae", "rmse", "msle"])
            for name, m in self.per_variable.items():
                writer.writerow([name, repr(m.mae), repr(m.rmse), repr(m.msle)])
            writer.writerow(["ALL", repr(self.mae), repr(self.rmse), repr(self.msle)])


def clamp_nonnegative(pred: np.ndarray, enabled: bool = True) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    return np.maximum(pred, 0.0) if enabled else pred


def _triple(pred: np.ndarray, target: np.ndarray) -> MetricTriple:
    diff = pred - target
    log_ratio = np.log1p(pred) - np.log1p(target)
    return MetricTriple(float(np.abs(diff).mean()), float(np.sqrt((diff * diff).mean())),
                        float((log_ratio * log_ratio).mean()))


def compute_metrics(pred, target, variable_names=None, sample_ids=None) -> MetricsReport:
    """Global metrics plus per-variable and per-sample breakdowns for s x z x v inputs."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"metrics: prediction {pred.shape} vs target {target.shape}")
    if (pred <= -1).any() or (target <= -1).any():
        raise MsleDomainError("MSLE is undefined for entries <= -1; clamp predictions first")
    g = _triple(pred, target)
    report = MetricsReport(g.mae, g.rmse, g.msle, int(pred.size))
    if pred.ndim == 3:
        s, _, v = pred.shape
        names = list(variable_names) if variable_names is not None else [f"var{i}" for i in range(v)]
        ids = list(sample_ids) if sample_ids is not None else [f"sample{i}" for i in range(s)]
        report.per_variable = {names[k]: _triple(pred[:, :, k], target[:, :, k]) for k in range(v)}
        report.per_sample = {ids[i]: _triple(pred[i], target[i]) for i in range(s)}
    return report


def holdout_window(values: np.ndarray, plan: SplitPlan):
    """Last window before the test region and the test region itself."""
    _, v_end, t_end = plan.bounds(values.shape[1])
    if v_end < plan.window or t_end - v_end < plan.horizon:
        raise RegionTooShortError(f"test region needs {plan.window} preceding and {plan.horizon} "
                                  f"test timestamps")
    return values[:, v_end - plan.window:v_end], values[:, v_end:v_end + plan.horizon]


def forecast(model, values: np.ndarray, plan: SplitPlan, stats: NormStats, clamp: bool = True) -> np.ndarray:
    """Original-scale forecast of the test region."""
    inputs, _ = holdout_window(values, plan)
    return clamp_nonnegative(denormalize(model.predict(inputs), stats), clamp)


def evaluate(model, values: np.ndarray, plan: SplitPlan, stats: NormStats, clamp: bool = True,
             variable_names=None, sample_ids=None) -> MetricsReport:
    """Forecast the test region from normalised ``values`` and score it on the original scale."""
    _, targets = holdout_window(values, plan)
    pred = forecast(model, values, plan, stats, clamp)
    return compute_metrics(pred, denormalize(targets, stats), variable_names, sample_ids)
