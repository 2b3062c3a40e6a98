"""Training loop over sample batches and sliding windows."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from regenn.errors import ConfigError, NumericError
from regenn.model.forecaster import Forecaster
from regenn.numerics import RngStream, Tape
from regenn.pipeline.normalize import SCOPES
from regenn.pipeline.windows import SplitPlan, make_windows
from regenn.training.loss import mae_loss
from regenn.training.optim import AdamState, PlateauScheduler, adam_step, clip_gradients

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    clip_norm: float = 10.0
    dropout_p: float = 0.1
    scheduler_factor: float = 0.95
    scheduler_patience: int = 25
    scheduler_threshold: float = 0.1
    max_epochs: int = 500
    early_stop_patience: int = 100
    batch_size: int = 0  # samples per step; 0 means all samples
    seed: int = 0
    norm_scope: str = "train"
    shards: int = 1  # contiguous sample shards differentiated independently
    workers: int = 1  # threads used across shards; never changes results

    def validate(self) -> "TrainConfig":
        checks = [
            ("learning_rate", self.learning_rate > 0, "must be > 0"),
            ("clip_norm", self.clip_norm >= 0, "must be >= 0"),
            ("dropout_p", 0 <= self.dropout_p < 1, "must lie in [0, 1)"),
            ("scheduler_factor", 0 < self.scheduler_factor < 1, "must lie in (0, 1)"),
            ("scheduler_patience", self.scheduler_patience >= 1, "must be >= 1"),
            ("scheduler_threshold", self.scheduler_threshold >= 0, "must be >= 0"),
            ("max_epochs", self.max_epochs >= 0, "must be >= 0"),
            ("early_stop_patience", self.early_stop_patience >= 1, "must be >= 1"),
            ("batch_size", self.batch_size >= 0, "must be >= 0"),
            ("norm_scope", self.norm_scope in SCOPES, f"must be one of {SCOPES}"),
            ("shards", self.shards >= 1, "must be >= 1"),
            ("workers", self.workers >= 1, "must be >= 1"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{name} {msg}, got {getattr(self, name)!r}")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known}).validate()

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_mae: float | None = None
    epochs_run: int = 0
    stopped_early: bool = False
    snapshot: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def sample_batches(n_samples: int, batch_size: int) -> list[slice]:
    size = batch_size or n_samples
    return [slice(i, min(i + size, n_samples)) for i in range(0, n_samples, size)]


def validation_pair(values: np.ndarray, plan: SplitPlan):
    """Input window ending at the train/validation boundary and the validation steps it forecasts."""
    w, v_end, _ = plan.bounds(values.shape[1])
    steps = min(plan.validation, plan.horizon)
    return values[:, w - plan.window:w], values[:, w:w + steps]


def validation_mae(model: Forecaster, values: np.ndarray, plan: SplitPlan) -> float:
    inputs, targets = validation_pair(values, plan)
    pred = model.predict(inputs)[:, :targets.shape[1]]
    return float(np.abs(pred - targets).mean())


def _shard_grads(model, params, inputs, targets, rng):
    with Tape() as tape:
        loss = mae_loss(model.forward(inputs, rng=rng).output, targets)
    leaves = tape.backward(loss, accumulate=False)
    return loss.item(), [leaves.get(p, np.zeros(p.shape)) for p in params]


def _step_gradients(model, params, inputs, targets, config, rng, pool):
    """Loss and gradients for one batch; shards are reduced in a fixed order."""
    n = inputs.shape[0]
    shards = min(config.shards, n)
    if shards == 1:
        return _shard_grads(model, params, inputs, targets, rng.spawn(0))
    bounds = np.linspace(0, n, shards + 1).round().astype(int)
    jobs = [(inputs[a:b], targets[a:b], rng.spawn(k), (b - a) / n)
            for k, (a, b) in enumerate(zip(bounds[:-1], bounds[1:]))]
    run = lambda job: _shard_grads(model, params, job[0], job[1], job[2])
    results = list(pool.map(run, jobs)) if pool is not None else [run(j) for j in jobs]
    loss = 0.0
    grads = [np.zeros(p.shape) for p in params]
    for (shard_loss, shard_grads), job in zip(results, jobs):
        weight = job[3]
        loss += weight * shard_loss
        for k, g in enumerate(shard_grads):
            grads[k] = grads[k] + weight * g
    return loss, grads


def train(model: Forecaster, values: np.ndarray, plan: SplitPlan, config: TrainConfig | None = None):
    """Fit ``model`` on the training region of normalised ``values`` (s x t x v).

    Each epoch walks the sample batches and, within each batch, every
    training window in start order, taking one Adam step per window. The
    parameters of the best validation epoch are restored at the end.
    """
    config = (config or TrainConfig()).validate()
    values = np.asarray(values, dtype=np.float64)
    w = plan.train_len(values.shape[1])
    windows = make_windows(values[:, :w], plan.window, plan.horizon)
    batches = sample_batches(values.shape[0], config.batch_size)
    params = model.parameters()
    adam = AdamState.for_params(params)
    sched = PlateauScheduler(config.learning_rate, config.scheduler_factor,
                             config.scheduler_patience, config.scheduler_threshold)
    report = TrainReport()
    best_state = model.state_dict()
    root = RngStream(config.seed)
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 and config.shards > 1 else None
    try:
        for epoch in range(1, config.max_epochs + 1):
            model.train()
            lr = sched.lr
            total, count = 0.0, 0
            for b, rows in enumerate(batches):
                for win in windows:
                    rng = root.spawn(epoch, b, win.start)
                    loss, grads = _step_gradients(model, params, win.inputs[rows], win.targets[rows],
                                                  config, rng, pool)
                    if not math.isfinite(loss) or not all(np.isfinite(g).all() for g in grads):
                        raise NumericError(f"non-finite loss or gradient at epoch {epoch}, "
                                           f"batch {b}, window start {win.start}")
                    adam_step(params, clip_gradients(grads, config.clip_norm), adam, lr)
                    total += loss
                    count += 1
            model.eval()
            val = validation_mae(model, values, plan)
            if not math.isfinite(val):
                raise NumericError(f"non-finite validation MAE at epoch {epoch}")
            report.train_loss.append(total / count)
            report.val_mae.append(val)
            report.learning_rate.append(lr)
            sched.step(val)
            report.epochs_run = epoch
            if report.best_val_mae is None or val < report.best_val_mae:
                report.best_val_mae, report.best_epoch = val, epoch
                best_state = model.state_dict()
            elif epoch - report.best_epoch >= config.early_stop_patience:
                report.stopped_early = True
                log.info("early stop at epoch %d (best %d)", epoch, report.best_epoch)
                break
    finally:
        if pool is not None:
            pool.shutdown()
    model.load_state_dict(best_state)
    model.eval()
    return model, report
