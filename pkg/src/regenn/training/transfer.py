"""Retraining on growing time prefixes, seeding each slice from the last."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from regenn.errors import ConfigError, DataError
from regenn.model.forecaster import Forecaster
from regenn.numerics import RngStream
from regenn.pipeline.series import SeriesTensor
from regenn.pipeline.windows import SplitPlan, window_starts
from regenn.training.trainer import TrainConfig, TrainReport, train
from regenn.workflow import PreparedData, make_model, prepare

PERTURB_FRACTION = 0.2


class InvalidScheduleError(ConfigError):
    pass


@dataclass
class TransferSlice:
    end: int
    model: Forecaster
    report: TrainReport
    data: PreparedData
    zeroed: dict[str, int]
    start_state: dict[str, np.ndarray]  # parameters the slice began training from


def mask_count(size: int, fraction: float = PERTURB_FRACTION) -> int:
    """Entries zeroed in a tensor of ``size`` entries (round half up)."""
    return int(np.floor(fraction * size + 0.5))


def perturb_weights(model: Forecaster, rng: RngStream, fraction: float = PERTURB_FRACTION) -> dict[str, int]:
    """Zero a seeded ``fraction`` of the entries of every parameter, without rescaling."""
    zeroed = {}
    for name, p in model.named_parameters():
        k = mask_count(p.data.size, fraction)
        flat = p.data.reshape(-1).copy()
        flat[rng.permutation(flat.size)[:k]] = 0.0
        p.data = flat.reshape(p.data.shape)
        zeroed[name] = k
    return zeroed


def check_schedule(slice_ends, t: int, plan: SplitPlan) -> list[int]:
    ends = [int(e) for e in slice_ends]
    if not ends:
        raise InvalidScheduleError("transfer schedule is empty")
    if any(b <= a for a, b in zip(ends, ends[1:])):
        raise InvalidScheduleError(f"transfer schedule must be strictly increasing, got {ends}")
    if ends[-1] > t:
        raise InvalidScheduleError(f"slice end {ends[-1]} exceeds the series length {t}")
    for e in ends:
        try:
            window_starts(plan.train_len(e), plan.window, plan.horizon)
        except DataError as exc:
            raise InvalidScheduleError(f"slice ending at {e} cannot hold plan {plan.label()}: {exc}") from None
    return ends


def transfer_train(series: SeriesTensor, slice_ends, plan: SplitPlan, config: TrainConfig | None = None,
                   tag: str = "regenn", cell: str = "lstm", graph_on_raw: bool = True,
                   d_ff: int | None = None) -> list[TransferSlice]:
    """Train one model per prefix ``series[:, :end]``.

    Each slice applies ``plan`` to its own extent, with its own normalisation
    and graph. Slice 0 starts fresh; later slices start from the previous
    slice's parameters with a seeded 20% of every tensor zeroed.
    """
    config = (config or TrainConfig()).validate()
    ends = check_schedule(slice_ends, series.values.shape[1], plan)
    root = RngStream(config.seed)
    slices: list[TransferSlice] = []
    for k, end in enumerate(ends):
        data = prepare(series.prefix(end), plan, config.norm_scope, graph_on_raw)
        model = make_model(data, tag, cell, config.seed, config.dropout_p, d_ff)
        zeroed: dict[str, int] = {}
        if slices:
            model.load_state_dict(slices[-1].model.state_dict())
            zeroed = perturb_weights(model, root.spawn(k))
        start = model.state_dict()
        model, report = train(model, data.values, plan, config)
        slices.append(TransferSlice(end, model, report, data, zeroed, start))
    return slices
