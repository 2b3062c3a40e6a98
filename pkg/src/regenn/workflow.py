"""Glue between a raw series and a ready-to-train model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from regenn.graph import CoOccurrenceGraph, build_cooccurrence
from regenn.model.forecaster import Dims, Forecaster, build_variant
from regenn.pipeline.normalize import NormStats, normalize
from regenn.pipeline.series import SeriesTensor
from regenn.pipeline.windows import SplitPlan


@dataclass
class PreparedData:
    series: SeriesTensor
    values: np.ndarray
    stats: NormStats
    graph: CoOccurrenceGraph
    plan: SplitPlan

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape


def prepare(series: SeriesTensor, plan: SplitPlan, norm_scope: str = "train",
            graph_on_raw: bool = True) -> PreparedData:
    """Normalise ``series`` and build its co-occurrence graph from the training region."""
    w = plan.train_len(series.values.shape[1])
    values, stats = normalize(series.values, norm_scope, w)
    source = series.values if graph_on_raw else values
    graph = build_cooccurrence(source[:, :w], series.variable_names)
    return PreparedData(series, values, stats, graph, plan)


def make_model(data: PreparedData, tag: str = "regenn", cell: str = "lstm", seed: int = 0,
               dropout_p: float = 0.1, d_ff: int | None = None) -> Forecaster:
    dims = Dims(data.plan.window, data.plan.horizon, data.values.shape[2], d_ff)
    model = build_variant(tag, dims, seed=seed, cell=cell, dropout_p=dropout_p)
    model.set_graph(data.graph.adjacency)
    return model


def run_extra(data: PreparedData, graph_on_raw: bool = True) -> dict:
    """Everything a snapshot needs beyond parameters to forecast on the original scale."""
    return {
        "plan": {"window": data.plan.window, "validation": data.plan.validation, "test": data.plan.test},
        "norm_stats": data.stats.to_dict(),
        "variable_names": list(data.series.variable_names),
        "graph_on_raw": graph_on_raw,
        "timestamps": int(data.values.shape[1]),
    }
