"""Run configuration: documented defaults, then a JSON file, then command-line flags."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from regenn.errors import ConfigError
from regenn.model.recurrent import cell_code
from regenn.model.variants import ABLATION_CELLS, parse_tag
from regenn.pipeline.windows import PlanError, SplitPlan
from regenn.training.trainer import TrainConfig


@dataclass
class RunConfig:
    data: str | None = None
    plan: str = "7-7-14"
    variant: str = "regenn"
    cell: str = "lstm"
    out: str = "regenn-out"
    snapshot: str | None = None
    clamp: bool = True
    graph_on_raw: bool = True
    d_ff: int | None = None
    slices: list[int] = field(default_factory=list)
    cells: list[str] = field(default_factory=lambda: list(ABLATION_CELLS))
    train: TrainConfig = field(default_factory=TrainConfig)

    @property
    def split_plan(self) -> SplitPlan:
        try:
            return SplitPlan.parse(self.plan)
        except PlanError as exc:
            raise ConfigError(f"plan: {exc}") from None

    def validate(self) -> "RunConfig":
        self.train.validate()
        self.split_plan
        parse_tag(self.variant, self.cell)
        for c in [self.cell, *self.cells]:
            cell_code(c)
        if self.d_ff is not None and self.d_ff < 1:
            raise ConfigError(f"d_ff must be >= 1, got {self.d_ff}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("train"))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


RUN_KEYS = {f.name for f in fields(RunConfig)} - {"train"}
TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_INT_KEYS = {"scheduler_patience", "max_epochs", "early_stop_patience", "batch_size", "seed",
             "shards", "workers"}


def read_config_file(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno <= len(text.splitlines()) else ""
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: configuration must be a JSON object")
    return data


def _merge(base: dict, layer: dict, source: str) -> None:
    for key, value in layer.items():
        if value is None and key not in ("data", "snapshot", "d_ff"):
            continue
        if key not in RUN_KEYS and key not in TRAIN_KEYS:
            raise ConfigError(f"{source}: unknown configuration key {key!r}")
        base[key] = value


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Resolve a run configuration; ``None`` values in ``overrides`` mean "not given"."""
    merged: dict = {}
    if path is not None:
        _merge(merged, read_config_file(path), str(path))
    _merge(merged, {k: v for k, v in (overrides or {}).items() if v is not None}, "command line")
    train_kw, run_kw = {}, {}
    for key, value in merged.items():
        (train_kw if key in TRAIN_KEYS else run_kw)[key] = value
    for key, value in train_kw.items():
        expected = int if key in _INT_KEYS else (str if key == "norm_scope" else float)
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, expected) or isinstance(value, bool):
            raise ConfigError(f"{key} must be a {expected.__name__}, got {value!r}")
        train_kw[key] = value
    if isinstance(run_kw.get("slices"), str):
        run_kw["slices"] = parse_int_list(run_kw["slices"], "slices")
    if isinstance(run_kw.get("cells"), str):
        run_kw["cells"] = [c.strip() for c in run_kw["cells"].split(",") if c.strip()]
    try:
        cfg = RunConfig(train=TrainConfig(**train_kw), **run_kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of integers, got {text!r}") from None
