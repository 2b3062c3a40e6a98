"""Command-line entry point: ``regenn <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from regenn.config import RunConfig, load_config
from regenn.errors import ConfigError, DataError, NumericError
from regenn.evaluation import clamp_nonnegative, evaluate
from regenn.gse import extract_evolution_weights
from regenn.model.snapshot import load_snapshot, save_snapshot
from regenn.model.variants import ABLATION_TAGS
from regenn.numerics import ShapeError
from regenn.pipeline import (
    NormStats,
    SeriesTensor,
    SplitPlan,
    apply_stats,
    denormalize,
    ingest,
    read_tensor,
    write_tensor,
)
from regenn.training.trainer import train
from regenn.training.transfer import transfer_train
from regenn.workflow import make_model, prepare, run_extra

log = logging.getLogger("regenn")

COMMANDS = ("ingest", "build-graph", "train", "transfer-train", "evaluate", "forecast", "ablate",
            "export-evolution")


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _run_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", help="JSON configuration file")
    g.add_argument("--data", help="series tensor (.mmts)")
    g.add_argument("--out", help="output directory")
    g.add_argument("--plan", help="window-validation-test, e.g. 7-7-14")
    g.add_argument("--variant", help="architecture tag or 'regenn'")
    g.add_argument("--cell", help="elman, gru or lstm")
    g.add_argument("--seed", type=int)
    g.add_argument("--lr", dest="learning_rate", type=float)
    g.add_argument("--clip-norm", type=float)
    g.add_argument("--dropout", dest="dropout_p", type=float)
    g.add_argument("--scheduler-factor", type=float)
    g.add_argument("--scheduler-patience", type=int)
    g.add_argument("--scheduler-threshold", type=float)
    g.add_argument("--max-epochs", type=int)
    g.add_argument("--early-stop", dest="early_stop_patience", type=int)
    g.add_argument("--batch-size", type=int, help="samples per step (0 = all)")
    g.add_argument("--norm-scope", choices=("train", "all"))
    g.add_argument("--shards", type=int, help="within-batch gradient shards")
    g.add_argument("--workers", type=int, help="threads across shards")
    g.add_argument("--d-ff", type=int, help="encoder feed-forward width (default: window)")
    g.add_argument("--graph-on-raw", dest="graph_on_raw", action="store_true", default=None)
    g.add_argument("--graph-on-normalized", dest="graph_on_raw", action="store_false")
    g.add_argument("--clamp", dest="clamp", action="store_true", default=None,
                   help="clamp forecasts at zero before scoring (default)")
    g.add_argument("--no-clamp", dest="clamp", action="store_false")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regenn", description="Graph-evolution forecasting of multiple multivariate series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    run = _run_options()

    p = sub.add_parser("ingest", help="CSV manifest -> tensor file")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("build-graph", parents=[run], help="co-occurrence graph of the training region")
    p.add_argument("-o", "--output", help="adjacency CSV (default OUT/graph.csv)")

    sub.add_parser("train", parents=[run], help="train one model")

    p = sub.add_parser("transfer-train", parents=[run], help="retrain on growing prefixes")
    p.add_argument("--slices", help="comma-separated prefix lengths, e.g. 45,60,75")

    p = sub.add_parser("evaluate", parents=[run], help="score a snapshot on the test region")
    p.add_argument("--snapshot", help="model snapshot (default OUT/snapshot.rgn)")

    p = sub.add_parser("forecast", parents=[run], help="forecast past the end of the series")
    p.add_argument("--snapshot")
    p.add_argument("-o", "--output", help="prediction tensor (default OUT/forecast.mmts)")

    p = sub.add_parser("ablate", parents=[run], help="train and score the architecture grid")
    p.add_argument("--cells", help="comma-separated cell kinds (default elman,gru,lstm)")

    p = sub.add_parser("export-evolution", parents=[run], help="write evolved graph matrices")
    p.add_argument("--snapshot")
    return parser


def _resolve(args) -> RunConfig:
    keys = ("data", "out", "plan", "variant", "cell", "seed", "learning_rate", "clip_norm", "dropout_p",
            "scheduler_factor", "scheduler_patience", "scheduler_threshold", "max_epochs",
            "early_stop_patience", "batch_size", "norm_scope", "shards", "workers", "d_ff",
            "graph_on_raw", "clamp", "slices", "cells", "snapshot")
    overrides = {k: getattr(args, k, None) for k in keys}
    return load_config(args.config, overrides)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())
    return out


def _series(cfg: RunConfig) -> SeriesTensor:
    if not cfg.data:
        raise ConfigError("no dataset given (--data or 'data' in the config file)")
    return read_tensor(cfg.data)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _train_one(cfg: RunConfig, data, out: Path, tag: str, cell: str):
    model = make_model(data, tag, cell, cfg.train.seed, cfg.train.dropout_p, cfg.d_ff)
    model, report = train(model, data.values, data.plan, cfg.train)
    snap = out / "snapshot.rgn"
    report.snapshot = snap.name
    save_snapshot(snap, model, report.best_epoch, run_extra(data, cfg.graph_on_raw))
    (out / "report.json").write_text(report.to_json() + "\n")
    return model, report


def cmd_ingest(args) -> int:
    series = ingest(args.manifest, workers=args.workers)
    write_tensor(args.output, series)
    print(f"wrote {args.output}: {'x'.join(map(str, series.shape))}")
    return 0


def cmd_build_graph(args, cfg: RunConfig) -> int:
    data = prepare(_series(cfg), cfg.split_plan, cfg.train.norm_scope, cfg.graph_on_raw)
    path = Path(args.output) if args.output else _outdir(cfg) / "graph.csv"
    if args.output:
        path.parent.mkdir(parents=True, exist_ok=True)
    data.graph.to_csv(path)
    print(f"wrote {path}")
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    out = _outdir(cfg)
    data = prepare(_series(cfg), cfg.split_plan, cfg.train.norm_scope, cfg.graph_on_raw)
    model, report = _train_one(cfg, data, out, cfg.variant, cfg.cell)
    metrics = evaluate(model, data.values, data.plan, data.stats, cfg.clamp,
                       data.series.variable_names, data.series.sample_ids)
    (out / "metrics.json").write_text(metrics.to_json() + "\n")
    print(f"{model.tag} [{cfg.cell}] best epoch {report.best_epoch}, val MAE {report.best_val_mae}, "
          f"test MAE {metrics.mae:.6g}")
    return 0


def cmd_transfer_train(args, cfg: RunConfig) -> int:
    if not cfg.slices:
        raise ConfigError("transfer-train needs --slices or 'slices' in the config file")
    out = _outdir(cfg)
    slices = transfer_train(_series(cfg), cfg.slices, cfg.split_plan, cfg.train, cfg.variant, cfg.cell,
                            cfg.graph_on_raw, cfg.d_ff)
    index = []
    for k, sl in enumerate(slices):
        d = out / f"slice{k:02d}_t{sl.end}"
        d.mkdir(exist_ok=True)
        sl.report.snapshot = "snapshot.rgn"
        extra = run_extra(sl.data, cfg.graph_on_raw)
        extra["transfer"] = {"slice": k, "end": sl.end, "zeroed": sl.zeroed}
        save_snapshot(d / "snapshot.rgn", sl.model, sl.report.best_epoch, extra)
        (d / "report.json").write_text(sl.report.to_json() + "\n")
        index.append({"slice": k, "end": sl.end, "dir": d.name, "best_val_mae": sl.report.best_val_mae,
                      "zeroed_entries": sum(sl.zeroed.values())})
        print(f"slice {k} (t={sl.end}): best val MAE {sl.report.best_val_mae}")
    _write_json(out / "slices.json", index)
    return 0


def _load_for_data(cfg: RunConfig, snapshot: str | None):
    path = Path(snapshot or cfg.snapshot or Path(cfg.out) / "snapshot.rgn")
    if not path.exists():
        raise DataError(f"snapshot {path} not found")
    model, manifest = load_snapshot(path)
    series = _series(cfg)
    if series.shape[2] != model.dims.n_vars:
        raise DataError(f"snapshot expects {model.dims.n_vars} variables, data has {series.shape[2]}")
    extra = manifest.get("extra", {})
    if "norm_stats" in extra:
        stats = NormStats.from_dict(extra["norm_stats"])
    else:
        stats = prepare(series, cfg.split_plan, cfg.train.norm_scope, cfg.graph_on_raw).stats
    plan = SplitPlan(**extra["plan"]) if "plan" in extra else cfg.split_plan
    return model, series, apply_stats(series.values, stats), stats, plan


def cmd_evaluate(args, cfg: RunConfig) -> int:
    model, series, values, stats, plan = _load_for_data(cfg, args.snapshot)
    out = _outdir(cfg)
    metrics = evaluate(model, values, plan, stats, cfg.clamp, series.variable_names, series.sample_ids)
    (out / "metrics.json").write_text(metrics.to_json() + "\n")
    metrics.write_variable_csv(out / "metrics.csv")
    print(f"MAE {metrics.mae:.6g}  RMSE {metrics.rmse:.6g}  MSLE {metrics.msle:.6g}  (n={metrics.n})")
    return 0


def cmd_forecast(args, cfg: RunConfig) -> int:
    model, series, values, stats, plan = _load_for_data(cfg, args.snapshot)
    w = model.dims.window
    if values.shape[1] < w:
        raise DataError(f"series has {values.shape[1]} timestamps, the model needs a {w}-step window")
    pred = clamp_nonnegative(denormalize(model.predict(values[:, -w:]), stats), cfg.clamp)
    result = SeriesTensor(pred, list(series.sample_ids), list(series.variable_names),
                          [f"t+{k}" for k in range(1, model.dims.horizon + 1)])
    path = Path(args.output) if args.output else _outdir(cfg) / "forecast.mmts"
    if args.output:
        _outdir(cfg)
    write_tensor(path, result)
    print(f"wrote {path}: {'x'.join(map(str, result.shape))}")
    return 0


def _slug(tag: str) -> str:
    keep = tag.replace("→", "E2").replace("+", "p").replace(" ", "")
    return "".join(c for c in keep if c.isalnum()) or "model"


def cmd_ablate(args, cfg: RunConfig) -> int:
    out = _outdir(cfg)
    data = prepare(_series(cfg), cfg.split_plan, cfg.train.norm_scope, cfg.graph_on_raw)
    rows, table = [], {tag: {} for tag in ABLATION_TAGS}
    for cell in cfg.cells:
        for tag in ABLATION_TAGS:
            d = out / cell / _slug(tag)
            d.mkdir(parents=True, exist_ok=True)
            model, report = _train_one(cfg, data, d, tag, cell)
            m = evaluate(model, data.values, data.plan, data.stats, cfg.clamp,
                         data.series.variable_names, data.series.sample_ids)
            (d / "metrics.json").write_text(m.to_json() + "\n")
            rows.append([tag, cell, repr(m.mae), repr(m.rmse), repr(m.msle), report.best_epoch])
            table[tag][cell] = m
            log.info("%s [%s]: MAE %.6g", tag, cell, m.mae)
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tag", "cell", "mae", "rmse", "msle", "best_epoch"])
        writer.writerows(rows)
    with open(out / "summary_table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tag", *(f"{c}_{k}" for c in cfg.cells for k in ("mae", "rmse", "msle"))])
        for tag in ABLATION_TAGS:
            writer.writerow([tag, *(repr(getattr(table[tag][c], k)) for c in cfg.cells
                                    for k in ("mae", "rmse", "msle"))])
    print(f"wrote {len(rows)} rows to {out / 'summary.csv'}")
    return 0


def cmd_export_evolution(args, cfg: RunConfig) -> int:
    model, series, values, stats, plan = _load_for_data(cfg, args.snapshot)
    if not model.spec.use_gse:
        raise ConfigError(f"variant {model.tag!r} has no graph-evolution layers to export")
    out = _outdir(cfg)
    w = model.dims.window
    model.predict(values[:, -w:])
    weights = extract_evolution_weights(model)
    names = list(series.variable_names)
    files = {}
    for key, mat in weights.matrices().items():
        path = out / f"{key}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", *names])
            for name, row in zip(names, mat):
                writer.writerow([name, *(repr(float(x)) for x in row)])
        files[key] = path.name
    _write_json(out / "evolution.json", {"variables": names, "matrices": files,
                                         "view_distance": weights.view_distance()})
    print(f"wrote {len(files)} matrices to {out}")
    return 0


HANDLERS = {
    "build-graph": cmd_build_graph,
    "train": cmd_train,
    "transfer-train": cmd_transfer_train,
    "evaluate": cmd_evaluate,
    "forecast": cmd_forecast,
    "ablate": cmd_ablate,
    "export-evolution": cmd_export_evolution,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        if args.command == "ingest":
            return cmd_ingest(args)
        return HANDLERS[args.command](args, _resolve(args))
    except ConfigError as exc:
        print(f"regenn: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ShapeError, OSError) as exc:
        print(f"regenn: data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"regenn: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
