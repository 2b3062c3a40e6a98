"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20] [--json out.json]

Also times one full training epoch on an epidemic-shaped dataset with each
backend, since the kernels are only part of a training step.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from regenn import kernels
from regenn.pipeline import SplitPlan
from regenn.synthetic import epidemic
from regenn.training import TrainConfig, train
from regenn.workflow import make_model, prepare

CELLS = {"elman": kernels.ELMAN, "gru": kernels.GRU, "lstm": kernels.LSTM}


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(repeat: int, rng: np.random.Generator) -> list[dict]:
    rows = []
    values = rng.uniform(0, 1, size=(188, 99, 3)) * (rng.uniform(size=(188, 99, 3)) > 0.3)
    for name, impl in kernels.BACKENDS.items():
        rows.append({"kernel": "cooccurrence", "shape": "188x99x3", "backend": name,
                     "seconds": best_of(lambda: impl.cooccurrence(values), repeat)})
    for batch, steps, width, hidden in ((188, 3, 7, 14), (8, 3, 84, 56), (2, 4, 3, 2)):
        x = rng.standard_normal((batch, steps, width))
        for cell, code in CELLS.items():
            g = kernels.GATES[code]
            w_ih = rng.uniform(-0.3, 0.3, (g, width, hidden))
            w_hh = rng.uniform(-0.3, 0.3, (g, hidden, hidden))
            b_ih, b_hh = rng.uniform(-0.3, 0.3, (2, g, hidden))
            dh = rng.standard_normal((batch, steps, hidden))
            shape = f"{batch}x{steps}x{width}->{hidden}"
            for name, impl in kernels.BACKENDS.items():
                fwd = impl.rnn_forward(code, x, w_ih, w_hh, b_ih, b_hh, False)
                rows.append({"kernel": f"{cell}-forward", "shape": shape, "backend": name,
                             "seconds": best_of(lambda: impl.rnn_forward(code, x, w_ih, w_hh, b_ih, b_hh, False),
                                                repeat)})
                rows.append({"kernel": f"{cell}-backward", "shape": shape, "backend": name,
                             "seconds": best_of(lambda: impl.rnn_backward(code, dh, x, w_ih, w_hh, *fwd, False),
                                                repeat)})
    return rows


def epoch_cases(samples: int) -> list[dict]:
    data = prepare(epidemic(s=samples), SplitPlan(7, 7, 14))
    rows = []
    for name in kernels.BACKENDS:
        with kernels.use(name):
            model = make_model(data, "regenn", "lstm", seed=0)
            t0 = time.perf_counter()
            train(model, data.values, data.plan, TrainConfig(max_epochs=1))
            rows.append({"kernel": "regenn-epoch", "shape": f"{samples}x120x3", "backend": name,
                         "seconds": time.perf_counter() - t0})
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--samples", type=int, default=188, help="samples in the epoch benchmark")
    parser.add_argument("--json", help="also write the rows here")
    args = parser.parse_args(argv)
    if "native" not in kernels.BACKENDS:
        print("compiled extension not built; only the numpy fallback is timed", file=sys.stderr)
    rows = kernel_cases(args.repeat, np.random.default_rng(0)) + epoch_cases(args.samples)
    by_key: dict[tuple, dict] = {}
    for row in rows:
        by_key.setdefault((row["kernel"], row["shape"]), {})[row["backend"]] = row["seconds"]
    print(f"{'kernel':<18}{'shape':<18}{'python ms':>12}{'native ms':>12}{'speedup':>10}")
    for (kernel, shape), t in by_key.items():
        py, nat = t.get("python"), t.get("native")
        speed = f"{py / nat:.1f}x" if py and nat else "-"
        nat_s = f"{nat * 1e3:.3f}" if nat else "-"
        print(f"{kernel:<18}{shape:<18}{py * 1e3:>12.3f}{nat_s:>12}{speed:>10}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
