"""Seeded synthetic datasets for tests, benchmarks and demos."""

from __future__ import annotations

import numpy as np

from regenn.pipeline.series import SeriesTensor


def _labels(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(n)]


def sinusoids(s: int = 4, t: int = 40, v: int = 3, seed: int = 7, noise: float = 0.05) -> SeriesTensor:
    """Non-negative sinusoids with a little seeded noise.

    Each variable has its own period; samples differ in phase and amplitude.
    """
    rng = np.random.default_rng(seed)
    steps = np.arange(t, dtype=np.float64)
    period = rng.uniform(6.0, 14.0, size=(1, 1, v))
    phase = rng.uniform(0.0, 2 * np.pi, size=(s, 1, v))
    amp = rng.uniform(0.5, 2.0, size=(s, 1, v))
    values = amp * (1.0 + np.sin(2 * np.pi * steps[None, :, None] / period + phase))
    values += noise * rng.standard_normal(values.shape)
    return SeriesTensor(np.maximum(values, 0.0), _labels("sample", s), _labels("var", v),
                        [str(i) for i in range(t)])


def epidemic(s: int = 188, t: int = 120, v: int = 3, seed: int = 0) -> SeriesTensor:
    """Daily counts shaped like an outbreak: zeros before onset, logistic growth, noisy reports.

    Variables are new cases, deaths and recoveries, the latter two lagging
    and scaled from the first.
    """
    rng = np.random.default_rng(seed)
    days = np.arange(t, dtype=np.float64)
    onset = rng.integers(0, t // 2, size=s)
    size = 10 ** rng.uniform(2.0, 5.5, size=s)
    rate = rng.uniform(0.05, 0.2, size=s)
    mid = onset + rng.uniform(20, 60, size=s)
    values = np.zeros((s, t, v))
    for i in range(s):
        cum = size[i] / (1.0 + np.exp(-rate[i] * (days - mid[i])))
        cum[days < onset[i]] = 0.0
        daily = np.diff(cum, prepend=0.0)
        cases = rng.poisson(np.maximum(daily, 0.0)).astype(np.float64)
        values[i, :, 0] = cases
        if v > 1:
            values[i, :, 1] = rng.binomial(np.roll(cases, 7).astype(np.int64), 0.03) * (days >= 7)
        if v > 2:
            values[i, :, 2] = rng.binomial(np.roll(cases, 14).astype(np.int64), 0.7) * (days >= 14)
        for k in range(3, v):
            values[i, :, k] = rng.poisson(np.maximum(daily, 0.0) * 0.1)
    names = ["cases", "deaths", "recovered"][:v] + _labels("extra", max(0, v - 3))
    return SeriesTensor(values, _labels("country", s), names, [f"day{i}" for i in range(t)])
