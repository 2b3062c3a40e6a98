"""Counter-based random stream used for dropout masks and initialisation."""

from __future__ import annotations

import numpy as np


class RngStream:
    """Deterministic stream of draws keyed by ``(seed, counter)``.

    Every draw builds a fresh generator from the pair, so replaying a stream
    from the same seed and counter yields identical values regardless of what
    other streams did in between.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = int(counter)

    def _generator(self) -> np.random.Generator:
        gen = np.random.default_rng([self.seed, self.counter])
        self.counter += 1
        return gen

    def uniform(self, shape, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return self._generator().uniform(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator().permutation(n)

    def spawn(self, *keys: int) -> "RngStream":
        """Child stream whose seed mixes this stream's seed with ``keys``."""
        ss = np.random.SeedSequence([self.seed, *[int(k) for k in keys]])
        return RngStream(int(ss.generate_state(1, dtype=np.uint64)[0]))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, counter={self.counter})"
