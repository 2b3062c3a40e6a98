"""Hot kernels with a compiled core and a numpy fallback.

The compiled extension ``regenn.kernels._core`` is used when it imports;
otherwise (or when ``REGENN_PURE_PYTHON=1``) the numpy reference takes over.
Both expose ``cooccurrence``, ``rnn_forward`` and ``rnn_backward``.
"""

from __future__ import annotations

import contextlib
import os
from types import ModuleType

from regenn.kernels import reference
from regenn.kernels.reference import ELMAN, GATES, GRU, LSTM

_native: ModuleType | None
try:
    from regenn.kernels import _core as _native
except ImportError:  # extension not built
    _native = None

BACKENDS: dict[str, ModuleType] = {"python": reference}
if _native is not None:
    BACKENDS["native"] = _native

_active = "python" if (_native is None or os.environ.get("REGENN_PURE_PYTHON") == "1") else "native"


def backend() -> str:
    return _active


def impl() -> ModuleType:
    return BACKENDS[_active]


def set_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}")
    _active = name


@contextlib.contextmanager
def use(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


__all__ = ["ELMAN", "GRU", "LSTM", "GATES", "BACKENDS", "backend", "impl", "set_backend", "use"]
