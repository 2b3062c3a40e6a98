"""Elman, GRU and LSTM units and the two decoder passes built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from regenn import kernels
from regenn.errors import ConfigError
from regenn.numerics import RngStream, ShapeError, Tensor, add, as_tensor, dropout, transpose
from regenn.numerics.module import Module, uniform_init
from regenn.numerics.tensor import make

CELL_KINDS = {"elman": kernels.ELMAN, "gru": kernels.GRU, "lstm": kernels.LSTM}
CELL_NAMES = {"elman": "Elman", "gru": "GRU", "lstm": "LSTM"}


class UnknownCellError(ConfigError):
    pass


def cell_code(kind: str) -> int:
    try:
        return CELL_KINDS[kind.lower()]
    except (KeyError, AttributeError):
        raise UnknownCellError(f"unknown cell kind {kind!r}; expected Elman, GRU or LSTM") from None


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray | None = None


def recurrent_cell_step(kind: str, x, state: CellState, w_ih, w_hh, b_ih, b_hh) -> CellState:
    """One step of a cell on plain arrays, written gate by gate.

    Kept independent of the sequence kernels so it can serve as their oracle.
    """
    code = cell_code(kind)
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(state.h, dtype=np.float64)

    def pre(g, with_hidden=True):
        out = x @ w_ih[g] + b_ih[g]
        return out + h @ w_hh[g] + b_hh[g] if with_hidden else out

    if code == kernels.ELMAN:
        return CellState(np.tanh(pre(0)))
    if code == kernels.GRU:
        r = _sigmoid(pre(0))
        u = _sigmoid(pre(1))
        n = np.tanh(pre(2, False) + r * (h @ w_hh[2] + b_hh[2]))
        return CellState((1.0 - u) * n + u * h)
    c = np.zeros_like(h) if state.c is None else np.asarray(state.c, dtype=np.float64)
    f = _sigmoid(pre(0))
    i = _sigmoid(pre(1))
    o = _sigmoid(pre(2))
    g = np.tanh(pre(3))
    c = f * c + i * g
    return CellState(o * np.tanh(c), c)


def rnn_sequence(kind: str, x: Tensor, w_ih: Tensor, w_hh: Tensor, b_ih: Tensor, b_hh: Tensor,
                 reverse: bool = False) -> Tensor:
    """Run a cell over axis 1 of ``x`` (batch x steps x features) from a zero state."""
    code = cell_code(kind)
    impl = kernels.impl()
    xd = np.ascontiguousarray(x.data)
    wi, wh = np.ascontiguousarray(w_ih.data), np.ascontiguousarray(w_hh.data)
    h_all, gates, aux = impl.rnn_forward(code, xd, wi, wh, np.ascontiguousarray(b_ih.data),
                                         np.ascontiguousarray(b_hh.data), reverse)

    def back(g):
        return impl.rnn_backward(code, np.ascontiguousarray(g), xd, wi, wh, h_all, gates, aux, reverse)

    return make("rnn", h_all, (x, w_ih, w_hh, b_ih, b_hh), back)


class RecurrentUnit(Module):
    """A uni- or bidirectional recurrent layer; directions are summed."""

    def __init__(self, cell: str, bidirectional: bool, input_size: int, hidden: int,
                 rng: np.random.Generator):
        super().__init__()
        code = cell_code(cell)
        self.cell = cell.lower()
        self.bidirectional = bidirectional
        self.input_size = input_size
        self.hidden = hidden
        gates = kernels.GATES[code]
        bound = 1.0 / math.sqrt(hidden)
        for prefix in ("fwd", "bwd") if bidirectional else ("fwd",):
            self.add_param(f"{prefix}_W_ih", uniform_init(rng, (gates, input_size, hidden), bound))
            self.add_param(f"{prefix}_W_hh", uniform_init(rng, (gates, hidden, hidden), bound))
            self.add_param(f"{prefix}_b_ih", uniform_init(rng, (gates, hidden), bound))
            self.add_param(f"{prefix}_b_hh", uniform_init(rng, (gates, hidden), bound))

    def direction_params(self, prefix: str):
        return tuple(self._params[f"{prefix}_{n}"] for n in ("W_ih", "W_hh", "b_ih", "b_hh"))

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeError(f"recurrent unit expects batch x steps x {self.input_size}, got {x.shape}")
        out = rnn_sequence(self.cell, x, *self.direction_params("fwd"))
        if self.bidirectional:
            out = add(out, rnn_sequence(self.cell, x, *self.direction_params("bwd"), reverse=True))
        return out


def decode_time_axis(y_enc, unit: RecurrentUnit, dropout_p: float = 0.0, training: bool = False,
                     rng: RngStream | None = None) -> Tensor:
    """Map ``s x w x v`` to ``s x z x v``, stepping through variables with w-sized slices."""
    y_enc = as_tensor(y_enc)
    if y_enc.ndim != 3 or y_enc.shape[1] != unit.input_size:
        raise ShapeError(f"time-axis decoder expects s x {unit.input_size} x v, got {y_enc.shape}")
    hidden = unit.forward(transpose(y_enc, (0, 2, 1)))
    return transpose(dropout(hidden, dropout_p, training, rng), (0, 2, 1))


def decode_variable_axis(y_part, unit: RecurrentUnit, dropout_p: float = 0.0, training: bool = False,
                         rng: RngStream | None = None) -> Tensor:
    """Second pass over the variables with z-sized slices, added back onto its input."""
    y_part = as_tensor(y_part)
    if y_part.ndim != 3 or y_part.shape[1] != unit.input_size or unit.hidden != unit.input_size:
        raise ShapeError(f"variable-axis decoder expects s x {unit.input_size} x v, got {y_part.shape}")
    hidden = unit.forward(transpose(y_part, (0, 2, 1)))
    return add(y_part, transpose(dropout(hidden, dropout_p, training, rng), (0, 2, 1)))
