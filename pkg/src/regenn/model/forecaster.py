"""Assembly of the full graph-evolution network and its ablation variants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from regenn.gse import GseSource, GseTarget
from regenn.model.autoregression import Autoregression
from regenn.model.encoder import Encoder
from regenn.model.recurrent import RecurrentUnit, decode_time_axis, decode_variable_axis
from regenn.model.variants import VariantSpec, format_tag, parse_tag
from regenn.numerics import RngStream, ShapeError, Tensor, add, as_tensor
from regenn.numerics.module import Module


@dataclass(frozen=True)
class Dims:
    window: int
    horizon: int
    n_vars: int
    d_ff: int | None = None

    @property
    def ff_width(self) -> int:
        return self.d_ff or self.window

    def to_dict(self) -> dict:
        return {"window": self.window, "horizon": self.horizon, "n_vars": self.n_vars, "d_ff": self.ff_width}


@dataclass
class ForwardResult:
    output: Tensor
    parts: dict[str, Tensor] = field(default_factory=dict)


class Forecaster(Module):
    """Encoder/decoder forecaster; the variant spec decides which blocks exist.

    Without GSE the window goes straight to the encoder (or decoder). With
    GSE the source layer feeds the encoder, the target layer rescales the
    decoded tensor using the source's live ``A_mu``, and the linear shortcut
    is added on top.
    """

    def __init__(self, spec: VariantSpec, dims: Dims, dropout_p: float = 0.1, seed: int = 0):
        super().__init__()
        self.spec = spec
        self.dims = dims
        self.dropout_p = dropout_p
        self.seed = seed
        self.adjacency: np.ndarray | None = None
        self.evolution_cache: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        w, z, v = dims.window, dims.horizon, dims.n_vars
        if spec.use_gse:
            self.gse_source = GseSource(v, dropout_p, rng)
        if spec.use_encoder:
            self.encoder = Encoder(w, dims.ff_width, dropout_p, rng)
        if spec.ru1 is not None:
            self.dec_time = RecurrentUnit(spec.ru1.cell, spec.ru1.bidirectional, w, z, rng)
        if spec.ru2 is not None:
            self.dec_var = RecurrentUnit(spec.ru2.cell, spec.ru2.bidirectional, z, z, rng)
        if spec.use_gse:
            self.gse_target = GseTarget(v, rng)
        if spec.use_ar:
            self.ar = Autoregression(w, z, rng)

    @property
    def tag(self) -> str:
        return format_tag(self.spec)

    @property
    def cell(self) -> str | None:
        return self.spec.ru1.cell if self.spec.ru1 is not None else None

    def set_graph(self, adjacency) -> None:
        adjacency = np.asarray(adjacency, dtype=np.float64)
        v = self.dims.n_vars
        if adjacency.shape != (v, v):
            raise ShapeError(f"graph must be {v}x{v}, got {adjacency.shape}")
        self.adjacency = adjacency

    def forward(self, y, adjacency=None, rng: RngStream | None = None) -> ForwardResult:
        y = as_tensor(y)
        d = self.dims
        if y.ndim != 3 or y.shape[1:] != (d.window, d.n_vars):
            raise ShapeError(f"model expects s x {d.window} x {d.n_vars} windows, got {y.shape}")
        parts: dict[str, Tensor] = {}
        training, p = self.training, self.dropout_p
        out = None
        if self.spec.ru1 is not None:
            h = y
            if self.spec.use_gse:
                a = adjacency if adjacency is not None else self.adjacency
                if a is None:
                    raise ValueError("graph-evolution model needs a co-occurrence graph; call set_graph")
                a = as_tensor(a)
                h, a_mu, _ = self.gse_source.forward(a, h, rng)
                parts["Y_alpha"], parts["A_mu"] = h, a_mu
            if self.spec.use_encoder:
                h = self.encoder.forward(h, rng)
                parts["Y_eps"] = h
            h = decode_time_axis(h, self.dec_time, p, training, rng)
            parts["Y_eps_tilde"] = h
            if self.spec.ru2 is not None:
                h = decode_variable_axis(h, self.dec_var, p, training, rng)
                parts["Y_tilde"] = h
            if self.spec.use_gse:
                h, a_phi, a_psi = self.gse_target.forward(parts["A_mu"], h)
                parts["A_phi"], parts["A_psi"] = a_phi, a_psi
                self.evolution_cache = {"A_input": a.data.copy(), "A_mu": parts["A_mu"].data.copy(),
                                        "A_phi": a_phi.data.copy(), "A_psi": a_psi.data.copy()}
            parts["Y_psi"] = h
            out = h
        if self.spec.use_ar:
            y_lambda = self.ar.forward(y)
            parts["Y_lambda"] = y_lambda
            out = y_lambda if out is None else add(y_lambda, out)
        return ForwardResult(out, parts)

    def predict(self, y, rng: RngStream | None = None) -> np.ndarray:
        was = self.training
        self.eval()
        try:
            return self.forward(y, rng=rng).output.data
        finally:
            self.train(was)


def regenn_forward(y, adjacency, model: Forecaster, training: bool = False,
                   rng: RngStream | None = None) -> ForwardResult:
    was = model.training
    model.train(training)
    try:
        return model.forward(y, adjacency, rng)
    finally:
        model.train(was)


def build_variant(tag: str, dims: Dims, seed: int = 0, cell: str = "lstm",
                  dropout_p: float = 0.1) -> Forecaster:
    return Forecaster(parse_tag(tag, cell), dims, dropout_p, seed)
