import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regenn.model import (
    ABLATION_CELLS,
    ABLATION_TAGS,
    Autoregression,
    CellState,
    Dims,
    Encoder,
    RecurrentUnit,
    TagParseError,
    UnknownCellError,
    autoregression,
    build_variant,
    decode_time_axis,
    decode_variable_axis,
    encoder_forward,
    format_tag,
    load_snapshot,
    parse_tag,
    recurrent_cell_step,
    regenn_forward,
    save_snapshot,
    self_attention,
    snapshot_bytes,
)
from regenn.model.snapshot import SnapshotError
from regenn.numerics import RngStream, Tensor, finite_difference_check
from regenn.training import mae_loss

from conftest import TINY, tiny_batch, tiny_model


def scalar_encoder(y, enc):
    """Encoder evaluated one scalar at a time, for a single sample (w x v)."""
    w, v = y.shape
    rows = [[y[i][j] for i in range(w)] for j in range(v)]

    def norm(vec, gamma, beta):
        mu = sum(vec) / len(vec)
        var = sum((x - mu) ** 2 for x in vec) / len(vec)
        return [(x - mu) / math.sqrt(var + 1e-5) * g + b for x, g, b in zip(vec, gamma, beta)]

    att = []
    for a in range(v):
        scores = [sum(rows[a][k] * rows[b][k] for k in range(w)) / math.sqrt(w) for b in range(v)]
        top = max(scores)
        e = [math.exp(s - top) for s in scores]
        wts = [x / sum(e) for x in e]
        att.append([sum(wts[b] * rows[b][k] for b in range(v)) for k in range(w)])
    p = {n: enc.state_dict()[n] for n in ("W_iota", "b_iota", "W_eps", "b_eps", "gamma1", "beta1", "gamma2", "beta2")}
    out = []
    for a in range(v):
        h = norm([rows[a][k] + att[a][k] for k in range(w)], p["gamma1"], p["beta1"])
        inner = [max(0.0, sum(h[k] * p["W_iota"][k][m] for k in range(w)) + p["b_iota"][m])
                 for m in range(len(p["b_iota"]))]
        ff = [sum(inner[m] * p["W_eps"][m][k] for m in range(len(inner))) + p["b_eps"][k] for k in range(w)]
        out.append(norm([h[k] + ff[k] for k in range(w)], p["gamma2"], p["beta2"]))
    return np.array(out).T


class TestEncoder:
    def test_single_variable_attention_is_identity(self):
        x = Tensor(np.random.default_rng(0).normal(size=(2, 1, 4)))
        np.testing.assert_allclose(self_attention(x).data, x.data, rtol=1e-15)

    def test_identical_rows(self):
        row = np.array([0.3, -1.2, 2.0])
        out = self_attention(Tensor(np.stack([row, row])[None])).data
        np.testing.assert_allclose(out[0], [row, row], rtol=1e-15)

    def test_matches_scalar_oracle(self):
        enc = Encoder(2, 3, 0.0, np.random.default_rng(4))
        for name, value in enc.state_dict().items():
            if name.startswith(("gamma", "beta")):
                enc._params[name].data = np.random.default_rng(len(name)).normal(size=value.shape)
        y = np.array([[[1.0, 0.0], [0.0, 1.0]]])
        out = encoder_forward(y, enc).data
        np.testing.assert_allclose(out[0], scalar_encoder(y[0], enc), rtol=1e-12, atol=1e-12)
        y = np.random.default_rng(9).normal(size=(1, 2, 3))
        np.testing.assert_allclose(encoder_forward(y, enc).data[0], scalar_encoder(y[0], enc), rtol=1e-12, atol=1e-12)

    def test_has_no_projection_weights(self):
        enc = Encoder(4, 4, 0.1, np.random.default_rng(0))
        assert set(enc.state_dict()) == {"W_iota", "b_iota", "W_eps", "b_eps", "gamma1", "beta1", "gamma2", "beta2"}


class TestCells:
    def zero(self, kind, i=3, h=2):
        from regenn.kernels import GATES
        from regenn.model.recurrent import cell_code
        g = GATES[cell_code(kind)]
        return np.zeros((g, i, h)), np.zeros((g, h, h)), np.zeros((g, h)), np.zeros((g, h))

    @pytest.mark.parametrize("kind", ["lstm", "gru", "elman"])
    def test_zero_weights_give_zero_state(self, kind):
        out = recurrent_cell_step(kind, np.ones(3), CellState(np.zeros(2)), *self.zero(kind))
        np.testing.assert_array_equal(out.h, 0)
        if kind == "lstm":
            np.testing.assert_array_equal(out.c, 0)

    def test_gru_keeps_half_of_previous_state(self):
        out = recurrent_cell_step("gru", np.ones(3), CellState(np.array([1.0, -2.0])), *self.zero("gru"))
        np.testing.assert_allclose(out.h, [0.5, -1.0])

    def test_unknown_kind(self):
        with pytest.raises(UnknownCellError):
            recurrent_cell_step("transformer", np.ones(3), CellState(np.zeros(2)), *self.zero("elman"))


def zeroed(unit):
    for p in unit.parameters():
        p.data[...] = 0.0
    return unit


class TestDecoders:
    def test_time_axis_shape(self, backend):
        unit = RecurrentUnit("lstm", False, 3, 5, np.random.default_rng(0))
        assert decode_time_axis(np.ones((2, 3, 4)), unit).shape == (2, 5, 4)

    @pytest.mark.parametrize("bidirectional", [False, True])
    def test_zero_parameters(self, backend, bidirectional):
        unit = zeroed(RecurrentUnit("lstm", bidirectional, 3, 5, np.random.default_rng(0)))
        assert not decode_time_axis(np.ones((2, 3, 4)), unit).data.any()
        square = zeroed(RecurrentUnit("gru", bidirectional, 5, 5, np.random.default_rng(0)))
        y = np.random.default_rng(1).normal(size=(2, 5, 4))
        np.testing.assert_array_equal(decode_variable_axis(y, square).data, y)
        assert not decode_variable_axis(np.zeros((2, 5, 4)), square).data.any()

    def test_single_variable_is_one_cell_step(self, backend):
        r = np.random.default_rng(3)
        unit = RecurrentUnit("lstm", False, 3, 2, r)
        y = r.normal(size=(2, 3, 1))
        w = [p.data for p in unit.direction_params("fwd")]
        step = recurrent_cell_step("lstm", y[:, :, 0], CellState(np.zeros((2, 2))), *w)
        np.testing.assert_allclose(decode_time_axis(y, unit).data[:, :, 0], step.h, rtol=1e-12)

    def test_bidirectional_sums_directions(self, backend):
        r = np.random.default_rng(5)
        bi = RecurrentUnit("gru", True, 3, 2, r)
        fwd = RecurrentUnit("gru", False, 3, 2, r)
        bwd = RecurrentUnit("gru", False, 3, 2, r)
        for n in ("W_ih", "W_hh", "b_ih", "b_hh"):
            fwd._params[f"fwd_{n}"].data = bi._params[f"fwd_{n}"].data
            bwd._params[f"fwd_{n}"].data = bi._params[f"bwd_{n}"].data
        y = r.normal(size=(2, 3, 4))
        flipped = decode_time_axis(y[:, :, ::-1].copy(), bwd).data[:, :, ::-1]
        np.testing.assert_allclose(decode_time_axis(y, bi).data, decode_time_axis(y, fwd).data + flipped, rtol=1e-12)


class TestAutoregression:
    def test_zero(self):
        ar = zeroed(Autoregression(3, 2, np.random.default_rng(0)))
        assert not autoregression(np.ones((2, 3, 4)), ar).data.any()

    def test_last_step_selector(self):
        ar = zeroed(Autoregression(3, 2, np.random.default_rng(0)))
        ar.W.data[2, :] = 1.0
        y = np.random.default_rng(1).normal(size=(2, 3, 4))
        out = autoregression(y, ar).data
        for j in range(2):
            np.testing.assert_array_equal(out[:, j], y[:, 2])

    def test_triple_loop_oracle(self):
        r = np.random.default_rng(2)
        ar = Autoregression(3, 2, r)
        y = r.normal(size=(2, 3, 2))
        w, b = ar.W.data, ar.b.data
        expected = np.zeros((2, 2, 2))
        for s in range(2):
            for j in range(2):
                for v in range(2):
                    expected[s, j, v] = sum(w[i, j] * y[s, i, v] for i in range(3)) + b[j]
        np.testing.assert_allclose(autoregression(y, ar).data, expected, rtol=1e-13)

    @given(st.integers(0, 999))
    def test_variable_permutation_covariance(self, seed):
        r = np.random.default_rng(seed)
        ar = Autoregression(4, 3, r)
        y = r.normal(size=(2, 4, 5))
        perm = r.permutation(5)
        np.testing.assert_array_equal(autoregression(y[:, :, perm], ar).data, autoregression(y, ar).data[:, :, perm])


class TestAssembly:
    def test_absorbing_composition(self):
        model = tiny_model()
        for p in model.ar.parameters() + model.gse_target.parameters():
            p.data[...] = 0.0
        assert not model.predict(tiny_batch()[0]).any()

    @pytest.mark.parametrize("seed", range(3))
    def test_decomposition(self, seed):
        model = tiny_model(seed=seed)
        res = regenn_forward(tiny_batch(seed)[0], None, model)
        np.testing.assert_allclose(res.output.data - res.parts["Y_lambda"].data, res.parts["Y_psi"].data,
                                   rtol=1e-12, atol=1e-15)

    def test_same_seed_is_bit_identical(self, backend):
        y = tiny_batch()[0]
        a = regenn_forward(y, None, tiny_model(seed=7), training=True, rng=RngStream(1)).output.data
        b = regenn_forward(y, None, tiny_model(seed=7), training=True, rng=RngStream(1)).output.data
        assert a.tobytes() == b.tobytes()

    def test_missing_graph(self):
        model = build_variant("regenn", TINY)
        with pytest.raises(ValueError, match="graph"):
            model.predict(tiny_batch()[0])

    @pytest.mark.parametrize("cell", ABLATION_CELLS)
    @pytest.mark.parametrize("tag", ABLATION_TAGS)
    def test_every_ablation_variant_runs(self, tag, cell):
        model = tiny_model(tag, cell)
        out = model.predict(tiny_batch()[0])
        assert out.shape == (2, 2, 2) and np.all(np.isfinite(out))
        assert not model.spec.use_gse and format_tag(model.spec) == tag


class TestTags:
    def test_examples(self):
        spec = parse_tag("BRU", "lstm")
        assert spec.ru1.bidirectional and spec.ru2 is None and not spec.use_encoder and not spec.use_ar
        spec = parse_tag("(E → URU + URU) + AR", "gru")
        assert spec.use_encoder and spec.use_ar and spec.ru1.cell == spec.ru2.cell == "gru"
        assert not spec.ru1.bidirectional and not spec.ru2.bidirectional
        assert parse_tag("(E -> URU + BRU) + AR") == parse_tag("(E → URU + BRU) + AR")
        assert parse_tag("regenn").use_gse

    @pytest.mark.parametrize("bad", ["X → RU", "E →", "(E → URU", "URU + AR + AR", "", "E → URU )"])
    def test_rejects(self, bad):
        with pytest.raises(TagParseError):
            parse_tag(bad)

    def test_error_names_token(self):
        with pytest.raises(TagParseError, match="'X'"):
            parse_tag("X → RU")

    @pytest.mark.parametrize("tag", ABLATION_TAGS + ("AR", "regenn"))
    def test_round_trip(self, tag):
        assert format_tag(parse_tag(tag)) == tag


@pytest.mark.parametrize("tag,cell", [("regenn", "lstm"), ("regenn", "gru"), ("regenn", "elman"),
                                      ("(E → BRU + BRU) + AR", "gru"), ("(E → URU + BRU) + AR", "elman"),
                                      ("BRU", "lstm")])
def test_full_model_gradcheck(backend, tag, cell):
    model = tiny_model(tag, cell, dropout_p=0.0)
    y, target = tiny_batch(3)
    assert finite_difference_check(lambda: mae_loss(model.forward(y).output, target), model.parameters()) < 1e-4


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        model = tiny_model("regenn", "gru", seed=3)
        save_snapshot(tmp_path / "m.rgn", model, epoch=4, extra={"note": "x"})
        back, manifest = load_snapshot(tmp_path / "m.rgn")
        assert manifest["epoch"] == 4 and manifest["extra"] == {"note": "x"} and manifest["cell"] == "gru"
        y = tiny_batch()[0]
        assert back.predict(y).tobytes() == model.predict(y).tobytes()
        assert snapshot_bytes(back, 4, {"note": "x"}) == snapshot_bytes(model, 4, {"note": "x"})

    def test_ar_only(self, tmp_path):
        model = build_variant("AR", Dims(4, 2, 3))
        save_snapshot(tmp_path / "ar.rgn", model)
        back, _ = load_snapshot(tmp_path / "ar.rgn")
        assert back.tag == "AR" and back.adjacency is None

    def test_corrupt(self, tmp_path):
        (tmp_path / "bad.rgn").write_bytes(b"NOTASNAPSHOT")
        with pytest.raises(SnapshotError):
            load_snapshot(tmp_path / "bad.rgn")
        raw = snapshot_bytes(tiny_model())
        (tmp_path / "short.rgn").write_bytes(raw[:-16])
        with pytest.raises(SnapshotError):
            load_snapshot(tmp_path / "short.rgn")
