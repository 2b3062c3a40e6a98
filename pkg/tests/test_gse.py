import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regenn.gse import (
    GseSource,
    GseTarget,
    ModelNeverRunError,
    extract_evolution_weights,
    gse_source_forward,
    gse_target_forward,
)
from regenn.numerics import RngStream, ShapeError, Tape, finite_difference_check
from regenn.training import mae_loss

from conftest import TINY_GRAPH, tiny_model


def identity_source(v, p=0.0):
    layer = GseSource(v, p, np.random.default_rng(0))
    layer.W_mu.data, layer.b_mu.data = np.eye(v), np.zeros(v)
    layer.W_eta.data, layer.b_eta.data = np.ones((v, v)), np.zeros(v)
    layer.W_alpha.data, layer.b_alpha.data = np.eye(v), np.zeros(v)
    return layer


def identity_target(v):
    layer = GseTarget(v, np.random.default_rng(0))
    layer.W_mu.data, layer.b_mu.data = np.eye(v), np.zeros(v)
    layer.W_eta.data, layer.b_eta.data = np.ones((v, v)), np.zeros(v)
    return layer


class TestSource:
    def test_identity_chain(self):
        y = np.random.default_rng(1).normal(size=(2, 3, 2))
        y_alpha, a_mu, _ = gse_source_forward(np.eye(2), y, identity_source(2))
        np.testing.assert_array_equal(a_mu.data, np.eye(2))
        np.testing.assert_allclose(y_alpha.data, y, rtol=1e-15)

    def test_worked_example(self):
        layer = identity_source(2)
        _, _, a_eta = gse_source_forward(TINY_GRAPH, np.eye(2)[None], layer)
        np.testing.assert_allclose(a_eta.data, [[1, 60 / 109], [60 / 109, 1]], rtol=1e-14)

    def test_zero_projection_absorbs(self):
        layer = identity_source(2)
        layer.W_alpha.data[:] = 0
        y_alpha, _, _ = gse_source_forward(TINY_GRAPH, np.random.default_rng(2).normal(size=(3, 4, 2)), layer)
        assert not y_alpha.data.any()

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            gse_source_forward(np.eye(3), np.zeros((1, 2, 2)), identity_source(2))
        with pytest.raises(ShapeError):
            gse_source_forward(np.eye(2), np.zeros((1, 2, 3)), identity_source(2))

    def test_dropout_only_in_training(self):
        layer = identity_source(2, p=0.5)
        y = np.ones((4, 5, 2))
        eval_out, _, _ = gse_source_forward(np.eye(2), y, layer, training=False, rng=RngStream(0))
        train_out, _, _ = gse_source_forward(np.eye(2), y, layer, training=True, rng=RngStream(0))
        np.testing.assert_allclose(eval_out.data, y)
        assert (train_out.data == 0).any()


class TestTarget:
    def test_identity_scaling(self):
        layer = identity_target(2)
        y = np.random.default_rng(3).normal(size=(2, 4, 2))
        out, _, a_psi = gse_target_forward(np.eye(2), y, layer)
        np.testing.assert_array_equal(a_psi.data, np.eye(2))
        np.testing.assert_allclose(out.data, y)

    def test_zero_similarity_weights(self):
        layer = identity_target(2)
        layer.W_eta.data[:] = 0
        out, _, _ = gse_target_forward(TINY_GRAPH, np.ones((1, 2, 2)), layer)
        assert not out.data.any()

    def test_worked_example(self):
        out, a_phi, _ = gse_target_forward(TINY_GRAPH, np.array([[[1.0, 0.0]]]), identity_target(2))
        np.testing.assert_array_equal(a_phi.data, TINY_GRAPH)
        np.testing.assert_allclose(out.data, [[[1, 60 / 109]]], rtol=1e-14)


@given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 999))
@settings(max_examples=30, deadline=None)
def test_shapes_preserved(s, w, z, v, seed):
    r = np.random.default_rng(seed)
    src, tgt = GseSource(v, 0.1, r), GseTarget(v, r)
    y_alpha, a_mu, _ = gse_source_forward(r.uniform(size=(v, v)), r.normal(size=(s, w, v)), src)
    y_psi, _, _ = gse_target_forward(a_mu, r.normal(size=(s, z, v)), tgt)
    assert y_alpha.shape == (s, w, v) and y_psi.shape == (s, z, v)


def test_target_consumes_live_source_matrix():
    model = tiny_model()
    result = model.forward(np.random.default_rng(0).uniform(size=(2, 3, 2)))
    np.testing.assert_array_equal(model.evolution_cache["A_mu"], result.parts["A_mu"].data)
    model.gse_source.W_mu.data += 0.5
    model.forward(np.random.default_rng(0).uniform(size=(2, 3, 2)))
    assert not np.array_equal(model.evolution_cache["A_mu"], result.parts["A_mu"].data)


def test_gse_parameters_gradcheck():
    model = tiny_model(dropout_p=0.0)
    y, target = np.random.default_rng(5).uniform(size=(2, 3, 2)), np.random.default_rng(6).uniform(size=(2, 2, 2))
    params = model.gse_source.parameters() + model.gse_target.parameters()

    def loss():
        return mae_loss(model.forward(y).output, target)

    assert finite_difference_check(loss, params) < 1e-4
    with Tape() as tape:
        out = loss()
    grads = tape.backward(out)
    assert all(p in grads and grads[p].shape == p.shape for p in params)


class TestEvolutionWeights:
    def test_never_run(self):
        with pytest.raises(ModelNeverRunError):
            extract_evolution_weights(tiny_model())

    def test_identity_setting(self):
        model = tiny_model()
        src, tgt = model.gse_source, model.gse_target
        src.W_mu.data, src.b_mu.data = np.eye(2), np.zeros(2)
        tgt.W_mu.data, tgt.b_mu.data = np.eye(2), np.zeros(2)
        model.set_graph(np.eye(2))
        model.predict(np.zeros((1, 3, 2)))
        w = extract_evolution_weights(model)
        np.testing.assert_array_equal(w.A_input, np.eye(2))
        np.testing.assert_array_equal(w.A_phi, np.eye(2))
        np.testing.assert_array_equal(w.cos_input, np.eye(2))
        np.testing.assert_array_equal(w.cos_phi, np.eye(2))
        assert w.view_distance() == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_views_are_valid_similarities(self, seed):
        model = tiny_model(seed=seed)
        model.predict(np.random.default_rng(seed).uniform(size=(2, 3, 2)))
        w = extract_evolution_weights(model)
        for view in (w.cos_input, w.cos_phi):
            np.testing.assert_array_equal(view, view.T)
            assert np.all(np.abs(view) <= 1)
        assert set(w.matrices()) == {"A_input", "A_mu", "A_phi", "A_psi", "cos_input", "cos_phi"}
