import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regenn.errors import ConfigError, NumericError
from regenn.model import snapshot_bytes
from regenn.numerics import RngStream, ShapeError, Tape, Tensor
from regenn.pipeline import SeriesTensor, SplitPlan
from regenn.synthetic import sinusoids
from regenn.training import (
    AdamState,
    InvalidScheduleError,
    PlateauScheduler,
    TrainConfig,
    adam_step,
    clip_gradients,
    global_norm,
    mae_loss,
    mask_count,
    perturb_weights,
    train,
    transfer_train,
    validation_mae,
)
from regenn.workflow import make_model, prepare

from conftest import tiny_batch, tiny_model

PLAN = SplitPlan(4, 2, 2)


def small_data(seed=3, s=3, t=16, v=2):
    series = sinusoids(s=s, t=t, v=v, seed=seed)
    return prepare(series, PLAN)


def quick(**kw):
    base = dict(max_epochs=3, seed=5)
    base.update(kw)
    return TrainConfig(**base)


class TestLoss:
    def test_examples(self):
        assert mae_loss(np.ones(3), np.ones(3)).item() == 0.0
        assert mae_loss(np.array([1.0, 2.0]), np.array([2.0, 4.0])).item() == 1.5

    @given(st.integers(0, 10_000), st.floats(0.01, 100))
    def test_homogeneity(self, seed, c):
        r = np.random.default_rng(seed)
        a, b = r.normal(size=5), r.normal(size=5)
        assert math.isclose(mae_loss(c * a, c * b).item(), c * mae_loss(a, b).item(), rel_tol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mae_loss(np.ones(2), np.ones(3))

    def test_subgradient_zero_at_ties(self):
        p = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        with Tape() as tape:
            loss = mae_loss(p, np.array([1.0, 0.0]))
        np.testing.assert_array_equal(tape.backward(loss)[p], [0.0, 0.5])


class TestAdam:
    def test_zero_gradient(self):
        p = Tensor(np.array([1.0, -2.0]))
        state = AdamState.for_params([p])
        adam_step([p], [np.zeros(2)], state, 0.1)
        np.testing.assert_array_equal(p.data, [1.0, -2.0])
        assert state.step == 1

    def test_first_step(self):
        p = Tensor(np.array([1.0]))
        adam_step([p], [np.array([0.5])], AdamState.for_params([p]), 0.001)
        assert math.isclose(p.data[0], 0.999, rel_tol=1e-9)

    def test_equal_gradients_equal_updates(self):
        a, b = Tensor(np.array([0.3])), Tensor(np.array([0.3]))
        state = AdamState.for_params([a, b])
        for g in (0.2, -1.0, 3.0):
            adam_step([a, b], [np.array([g]), np.array([g])], state, 0.01)
        assert a.data[0] == b.data[0]


class TestClipping:
    def test_halves(self):
        grads = [np.array([12.0, 0.0]), np.array([16.0])]
        out = clip_gradients(grads, 10.0)
        np.testing.assert_allclose(out[0], [6.0, 0.0])
        np.testing.assert_allclose(out[1], [8.0])

    def test_below_and_disabled(self):
        grads = [np.array([3.0, 4.0])]
        assert clip_gradients(grads, 10.0)[0] is grads[0]
        big = [np.array([300.0, 400.0])]
        assert clip_gradients(big, 0.0)[0] is big[0]
        with pytest.raises(ValueError):
            clip_gradients(grads, -1.0)

    @given(st.integers(0, 10_000), st.floats(0.01, 20))
    def test_norm_and_direction(self, seed, max_norm):
        r = np.random.default_rng(seed)
        grads = [r.normal(size=(2, 3)) * 5, r.normal(size=4) * 5]
        out = clip_gradients(grads, max_norm)
        assert global_norm(out) <= global_norm(grads) * (1 + 1e-12)
        assert global_norm(out) <= max(max_norm, global_norm(grads)) * (1 + 1e-12)
        flat_a = np.concatenate([g.ravel() for g in grads])
        flat_b = np.concatenate([g.ravel() for g in out])
        cos = flat_a @ flat_b / (np.linalg.norm(flat_a) * np.linalg.norm(flat_b))
        assert math.isclose(cos, 1.0, rel_tol=1e-12)


class TestScheduler:
    def test_improving(self):
        sched = PlateauScheduler(1.0, 0.95, 2, 0.1)
        for k in range(20):
            sched.step(0.5 ** k)
        assert sched.lr == 1.0

    def test_one_plateau(self):
        sched = PlateauScheduler(1.0, 0.95, 3, 0.1)
        for _ in range(4):
            sched.step(1.0)
        assert sched.lr == 0.95
        assert sched.history == [1.0, 1.0, 1.0, 0.95]

    def test_two_plateaus(self):
        sched = PlateauScheduler(1.0, 0.95, 3, 0.1)
        for _ in range(7):
            sched.step(1.0)
        assert math.isclose(sched.lr, 0.95 ** 2)

    def test_small_gain_is_not_improvement(self):
        sched = PlateauScheduler(1.0, 0.5, 1, 0.1)
        sched.step(1.0)
        sched.step(0.95)
        assert sched.lr == 0.5

    @pytest.mark.parametrize("kw", [dict(factor=1.0), dict(factor=0.0), dict(patience=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PlateauScheduler(1.0, **kw)


def test_descent_sanity():
    for seed in range(20):
        model = tiny_model(seed=seed, dropout_p=0.0)
        model.train()
        y, target = tiny_batch(seed)
        params = model.parameters()
        with Tape() as tape:
            before = mae_loss(model.forward(y).output, target)
        grads = tape.backward(before, accumulate=False)
        adam_step(params, [grads.get(p, np.zeros(p.shape)) for p in params], AdamState.for_params(params), 1e-4)
        after = mae_loss(model.forward(y).output, target).item()
        assert after <= before.item(), seed


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(scheduler_factor=1.0), dict(scheduler_patience=0),
                                    dict(early_stop_patience=0), dict(dropout_p=1.0), dict(norm_scope="x"),
                                    dict(shards=0), dict(batch_size=-1), dict(clip_norm=-1)])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            TrainConfig(**kw).validate()

    def test_default_hyperparameters(self):
        c = TrainConfig()
        assert (c.learning_rate, c.clip_norm, c.dropout_p, c.scheduler_factor, c.scheduler_patience,
                c.scheduler_threshold) == (1e-3, 10.0, 0.1, 0.95, 25, 0.1)


class TestTrain:
    def test_zero_epochs(self):
        data = small_data()
        model = make_model(data, seed=2)
        before = snapshot_bytes(model)
        model, report = train(model, data.values, PLAN, quick(max_epochs=0))
        assert snapshot_bytes(model) == before
        assert report.train_loss == [] and report.val_mae == [] and report.epochs_run == 0

    def test_history(self):
        data = small_data()
        _, report = train(make_model(data), data.values, PLAN, quick())
        assert len(report.train_loss) == len(report.val_mae) == len(report.learning_rate) == 3
        assert report.best_val_mae == min(report.val_mae)
        assert report.val_mae[report.best_epoch - 1] == report.best_val_mae

    def test_bit_identical_reruns(self):
        data = small_data()
        runs = [train(make_model(data, seed=1), data.values, PLAN, quick(batch_size=2)) for _ in range(2)]
        assert snapshot_bytes(runs[0][0]) == snapshot_bytes(runs[1][0])
        assert runs[0][1].to_json() == runs[1][1].to_json()

    def test_workers_never_change_results(self):
        data = small_data(s=4)
        out = [train(make_model(data, seed=1), data.values, PLAN, quick(shards=3, workers=w)) for w in (1, 3)]
        assert snapshot_bytes(out[0][0]) == snapshot_bytes(out[1][0])
        assert out[0][1].to_json() == out[1][1].to_json()

    def test_restores_best_epoch(self):
        data = small_data()
        model, report = train(make_model(data), data.values, PLAN,
                              quick(max_epochs=12, learning_rate=0.05, early_stop_patience=3))
        assert validation_mae(model, data.values, PLAN) == report.best_val_mae
        if report.stopped_early:
            assert report.epochs_run - report.best_epoch == 3

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_aborts(self):
        data = small_data()
        values = data.values.copy()
        values[0, 0, 0] = np.inf
        with pytest.raises(NumericError, match="epoch 1"):
            train(make_model(data), values, PLAN, quick())


class TestTransfer:
    def test_mask_count(self):
        assert [mask_count(n) for n in (1, 2, 3, 5, 7, 10)] == [0, 0, 1, 1, 1, 2]

    def test_slices(self):
        series = sinusoids(s=3, t=24, v=2, seed=1)
        slices = transfer_train(series, [14, 19, 24], PLAN, quick(max_epochs=2))
        assert [s.end for s in slices] == [14, 19, 24]
        assert slices[0].zeroed == {}
        for k in (1, 2):
            assert slices[k].zeroed == {n: mask_count(p.size) for n, p in slices[k].model.named_parameters()}
            assert slices[k].data.values.shape[1] == slices[k].end

    def test_perturbation_is_exact(self):
        series = sinusoids(s=3, t=24, v=2, seed=1)
        slices = transfer_train(series, [14, 24], PLAN, quick(max_epochs=2))
        prev, start = slices[0].model.state_dict(), slices[1].start_state
        for name, value in start.items():
            assert not (prev[name] == 0).any()
            assert np.count_nonzero(value == 0) == mask_count(value.size)
            kept = value != 0
            np.testing.assert_array_equal(value[kept], prev[name][kept])
        assert slices[0].start_state.keys() == start.keys()

    def test_perturb_weights_counts(self):
        model = tiny_model()
        for p in model.parameters():
            p.data = np.ones(p.shape)
        zeroed = perturb_weights(model, RngStream(3))
        for name, value in model.state_dict().items():
            assert np.count_nonzero(value == 0) == zeroed[name] == mask_count(value.size)
            assert set(np.unique(value)) <= {0.0, 1.0}
        again = tiny_model()
        for p in again.parameters():
            p.data = np.ones(p.shape)
        perturb_weights(again, RngStream(3))
        assert snapshot_bytes(again) == snapshot_bytes(model)

    def test_single_slice_matches_plain_training(self):
        series = sinusoids(s=3, t=20, v=2, seed=4)
        config = quick()
        (only,) = transfer_train(series, [20], PLAN, config)
        data = prepare(series, PLAN)
        model, report = train(make_model(data, seed=config.seed, dropout_p=config.dropout_p), data.values, PLAN, config)
        assert snapshot_bytes(only.model) == snapshot_bytes(model)
        assert only.report.to_json() == report.to_json()

    @pytest.mark.parametrize("ends", [[], [20, 14], [14, 14], [14, 30], [6, 20]])
    def test_invalid_schedule(self, ends):
        with pytest.raises(InvalidScheduleError):
            transfer_train(sinusoids(s=2, t=24, v=2), ends, PLAN, quick())
