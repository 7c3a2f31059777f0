import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qexpress.circuits import paper_circuit_2q, paper_circuit_3q
from qexpress.fourier import extract_spectrum_dft
from qexpress.learn import (
    TrainConfig,
    TrainingError,
    gradient,
    grid_shape,
    make_grid_dataset,
    map_difference,
    mse_and_grad,
    predict,
    prediction_jacobian,
    train_student,
    ts_experiment,
)

CIRCUITS = [paper_circuit_2q(1), paper_circuit_2q(2), paper_circuit_3q(1), paper_circuit_3q(2)]


def smoothed(losses, window=10):
    return np.convolve(losses, np.ones(window) / window, mode="valid")


class TestDataset:
    def test_four_points_are_corners(self):
        xs = make_grid_dataset(4)
        assert {tuple(x) for x in xs} == {(a, b) for a in (-np.pi, np.pi) for b in (-np.pi, np.pi)}

    def test_default_shape(self):
        assert grid_shape(500) == (25, 20)
        xs = make_grid_dataset(500)
        assert xs.shape == (500, 2) and np.all(np.abs(xs) <= np.pi)
        assert len({tuple(x) for x in xs}) == 500

    @pytest.mark.parametrize("p", [0, 3, 7, 13])
    def test_bad_sizes(self, p):
        with pytest.raises(ValueError):
            make_grid_dataset(p)


class TestPredict:
    def test_zero_angles(self):
        assert predict(paper_circuit_2q(1), np.zeros(6), [0, 0]) == pytest.approx(1.0)

    def test_matches_fourier_reconstruction(self, rng):
        t = paper_circuit_3q(2)
        p = rng.uniform(0, 2 * np.pi, t.n_params)
        spectrum = extract_spectrum_dft(t, p)
        assert predict(t, p, [np.pi, np.pi]) == pytest.approx(spectrum.evaluate([np.pi, np.pi]).real, abs=1e-12)

    @pytest.mark.parametrize("t", CIRCUITS)
    def test_bounded(self, t, rng):
        ys = t.predict_batch(rng.uniform(0, 2 * np.pi, t.n_params), rng.uniform(-np.pi, np.pi, (200, 2)))
        assert np.all(np.abs(ys) <= 1 + 1e-12)


class TestGradient:
    def test_zero_at_target(self, rng):
        t = paper_circuit_2q(1)
        p = rng.uniform(0, 2 * np.pi, 6)
        x = [0.3, -1.2]
        assert np.allclose(gradient(t, p, x, predict(t, p, x)), 0)

    @pytest.mark.parametrize("t", CIRCUITS)
    def test_matches_finite_differences(self, t):
        rng = np.random.default_rng(21)
        h = 1e-5
        for _ in range(20):
            p = rng.uniform(0, 2 * np.pi, t.n_params)
            x = rng.uniform(-np.pi, np.pi, 2)
            y_target = rng.uniform(-1, 1)
            loss = lambda q: (predict(t, q, x) - y_target) ** 2  # noqa: E731
            fd = np.array([(loss(p + h * e) - loss(p - h * e)) / (2 * h) for e in np.eye(t.n_params)])
            assert np.max(np.abs(gradient(t, p, x, y_target) - fd)) < 1e-6

    def test_single_angle_derivative(self):
        # zero angles except theta of the target-qubit Rot: f = cos(theta) at x = 0
        t = paper_circuit_2q(1)
        theta = 0.7
        p = np.zeros(6)
        p[4] = theta
        y, jac = prediction_jacobian(t, p, [[0.0, 0.0]])
        assert y[0] == pytest.approx(np.cos(theta))
        assert jac[0, 4] == pytest.approx(-np.sin(theta))

    def test_batch_gradient_is_mean(self, rng):
        t = paper_circuit_3q(1)
        p = rng.uniform(0, 2 * np.pi, 6)
        xs = rng.uniform(-np.pi, np.pi, (5, 2))
        ys = rng.uniform(-1, 1, 5)
        _, g = mse_and_grad(t, p, xs, ys)
        np.testing.assert_allclose(g, np.mean([gradient(t, p, x, y) for x, y in zip(xs, ys)], axis=0), atol=1e-13)


class TestTrain:
    def test_self_labels(self, rng):
        t = paper_circuit_2q(2)
        xs = make_grid_dataset(100)
        p0 = rng.uniform(0, 2 * np.pi, t.n_params)
        _, losses = train_student(t, xs, t.predict_batch(p0, xs), init_params=p0)
        assert losses[-1] < 1e-6

    def test_zero_learning_rate(self, rng):
        t = paper_circuit_3q(1)
        xs = make_grid_dataset(36)
        p0 = rng.uniform(0, 2 * np.pi, 6)
        p, losses = train_student(t, xs, rng.uniform(-1, 1, 36), TrainConfig(learning_rate=0, max_epochs=20), p0)
        np.testing.assert_array_equal(p, p0)
        assert max(losses) == min(losses)

    def test_constant_labels(self):
        # 2q outputs are products g1 g2 which can vanish identically (theta = pi/2 with phi = 0)
        t = paper_circuit_2q(1)
        xs = make_grid_dataset(100)
        _, losses = train_student(t, xs, np.zeros(100), TrainConfig(max_epochs=300))
        assert losses[-1] < 1e-4
        assert losses[-1] < 0.05 * losses[0]

    def test_constant_labels_3q_floor(self):
        # c00 = 1/2 for every 3q model, so zero labels leave a floor near 1/4
        xs = make_grid_dataset(500)
        _, losses = train_student(paper_circuit_3q(1), xs, np.zeros(500))
        assert 0.24 < losses[-1] < 0.31

    @pytest.mark.xfail(strict=True, reason="Adam at lr 0.1 still produces small loss increases after epoch 10")
    def test_constant_labels_monotone_after_warmup(self):
        xs = make_grid_dataset(500)
        for t in (paper_circuit_2q(1), paper_circuit_3q(1)):
            for seed in range(5):
                _, losses = train_student(t, xs, np.zeros(500), TrainConfig(init_seed=seed))
                assert np.all(np.diff(losses[10:]) <= 0)

    def test_nan_labels_raise(self):
        xs = make_grid_dataset(16)
        ys = np.full(16, np.nan)
        with pytest.raises(TrainingError) as err:
            train_student(paper_circuit_2q(1), xs, ys)
        assert err.value.epoch == 1

    def test_sgd_reduces_loss(self, rng):
        t = paper_circuit_2q(1)
        xs = make_grid_dataset(64)
        ys = t.predict_batch(rng.uniform(0, 2 * np.pi, 6), xs)
        _, losses = train_student(t, xs, ys, TrainConfig(optimizer="sgd", max_epochs=50))
        assert losses[-1] < losses[0]

    @pytest.mark.parametrize("kwargs", [{"learning_rate": -1}, {"max_epochs": 0}, {"optimizer": "lbfgs"}])
    def test_bad_config(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    @pytest.mark.xfail(strict=True, reason="Adam at lr 0.1 overshoots; smoothed loss bumps by up to ~2e-3 early on")
    def test_smoothed_loss_non_increasing(self):
        xs = make_grid_dataset(500)
        teacher, student = paper_circuit_2q(1), paper_circuit_3q(2)
        for seed in range(10):
            theta_t = np.random.default_rng(seed).uniform(0, 2 * np.pi, teacher.n_params)
            _, losses = train_student(student, xs, teacher.predict_batch(theta_t, xs), TrainConfig(init_seed=seed))
            assert np.all(np.diff(smoothed(losses)) <= 1e-12)

    def test_smoothed_loss_net_decrease(self):
        xs = make_grid_dataset(500)
        teacher, student = paper_circuit_2q(1), paper_circuit_3q(2)
        for seed in range(10):
            theta_t = np.random.default_rng(seed).uniform(0, 2 * np.pi, teacher.n_params)
            _, losses = train_student(student, xs, teacher.predict_batch(theta_t, xs), TrainConfig(init_seed=seed))
            s = smoothed(losses)
            assert s[-1] <= s[0]
            assert losses[-1] <= losses[0]


labels = arrays(np.float64, 12, elements=st.floats(-1, 1))


class TestMapDifference:
    def test_identical(self, rng):
        y = rng.uniform(-1, 1, 30)
        assert map_difference(y, y) == 0

    def test_extremes(self):
        assert map_difference(np.ones(10), -np.ones(10)) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            map_difference([0, 1], [0])

    @settings(max_examples=200, deadline=None)
    @given(labels, labels, labels)
    def test_metric(self, a, b, c):
        assert map_difference(a, b) >= 0
        assert map_difference(a, b) == pytest.approx(map_difference(b, a))
        assert map_difference(a, c) <= map_difference(a, b) + map_difference(b, c) + 1e-12

    def test_untrained_pairs(self):
        xs = make_grid_dataset(500)
        t2, t3 = paper_circuit_2q(1), paper_circuit_3q(1)
        rng = np.random.default_rng(17)
        grid_vals, mc_vals = [], []
        for _ in range(100):
            p2, p3 = rng.uniform(0, 2 * np.pi, 6), rng.uniform(0, 2 * np.pi, 6)
            grid_vals.append(map_difference(t2.predict_batch(p2, xs), t3.predict_batch(p3, xs)))
            xr = rng.uniform(-np.pi, np.pi, (2000, 2))
            mc_vals.append(map_difference(t2.predict_batch(p2, xr), t3.predict_batch(p3, xr)))
        assert 0.23 <= np.mean(grid_vals) <= 0.37
        assert abs(np.mean(grid_vals) - np.mean(mc_vals)) < 0.02


class TestTeacherStudent:
    def test_shared_init_is_exact(self):
        t = paper_circuit_3q(1)
        res = ts_experiment(t, t, n_replicates=3, dataset_size=64, share_init=True,
                            cfg=TrainConfig(learning_rate=0, max_epochs=1))
        assert res.mean_delta_y == 0 and res.n_failed == 0

    def test_shared_init_needs_matching_params(self):
        with pytest.raises(ValueError):
            ts_experiment(paper_circuit_2q(1), paper_circuit_2q(2), share_init=True)

    def test_deterministic(self):
        kw = dict(n_replicates=3, dataset_size=36, cfg=TrainConfig(max_epochs=15), seed=4)
        a = ts_experiment(paper_circuit_2q(1), paper_circuit_3q(1), **kw)
        b = ts_experiment(paper_circuit_2q(1), paper_circuit_3q(1), workers=3, **kw)
        assert a.to_dict() == b.to_dict()
        assert a.maps_csv() == b.maps_csv()

    def test_maps_csv(self):
        res = ts_experiment(paper_circuit_2q(1), paper_circuit_3q(1), n_replicates=1, dataset_size=36,
                            cfg=TrainConfig(max_epochs=3))
        lines = res.maps_csv().splitlines()
        assert lines[0] == "x1,x2,y_teacher,y_student" and len(lines) == 37

    def test_failures_recorded(self, monkeypatch):
        import qexpress.learn as learn

        def boom(*a, **k):
            raise TrainingError(5)

        monkeypatch.setattr(learn, "train_student", boom)
        res = ts_experiment(paper_circuit_2q(1), paper_circuit_3q(1), n_replicates=2, dataset_size=16)
        assert res.n_failed == 2 and np.isnan(res.mean_delta_y)
        assert res.records[0].epochs == 5 and res.maps is None

    def test_bad_replicates(self):
        with pytest.raises(ValueError):
            ts_experiment(paper_circuit_2q(1), paper_circuit_2q(1), n_replicates=0)
