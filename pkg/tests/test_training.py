import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reluprobe import (Dataset, DivergedError, InputError, TrainingConfig, Weights,
                       empirical_loss, evaluate, gd_train, loss, loss_derivative,
                       loss_gradient, suggest_step_size, surrogate_error)
from reluprobe.network import _forward_arrays, he_init, NetworkConfig

from oracles import fd_loss_gradient_entry, pattern_stable_entry
from conftest import sphere_points


def ramp_net(a: float) -> Weights:
    """One-hidden-layer net on d=1 with f(1.0) = relu(a)."""
    return Weights((np.array([[a, 0.0]]),), np.array([1.0, -1.0]))


def one_point_set() -> Dataset:
    return Dataset(np.array([[1.0]]), np.array([1.0]))


class TestLoss:
    def test_values_at_zero(self):
        assert loss(0.0) == pytest.approx(np.log(2.0), rel=1e-15)
        assert loss_derivative(0.0) == -0.5

    @pytest.mark.parametrize("z", [-10.0, -0.1, 0.0, 0.1, 10.0])
    def test_twice_negative_derivative_dominates_indicator(self, z):
        assert -2.0 * loss_derivative(z) >= (1.0 if z < 0 else 0.0)

    def test_extreme_argument_no_overflow(self):
        # extended-precision oracle
        import mpmath
        expected = float(mpmath.log(1 + mpmath.exp(745)))
        got = loss(-745.0)
        assert np.isfinite(got)
        assert got == pytest.approx(expected, rel=1e-15)
        assert got == pytest.approx(745.0, rel=1e-2)

    def test_derivative_range(self):
        # mathematically in (-1, 0); float64 saturates to -1 below z ~ -37
        z = np.linspace(-700, 700, 2001)
        d = loss_derivative(z)
        assert np.all(d >= -1.0) and np.all(d < 0.0)
        moderate = np.abs(z) <= 30
        assert np.all(d[moderate] > -1.0)

    def test_derivative_matches_finite_difference(self):
        z = np.linspace(-20, 20, 101)
        h = 1e-6
        fd = (loss(z + h) - loss(z - h)) / (2 * h)
        np.testing.assert_allclose(loss_derivative(z), fd, atol=1e-9)

    @given(z=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    @settings(max_examples=300, deadline=None)
    def test_indicator_domination_everywhere(self, z):
        assert -2.0 * loss_derivative(z) >= (1.0 if z < 0 else 0.0)
        assert np.isfinite(loss(z))


class TestObjectives:
    def test_zero_network_gives_log_two(self, small_data):
        w = Weights((np.zeros((small_data.dim, 4)),),
                    np.array([1.0, 1.0, -1.0, -1.0]))
        assert empirical_loss(w, small_data) == pytest.approx(np.log(2.0), rel=1e-15)
        assert surrogate_error(w, small_data) == pytest.approx(0.5, rel=1e-15)

    def test_loss_at_init_bounded_by_outputs(self, small_net, small_data):
        _, _, f = _forward_arrays(small_net, small_data.inputs)
        assert 0.0 <= empirical_loss(small_net, small_data) <= np.log(2.0) + np.max(np.abs(f))

    def test_single_point_hand_value(self):
        # y = +1, f(x) = 1 => loss = log(1 + e^{-1})
        assert empirical_loss(ramp_net(1.0), one_point_set()) == \
            pytest.approx(np.log1p(np.exp(-1.0)), rel=1e-15)

    def test_large_margin_surrogate(self):
        assert surrogate_error(ramp_net(10.0), one_point_set()) == \
            pytest.approx(1.0 / (1.0 + np.exp(10.0)), rel=1e-12)

    def test_surrogate_bounds_classification_error(self, small_net, small_data):
        err, _ = evaluate(small_net, small_data)
        assert 2.0 * surrogate_error(small_net, small_data) >= err

    def test_empty_dataset_rejected(self):
        with pytest.raises(InputError):
            Dataset(np.zeros((0, 3)), np.zeros(0))

    def test_non_unit_inputs_rejected(self):
        with pytest.raises(InputError):
            Dataset(np.array([[0.5, 0.0]]), np.array([1.0]))


class TestLossGradient:
    def test_single_sample_factorization(self, small_net, small_data):
        one = small_data.subset([0])
        grads = loss_gradient(small_net, one)
        from reluprobe import forward, network_gradient
        t = forward(small_net, one.inputs[0])
        g = network_gradient(small_net, t)
        coef = loss_derivative(one.labels[0] * t.output) * one.labels[0]
        for G, Gf in zip(grads, g.layer_grads):
            np.testing.assert_allclose(G, coef * Gf, rtol=1e-14, atol=0)

    def test_triangle_inequality_vs_surrogate(self, small_net, small_data):
        # || grad L ||_F <= E_S * max_i || grad f_i ||_F, exactly assertable
        from reluprobe import output_gradient_norms
        grads = loss_gradient(small_net, small_data)
        per_sample = output_gradient_norms(small_net, small_data)
        es = surrogate_error(small_net, small_data)
        for l, G in enumerate(grads):
            assert np.linalg.norm(G) <= es * np.max(per_sample[:, l]) + 1e-12

    def test_matches_finite_differences(self, small_net, small_data):
        h = 1e-5
        grads = loss_gradient(small_net, small_data)
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(60):
            l = int(rng.integers(small_net.depth))
            i = int(rng.integers(small_net.layers[l].shape[0]))
            j = int(rng.integers(small_net.layers[l].shape[1]))
            if not pattern_stable_entry(small_net, small_data.inputs, l, i, j, h):
                continue
            analytic = grads[l][i, j]
            if abs(analytic) < 1e-7:
                continue
            fd = fd_loss_gradient_entry(small_net, small_data, l, i, j, h)
            assert abs(fd - analytic) <= 1e-5 * abs(analytic)
            checked += 1
        assert checked >= 15

    def test_huge_margins_give_vanishing_gradient(self):
        grads = loss_gradient(ramp_net(30.0), one_point_set())
        assert all(np.linalg.norm(G) < 1e-10 for G in grads)


class TestGdTrain:
    def test_zero_step_size_keeps_weights(self, small_net, small_data):
        result = gd_train(small_net, small_data,
                          TrainingConfig(step_size=0.0, iterations=3))
        assert result.best_k == 0
        for Wa, Wb in zip(result.weights_final.layers, small_net.layers):
            assert np.array_equal(Wa, Wb)

    def test_single_iteration_trajectory(self, small_net, small_data):
        result = gd_train(small_net, small_data,
                          TrainingConfig(step_size=1e-3, iterations=1))
        assert result.trajectory.iterations == [0, 1]
        assert result.best_k == 0

    def test_surrogate_decreases_with_calibrated_step(self, small_net, small_data):
        eta = 2.0 / min(small_net.widths)
        result = gd_train(small_net, small_data,
                          TrainingConfig(step_size=eta, iterations=20))
        es = result.surrogate_per_iteration
        assert np.all(np.diff(es) < 0.0)

    def test_twice_surrogate_bounds_error_along_trajectory(self, small_net, small_data):
        result = gd_train(small_net, small_data,
                          TrainingConfig(step_size=0.05, iterations=10))
        traj = result.trajectory
        for es, err in zip(traj.surrogate_values, traj.train_errors):
            assert 2.0 * es >= err

    def test_best_iterate_is_argmin_with_smallest_index(self, small_net, small_data):
        result = gd_train(small_net, small_data,
                          TrainingConfig(step_size=0.02, iterations=15))
        es = result.surrogate_per_iteration[:15]
        assert result.best_k == int(np.argmin(es))
        assert surrogate_error(result.weights_best, small_data) == \
            pytest.approx(es[result.best_k], rel=1e-14)

    def test_divergence_detected(self, small_net, small_data):
        with pytest.raises(DivergedError) as info:
            gd_train(small_net, small_data,
                     TrainingConfig(step_size=1e9, iterations=50))
        assert info.value.last_finite_iteration >= 0

    def test_bit_identical_across_runs(self, small_net, small_data):
        cfg = TrainingConfig(step_size=0.01, iterations=8, record_every=2)
        a = gd_train(small_net, small_data, cfg)
        b = gd_train(small_net, small_data, cfg)
        assert a.trajectory.loss_values == b.trajectory.loss_values
        assert a.trajectory.distances == b.trajectory.distances
        for Wa, Wb in zip(a.weights_final.layers, b.weights_final.layers):
            assert np.array_equal(Wa, Wb)

    def test_snapshot_policy(self, small_net, small_data):
        cfg = TrainingConfig(step_size=0.01, iterations=6, record_every=3,
                             keep_snapshots=True)
        result = gd_train(small_net, small_data, cfg)
        assert set(result.snapshots) >= {0, 3, 6, result.best_k}

    def test_record_every_subsamples(self, small_net, small_data):
        cfg = TrainingConfig(step_size=0.01, iterations=7, record_every=3)
        result = gd_train(small_net, small_data, cfg)
        assert result.trajectory.iterations == [0, 3, 6, 7]


class TestEvaluate:
    def test_constant_zero_network(self, small_data):
        w = Weights((np.zeros((small_data.dim, 4)),),
                    np.array([1.0, 1.0, -1.0, -1.0]))
        err, sur = evaluate(w, small_data)
        assert err == 1.0  # ties count as errors
        assert sur == pytest.approx(0.5, rel=1e-15)

    def test_label_flip_symmetry(self, small_net, small_data):
        err, _ = evaluate(small_net, small_data)
        flipped = Dataset(small_data.inputs, -small_data.labels)
        err_flipped, _ = evaluate(small_net, flipped)
        _, _, f = _forward_arrays(small_net, small_data.inputs)
        if not np.any(f == 0.0):  # symmetry holds exactly without ties
            assert err + err_flipped == pytest.approx(1.0, abs=1e-15)

    def test_plugin_surrogate_concentrates(self):
        # two independent test draws agree within 2/sqrt(n_test)
        net = he_init(NetworkConfig(6, (32, 32), master_seed=2))
        n_test = 10_000
        rng = np.random.default_rng(17)
        surs = []
        for draw in range(2):
            X = sphere_points(n_test, 6, 100 + draw)
            y = np.where(rng.random(n_test) < 0.5, -1.0, 1.0)
            _, sur = evaluate(net, Dataset(X, y))
            surs.append(sur)
        assert abs(surs[0] - surs[1]) <= 2.0 / np.sqrt(n_test)


class TestSuggestStepSize:
    def test_shape(self):
        assert suggest_step_size(2, 512, 0.5, scale=1.0) == \
            pytest.approx(0.25 / (8 * 512), rel=1e-15)

    def test_validation(self):
        with pytest.raises(InputError):
            suggest_step_size(0, 512, 0.5)
        with pytest.raises(InputError):
            suggest_step_size(2, 512, -1.0)
