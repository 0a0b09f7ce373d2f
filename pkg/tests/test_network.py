import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reluprobe import (ConfigError, ConsistencyError, InputError, NetworkConfig,
                       NumericError, Weights, forward, he_init, load_weights,
                       network_gradient, output_gradient_norms, save_weights)
from reluprobe.rng import stream

from oracles import fd_output_gradient_entry, pattern_stable_entry
from conftest import sphere_points


class TestNetworkConfig:
    def test_odd_last_width_rejected(self):
        with pytest.raises(ConfigError):
            NetworkConfig(4, (8, 7))

    def test_nonpositive_rejected(self):
        with pytest.raises(ConfigError):
            NetworkConfig(0, (8,))
        with pytest.raises(ConfigError):
            NetworkConfig(4, (8, 0, 8))
        with pytest.raises(ConfigError):
            NetworkConfig(4, ())

    def test_width_ratio_reported_not_enforced(self):
        cfg = NetworkConfig(4, (8, 64))
        assert cfg.width_ratio == 8.0


class TestHeInit:
    def test_shapes_and_output_vector(self):
        w = he_init(NetworkConfig(4, (8, 8), master_seed=7))
        assert [W.shape for W in w.layers] == [(4, 8), (8, 8)]
        assert np.array_equal(w.v, np.concatenate([np.ones(4), -np.ones(4)]))

    def test_seed_reproducibility_bit_identical(self):
        cfg = NetworkConfig(5, (12, 8), master_seed=123)
        a, b = he_init(cfg), he_init(cfg)
        for Wa, Wb in zip(a.layers, b.layers):
            assert np.array_equal(Wa, Wb)

    def test_layer_streams_independent_of_depth(self):
        # adding a layer must not perturb the draws of earlier layers
        shallow = he_init(NetworkConfig(5, (8, 8), master_seed=9))
        deep = he_init(NetworkConfig(5, (8, 8, 8), master_seed=9))
        assert np.array_equal(shallow.layers[0], deep.layers[0])
        assert np.array_equal(shallow.layers[1], deep.layers[1])

    def test_entry_variance_matches_two_over_width(self):
        # statistical check: sample variance over all entries of a wide layer
        m = 4096
        w = he_init(NetworkConfig(16, (m, m), master_seed=1))
        for W, m_l in zip(w.layers, (m, m)):
            sample_var = float(np.var(W))
            assert abs(sample_var - 2.0 / m_l) <= 0.1 * (2.0 / m_l)

    def test_bad_output_vector_rejected(self):
        with pytest.raises(ConfigError):
            Weights((np.zeros((3, 4)),), np.array([1.0, 1.0, 1.0, -1.0]))


class TestForward:
    def test_zero_input_gives_zero_everything(self, small_net):
        t = forward(small_net, np.zeros(small_net.input_dim))
        assert t.output == 0.0
        for l in range(1, small_net.depth + 1):
            assert not t.pattern_bits(l).any()
            assert np.all(t.layer_outputs[l] == 0.0)

    def test_hand_case_single_layer(self):
        # W = [[1, 0], [0, -1]], v = (+1, -1), x = (1, 1)/sqrt(2) scaled back:
        # pre-activations (1, -1), hidden (1, 0), output 1.
        w = Weights((np.array([[1.0, 0.0], [0.0, -1.0]]),), np.array([1.0, -1.0]))
        t = forward(w, np.array([1.0, 1.0]))
        assert np.array_equal(t.layer_outputs[1], [1.0, 0.0])
        assert t.output == 1.0
        assert np.array_equal(t.pattern_bits(1), [True, False])

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(min_value=1e-6, max_value=1e6),
           idx=st.integers(min_value=0, max_value=10**6))
    def test_positive_homogeneity(self, small_net, c, idx):
        # 1e-12 relative on the output, with an absolute guard at the scale
        # of the +-1 output accumulation: when v . x_L cancels several
        # orders below ||x_L||_1, the relative form alone is ill-posed in
        # float64 (hypothesis finds such inputs)
        x = sphere_points(1, small_net.input_dim, idx)[0]
        t1 = forward(small_net, x)
        f2 = forward(small_net, c * x).output
        accum = float(np.sum(np.abs(t1.layer_outputs[-1])))
        assert f2 == pytest.approx(c * t1.output, rel=1e-12, abs=1e-15 * c * accum)

    def test_pattern_bits_match_positive_outputs(self, small_net):
        x = sphere_points(1, small_net.input_dim, 5)[0]
        t = forward(small_net, x)
        for l in range(1, small_net.depth + 1):
            assert np.array_equal(t.pattern_bits(l), t.layer_outputs[l] > 0.0)

    def test_inactive_last_layer_columns_are_irrelevant(self, small_net):
        x = sphere_points(1, small_net.input_dim, 6)[0]
        t = forward(small_net, x)
        pattern = t.pattern_bits(small_net.depth)
        layers = [W.copy() for W in small_net.layers]
        layers[-1][:, ~pattern] = 0.0
        zeroed = Weights(tuple(layers), small_net.v.copy())
        assert forward(zeroed, x).output == t.output

    def test_dimension_mismatch(self, small_net):
        with pytest.raises(InputError):
            forward(small_net, np.zeros(small_net.input_dim + 1))

    def test_nonfinite_input(self, small_net):
        x = np.zeros(small_net.input_dim)
        x[0] = np.nan
        with pytest.raises(NumericError):
            forward(small_net, x)

    def test_forward_deterministic_across_runs(self, small_net):
        x = sphere_points(1, small_net.input_dim, 7)[0]
        f = [forward(small_net, x).output for _ in range(3)]
        assert f[0] == f[1] == f[2]


class TestNetworkGradient:
    def test_single_layer_closed_form(self):
        # L = 1: gradient is x (v . pattern)^T -- tail product over an empty
        # range is the identity
        gen = stream(0, "test-grad")
        W = gen.standard_normal((5, 6))
        v = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
        w = Weights((W,), v)
        x = sphere_points(1, 5, 1)[0]
        t = forward(w, x)
        g = network_gradient(w, t).layer_grads[0]
        expected = np.outer(x, v * t.pattern_bits(1))
        np.testing.assert_allclose(g, expected, rtol=0, atol=1e-15)

    def test_inactive_columns_exactly_zero(self, small_net):
        x = sphere_points(1, small_net.input_dim, 2)[0]
        t = forward(small_net, x)
        g = network_gradient(small_net, t)
        for l in range(1, small_net.depth + 1):
            off = ~t.pattern_bits(l)
            assert np.all(g.layer_grads[l - 1][:, off] == 0.0)

    def test_matches_finite_differences_on_stable_entries(self, small_net):
        h = 1e-5
        x = sphere_points(1, small_net.input_dim, 3)[0]
        t = forward(small_net, x)
        g = network_gradient(small_net, t)
        rng = np.random.default_rng(4)
        checked = 0
        for _ in range(60):
            l = int(rng.integers(small_net.depth))
            i = int(rng.integers(small_net.layers[l].shape[0]))
            j = int(rng.integers(small_net.layers[l].shape[1]))
            if not pattern_stable_entry(small_net, x[None, :], l, i, j, h):
                continue
            analytic = g.layer_grads[l][i, j]
            if abs(analytic) < 1e-8:
                continue
            fd = fd_output_gradient_entry(small_net, x, l, i, j, h)
            assert abs(fd - analytic) <= 1e-5 * abs(analytic)
            checked += 1
        assert checked >= 20

    def test_stale_trace_detected(self, small_net):
        x = sphere_points(1, small_net.input_dim, 8)[0]
        t = forward(small_net, x)
        layers = [W.copy() for W in small_net.layers]
        layers[0] = -layers[0]
        tampered = Weights(tuple(layers), small_net.v.copy())
        with pytest.raises(ConsistencyError):
            network_gradient(tampered, t)

    def test_rank_one_structure(self, small_net):
        x = sphere_points(1, small_net.input_dim, 9)[0]
        t = forward(small_net, x)
        g = network_gradient(small_net, t)
        for G in g.layer_grads:
            assert np.linalg.matrix_rank(G) <= 1

    def test_output_gradient_norms_match_dense(self, small_net):
        X = sphere_points(4, small_net.input_dim, 10)
        norms = output_gradient_norms(small_net, X)
        for i in range(4):
            t = forward(small_net, X[i])
            g = network_gradient(small_net, t)
            for l, G in enumerate(g.layer_grads):
                assert norms[i, l] == pytest.approx(np.linalg.norm(G), rel=1e-12)


class TestExactLinearity:
    def test_single_layer_change_with_frozen_patterns_is_linear(self, small_net):
        # inside one activation region the output is exactly linear in a
        # single layer, so the first-order expansion has zero residual
        X = sphere_points(8, small_net.input_dim, 11)
        from reluprobe.probes import pattern_preserving_single_layer
        from reluprobe import Dataset
        data = Dataset(X, np.ones(8))
        for layer in (1, small_net.depth):
            w_hat = pattern_preserving_single_layer(small_net, data, layer, seed=layer)
            delta = w_hat.layers[layer - 1] - small_net.layers[layer - 1]
            for i in range(X.shape[0]):
                t = forward(small_net, X[i])
                g = network_gradient(small_net, t).layer_grads[layer - 1]
                linear = t.output + float(np.sum(delta * g))
                assert forward(w_hat, X[i]).output == pytest.approx(linear, abs=1e-12)


class TestSerialization:
    def test_roundtrip_bit_exact(self, tmp_path, small_net):
        path = tmp_path / "w.npz"
        save_weights(path, small_net)
        loaded, cfg = load_weights(path)
        assert cfg == small_net.config
        for Wa, Wb in zip(small_net.layers, loaded.layers):
            assert np.array_equal(Wa, Wb)
        assert np.array_equal(small_net.v, loaded.v)
