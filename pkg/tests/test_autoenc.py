import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from tweetclust.autoenc import (
    AdadeltaState,
    NetworkSpec,
    adadelta_step,
    backward,
    bce_loss,
    encode,
    forward,
    init_network,
    load_model,
    save_model,
    train,
)


def sparse_vectors(n=200, dim=20, seed=5, max_active=4):
    rng = np.random.default_rng(seed)
    data = np.zeros((n, dim))
    for i in range(n):
        k = int(rng.integers(1, max_active + 1))
        idx = rng.choice(dim, size=k, replace=False)
        data[i, idx] = rng.dirichlet(np.ones(k))
    return data


def themed_vectors(n=120, dim=20, themes=6, seed=20):
    """Sparse L1-normalized vectors drawn from a few shared support
    patterns, mimicking tweet vectors whose mass sits on theme clusters."""
    rng = np.random.default_rng(seed)
    bases = []
    for _ in range(themes):
        idx = rng.choice(dim, size=3, replace=False)
        base = np.zeros(dim)
        base[idx] = rng.dirichlet(np.ones(3) * 4)
        bases.append(base)
    data = np.zeros((n, dim))
    for i in range(n):
        v = bases[int(rng.integers(0, themes))].copy()
        v += rng.uniform(0, 0.05, size=dim) * (rng.random(dim) < 0.2)
        data[i] = v / v.sum()
    return data


class TestNetworkSpec:
    def test_valid_default_shape(self):
        spec = NetworkSpec([200, 128, 64, 20, 64, 128, 200])
        assert spec.input_dim == 200
        assert spec.bottleneck == 20
        assert spec.encoder_layers == 3

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="mirror"):
            NetworkSpec([8, 4, 2, 5, 8])

    def test_rejects_non_decreasing(self):
        with pytest.raises(ValueError, match="decrease"):
            NetworkSpec([8, 8, 2, 8, 8])

    def test_rejects_even_length(self):
        with pytest.raises(ValueError):
            NetworkSpec([8, 4, 4, 8])


class TestForward:
    def test_zero_net_outputs_half(self):
        spec = NetworkSpec([4, 2, 4])
        net = init_network(spec, np.random.default_rng(0))
        for w in net.weights:
            w[:] = 0.0
        out, acts = forward(net, np.array([0.3, 0.9, 0.0, 1.0]))
        np.testing.assert_array_equal(acts[1], 0.0)  # tanh(0)
        np.testing.assert_array_equal(out, 0.5)      # sigmoid(0)

    def test_output_strictly_inside_unit_interval(self):
        spec = NetworkSpec([6, 3, 6])
        net = init_network(spec, np.random.default_rng(1))
        rng = np.random.default_rng(2)
        out, _ = forward(net, rng.uniform(size=(50, 6)))
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_hand_computed_scalar_chain(self):
        # one encoder/decoder pair with 1x1-style weights set by hand;
        # oracle is the same chain evaluated with scalar math
        spec = NetworkSpec([2, 1, 2])
        net = init_network(spec, np.random.default_rng(0))
        net.weights[0][:] = np.array([[0.5], [-0.25]])
        net.biases[0][:] = np.array([0.1])
        net.weights[1][:] = np.array([[2.0, -1.0]])
        net.biases[1][:] = np.array([0.05, -0.05])
        x = np.array([0.3, 0.9])
        code = math.tanh(0.5 * 0.3 + (-0.25) * 0.9 + 0.1)
        want = [
            1.0 / (1.0 + math.exp(-(2.0 * code + 0.05))),
            1.0 / (1.0 + math.exp(-(-1.0 * code - 0.05))),
        ]
        out, _ = forward(net, x)
        np.testing.assert_allclose(out, want, atol=1e-14)
        assert encode(net, x) == pytest.approx([code], abs=1e-14)

    def test_shape_mismatch_rejected(self):
        spec = NetworkSpec([4, 2, 4])
        net = init_network(spec, np.random.default_rng(0))
        with pytest.raises(ValueError):
            forward(net, np.zeros(5))


class TestBceLoss:
    def test_uniform_half(self):
        p = np.full(8, 0.5)
        assert bce_loss(p, p) == pytest.approx(math.log(2), abs=1e-12)
        assert bce_loss(p, p) == pytest.approx(0.6931472, abs=1e-7)

    def test_perfect_prediction_limit(self):
        eps = 1e-7
        loss = bce_loss(np.array([1 - eps, eps]), np.array([1.0, 0.0]))
        assert loss == pytest.approx(0.0, abs=1e-6)

    def test_hand_evaluated_value(self):
        # -[0.2 ln 0.7 + 0.8 ln 0.3]
        want = -(0.2 * math.log(0.7) + 0.8 * math.log(0.3))
        assert bce_loss(np.array([0.7]), np.array([0.2])) == pytest.approx(
            want, abs=1e-12
        )
        assert want == pytest.approx(1.0345132, abs=1e-6)

    def test_clamping_keeps_loss_finite(self):
        loss = bce_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        assert math.isfinite(loss)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            bce_loss(np.zeros(2), np.zeros(3))


class TestBackward:
    def test_gradients_match_finite_differences(self):
        spec = NetworkSpec([6, 4, 2, 4, 6])
        net = init_network(spec, np.random.default_rng(3))
        rng = np.random.default_rng(4)
        x = rng.uniform(size=6)
        t = rng.uniform(size=6)
        _, acts = forward(net, x)
        grads_w, grads_b = backward(net, acts, t)

        h = 1e-5
        worst = 0.0
        for layer in range(len(net.weights)):
            for arr, grad in ((net.weights[layer], grads_w[layer]),
                              (net.biases[layer], grads_b[layer])):
                num = np.zeros_like(arr)
                it = np.nditer(arr, flags=["multi_index"])
                while not it.finished:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = bce_loss(forward(net, x)[0], t)
                    arr[idx] = orig - h
                    down = bce_loss(forward(net, x)[0], t)
                    arr[idx] = orig
                    num[idx] = (up - down) / (2 * h)
                    it.iternext()
                denom = max(np.linalg.norm(grad), np.linalg.norm(num), 1e-12)
                worst = max(worst, np.linalg.norm(grad - num) / denom)
        assert worst < 1e-4

    def test_perfect_prediction_has_zero_output_delta(self):
        spec = NetworkSpec([3, 1, 3])
        net = init_network(spec, np.random.default_rng(5))
        for w in net.weights:
            w[:] = 0.0
        x = np.array([0.5, 0.5, 0.5])
        out, acts = forward(net, x)
        grads_w, grads_b = backward(net, acts, np.full(3, 0.5))
        # p == t == 0.5 everywhere, so every gradient vanishes
        for g in grads_w + grads_b:
            np.testing.assert_allclose(g, 0.0, atol=1e-15)

    def test_batch_gradient_is_mean_of_per_sample(self):
        spec = NetworkSpec([4, 2, 4])
        net = init_network(spec, np.random.default_rng(6))
        rng = np.random.default_rng(7)
        batch = rng.uniform(size=(3, 4))
        _, acts = forward(net, batch)
        gw_batch, gb_batch = backward(net, acts, batch)
        gw_sum = [np.zeros_like(w) for w in net.weights]
        gb_sum = [np.zeros_like(b) for b in net.biases]
        for row in batch:
            _, a = forward(net, row)
            gw, gb = backward(net, a, row)
            for acc, g in zip(gw_sum + gb_sum, gw + gb):
                acc += g
        for got, acc in zip(gw_batch + gb_batch, gw_sum + gb_sum):
            np.testing.assert_allclose(got, acc / 3.0, atol=1e-12)


class TestAdadelta:
    def test_zero_gradient_leaves_params(self):
        params = [np.array([1.0, -2.0])]
        state = AdadeltaState.zeros_like(params)
        state.sq_grads[0][:] = 0.4
        state.sq_updates[0][:] = 0.2
        adadelta_step(params, [np.zeros(2)], state)
        np.testing.assert_array_equal(params[0], [1.0, -2.0])
        np.testing.assert_allclose(state.sq_grads[0], 0.4 * 0.95)
        np.testing.assert_allclose(state.sq_updates[0], 0.2 * 0.95)

    def test_first_step_hand_value(self):
        params = [np.array([0.0])]
        state = AdadeltaState.zeros_like(params, rho=0.95, epsilon=1e-6)
        adadelta_step(params, [np.array([1.0])], state)
        want = -math.sqrt(1e-6) / math.sqrt(0.05 + 1e-6)
        assert params[0][0] == pytest.approx(want, abs=1e-15)
        assert params[0][0] == pytest.approx(-0.0044721, abs=1e-7)

    def test_update_opposes_gradient_sign(self):
        rng = np.random.default_rng(8)
        params = [rng.normal(size=(4, 3))]
        before = params[0].copy()
        grads = [rng.normal(size=(4, 3))]
        state = AdadeltaState.zeros_like(params)
        adadelta_step(params, grads, state)
        moved = params[0] - before
        assert np.all(np.sign(moved) == -np.sign(grads[0]))


class TestTraining:
    def test_losses_trend_down(self):
        data = sparse_vectors()
        spec = NetworkSpec([20, 12, 6, 12, 20])
        _, report = train(spec, data, epochs=30, batch_size=16, seed=9)
        losses = report.epoch_losses
        assert losses[-1] < losses[0]
        # transient upticks stay within 5% between consecutive epochs
        assert all(b <= a * 1.05 for a, b in zip(losses, losses[1:]))

    def test_same_seed_identical_report(self):
        data = sparse_vectors(n=80)
        spec = NetworkSpec([20, 10, 20])
        _, a = train(spec, data, epochs=5, batch_size=16, seed=10)
        _, b = train(spec, data, epochs=5, batch_size=16, seed=10)
        assert a.final_loss == b.final_loss
        assert a.epoch_losses == b.epoch_losses

    def test_rejects_out_of_range_data(self):
        spec = NetworkSpec([4, 2, 4])
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            train(spec, np.full((5, 4), 1.5), epochs=1)

    def test_rejects_empty_data(self):
        spec = NetworkSpec([4, 2, 4])
        with pytest.raises(ValueError):
            train(spec, np.zeros((0, 4)), epochs=1)


class TestEncode:
    def test_bottleneck_dimension(self):
        spec = NetworkSpec([200, 128, 64, 20, 64, 128, 200])
        net = init_network(spec, np.random.default_rng(11))
        code = encode(net, np.random.default_rng(12).uniform(size=200))
        assert code.shape == (20,)

    def test_matches_first_half_of_forward(self):
        spec = NetworkSpec([10, 6, 3, 6, 10])
        net = init_network(spec, np.random.default_rng(13))
        x = np.random.default_rng(14).uniform(size=10)
        _, acts = forward(net, x)
        np.testing.assert_array_equal(encode(net, x), acts[spec.encoder_layers])

    def test_identical_inputs_identical_codes(self):
        spec = NetworkSpec([6, 3, 6])
        net = init_network(spec, np.random.default_rng(15))
        x = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        np.testing.assert_array_equal(encode(net, x), encode(net, x.copy()))

    def test_shape_mismatch_rejected(self):
        spec = NetworkSpec([6, 3, 6])
        net = init_network(spec, np.random.default_rng(15))
        with pytest.raises(ValueError):
            encode(net, np.zeros(7))

    def test_code_distance_order_tracks_input_order(self):
        # pairwise distance ranking among codes should correlate with the
        # input-space ranking once the model has trained
        data = themed_vectors(n=120, seed=20)
        spec = NetworkSpec([20, 12, 6, 12, 20])
        net, _ = train(spec, data, epochs=60, batch_size=16, seed=21)
        codes = encode(net, data)
        take = data[:40]
        code_take = codes[:40]
        d_in, d_code = [], []
        for i in range(len(take)):
            for j in range(i + 1, len(take)):
                d_in.append(np.linalg.norm(take[i] - take[j]))
                d_code.append(np.linalg.norm(code_take[i] - code_take[j]))
        rho = scipy_stats.spearmanr(d_in, d_code).statistic
        assert rho > 0.5


class TestModelFile:
    def test_round_trip_is_exact(self, tmp_path):
        spec = NetworkSpec([6, 4, 2, 4, 6])
        net = init_network(spec, np.random.default_rng(16))
        path = tmp_path / "model.txt"
        save_model(net, path)
        loaded = load_model(path)
        assert loaded.spec.layer_sizes == spec.layer_sizes
        for a, b in zip(net.weights + net.biases, loaded.weights + loaded.biases):
            np.testing.assert_array_equal(a, b)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("something else\n")
        with pytest.raises(ValueError):
            load_model(path)
