import numpy as np
import pytest

from discret2di.nn import (
    AdamState,
    Gradients,
    Mlp,
    NonFiniteError,
    ShapeError,
    adam_step,
    backward,
    forward,
)


def fd_gradient(net, x, weight_like, h=1e-5):
    """Central finite differences of loss(net) = sum(weight_like * forward)."""

    def loss():
        return float((forward(net, x)[0] * weight_like).sum())

    grads = Gradients.zeros_like(net)
    for arrs, outs in ((net.weights, grads.weights), (net.biases, grads.biases)):
        for li, W in enumerate(arrs):
            it = np.nditer(W, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                old = W[idx]
                W[idx] = old + h
                lp = loss()
                W[idx] = old - h
                lm = loss()
                W[idx] = old
                outs[li][idx] = (lp - lm) / (2 * h)
    return grads


def max_rel_err(a: Gradients, b: Gradients) -> float:
    worst = 0.0
    for xs, ys in ((a.weights, b.weights), (a.biases, b.biases)):
        for x, y in zip(xs, ys):
            denom = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1e-8)
            worst = max(worst, float((np.abs(x - y) / denom).max()))
    return worst


class TestForward:
    def test_zero_parameters_give_zero_output(self):
        net = Mlp([2, 3, 1], [np.zeros((2, 3)), np.zeros((3, 1))], [np.zeros(3), np.zeros(1)])
        out, _ = forward(net, np.ones((4, 2)))
        assert np.all(out == 0.0)

    def test_single_linear_layer(self):
        net = Mlp([1, 1], [np.array([[2.0]])], [np.array([1.0])])
        out, _ = forward(net, np.array([[3.0]]))
        assert out[0, 0] == 7.0

    def test_tanh_of_zero_is_zero(self):
        rng = np.random.default_rng(0)
        net = Mlp.create([3, 4, 2], rng)
        out, _ = forward(net, np.zeros((1, 3)))
        # biases start at zero, so every pre-activation is zero
        assert np.all(out == 0.0)

    def test_dimension_mismatch(self):
        net = Mlp.create([3, 2], np.random.default_rng(0))
        with pytest.raises(ShapeError):
            forward(net, np.zeros((1, 4)))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        net = Mlp.create([4, 6, 2], rng)
        x = rng.standard_normal((5, 4))
        assert np.array_equal(forward(net, x)[0], forward(net, x)[0])


class TestBackward:
    def test_linear_layer_product_rule(self):
        net = Mlp([1, 1], [np.array([[4.0]])], [np.array([0.0])])
        _, tape = forward(net, np.array([[3.0]]))
        grads, dx = backward(tape, np.array([[1.0]]))
        assert grads.weights[0][0, 0] == 3.0  # dL/dw = x
        assert dx[0, 0] == 4.0  # dL/dx = w
        assert grads.biases[0][0] == 1.0

    def test_zero_upstream_gradient(self):
        rng = np.random.default_rng(2)
        net = Mlp.create([3, 5, 2], rng)
        _, tape = forward(net, rng.standard_normal((4, 3)))
        grads, dx = backward(tape, np.zeros((4, 2)))
        assert all(np.all(g == 0) for g in grads.weights + grads.biases)
        assert np.all(dx == 0)

    def test_matches_finite_differences_on_random_nets(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            depth = rng.integers(2, 4)
            sizes = [int(rng.integers(1, 6)) for _ in range(depth + 1)]
            net = Mlp.create(sizes, rng)
            x = rng.standard_normal((3, sizes[0]))
            w_out = rng.standard_normal((3, sizes[-1]))
            _, tape = forward(net, x)
            analytic, _ = backward(tape, w_out)
            numeric = fd_gradient(net, x, w_out)
            assert max_rel_err(analytic, numeric) < 1e-4

    def test_shape_mismatch(self):
        net = Mlp.create([2, 2], np.random.default_rng(0))
        _, tape = forward(net, np.zeros((1, 2)))
        with pytest.raises(ShapeError):
            backward(tape, np.zeros((2, 2)))


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        rng = np.random.default_rng(4)
        net = Mlp.create([2, 3], rng)
        before = [w.copy() for w in net.weights]
        state = AdamState.create(net)
        adam_step(net, Gradients.zeros_like(net), state)
        assert state.step == 1
        assert all(np.array_equal(a, b) for a, b in zip(before, net.weights))

    def test_first_step_is_signed_learning_rate(self):
        # step 1: m_hat = g, v_hat = g*g, update = -lr * g/(|g|+eps) ~ -lr*sign(g)
        net = Mlp([1, 1], [np.array([[2.0]])], [np.array([0.5])])
        state = AdamState.create(net, lr=0.01)
        grads = Gradients([np.array([[3.0]])], [np.array([-0.2])])
        adam_step(net, grads, state)
        assert net.weights[0][0, 0] == pytest.approx(2.0 - 0.01, abs=1e-8)
        assert net.biases[0][0] == pytest.approx(0.5 + 0.01, abs=1e-7)

    def test_constant_gradient_moves_against_it(self):
        net = Mlp([1, 1], [np.array([[0.0]])], [np.array([0.0])])
        state = AdamState.create(net, lr=0.01)
        for _ in range(50):
            adam_step(net, Gradients([np.array([[1.0]])], [np.array([1.0])]), state)
        assert net.weights[0][0, 0] < 0
        assert net.biases[0][0] < 0
        assert state.step == 50

    def test_non_finite_gradient_rejected(self):
        net = Mlp.create([1, 1], np.random.default_rng(0))
        state = AdamState.create(net)
        with pytest.raises(NonFiniteError):
            adam_step(net, Gradients([np.array([[np.inf]])], [np.array([0.0])]), state)

    def test_regression_sanity(self):
        # 1 -> 8 -> 1 net learns y = 2x + 1 to mse < 1e-3 within 2000 steps
        rng = np.random.default_rng(1)
        net = Mlp.create([1, 8, 1], rng)
        state = AdamState.create(net, lr=1e-2)
        x = np.linspace(-1, 1, 200)[:, None]
        target = 2 * x + 1
        mse = np.inf
        for _ in range(2000):
            y, tape = forward(net, x)
            diff = y - target
            mse = float((diff**2).mean())
            if mse < 1e-3:
                break
            grads, _ = backward(tape, 2 * diff / len(x))
            adam_step(net, grads, state)
        assert mse < 1e-3


class TestSerialization:
    def test_dict_roundtrip(self):
        rng = np.random.default_rng(5)
        net = Mlp.create([3, 4, 2], rng)
        back = Mlp.from_dict(net.to_dict())
        assert back.sizes == net.sizes
        assert all(np.array_equal(a, b) for a, b in zip(back.weights, net.weights))
        assert all(np.array_equal(a, b) for a, b in zip(back.biases, net.biases))
