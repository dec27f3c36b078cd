import math

import numpy as np
import pytest

from qcscreen.errors import ShapeMismatchError
from qcscreen.neural import (
    Activation,
    AdamState,
    DenseLayer,
    adam_step,
    bce_with_logits,
    dense_backward,
    dense_forward,
    init_dense,
    init_params,
    sigmoid,
)

from helpers import reference_adam_quadratic


def test_identity_layer_passes_through():
    layer = DenseLayer(np.eye(3), np.zeros(3), Activation.IDENTITY)
    x = np.array([0.5, -1.0, 2.0])
    y, _ = dense_forward(layer, x)
    assert np.array_equal(y, x)


def test_relu_clamps_negative_preactivations():
    layer = DenseLayer(np.eye(2), np.zeros(2), Activation.RELU)
    y, _ = dense_forward(layer, np.array([-1.0, 2.0]))
    assert np.array_equal(y, [0.0, 2.0])


def test_forward_matches_naive_double_loop():
    rng = np.random.default_rng(11)
    layer = init_dense(5, 7, Activation.IDENTITY, rng)
    x = rng.normal(size=7)
    y, _ = dense_forward(layer, x)
    naive = np.zeros(5)
    for i in range(5):
        acc = layer.biases[i]
        for j in range(7):
            acc += layer.weights[i, j] * x[j]
        naive[i] = acc
    assert np.allclose(y, naive, atol=1e-12)


def test_backward_identity_formulas():
    rng = np.random.default_rng(12)
    layer = init_dense(3, 4, Activation.IDENTITY, rng)
    x = rng.normal(size=4)
    _, cache = dense_forward(layer, x)
    g = rng.normal(size=3)
    dw, db, dx = dense_backward(layer, cache, g)
    assert np.allclose(dw, np.outer(g, x))
    assert np.allclose(db, g)
    assert np.allclose(dx, layer.weights.T @ g)


def test_backward_relu_zeroes_dead_units():
    layer = DenseLayer(np.eye(2), np.array([-1.0, 0.5]), Activation.RELU)
    x = np.array([0.0, 0.0])
    _, cache = dense_forward(layer, x)  # pre-activations [-1, 0.5]
    dw, db, dx = dense_backward(layer, cache, np.array([1.0, 1.0]))
    assert db[0] == 0.0 and db[1] == 1.0
    assert np.array_equal(dw[0], [0.0, 0.0])


@pytest.mark.parametrize("activation", [Activation.IDENTITY, Activation.RELU])
def test_backward_matches_finite_differences(activation):
    rng = np.random.default_rng(13)
    layer = init_dense(4, 6, activation, rng)
    x = rng.normal(size=6)
    v = rng.normal(size=4)  # scalar loss L = v . y

    def loss(weights, biases, xin):
        probe = DenseLayer(weights, biases, activation)
        y, _ = dense_forward(probe, xin)
        return float(v @ y)

    _, cache = dense_forward(layer, x)
    dw, db, dx = dense_backward(layer, cache, v)
    h = 1e-6
    for arr, grad, rebuild in (
        (layer.weights, dw, lambda a: loss(a, layer.biases, x)),
        (layer.biases, db, lambda a: loss(layer.weights, a, x)),
        (x, dx, lambda a: loss(layer.weights, layer.biases, a)),
    ):
        flat = arr.ravel()
        for i in range(flat.size):
            bumped = arr.copy()
            bumped.ravel()[i] = flat[i] + h
            up = rebuild(bumped)
            bumped.ravel()[i] = flat[i] - h
            down = rebuild(bumped)
            numeric = (up - down) / (2 * h)
            analytic = grad.ravel()[i]
            assert abs(numeric - analytic) <= 1e-6 * max(1.0, abs(numeric)) + 1e-8


def test_bce_at_zero_logit():
    loss, grad = bce_with_logits(0.0, 1)
    assert loss == pytest.approx(0.6931471805599453, abs=1e-15)
    assert grad == pytest.approx(-0.5, abs=1e-15)


def test_bce_large_logit_is_stable():
    loss, grad = bce_with_logits(50.0, 1)
    assert 0.0 <= loss < 1e-20
    assert math.isfinite(grad)
    loss, _ = bce_with_logits(1e4, 0)
    assert math.isfinite(loss)
    loss, _ = bce_with_logits(-1e4, 1)
    assert math.isfinite(loss)


def test_bce_frozen_value():
    # direct evaluation: log(1 + exp(-3)) for z=-3, y=0
    loss, _ = bce_with_logits(-3.0, 0)
    assert loss == pytest.approx(0.04858735157374206, abs=1e-15)


def test_bce_gradient_matches_finite_differences():
    for z in (-2.0, -0.1, 0.0, 0.7, 3.0):
        for y in (0, 1):
            _, grad = bce_with_logits(z, y)
            h = 1e-6
            numeric = (bce_with_logits(z + h, y)[0] - bce_with_logits(z - h, y)[0]) / (2 * h)
            assert grad == pytest.approx(numeric, abs=1e-8)


def test_bce_rejects_other_labels():
    with pytest.raises(ValueError):
        bce_with_logits(0.1, 2)


def test_sigmoid_symmetry():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(10.0) == pytest.approx(0.9999546021312976, abs=1e-15)
    assert sigmoid(-30.0) + sigmoid(30.0) == pytest.approx(1.0, abs=1e-12)


def test_adam_first_step_magnitude_is_lr():
    for g in (1.0, -0.5, 1e-3, -2e-3):
        params = np.array([0.0])
        state = AdamState.for_size(1, lr=0.01)
        new, state = adam_step(params, np.array([g]), state)
        assert state.step_count == 1
        update = new[0] - params[0]
        assert np.sign(update) == -np.sign(g)
        assert abs(abs(update) - 0.01) < 1e-4 * 0.01


def test_adam_zero_gradient_keeps_params():
    params = np.array([1.0, -2.0])
    state = AdamState.for_size(2)
    for _ in range(5):
        params, state = adam_step(params, np.zeros(2), state)
    assert np.array_equal(params, [1.0, -2.0])
    assert state.step_count == 5


def test_adam_matches_reference_on_quadratic():
    expected = reference_adam_quadratic(10, lr=0.01, x0=3.0)
    params = np.array([3.0])
    state = AdamState.for_size(1, lr=0.01)
    path = [params[0]]
    for _ in range(10):
        params, state = adam_step(params, params.copy(), state)
        path.append(float(params[0]))
    assert np.allclose(path, expected, atol=1e-10)


def test_adam_shape_mismatch():
    state = AdamState.for_size(2)
    with pytest.raises(ShapeMismatchError):
        adam_step(np.zeros(3), np.zeros(3), state)
    with pytest.raises(ShapeMismatchError):
        adam_step(np.zeros(2), np.zeros(3), state)


def test_init_params_bounds_and_determinism():
    rng = np.random.default_rng(5)
    sample = init_params((100, 4), 4, rng)
    assert np.all(sample >= -0.5) and np.all(sample <= 0.5)
    again = init_params((100, 4), 4, np.random.default_rng(5))
    assert np.array_equal(sample, again)


def test_init_params_mean_near_zero():
    rng = np.random.default_rng(6)
    sample = init_params((10_000,), 1, rng)
    assert abs(sample.mean()) < 0.02


def test_init_params_requires_fan_in():
    with pytest.raises(ValueError):
        init_params((2, 2), 0, np.random.default_rng(0))


def test_dense_shape_errors():
    layer = init_dense(3, 4, Activation.IDENTITY, np.random.default_rng(0))
    with pytest.raises(ShapeMismatchError):
        dense_forward(layer, np.zeros(5))
    _, cache = dense_forward(layer, np.zeros(4))
    with pytest.raises(ShapeMismatchError):
        dense_backward(layer, cache, np.zeros(2))
