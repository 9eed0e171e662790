import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgatelda.numerics import (
    AdamState,
    EmptyNeighborhoodError,
    NonFiniteError,
    ShapeError,
    adam_step,
    finite_diff_grad,
    leaky_relu,
    make_rng,
    masked_softmax,
    matmul,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_matmul_identity():
    m = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_value():
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"2x3.*2x3"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@settings(max_examples=50)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_matmul_associative(a, b, c, d, seed):
    rng = np.random.default_rng(seed)
    x, y, z = rng.normal(size=(a, b)), rng.normal(size=(b, c)), rng.normal(size=(c, d))
    left = matmul(matmul(x, y), z)
    right = matmul(x, matmul(y, z))
    np.testing.assert_allclose(left, right, rtol=1e-9, atol=1e-12)


def test_leaky_relu():
    np.testing.assert_allclose(leaky_relu(np.array([[1.0, -1.0]]), 0.2), [[1.0, -0.2]])
    x = np.abs(np.random.default_rng(0).normal(size=(3, 3)))
    np.testing.assert_array_equal(leaky_relu(x), x)
    np.testing.assert_array_equal(leaky_relu(np.zeros((2, 2))), np.zeros((2, 2)))


def test_masked_softmax_examples():
    out = masked_softmax(np.array([[0.0, np.log(3.0)]]), np.array([[True, True]]))
    np.testing.assert_allclose(out, [[0.25, 0.75]], atol=1e-12)
    out = masked_softmax(np.array([[5.0, -2.0, 7.0]]), np.array([[False, True, False]]))
    np.testing.assert_array_equal(out, [[0.0, 1.0, 0.0]])
    out = masked_softmax(np.full((1, 5), 3.3), np.array([[True, True, False, True, True]]))
    np.testing.assert_allclose(out, [[0.25, 0.25, 0.0, 0.25, 0.25]], atol=1e-15)


def test_masked_softmax_empty_row():
    with pytest.raises(EmptyNeighborhoodError):
        masked_softmax(np.zeros((2, 2)), np.array([[True, False], [False, False]]))


@settings(max_examples=100)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1), finite)
def test_masked_softmax_properties(rows, cols, seed, shift):
    rng = np.random.default_rng(seed)
    scores = rng.normal(scale=20, size=(rows, cols))
    mask = rng.random((rows, cols)) < 0.6
    mask[np.arange(rows), rng.integers(cols, size=rows)] = True
    out = masked_softmax(scores, mask)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(out[~mask] == 0.0)
    assert np.all(out[mask] >= 0.0)
    np.testing.assert_allclose(masked_softmax(scores + shift, mask), out, atol=1e-9)


def test_adam_zero_gradient_is_identity():
    params = np.array([[1.0, -2.0], [3.0, 0.5]])
    state = AdamState.like(params)
    p = params
    for _ in range(5):
        p, state = adam_step(state, p, np.zeros_like(p))
    np.testing.assert_array_equal(p, params)
    assert state.step == 5


def test_adam_first_step_is_lr_sign():
    # bias-corrected first step: m_hat = g, v_hat = g^2, so the step is lr*g/(|g|+eps)
    params = np.zeros((2, 3))
    grads = np.array([[0.5, -3.0, 2.0], [-0.01, 10.0, -1.0]])
    new, state = adam_step(AdamState.like(params, lr=1e-3), params, grads)
    np.testing.assert_allclose(new, -1e-3 * np.sign(grads), atol=1e-6)
    assert state.step == 1


def test_adam_deterministic_and_shape_checked():
    params = np.ones(4)
    grads = np.array([0.1, -0.2, 0.3, 0.0])
    a = adam_step(AdamState.like(params), params, grads)
    b = adam_step(AdamState.like(params), params, grads)
    np.testing.assert_array_equal(a[0], b[0])
    with pytest.raises(ShapeError):
        adam_step(AdamState.like(params), np.ones(3), np.ones(3))


def test_finite_diff_sum_of_squares():
    p = np.array([[0.3, -1.2], [2.0, 0.0]])
    g = finite_diff_grad(lambda x: float(np.sum(x * x)), p, 1e-5)
    np.testing.assert_allclose(g, 2 * p, atol=1e-6)


def test_finite_diff_constant_and_linear():
    p = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(finite_diff_grad(lambda x: 4.2, p), np.zeros_like(p))
    c = np.array([[1.5, -2.0, 0.25], [3.0, 0.0, -1.0]])
    np.testing.assert_allclose(finite_diff_grad(lambda x: float(np.sum(c * x)), p), c, atol=1e-9)


def test_finite_diff_polynomial_error_is_second_order():
    # d/dx x^3 at 1 is 3; central differences err by exactly h^2
    for h in (1e-2, 1e-3):
        g = finite_diff_grad(lambda x: float(np.sum(x**3)), np.array([1.0]), h)
        assert abs(g[0] - 3.0) == pytest.approx(h * h, rel=1e-4)


def test_finite_diff_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        finite_diff_grad(lambda x: float("inf"), np.zeros(2))


def test_rng_streams_reproducible():
    assert make_rng(7).random() == make_rng(7).random()
    assert make_rng(7, 1).random() == make_rng(7, 1).random()
    assert make_rng(7, 1).random() != make_rng(7, 2).random()
