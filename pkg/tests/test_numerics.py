import numpy as np
import numpy.testing as npt
import pytest

from litsynth.core.numerics import (
    Rng, ShapeError, as_matrix, matmul, row_softmax, row_softmax_backward,
    relu, relu_backward, sigmoid, layer_norm, layer_norm_backward,
    xavier_uniform_init, central_diff_grad, relative_error,
    save_matrix_csv, load_matrix_csv,
)


# =============================================================================
# matmul
# =============================================================================

def test_matmul_examples():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    npt.assert_array_equal(matmul(np.eye(2), a), a)
    npt.assert_array_equal(matmul(a, np.zeros((2, 2))), np.zeros((2, 2)))
    npt.assert_array_equal(matmul(a, np.array([[5.0, 6.0], [7.0, 8.0]])),
                           [[19.0, 22.0], [43.0, 50.0]])


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match="2x3.*2x3"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_associative_and_distributive(rng):
    for _ in range(10):
        a, b, c = (rng.normal((4, 4)) for _ in range(3))
        npt.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-10)
        npt.assert_allclose(matmul(a, b + c), matmul(a, b) + matmul(a, c), atol=1e-10)


def test_as_matrix_promotes_vectors_and_rejects_tensors():
    assert as_matrix([1, 2, 3]).shape == (1, 3)
    assert as_matrix([[1, 2]]).dtype == np.float64
    with pytest.raises(ShapeError):
        as_matrix(np.ones((2, 2, 2)))


# =============================================================================
# softmax / relu / sigmoid
# =============================================================================

def test_row_softmax_examples():
    npt.assert_allclose(row_softmax(np.zeros((1, 3))), [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)
    npt.assert_allclose(row_softmax(np.array([[np.log(2.0), 0.0]])), [[2 / 3, 1 / 3]],
                        atol=1e-15)


def test_row_softmax_matches_unshifted_oracle(rng):
    m = rng.normal((3, 5))
    e = np.exp(m)
    npt.assert_allclose(row_softmax(m), e / e.sum(axis=1, keepdims=True), rtol=0, atol=1e-14)


def test_row_softmax_rows_and_shift_invariance(rng):
    m = rng.normal((6, 9), scale=5.0)
    p = row_softmax(m)
    npt.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p > 0) and np.all(p <= 1)
    shift = rng.normal((6, 1), scale=10.0)
    npt.assert_allclose(row_softmax(m + shift), p, atol=1e-12)


def test_row_softmax_large_logits_stay_finite():
    p = row_softmax(np.array([[1000.0, 0.0, -1000.0]]))
    assert np.all(np.isfinite(p))
    npt.assert_allclose(p, [[1.0, 0.0, 0.0]])


def test_row_softmax_backward_matches_finite_difference(rng):
    m = rng.normal((3, 4))
    dp = rng.normal((3, 4))
    numeric = central_diff_grad(lambda z: float(np.sum(dp * row_softmax(z))), m)
    npt.assert_allclose(row_softmax_backward(row_softmax(m), dp), numeric, atol=1e-8)


def test_relu_examples(rng):
    npt.assert_array_equal(relu(np.array([[-1.0, 2.0]])), [[0.0, 2.0]])
    npt.assert_array_equal(relu(np.zeros((2, 3))), np.zeros((2, 3)))
    m = rng.normal((5, 5))
    npt.assert_array_equal(relu(m), np.where(m > 0, m, 0.0))
    npt.assert_array_equal(relu_backward(m, np.ones_like(m)), (m > 0).astype(float))


def test_sigmoid_is_stable_at_extremes():
    with np.errstate(over='raise'):
        s = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    npt.assert_allclose(s, [0.0, 0.5, 1.0])


# =============================================================================
# layer norm
# =============================================================================

def test_layer_norm_examples():
    ones, zeros = np.ones(4), np.zeros(4)
    npt.assert_array_equal(layer_norm(np.full((1, 4), 3.0), ones, zeros), np.zeros((1, 4)))
    npt.assert_allclose(layer_norm(np.array([[1.0, -1.0]]), np.ones(2), np.zeros(2), eps=1e-14),
                        [[1.0, -1.0]], atol=1e-12)


def test_layer_norm_matches_two_pass_oracle(rng):
    x = rng.normal((1, 7), scale=3.0)
    gamma, beta = rng.normal(7), rng.normal(7)
    mean = sum(x[0]) / 7
    var = sum((v - mean) ** 2 for v in x[0]) / 7
    expected = (x - mean) / np.sqrt(var + 1e-5) * gamma + beta
    npt.assert_allclose(layer_norm(x, gamma, beta), expected, atol=1e-12)


def test_layer_norm_row_statistics(rng):
    x = rng.normal((10, 16), scale=10.0)
    beta = rng.normal(16)
    y = layer_norm(x, np.ones(16), beta)
    npt.assert_allclose(y.mean(axis=1), beta.mean(), atol=1e-10)
    npt.assert_allclose((y - beta).var(axis=1), 1.0, atol=1e-6)


def test_layer_norm_rejects_mismatched_gamma():
    with pytest.raises(ShapeError):
        layer_norm(np.ones((2, 4)), np.ones(3), np.zeros(4))


def test_layer_norm_backward_matches_finite_difference(rng):
    x = rng.normal((3, 5))
    gamma, beta = rng.normal(5), rng.normal(5)
    dy = rng.normal((3, 5))
    dx, dgamma, dbeta = layer_norm_backward(x, gamma, dy)
    loss = lambda z: float(np.sum(dy * layer_norm(z, gamma, beta)))
    assert relative_error(dx, central_diff_grad(loss, x)) < 1e-6
    assert relative_error(dgamma, central_diff_grad(
        lambda g: float(np.sum(dy * layer_norm(x, g, beta))), gamma)) < 1e-6
    npt.assert_allclose(dbeta, dy.sum(axis=0))


# =============================================================================
# 초기화 / Rng
# =============================================================================

def test_rng_same_seed_same_stream():
    npt.assert_array_equal(Rng(7).normal(10_000), Rng(7).normal(10_000))
    assert not np.array_equal(Rng(7).normal(10), Rng(8).normal(10))


def test_xavier_deterministic_per_seed():
    npt.assert_array_equal(xavier_uniform_init(2, 2, Rng(42)), xavier_uniform_init(2, 2, Rng(42)))


def test_xavier_bound_and_mean():
    w = xavier_uniform_init(1000, 1000, Rng(42))
    bound = np.sqrt(6.0 / 2000)
    assert np.max(np.abs(w)) <= bound
    sigma = bound / np.sqrt(3.0)
    assert abs(w.mean()) < 3 * sigma / 1e3


def test_xavier_rejects_empty():
    with pytest.raises(ShapeError):
        xavier_uniform_init(0, 3, Rng(0))


# =============================================================================
# 기울기 오라클
# =============================================================================

def test_central_diff_examples(rng):
    x = rng.normal((3, 4))
    npt.assert_allclose(central_diff_grad(lambda z: float(np.sum(z)), x), np.ones((3, 4)),
                        atol=1e-7)
    npt.assert_allclose(central_diff_grad(lambda z: 0.5 * float(np.sum(z * z)), x), x,
                        atol=1e-6)
    npt.assert_allclose(central_diff_grad(lambda z: float(np.sum(row_softmax(z))), x),
                        np.zeros((3, 4)), atol=1e-7)


def test_central_diff_leaves_input_untouched(rng):
    x = rng.normal((2, 3))
    before = x.copy()
    central_diff_grad(lambda z: float(np.sum(z ** 3)), x)
    npt.assert_array_equal(x, before)


def test_relative_error():
    a = np.array([1.0, 2.0, -4.0])
    assert relative_error(a, a) == 0.0
    assert relative_error(a, a + np.array([0.0, 0.0, 0.4])) == pytest.approx(0.1)
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
    with pytest.raises(ShapeError):
        relative_error(np.zeros(3), np.zeros(4))


# =============================================================================
# CSV
# =============================================================================

def test_matrix_csv_round_trip_is_exact(tmp_path, rng):
    m = rng.normal((4, 3)) * 1e-7 + np.pi
    path = tmp_path / 'm.csv'
    save_matrix_csv(path, m)
    npt.assert_array_equal(load_matrix_csv(path), m)
    save_matrix_csv(path, np.array([[1.5, 2.5]]))
    assert load_matrix_csv(path).shape == (1, 2)
