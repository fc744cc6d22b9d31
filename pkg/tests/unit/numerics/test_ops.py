"""Unit tests for differentiable primitives and losses"""

import math

import numpy as np
import pytest

from app.constants import PROB_CLAMP
from app.exceptions import DimensionError
from app.numerics import (
    ParameterStore,
    Tensor,
    affine,
    bce,
    clamp_probability,
    column,
    cross_entropy,
    fd_check,
    grad_reverse,
    matmul,
    mse,
    one_hot,
    relu,
    sigmoid,
    softmax_rows,
)


@pytest.mark.unit
class TestForwardValues:
    """Tests for primitive forward passes"""

    def test_matmul_shape_check(self):
        """Should raise DimensionError on inner-size mismatch"""
        with pytest.raises(DimensionError):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_affine_requires_row_bias(self):
        """Should reject a bias that is not (1, out)"""
        with pytest.raises(DimensionError):
            affine(np.zeros((2, 3)), np.zeros((3, 4)), np.zeros((2, 4)))

    def test_relu(self):
        """Should zero negative entries"""
        np.testing.assert_array_equal(relu([[-1.0, 0.0, 2.0]]).data, [[0.0, 0.0, 2.0]])

    def test_sigmoid_is_stable_for_large_inputs(self):
        """Should not overflow for large-magnitude logits"""
        out = sigmoid([[-800.0, 0.0, 800.0]]).data
        assert out[0, 1] == 0.5
        assert np.all(np.isfinite(out))

    def test_softmax_rows_sum_to_one(self):
        """Each row should sum to 1 within 1e-12, even for large logits"""
        logits = np.array([[1000.0, 999.0, -1000.0], [0.1, 0.2, 0.3]])
        probs = softmax_rows(logits).data
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) <= 1e-12
        assert np.all(probs >= 0.0)

    def test_clamp_probability_bounds(self):
        """Should clamp into [PROB_CLAMP, 1 - PROB_CLAMP]"""
        out = clamp_probability([[0.0, 0.5, 1.0]]).data
        np.testing.assert_array_equal(out, [[PROB_CLAMP, 0.5, 1.0 - PROB_CLAMP]])

    def test_one_hot_and_column(self):
        """Should build one-hot rows and column vectors"""
        np.testing.assert_array_equal(one_hot(np.array([2, 0]), 3), [[0, 0, 1], [1, 0, 0]])
        assert column(np.arange(4)).shape == (4, 1)


@pytest.mark.unit
class TestLosses:
    """Tests for loss values"""

    def test_cross_entropy_uniform(self):
        """Uniform probabilities over K classes should give log K"""
        probs = np.full((4, 3), 1.0 / 3.0)
        targets = one_hot(np.array([0, 1, 2, 0]), 3)
        assert cross_entropy(probs, targets).item() == pytest.approx(math.log(3.0))

    def test_cross_entropy_clamps_zero_probability(self):
        """A zero probability on the target class should give -log(PROB_CLAMP), not inf"""
        loss = cross_entropy([[0.0, 1.0]], [[1.0, 0.0]]).item()
        assert loss == pytest.approx(-math.log(PROB_CLAMP))

    def test_cross_entropy_shape_mismatch(self):
        """Should raise DimensionError when probs and targets differ"""
        with pytest.raises(DimensionError):
            cross_entropy(np.full((2, 3), 1 / 3), np.zeros((2, 2)))

    def test_mse_is_mean_row_squared_distance(self):
        """Should average the per-row squared L2 distance"""
        assert mse([[1.0, 1.0], [0.0, 0.0]], np.zeros((2, 2))).item() == pytest.approx(1.0)

    def test_bce_weighted(self):
        """Zero weights should silence the corresponding samples"""
        yhat = column([0.9, 0.2])
        y = column([1.0, 1.0])
        loss = bce(yhat, y, column([1.0, 0.0])).item()
        assert loss == pytest.approx(-math.log(0.9) / 2.0)

    def test_bce_shape_checks(self):
        """Should reject weights of a different shape"""
        with pytest.raises(DimensionError):
            bce(column([0.5, 0.5]), column([1.0, 0.0]), column([1.0]))


@pytest.mark.unit
class TestGradients:
    """Finite-difference checks of hand-derived backward formulas"""

    @pytest.fixture
    def store(self, rng):
        """Store with a small weight, bias and logit block"""
        store = ParameterStore()
        store.add("w", rng.normal(size=(3, 4)))
        store.add("b", rng.normal(size=(1, 4)))
        return store

    def test_affine_softmax_cross_entropy(self, store, rng):
        """Composite CE through softmax should match central differences"""
        x = rng.normal(size=(5, 3))
        targets = one_hot(rng.integers(0, 4, size=5), 4)

        def loss():
            return cross_entropy(softmax_rows(affine(x, store.tensor("w"), store.tensor("b"))), targets)

        assert fd_check(loss, store) < 1e-4

    def test_sigmoid_bce(self, store, rng):
        """Weighted BCE through sigmoid should match central differences"""
        x = rng.normal(size=(5, 3))
        y = column(rng.uniform(size=5))
        weights = column(rng.uniform(size=5))

        def loss():
            logits = affine(x, store.tensor("w"), store.tensor("b")).columns(0, 1)
            return bce(sigmoid(logits), y, weights)

        assert fd_check(loss, store) < 1e-4

    def test_grad_reverse_flips_and_scales(self):
        """Backward through grad_reverse should multiply the gradient by -lam"""
        store = ParameterStore()
        store.add("v", [[1.0, -2.0]])
        grad_reverse(store.tensor("v"), 0.25).square().sum().backward()
        np.testing.assert_allclose(store["v"].grad, -0.25 * 2.0 * np.array([[1.0, -2.0]]))

    def test_grad_reverse_is_identity_forward(self):
        """Forward value should be unchanged"""
        value = np.array([[0.3, 0.7]])
        np.testing.assert_array_equal(grad_reverse(Tensor(value), 3.0).data, value)
