"""Differentiable primitives with hand-derived backward formulas.

Every function accepts Tensors or plain array-likes (treated as constants)
and returns a Tensor. Losses reduce to a (1, 1) Tensor by averaging over
samples (rows).
"""

from __future__ import annotations

import numpy as np
from scipy import special

from app.constants import PROB_CLAMP
from app.exceptions import DimensionError
from app.numerics.tensor import Matrix, Operand, Tensor, lift


def matmul(a: Operand, b: Operand) -> Tensor:
    """Matrix product, shape (a.rows, b.cols).

    Raises:
        DimensionError: If a.cols != b.rows
    """
    a, b = lift(a), lift(b)
    if a.cols != b.rows:
        raise DimensionError(
            f"matmul: cannot multiply {a.shape} by {b.shape}",
            shapes=[a.shape, b.shape],
        )

    def backward(g: Matrix) -> None:
        a.accumulate(g @ b.data.T)
        b.accumulate(a.data.T @ g)

    return Tensor.from_op(a.data @ b.data, (a, b), backward, "matmul")


def affine(x: Operand, w: Operand, b: Operand) -> Tensor:
    """x·w with the row vector b added to every row."""
    x, w, b = lift(x), lift(w), lift(b)
    if x.cols != w.rows or b.shape != (1, w.cols):
        raise DimensionError(
            f"affine: incompatible shapes x{x.shape}, w{w.shape}, b{b.shape}",
            shapes=[x.shape, w.shape, b.shape],
        )
    return matmul(x, w) + b


def relu(x: Operand) -> Tensor:
    x = lift(x)
    mask = x.data > 0.0

    def backward(g: Matrix) -> None:
        x.accumulate(g * mask)

    return Tensor.from_op(np.where(mask, x.data, 0.0), (x,), backward, "relu")


def sigmoid(x: Operand) -> Tensor:
    x = lift(x)
    value = special.expit(x.data)

    def backward(g: Matrix) -> None:
        x.accumulate(g * value * (1.0 - value))

    return Tensor.from_op(value, (x,), backward, "sigmoid")


def softmax_rows(x: Operand) -> Tensor:
    """Per-row exp-normalize (max-subtracted); each row sums to 1."""
    x = lift(x)
    value = special.softmax(x.data, axis=1)

    def backward(g: Matrix) -> None:
        inner = np.sum(g * value, axis=1, keepdims=True)
        x.accumulate(value * (g - inner))

    return Tensor.from_op(value, (x,), backward, "softmax_rows")


def clamp(x: Operand, low: float, high: float) -> Tensor:
    """Clip into [low, high]; gradient passes only where the value was inside."""
    x = lift(x)
    inside = (x.data >= low) & (x.data <= high)

    def backward(g: Matrix) -> None:
        x.accumulate(g * inside)

    return Tensor.from_op(np.clip(x.data, low, high), (x,), backward, "clamp")


def clamp_probability(x: Operand) -> Tensor:
    return clamp(x, PROB_CLAMP, 1.0 - PROB_CLAMP)


def log(x: Operand) -> Tensor:
    x = lift(x)

    def backward(g: Matrix) -> None:
        x.accumulate(g / x.data)

    return Tensor.from_op(np.log(x.data), (x,), backward, "log")


def grad_reverse(x: Operand, lam: float) -> Tensor:
    """Identity forward; multiplies the incoming gradient by -lam."""
    x = lift(x)
    factor = -float(lam)

    def backward(g: Matrix) -> None:
        x.accumulate(factor * g)

    return Tensor.from_op(x.data.copy(), (x,), backward, "grad_reverse")


def row_sq_norm(x: Operand) -> Tensor:
    """Per-row squared L2 norm, as (n, 1)."""
    return lift(x).square().sum_rows()


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(
            f"{op}: shape mismatch {a.shape} vs {b.shape}", shapes=[a.shape, b.shape]
        )


def cross_entropy(probs: Operand, targets: Operand) -> Tensor:
    """Mean over rows of -sum_k t_k log p_k, probabilities clamped before the log."""
    probs, targets = lift(probs), lift(targets)
    _require_same_shape(probs, targets, "cross_entropy")
    per_sample = (targets * log(clamp_probability(probs))).sum_rows()
    return -(per_sample.sum() * (1.0 / probs.rows))


def mse(a: Operand, b: Operand) -> Tensor:
    """Mean over rows of the per-row squared L2 distance."""
    a, b = lift(a), lift(b)
    _require_same_shape(a, b, "mse")
    return row_sq_norm(a - b).sum() * (1.0 / a.rows)


def bce(yhat: Operand, y: Operand, weights: Operand) -> Tensor:
    """-mean(w * [y log yhat + (1 - y) log(1 - yhat)]) with yhat clamped.

    `yhat`, `y` and `weights` are column vectors (n, 1) of equal shape.
    """
    yhat, y, weights = lift(yhat), lift(y), lift(weights)
    _require_same_shape(yhat, y, "bce")
    _require_same_shape(yhat, weights, "bce")
    p = clamp_probability(yhat)
    log_likelihood = y * log(p) + (1.0 - y) * log(1.0 - p)
    return -((weights * log_likelihood).sum() * (1.0 / yhat.rows))


def one_hot(labels: np.ndarray, num_classes: int) -> Matrix:
    """Integer labels → (n, num_classes) one-hot Matrix."""
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def column(values: np.ndarray) -> Matrix:
    """1-D array → (n, 1) column Matrix."""
    return np.ascontiguousarray(np.asarray(values, dtype=np.float64).reshape(-1, 1))
