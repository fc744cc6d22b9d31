"""Dense float64 matrices, reverse-mode gradients, finite-difference checks and SGD."""

from app.numerics.gradcheck import fd_check
from app.numerics.ops import (
    affine,
    bce,
    clamp,
    clamp_probability,
    column,
    cross_entropy,
    grad_reverse,
    log,
    matmul,
    mse,
    one_hot,
    relu,
    row_sq_norm,
    sigmoid,
    softmax_rows,
)
from app.numerics.params import Parameter, ParameterStore, sgd_step
from app.numerics.tensor import Matrix, Tensor, as_matrix, backward

__all__ = [
    # tensor
    "Matrix",
    "Tensor",
    "as_matrix",
    "backward",
    # ops
    "affine",
    "bce",
    "clamp",
    "clamp_probability",
    "column",
    "cross_entropy",
    "grad_reverse",
    "log",
    "matmul",
    "mse",
    "one_hot",
    "relu",
    "row_sq_norm",
    "sigmoid",
    "softmax_rows",
    # params
    "Parameter",
    "ParameterStore",
    "sgd_step",
    # gradcheck
    "fd_check",
]
