"""Multilayer perceptrons over a shared ParameterStore."""

from __future__ import annotations

import math
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.exceptions import DimensionError
from app.numerics import ParameterStore, Tensor, affine, as_matrix, clamp_probability, relu, sigmoid, softmax_rows
from app.numerics.tensor import Operand


class MlpSpec(BaseModel):
    """Layer widths from input to output; relu between layers."""

    model_config = ConfigDict(extra="forbid")

    layer_sizes: List[int] = Field(..., min_length=2)
    hidden_activation: Literal["relu"] = "relu"
    output_head: Literal["linear", "softmax", "sigmoid"] = "linear"

    @field_validator("layer_sizes")
    @classmethod
    def _positive_sizes(cls, sizes: List[int]) -> List[int]:
        if any(size < 1 for size in sizes):
            raise ValueError(f"layer sizes must be >= 1, got {sizes}")
        return sizes

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform in ±sqrt(6 / (fan_in + fan_out))."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Mlp:
    """A perceptron whose weights live in `store` under `prefix`."""

    def __init__(
        self,
        spec: MlpSpec,
        store: ParameterStore,
        prefix: str,
        rng: np.random.Generator,
    ) -> None:
        self.spec = spec
        self.store = store
        self.prefix = prefix
        sizes = spec.layer_sizes
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            store.add(f"{prefix}.{i}.w", glorot_uniform(fan_in, fan_out, rng))
            store.add(f"{prefix}.{i}.b", np.zeros((1, fan_out)))

    @property
    def depth(self) -> int:
        return len(self.spec.layer_sizes) - 1

    def forward(self, x: Operand) -> Tensor:
        """Forward pass; sigmoid heads are clamped into (0, 1).

        Raises:
            DimensionError: If x.cols differs from the input width
        """
        h = x if isinstance(x, Tensor) else Tensor(as_matrix(x))
        if h.cols != self.spec.input_dim:
            raise DimensionError(
                f"{self.prefix}: expected input width {self.spec.input_dim}, got {h.cols}",
                shapes=[h.shape, (h.rows, self.spec.input_dim)],
            )
        for i in range(self.depth):
            h = affine(h, self.store.tensor(f"{self.prefix}.{i}.w"), self.store.tensor(f"{self.prefix}.{i}.b"))
            if i < self.depth - 1:
                h = relu(h)
        if self.spec.output_head == "softmax":
            return softmax_rows(h)
        if self.spec.output_head == "sigmoid":
            return clamp_probability(sigmoid(h))
        return h

    __call__ = forward
