"""Named parameter storage and the SGD update rule."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Optional

import numpy as np

from app.exceptions import DataError, DimensionError, UsslError
from app.logging import get_logger
from app.numerics.tensor import Matrix, Tensor, as_matrix

logger = get_logger(__name__)


@dataclass
class Parameter:
    """One store entry: value and gradient of identical shape."""

    value: Matrix
    grad: Matrix


class ParameterStore:
    """Ordered mapping of unique names to parameters.

    Networks register their weights under a name prefix ("F.", "C.", ...);
    `tensor(name)` hands out a leaf that feeds gradients back into the
    entry's `grad` buffer during `backward()`.
    """

    def __init__(self) -> None:
        self._entries: dict[str, Parameter] = {}

    def add(self, name: str, value: object) -> None:
        """Register a new entry with zero gradient.

        Raises:
            UsslError: If the name is already taken
        """
        if name in self._entries:
            raise UsslError(f"Duplicate parameter name '{name}'")
        matrix = as_matrix(value).copy()
        self._entries[name] = Parameter(value=matrix, grad=np.zeros_like(matrix))

    def tensor(self, name: str) -> Tensor:
        """Leaf Tensor bound to the entry's value and gradient sink."""
        entry = self._entries[name]
        return Tensor(entry.value, sink=entry.grad)

    def __getitem__(self, name: str) -> Parameter:
        return self._entries[name]

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def names(self, prefix: Optional[str] = None) -> list[str]:
        """Entry names, optionally restricted to `prefix.`"""
        if prefix is None:
            return list(self._entries)
        return [n for n in self._entries if n.startswith(prefix + ".")]

    def items(self) -> Iterator[tuple[str, Parameter]]:
        return iter(self._entries.items())

    def zero_grad(self) -> None:
        for entry in self._entries.values():
            entry.grad.fill(0.0)

    def fill(self, value: float, prefix: Optional[str] = None) -> None:
        """Overwrite parameter values (all, or under `prefix`) with a constant."""
        for name in self.names(prefix):
            self._entries[name].value.fill(value)

    def jitter(self, rng: np.random.Generator, scale: float, prefix: Optional[str] = None) -> None:
        """Add N(0, scale²) noise to every value (all, or under `prefix`).

        Moves a freshly initialized network off the ReLU kinks that zero
        biases put exactly at 0 before a finite-difference check.
        """
        for name in self.names(prefix):
            value = self._entries[name].value
            value += rng.normal(0.0, scale, size=value.shape)

    def set_value(self, name: str, value: object) -> None:
        """Replace an entry's value in place, keeping its shape."""
        matrix = as_matrix(value)
        entry = self._entries[name]
        if matrix.shape != entry.value.shape:
            raise DimensionError(
                f"Parameter '{name}' has shape {entry.value.shape}, got {matrix.shape}",
                shapes=[entry.value.shape, matrix.shape],
            )
        entry.value[...] = matrix

    def state_dict(self) -> dict[str, Matrix]:
        """Copies of all values, keyed by name."""
        return {name: entry.value.copy() for name, entry in self._entries.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Load values for every registered name; shapes must match exactly."""
        missing = [name for name in self._entries if name not in state]
        if missing:
            raise DataError("Parameter file is missing entries", details={"missing": missing})
        for name in self._entries:
            self.set_value(name, state[name])

    def copy(self) -> "ParameterStore":
        clone = ParameterStore()
        for name, entry in self._entries.items():
            clone._entries[name] = Parameter(value=entry.value.copy(), grad=entry.grad.copy())
        return clone

    def save(self, path: Path) -> None:
        """Write all values to an uncompressed .npz (named, row-major float64)."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            np.savez(f, **self.state_dict())
        logger.debug("Parameters saved", path=str(path), entries=len(self))

    def load(self, path: Path) -> None:
        """Load values written by `save`; bit-exact."""
        if not path.exists():
            raise DataError(f"Parameter file not found: {path}", details={"path": str(path)})
        with np.load(path, allow_pickle=False) as data:
            self.load_state_dict({name: data[name] for name in data.files})
        logger.debug("Parameters loaded", path=str(path), entries=len(self))


def sgd_step(store: ParameterStore, lr: float) -> None:
    """value ← value − lr·grad for every entry, then zero all gradients."""
    if lr <= 0:
        raise UsslError("Learning rate must be positive", details={"lr": lr})
    for _, entry in store.items():
        entry.value -= lr * entry.grad
    store.zero_grad()
