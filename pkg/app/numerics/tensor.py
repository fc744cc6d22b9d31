"""Matrix container and reverse-mode differentiation tape.

A `Matrix` is a C-contiguous 2-D float64 numpy array. A `Tensor` wraps one
Matrix and records how it was produced, so that `backward()` can replay the
recorded operations in reverse and accumulate gradients.

Leaf tensors handed out by a `ParameterStore` carry a *sink*: the store's
gradient array for that entry. `backward()` adds the leaf's gradient into
its sink, which is what makes repeated backward passes accumulate until the
store is zeroed.

Broadcasting is limited to three cases: identical shapes, a (1, c) row
against an (n, c) matrix, and a (1, 1) scalar against anything.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from app.exceptions import DimensionError, NumericError

Matrix = npt.NDArray[np.float64]
Operand = Union["Tensor", Matrix, float, int]
BackwardFn = Callable[[Matrix], None]


def as_matrix(data: object) -> Matrix:
    """Coerce array-like data into a finite, C-contiguous 2-D float64 array.

    Scalars become (1, 1); 1-D sequences become a single row.

    Raises:
        DimensionError: If the input has more than two dimensions
        NumericError: If any entry is NaN or infinite
    """
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(
            f"Matrix must be 2-D, got {arr.ndim}-D", shapes=[arr.shape]
        )
    ensure_finite(arr, "as_matrix")
    return np.ascontiguousarray(arr)


def ensure_finite(arr: np.ndarray, op: str) -> None:
    """Raise NumericError if `arr` holds NaN or Inf."""
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"Non-finite values produced by {op}", details={"op": op})


def _unbroadcast(grad: Matrix, shape: tuple[int, ...]) -> Matrix:
    """Reduce an output gradient back to an operand's (possibly broadcast) shape."""
    if grad.shape == shape:
        return grad
    if shape == (1, 1):
        return grad.sum(keepdims=True).reshape(1, 1)
    if shape[0] == 1 and shape[1] == grad.shape[1]:
        return grad.sum(axis=0, keepdims=True)
    raise DimensionError("Cannot reduce gradient", shapes=[grad.shape, shape])


def _check_broadcast(a: tuple[int, ...], b: tuple[int, ...], op: str) -> None:
    if a == b or a == (1, 1) or b == (1, 1):
        return
    if a[1] == b[1] and (a[0] == 1 or b[0] == 1):
        return
    raise DimensionError(
        f"{op}: incompatible shapes {a} and {b}", shapes=[a, b]
    )


class Tensor:
    """A Matrix node in a differentiable computation."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward", "_sink")

    # ndarray <op> Tensor defers to the reflected Tensor method
    __array_ufunc__ = None

    def __init__(
        self,
        data: object,
        *,
        requires_grad: bool = False,
        sink: Optional[Matrix] = None,
    ) -> None:
        self.data: Matrix = data if _is_matrix(data) else as_matrix(data)
        self.grad: Optional[Matrix] = None
        self.requires_grad = requires_grad or sink is not None
        self.op = "leaf"
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._sink = sink

    @classmethod
    def from_op(
        cls,
        data: Matrix,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Build an interior node; checks finiteness of the produced value."""
        ensure_finite(data, op)
        out = cls.__new__(cls)
        out.data = np.ascontiguousarray(data, dtype=np.float64)
        out.grad = None
        out.requires_grad = any(p.requires_grad for p in parents)
        out.op = op
        out._parents = tuple(parents)
        out._backward = backward if out.requires_grad else None
        out._sink = None
        return out

    # Basic properties

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        """Return the value of a (1, 1) tensor as a Python float."""
        if self.data.size != 1:
            raise DimensionError("item() requires a 1x1 tensor", shapes=[self.shape])
        return float(self.data[0, 0])

    def numpy(self) -> Matrix:
        """Return a copy of the underlying Matrix."""
        return self.data.copy()

    def detach(self) -> "Tensor":
        """Same value, cut from the graph."""
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    # Gradient plumbing

    def accumulate(self, grad: Matrix) -> None:
        """Add `grad` into this node's gradient buffer (no-op for constants)."""
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def backward(self) -> None:
        """Propagate d(self)/d(leaf) to every reachable leaf.

        `self` must be a (1, 1) scalar loss. Parameter leaves add their
        gradient into the owning store; constants receive nothing.
        """
        if self.data.size != 1:
            raise DimensionError("backward() requires a scalar loss", shapes=[self.shape])
        order = _topological_order(self)
        for node in order:
            node.grad = None
        if not self.requires_grad:
            return
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        for node in order:
            if node._sink is not None and node.grad is not None:
                node._sink += node.grad

    # Arithmetic

    def __add__(self, other: Operand) -> "Tensor":
        other = lift(other)
        _check_broadcast(self.shape, other.shape, "add")
        a, b = self, other

        def backward(g: Matrix) -> None:
            a.accumulate(_unbroadcast(g, a.shape))
            b.accumulate(_unbroadcast(g, b.shape))

        return Tensor.from_op(a.data + b.data, (a, b), backward, "add")

    def __radd__(self, other: Operand) -> "Tensor":
        return lift(other) + self

    def __neg__(self) -> "Tensor":
        a = self

        def backward(g: Matrix) -> None:
            a.accumulate(-g)

        return Tensor.from_op(-a.data, (a,), backward, "neg")

    def __sub__(self, other: Operand) -> "Tensor":
        return self + (-lift(other))

    def __rsub__(self, other: Operand) -> "Tensor":
        return lift(other) + (-self)

    def __mul__(self, other: Operand) -> "Tensor":
        other = lift(other)
        _check_broadcast(self.shape, other.shape, "mul")
        a, b = self, other

        def backward(g: Matrix) -> None:
            a.accumulate(_unbroadcast(g * b.data, a.shape))
            b.accumulate(_unbroadcast(g * a.data, b.shape))

        return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")

    def __rmul__(self, other: Operand) -> "Tensor":
        return lift(other) * self

    def __matmul__(self, other: Operand) -> "Tensor":
        from app.numerics.ops import matmul

        return matmul(self, other)

    # Reductions and slicing

    def sum(self) -> "Tensor":
        """Sum of all entries, as (1, 1)."""
        a = self

        def backward(g: Matrix) -> None:
            a.accumulate(np.full(a.shape, g[0, 0]))

        return Tensor.from_op(a.data.sum(keepdims=True).reshape(1, 1), (a,), backward, "sum")

    def mean(self) -> "Tensor":
        """Mean of all entries, as (1, 1)."""
        return self.sum() * (1.0 / self.data.size)

    def sum_rows(self) -> "Tensor":
        """Per-row sum, as (n, 1)."""
        a = self

        def backward(g: Matrix) -> None:
            a.accumulate(np.broadcast_to(g, a.shape).copy())

        return Tensor.from_op(a.data.sum(axis=1, keepdims=True), (a,), backward, "sum_rows")

    def columns(self, start: int, stop: int) -> "Tensor":
        """Column slice [start, stop)."""
        a = self

        def backward(g: Matrix) -> None:
            full = np.zeros_like(a.data)
            full[:, start:stop] = g
            a.accumulate(full)

        return Tensor.from_op(a.data[:, start:stop].copy(), (a,), backward, "columns")

    def square(self) -> "Tensor":
        a = self

        def backward(g: Matrix) -> None:
            a.accumulate(2.0 * a.data * g)

        return Tensor.from_op(a.data * a.data, (a,), backward, "square")

    def exp(self) -> "Tensor":
        a = self
        value = np.exp(a.data)

        def backward(g: Matrix) -> None:
            a.accumulate(value * g)

        return Tensor.from_op(value, (a,), backward, "exp")


def _is_matrix(data: object) -> bool:
    return (
        isinstance(data, np.ndarray)
        and data.ndim == 2
        and data.dtype == np.float64
        and data.flags.c_contiguous
        and bool(np.all(np.isfinite(data)))
    )


def lift(value: Operand) -> Tensor:
    """Wrap a non-Tensor operand as a constant node."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, Iterable[Tensor]]] = [(root, iter(root._parents))]
    seen.add(id(root))
    while stack:
        node, parents = stack[-1]
        for parent in parents:
            if id(parent) not in seen:
                seen.add(id(parent))
                stack.append((parent, iter(parent._parents)))
                break
        else:
            stack.pop()
            order.append(node)
    return order


def backward(loss: Tensor) -> None:
    """Functional alias of `Tensor.backward`."""
    loss.backward()
