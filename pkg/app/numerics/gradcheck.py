"""Central finite-difference gradient checker."""

from __future__ import annotations

from typing import Callable, Optional

from app.constants import FD_DENOMINATOR_FLOOR
from app.exceptions import UsslError
from app.numerics.params import ParameterStore
from app.numerics.tensor import Tensor


def fd_check(
    loss_fn: Callable[[], Tensor],
    store: ParameterStore,
    eps: float = 1e-5,
    names: Optional[list[str]] = None,
) -> float:
    """Compare analytic gradients against central differences.

    `loss_fn` must rebuild the scalar loss from the store's current values on
    every call. Relative error per entry is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).

    Args:
        loss_fn: Zero-argument callable returning a (1, 1) Tensor
        store: Parameters to perturb
        eps: Perturbation half-width
        names: Restrict the check to these entries (default: all)

    Returns:
        Maximum relative error over all checked entries

    Side effects:
        Leaves the store's values unchanged and its gradients zeroed.
    """
    if eps <= 0:
        raise UsslError("eps must be positive", details={"eps": eps})

    store.zero_grad()
    loss_fn().backward()
    analytic = {name: store[name].grad.copy() for name in store}
    store.zero_grad()

    worst = 0.0
    for name in names if names is not None else store.names():
        value = store[name].value
        flat = value.reshape(-1)
        grad = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            upper = loss_fn().item()
            flat[i] = original - eps
            lower = loss_fn().item()
            flat[i] = original
            numeric = (upper - lower) / (2.0 * eps)
            denom = max(abs(grad[i]), abs(numeric), FD_DENOMINATOR_FLOOR)
            worst = max(worst, abs(grad[i] - numeric) / denom)
    return float(worst)
