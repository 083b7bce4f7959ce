"""Central finite-difference gradient checks."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .tensor import Tape, Tensor


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def finite_difference_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    eps: float = 1e-6,
    coords: np.ndarray | None = None,
) -> float:
    """Max over coordinates of ``|analytic - central diff| / max(1, |analytic|)``.

    ``f`` maps ``x`` to a scalar Tensor. ``coords`` restricts the check to a
    subset of flat indices (all coordinates by default).
    """
    if not 0.0 < eps <= 1e-3:
        raise ValueError(f"eps must lie in (0, 1e-3], got {eps}")
    was = x.requires_grad
    saved_grad = None if x.grad is None else x.grad.copy()
    x.set_requires_grad(True)
    x.grad[...] = 0.0
    with Tape() as tape:
        loss = f(x)
    tape.backward(loss, only=[x])
    analytic_full = x.grad.reshape(-1).copy()
    if saved_grad is None:
        x.grad = None
    else:
        x.grad[...] = saved_grad
    x.requires_grad = was

    idx = np.arange(x.size) if coords is None else np.asarray(coords, dtype=np.int64)
    flat = x.data.reshape(-1)
    numeric = np.empty(len(idx))
    for k, c in enumerate(idx):
        orig = flat[c]
        flat[c] = orig + eps
        fp = float(f(x).data)
        flat[c] = orig - eps
        fm = float(f(x).data)
        flat[c] = orig
        numeric[k] = (fp - fm) / (2.0 * eps)
    return _relative_error(analytic_full[idx], numeric)


def check_parameters(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-6,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
) -> dict[str, float]:
    """Finite-difference check of a closure against each named parameter.

    With ``max_coords`` set, each tensor is probed on at most that many
    coordinates drawn by ``rng``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    errors: dict[str, float] = {}
    for name, p in params.items():
        coords = None
        if max_coords is not None and p.size > max_coords:
            coords = rng.choice(p.size, size=max_coords, replace=False)
        errors[name] = finite_difference_check(lambda _x: f(), p, eps=eps, coords=coords)
    return errors
