"""Adam optimiser with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .._jit import USE_NUMBA, njit
from ..errors import DivergedTrainingError
from .tensor import Tensor


def _adam_update_np(data, grad, m, v, lr, b1, b2, eps, c1, c2):
    m *= b1
    m += (1.0 - b1) * grad
    v *= b2
    v += (1.0 - b2) * grad * grad
    data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    grad[...] = 0.0


@njit
def _adam_update_nb(data, grad, m, v, lr, b1, b2, eps, c1, c2):
    d = data.reshape(-1)
    g = grad.reshape(-1)
    mm = m.reshape(-1)
    vv = v.reshape(-1)
    for k in range(d.size):
        gk = g[k]
        mm[k] = b1 * mm[k] + (1.0 - b1) * gk
        vv[k] = b2 * vv[k] + (1.0 - b2) * gk * gk
        d[k] -= lr * (mm[k] / c1) / (np.sqrt(vv[k] / c2) + eps)
        g[k] = 0.0


_adam_update = _adam_update_nb if USE_NUMBA else _adam_update_np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_param(cls, param: Tensor) -> "AdamState":
        return cls(m=np.zeros_like(param.data), v=np.zeros_like(param.data))


def adam_step(param: Tensor, state: AdamState, lr: float, name: str | None = None) -> None:
    """Apply one Adam update from ``param.grad`` and zero the gradient."""
    if param.grad is None:
        param.grad = np.zeros_like(param.data)
    if not np.isfinite(param.grad).all():
        label = name or param.name or "<unnamed>"
        raise DivergedTrainingError(f"non-finite gradient in parameter {label}", name=label)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    _adam_update(
        param.data, param.grad, state.m, state.v, float(lr), b1, b2, state.eps,
        1.0 - b1**state.t, 1.0 - b2**state.t,
    )


@dataclass
class Adam:
    """Adam over a named set of parameters sharing one learning rate."""

    params: Mapping[str, Tensor]
    lr: float
    states: dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, p in self.params.items():
            self.states.setdefault(name, AdamState.for_param(p))

    def step(self) -> None:
        for name, p in self.params.items():
            adam_step(p, self.states[name], self.lr, name=name)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()
