"""Tensor nodes and the define-by-run gradient tape."""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]

_ACTIVE_TAPES: list["Tape"] = []


class Tensor:
    """A float64 array that can take part in reverse-mode differentiation.

    Leaves (tensors not produced by a recorded op) that require grad carry a
    ``grad`` array of the same shape, zero-initialised, into which
    :meth:`Tape.backward` accumulates.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_is_leaf")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self.name = name
        self._is_leaf = True

    @classmethod
    def _from_op(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        out._is_leaf = False
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def values(self) -> np.ndarray:
        """Flat view of the data."""
        return self.data.reshape(-1)

    @property
    def is_leaf(self) -> bool:
        return self._is_leaf

    def zero_grad(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad[...] = 0.0

    def set_requires_grad(self, flag: bool) -> "Tensor":
        self.requires_grad = bool(flag)
        if flag and self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        from . import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of primitive ops executed while the tape is active.

    Use as a context manager; every op whose inputs require grad is appended
    in execution order, so replaying the records backwards visits each node
    only after all of its consumers.
    """

    def __init__(self) -> None:
        self.records: list[tuple[Tensor, tuple[Tensor, ...], BackwardFn]] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _ACTIVE_TAPES.pop()
        assert popped is self

    def __len__(self) -> int:
        return len(self.records)

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], fn: BackwardFn) -> None:
        self.records.append((out, inputs, fn))

    def backward(self, loss: Tensor, only: Iterable[Tensor] | None = None) -> None:
        """Accumulate d(loss)/d(leaf) into ``leaf.grad`` for every leaf on the path.

        ``only`` restricts accumulation to the given leaves; gradients for
        other leaves are computed but dropped. The tape may be replayed again
        with a different loss.
        """
        if loss.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        allowed = None if only is None else {id(t) for t in only}
        seed = np.ones_like(loss.data)
        if loss._is_leaf:
            _accumulate_leaf(loss, seed, allowed)
            return
        pending: dict[int, np.ndarray] = {id(loss): seed}
        for out, inputs, fn in reversed(self.records):
            g = pending.pop(id(out), None)
            if g is None:
                continue
            for inp, gi in zip(inputs, fn(g)):
                if gi is None or not inp.requires_grad:
                    continue
                if inp._is_leaf:
                    _accumulate_leaf(inp, gi, allowed)
                else:
                    key = id(inp)
                    prev = pending.get(key)
                    pending[key] = gi if prev is None else prev + gi


def _accumulate_leaf(leaf: Tensor, g: np.ndarray, allowed: set[int] | None) -> None:
    if allowed is not None and id(leaf) not in allowed:
        return
    if leaf.grad is None:
        leaf.grad = np.zeros_like(leaf.data)
    leaf.grad += g


def active_tape() -> Tape | None:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def backward(loss: Tensor, tape: Tape, only: Iterable[Tensor] | None = None) -> None:
    tape.backward(loss, only=only)


def make_result(data: np.ndarray, inputs: tuple[Tensor, ...], fn: BackwardFn) -> Tensor:
    """Wrap an op result and record it on the active tape when needed."""
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._from_op(data, needs)
    if needs:
        tape.record(out, inputs, fn)
    return out
