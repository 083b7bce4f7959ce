"""Reverse-mode automatic differentiation on float64 numpy arrays."""

from . import ops
from .gradcheck import check_parameters, finite_difference_check
from .ops import (
    add,
    concat,
    elementwise,
    getitem,
    layer_norm,
    linear,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    scale,
    softmax,
    square,
    stack,
    sub,
    sum,
    tanh,
    transpose,
)
from .optim import Adam, AdamState, adam_step
from .tensor import Tape, Tensor, active_tape, as_tensor, backward

__all__ = [
    "Adam",
    "AdamState",
    "Tape",
    "Tensor",
    "active_tape",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "check_parameters",
    "concat",
    "elementwise",
    "finite_difference_check",
    "getitem",
    "layer_norm",
    "linear",
    "matmul",
    "mean",
    "mul",
    "neg",
    "ops",
    "relu",
    "reshape",
    "scale",
    "softmax",
    "square",
    "stack",
    "sub",
    "sum",
    "tanh",
    "transpose",
]
