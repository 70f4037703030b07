from .core import (
    Tensor,
    add,
    autodiff_grad,
    check_finite,
    concat,
    no_grad,
    conv1d,
    div,
    dropout,
    embedding,
    exp,
    layer_norm,
    log,
    log_softmax,
    matmul,
    mul,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    softmax,
    sub,
    swapaxes,
    tanh,
    transpose,
)
from .losses import cross_entropy_smoothed
from .optim import LrSchedule, OptimizerState, adam_step, noam_lr
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "add",
    "autodiff_grad",
    "check_finite",
    "concat",
    "no_grad",
    "conv1d",
    "div",
    "dropout",
    "embedding",
    "exp",
    "layer_norm",
    "log",
    "log_softmax",
    "matmul",
    "mul",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "reshape",
    "softmax",
    "sub",
    "swapaxes",
    "tanh",
    "transpose",
    "cross_entropy_smoothed",
    "LrSchedule",
    "OptimizerState",
    "adam_step",
    "noam_lr",
    "load_checkpoint",
    "save_checkpoint",
]
