"""Adam optimizer and the inverse-sqrt warmup learning-rate schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NumericError, ShapeError


@dataclass
class LrSchedule:
    """lr(step) = factor * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)."""

    factor: float = 1.0
    warmup: int = 25000
    d_model: int = 256

    def __post_init__(self):
        if self.factor <= 0 or self.warmup < 1 or self.d_model < 1:
            raise DomainError("factor > 0, warmup >= 1, d_model >= 1 required")


def noam_lr(step: int, schedule: LrSchedule) -> float:
    if step < 1:
        raise DomainError(f"step must be >= 1, got {step}")
    s = float(step)
    return (
        schedule.factor
        * schedule.d_model ** -0.5
        * min(s ** -0.5, s * schedule.warmup ** -1.5)
    )


@dataclass
class OptimizerState:
    """Per-parameter Adam moments plus the shared step counter."""

    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
) -> None:
    """One in-place Adam update with bias correction."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape} for {name}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        mhat = m / bc1
        vhat = v / bc2
        p -= lr * mhat / (np.sqrt(vhat) + state.eps)
