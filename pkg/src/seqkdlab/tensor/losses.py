"""Training losses built on the autodiff core."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .core import Tensor, _make


def cross_entropy_smoothed(
    logits: Tensor,
    targets: np.ndarray,
    smoothing: float = 0.0,
    ignore_index: int | None = None,
) -> Tensor:
    """Label-smoothed cross entropy, averaged over non-ignored positions.

    Per position the loss is
        (1 - eps) * (-log p[target]) + eps * mean_{c != target} (-log p[c]),
    i.e. cross entropy against the distribution that puts 1-eps on the
    target and spreads eps uniformly over the other V-1 classes.
    """
    n, v = logits.data.shape[-2], logits.data.shape[-1]
    if v < 2:
        raise ShapeError(f"need at least 2 classes, got {v}")
    flat_logits = logits.data.reshape(-1, v)
    flat_targets = np.asarray(targets).reshape(-1)
    if flat_targets.shape[0] != flat_logits.shape[0]:
        raise ShapeError(
            f"targets {flat_targets.shape} do not match logits rows {flat_logits.shape[0]}"
        )

    if ignore_index is None:
        valid = np.ones(flat_targets.shape[0], dtype=bool)
    else:
        valid = flat_targets != ignore_index
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ShapeError("no non-ignored target positions")

    shifted = flat_logits - flat_logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - logz

    rows = np.arange(flat_targets.shape[0])
    safe_targets = np.where(valid, flat_targets, 0)
    nll_target = -logp[rows, safe_targets]
    nll_rest = (-logp.sum(axis=-1) - nll_target) / (v - 1)
    per_pos = (1.0 - smoothing) * nll_target + smoothing * nll_rest
    loss = per_pos[valid].sum() / n_valid

    # smoothed one-hot the CE is taken against
    q_off = smoothing / (v - 1)

    def vjp(g):
        p = np.exp(logp)
        grad = p + 0.0
        grad -= q_off
        grad[rows, safe_targets] -= (1.0 - smoothing) - q_off
        grad[~valid] = 0.0
        grad *= float(g) / n_valid
        return (grad.reshape(logits.shape).astype(logits.dtype),)

    return _make(np.asarray(loss, dtype=logits.dtype), (logits,), vjp)
