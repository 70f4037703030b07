"""Shared test utilities: finite-difference gradient oracle."""
from __future__ import annotations

import numpy as np

from seqkdlab.tensor import Tensor


def finite_diff_grad(fn, arrays: list[np.ndarray], h: float = 1e-5) -> list[np.ndarray]:
    """Central finite differences of scalar fn(*arrays) w.r.t. each array."""
    grads = []
    for k, base in enumerate(arrays):
        g = np.zeros_like(base, dtype=np.float64)
        flat = g.reshape(-1)
        for i in range(base.size):
            plus = [a.copy() for a in arrays]
            minus = [a.copy() for a in arrays]
            plus[k].reshape(-1)[i] += h
            minus[k].reshape(-1)[i] -= h
            flat[i] = (fn(*plus) - fn(*minus)) / (2.0 * h)
        grads.append(g)
    return grads


def autodiff_vs_fd(build_loss, arrays: list[np.ndarray], h: float = 1e-5):
    """Return (autodiff grads, finite-difference grads) for the same loss.

    build_loss maps a list of Tensors to a scalar Tensor and must be a pure
    function of its inputs so both evaluation routes see identical math.
    """
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build_loss(tensors)
    loss.backward()
    auto = [t.grad.copy() for t in tensors]

    def scalar_fn(*arrs):
        ts = [Tensor(a) for a in arrs]
        return float(build_loss(ts).data)

    fd = finite_diff_grad(scalar_fn, [a.copy() for a in arrays], h=h)
    return auto, fd


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return float(np.abs(a - b).max() / denom)
