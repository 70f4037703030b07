#!/usr/bin/env python3
"""The numeric substrate: tape-based gradients checked against finite
differences, the label-smoothed loss, Adam, and the warmup schedule."""
import numpy as np

from seqkdlab import tensor as T
from seqkdlab.tensor import (
    LrSchedule,
    OptimizerState,
    Tensor,
    adam_step,
    cross_entropy_smoothed,
    noam_lr,
)

rng = np.random.default_rng(0)

# --- reverse-mode gradients vs central finite differences -------------------
x = rng.normal(size=(4, 6))
w = rng.normal(size=(6, 3)) * 0.4


def loss_value(xv, wv):
    h = T.tanh(Tensor(xv) @ Tensor(wv))
    return float(T.softmax(h).sum().data)


xt = Tensor(x.copy(), requires_grad=True)
wt = Tensor(w.copy(), requires_grad=True)
loss = T.softmax(T.tanh(xt @ wt)).sum()
loss.backward()

h = 1e-6
i, j = 2, 1
probe = w.copy()
probe[i, j] += h
up = loss_value(x, probe)
probe[i, j] -= 2 * h
down = loss_value(x, probe)
fd = (up - down) / (2 * h)
print(f"autodiff dL/dw[{i},{j}] = {wt.grad[i, j]:+.8f}")
print(f"finite difference      = {fd:+.8f}")

# --- label-smoothed cross entropy -------------------------------------------
logits = Tensor(np.zeros((1, 2)))
ce = cross_entropy_smoothed(logits, np.array([0]), smoothing=0.1)
print(f"\nuniform 2-class CE with smoothing 0.1 = {ce.item():.6f} (= ln 2)")

# --- Adam on a quadratic bowl ------------------------------------------------
params = {"w": np.array([3.0, -2.0])}
state = OptimizerState()
for step in range(1, 201):
    grad = {"w": params["w"].copy()}  # d/dw of 0.5 * ||w||^2
    adam_step(params, grad, state, lr=0.05)
print(f"\nAdam on 0.5*||w||^2 after 200 steps: w = {np.round(params['w'], 5)}")

# --- warmup schedule ----------------------------------------------------------
sched = LrSchedule(factor=1.0, warmup=25000, d_model=256)
print("\nwarmup schedule (factor 1.0, warmup 25000, d_model 256):")
for step in (1, 12500, 25000, 50000, 100000):
    print(f"  step {step:>6d}: lr = {noam_lr(step, sched):.6e}")
print("peak sits exactly at the warmup step; decay is inverse-sqrt after.")
