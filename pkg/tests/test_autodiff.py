"""Gradient correctness of the autodiff core against finite differences."""
from __future__ import annotations

import numpy as np
import pytest

from seqkdlab import tensor as T
from seqkdlab.errors import ShapeError
from seqkdlab.tensor import Tensor

from helpers import autodiff_vs_fd, rel_err

TOL = 1e-4  # relative, double precision, h=1e-5


def test_grad_of_sum_is_ones():
    p = Tensor(np.random.default_rng(0).normal(size=(3, 4)), requires_grad=True)
    loss = p.sum()
    loss.backward()
    assert np.array_equal(p.grad, np.ones((3, 4)))


def test_grad_of_half_square_is_identity():
    rng = np.random.default_rng(1)
    data = rng.normal(size=(5,))
    p = Tensor(data.copy(), requires_grad=True)
    loss = (p * p).sum() * 0.5
    loss.backward()
    np.testing.assert_allclose(p.grad, data, rtol=1e-12)


def test_unreachable_param_gets_zero_grad():
    a = Tensor(np.ones(3), requires_grad=True)
    b = Tensor(np.ones(3), requires_grad=True)
    grads = T.autodiff_grad(a.sum(), [a, b])
    assert np.array_equal(grads[0], np.ones(3))
    assert np.array_equal(grads[1], np.zeros(3))


def test_backward_rejects_non_scalar():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ShapeError):
        (a * a).backward()


def test_two_layer_network_matches_finite_differences():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(4, 6))
    w1 = rng.normal(size=(6, 8)) * 0.3
    b1 = rng.normal(size=(8,)) * 0.1
    w2 = rng.normal(size=(8, 3)) * 0.3
    b2 = rng.normal(size=(3,)) * 0.1

    def loss_fn(ts):
        xv, w1v, b1v, w2v, b2v = ts
        h = T.tanh(xv @ w1v + b1v)
        out = h @ w2v + b2v
        return (out * out).mean()

    auto, fd = autodiff_vs_fd(loss_fn, [x, w1, b1, w2, b2])
    for a, f in zip(auto, fd):
        assert rel_err(a, f) < TOL


@pytest.mark.parametrize("seed", range(3))
def test_elementwise_and_reduction_ops(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 5)) + 3.0  # keep log/div away from 0
    b = rng.normal(size=(3, 5)) + 3.0

    def loss_fn(ts):
        av, bv = ts
        out = T.log(av) * bv + av / bv - T.exp(av * 0.1)
        return out.mean() + T.relu(av - 3.0).sum() * 0.1

    auto, fd = autodiff_vs_fd(loss_fn, [a, b])
    for g, f in zip(auto, fd):
        assert rel_err(g, f) < TOL


def test_broadcast_add_and_mul_grads():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(2, 4, 5))
    b = rng.normal(size=(5,))

    def loss_fn(ts):
        av, bv = ts
        return ((av + bv) * bv).sum()

    auto, fd = autodiff_vs_fd(loss_fn, [a, b])
    for g, f in zip(auto, fd):
        assert rel_err(g, f) < TOL


def test_batched_matmul_grads():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(2, 3, 4))
    b = rng.normal(size=(4, 6))

    def loss_fn(ts):
        return (ts[0] @ ts[1]).sum()

    auto, fd = autodiff_vs_fd(loss_fn, [a, b])
    for g, f in zip(auto, fd):
        assert rel_err(g, f) < TOL


def test_softmax_and_log_softmax_grads():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(3, 7))
    w = rng.normal(size=(3, 7))

    def loss_fn(ts):
        xv, wv = ts
        return (T.softmax(xv) * wv).sum() + (T.log_softmax(xv) * wv).mean()

    auto, fd = autodiff_vs_fd(loss_fn, [x, w])
    for g, f in zip(auto, fd):
        assert rel_err(g, f) < TOL


def test_concat_and_transpose_grads():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(2, 3))
    b = rng.normal(size=(2, 5))

    def loss_fn(ts):
        cat = T.concat([ts[0], ts[1]], axis=1)
        return (T.swapaxes(cat, 0, 1) * T.swapaxes(cat, 0, 1)).sum()

    auto, fd = autodiff_vs_fd(loss_fn, [a, b])
    for g, f in zip(auto, fd):
        assert rel_err(g, f) < TOL


def test_backward_is_deterministic():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(4, 4))
    w = rng.normal(size=(4, 4))

    def run():
        xv = Tensor(x.copy(), requires_grad=True)
        wv = Tensor(w.copy(), requires_grad=True)
        h = T.tanh(xv @ wv)
        loss = (h * h).sum() + (xv * wv).mean() + T.softmax(h).sum()
        loss.backward()
        return xv.grad.copy(), wv.grad.copy()

    g1x, g1w = run()
    g2x, g2w = run()
    assert np.array_equal(g1x, g2x)
    assert np.array_equal(g1w, g2w)
