"""Naive brute-force oracles for the numeric kernels.

Every fast implementation must agree elementwise with a direct
loop/formula transcription to within 1e-12 in double precision.
"""

import importlib

import numpy as np
import pytest

from hexastyle.nn import kernels
from hexastyle.nn import kernels_np
from hexastyle.nn import layers as L

N_CASES = 100
ATOL = 1e-12


def _same_pads(k):
    return (k - 1) // 2, (k - 1) - (k - 1) // 2


def naive_conv2d(x, kernel, bias):
    b, h, w, cin = x.shape
    kh, kw, _, cout = kernel.shape
    pt, _ = _same_pads(kh)
    pl, _ = _same_pads(kw)
    y = np.zeros((b, h, w, cout))
    for n in range(b):
        for i in range(h):
            for j in range(w):
                for p in range(kh):
                    for q in range(kw):
                        ii, jj = i + p - pt, j + q - pl
                        if 0 <= ii < h and 0 <= jj < w:
                            for ci in range(cin):
                                y[n, i, j, :] += x[n, ii, jj, ci] * kernel[p, q, ci, :]
    return y + bias


def naive_avgpool(x):
    b, h, w, c = x.shape
    y = np.zeros((b, h // 2, w // 2, c))
    for i in range(h // 2):
        for j in range(w // 2):
            y[:, i, j, :] = x[:, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2, :].mean(axis=(1, 2))
    return y


def naive_maxpool(x):
    b, h, w, c = x.shape
    y = np.zeros((b, h // 2, w // 2, c))
    for i in range(h // 2):
        for j in range(w // 2):
            y[:, i, j, :] = x[:, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2, :].max(axis=(1, 2))
    return y


def naive_dense(x, weight, bias):
    out = np.zeros(x.shape[:-1] + (weight.shape[1],))
    flat_x = x.reshape(-1, weight.shape[0])
    flat_o = out.reshape(-1, weight.shape[1])
    for r in range(flat_x.shape[0]):
        for k in range(weight.shape[1]):
            flat_o[r, k] = float(flat_x[r] @ weight[:, k]) + bias[k]
    return out


def naive_softmax_xent(logits, labels):
    n, k = logits.shape
    probs = np.zeros_like(logits)
    for r in range(n):
        z = logits[r] - logits[r].max()
        e = np.exp(z)
        probs[r] = e / e.sum()
    loss = -np.mean([np.log(probs[r, labels[r]]) for r in range(n)])
    dlogits = probs.copy()
    for r in range(n):
        dlogits[r, labels[r]] -= 1.0
    return loss, dlogits / n


def test_conv2d_matches_naive():
    for case in range(N_CASES):
        rng = np.random.default_rng(case)
        cin, cout = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        kh, kw = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        x = rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(2, 7)),
                                 int(rng.integers(2, 6)), cin))
        k = rng.standard_normal((kh, kw, cin, cout))
        b = rng.standard_normal(cout)
        fast = kernels.conv2d_forward(x, k, b)
        assert np.allclose(fast, naive_conv2d(x, k, b), atol=ATOL, rtol=0)


def test_pooling_matches_naive():
    for case in range(N_CASES):
        rng = np.random.default_rng(case)
        x = rng.standard_normal((int(rng.integers(1, 4)), int(rng.integers(2, 9)),
                                 int(rng.integers(2, 9)), int(rng.integers(1, 4))))
        assert np.allclose(kernels.avgpool_forward(x), naive_avgpool(x), atol=ATOL, rtol=0)
        y, _ = kernels.maxpool_forward(x)
        assert np.allclose(y, naive_maxpool(x), atol=ATOL, rtol=0)


def test_dense_matches_naive():
    for case in range(N_CASES):
        rng = np.random.default_rng(case)
        nin, nout = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        layer = L.Dense(nin, nout, rng, activation="none")
        x = rng.standard_normal((int(rng.integers(1, 6)), nin))
        fast = layer.forward(x)
        assert np.allclose(fast, naive_dense(x, layer.weight.value, layer.bias.value),
                           atol=ATOL, rtol=0)


def test_softmax_xent_matches_naive():
    for case in range(N_CASES):
        rng = np.random.default_rng(case)
        n, k = int(rng.integers(1, 8)), int(rng.integers(2, 8))
        logits = rng.standard_normal((n, k)) * 5.0
        labels = rng.integers(0, k, size=n)
        loss, dlogits = L.softmax_xent(logits, labels)
        nloss, ndlogits = naive_softmax_xent(logits, labels)
        assert abs(loss - nloss) < ATOL
        assert np.allclose(dlogits, ndlogits, atol=ATOL, rtol=0)


def _cython_backend():
    try:
        return importlib.import_module("hexastyle.nn._kernels_cy")
    except ImportError:
        return None


@pytest.mark.skipif(_cython_backend() is None,
                    reason="compiled kernel extension not built")
def test_backends_agree():
    cy = _cython_backend()
    for case in range(30):
        rng = np.random.default_rng(case)
        cin, cout = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        x = rng.standard_normal((2, int(rng.integers(3, 10)),
                                 int(rng.integers(3, 8)), cin))
        k = rng.standard_normal((int(rng.integers(1, 5)), int(rng.integers(1, 4)),
                                 cin, cout))
        b = rng.standard_normal(cout)
        y_np = kernels_np.conv2d_forward(x, k, b)
        y_cy = cy.conv2d_forward(np.ascontiguousarray(x), np.ascontiguousarray(k), b)
        assert np.allclose(y_np, y_cy, atol=1e-12, rtol=0)
        dy = rng.standard_normal(y_np.shape)
        for a, c in zip(kernels_np.conv2d_backward(x, k, dy),
                        cy.conv2d_backward(np.ascontiguousarray(x),
                                           np.ascontiguousarray(k),
                                           np.ascontiguousarray(dy))):
            assert np.allclose(a, c, atol=1e-12, rtol=0)
        assert np.allclose(kernels_np.avgpool_forward(x),
                           cy.avgpool_forward(np.ascontiguousarray(x)),
                           atol=1e-12, rtol=0)
        y1, a1 = kernels_np.maxpool_forward(x)
        y2, a2 = cy.maxpool_forward(np.ascontiguousarray(x))
        assert np.allclose(y1, y2, atol=1e-12, rtol=0)
        assert np.array_equal(np.asarray(a1), np.asarray(a2))


def test_selected_backend_is_reported():
    assert kernels.BACKEND in ("numpy", "cython", "mixed")
