"""Finite-difference gradient checks for every layer.

Each layer gets >= 100 randomized shape/value cases.  Inputs near relu
kinks and max-pool ties are resampled so the central differences stay on
one linear piece.
"""

import numpy as np
import pytest

from hexastyle.nn import layers as L
from hexastyle.nn.gradcheck import check_layer

N_CASES = 100
TOL = 1e-4
TOL_LSTM = 1e-3


def _rng(case):
    return np.random.default_rng(1000 + case)


def _away_from_kinks(rng, layer, shape, margin=1e-3, tries=50):
    """Sample an input whose pre-activations stay clear of relu kinks."""
    for _ in range(tries):
        x = rng.standard_normal(shape)
        was_relu = getattr(layer, "relu", None)
        act = getattr(layer, "activation", None)
        if was_relu is not None:
            layer.relu = False
            z = layer.forward(x)
            layer.relu = was_relu
        elif act == "relu":
            layer.activation = "none"
            z = layer.forward(x)
            layer.activation = act
        else:
            return x
        if np.abs(z).min() > margin:
            return x
    raise AssertionError("could not sample away from relu kinks")


def _assert_cases(make, tol=TOL):
    worst = 0.0
    for case in range(N_CASES):
        rng = _rng(case)
        layer, x, kwargs, check_input = make(rng)
        report = check_layer(layer, x, rng, tolerance=tol,
                             check_input=check_input, forward_kwargs=kwargs)
        worst = max(worst, report.max_error)
        assert report.ok, "case %d:\n%s" % (case, report)
    return worst


def test_dense_gradients():
    def make(rng):
        nin = int(rng.integers(2, 6))
        nout = int(rng.integers(2, 6))
        act = "relu" if rng.random() < 0.5 else "none"
        layer = L.Dense(nin, nout, rng, activation=act)
        x = _away_from_kinks(rng, layer, (int(rng.integers(2, 5)), nin))
        return layer, x, None, True

    _assert_cases(make)


def test_conv2d_gradients():
    def make(rng):
        cin = int(rng.integers(1, 4))
        cout = int(rng.integers(1, 4))
        kh = int(rng.integers(1, 5))
        kw = int(rng.integers(1, 4))
        layer = L.Conv2D(cin, cout, (kh, kw), rng, relu=bool(rng.random() < 0.5))
        shape = (int(rng.integers(1, 4)), int(rng.integers(2, 7)),
                 int(rng.integers(2, 6)), cin)
        x = _away_from_kinks(rng, layer, shape)
        return layer, x, None, True

    _assert_cases(make)


def test_avgpool_gradients():
    def make(rng):
        shape = (int(rng.integers(1, 4)), int(rng.integers(2, 8)),
                 int(rng.integers(2, 8)), int(rng.integers(1, 4)))
        return L.AvgPool2D(), rng.standard_normal(shape), None, True

    _assert_cases(make)


def test_maxpool_gradients():
    def make(rng):
        shape = (int(rng.integers(1, 3)), int(rng.integers(2, 7)),
                 int(rng.integers(2, 7)), int(rng.integers(1, 3)))
        # resample until every 2x2 block has a clear winner
        for _ in range(100):
            x = rng.standard_normal(shape)
            blocks = x[:, : shape[1] // 2 * 2, : shape[2] // 2 * 2, :]
            b, h, w, c = blocks.shape
            blocks = blocks.reshape(b, h // 2, 2, w // 2, 2, c)
            blocks = blocks.transpose(0, 1, 3, 5, 2, 4).reshape(-1, 4)
            top2 = np.sort(blocks, axis=1)[:, -2:]
            if (top2[:, 1] - top2[:, 0]).min() > 1e-3:
                break
        return L.MaxPool2D(), x, None, True

    _assert_cases(make)


def test_batchnorm_training_gradients():
    def make(rng):
        c = int(rng.integers(1, 5))
        ndim = int(rng.integers(2, 5))
        shape = [int(rng.integers(2, 5)) for _ in range(ndim - 1)] + [c]
        layer = L.BatchNorm(c)
        layer.gamma.value[...] = rng.standard_normal(c)
        layer.beta.value[...] = rng.standard_normal(c)
        return layer, rng.standard_normal(shape), {"training": True}, True

    _assert_cases(make)


def test_batchnorm_inference_gradients():
    def make(rng):
        c = int(rng.integers(1, 5))
        layer = L.BatchNorm(c)
        layer.running_mean.value[...] = rng.standard_normal(c)
        layer.running_var.value[...] = rng.uniform(0.5, 2.0, c)
        shape = (int(rng.integers(1, 4)), int(rng.integers(2, 5)), c)
        return layer, rng.standard_normal(shape), {"training": False}, True

    _assert_cases(make)


def test_embedding_gradients():
    def make(rng):
        vocab = int(rng.integers(3, 10))
        dim = int(rng.integers(2, 6))
        layer = L.Embedding(vocab, dim, rng)
        ids = rng.integers(0, vocab, size=(int(rng.integers(1, 4)),
                                           int(rng.integers(2, 6))))
        return layer, ids, None, False  # ids are not differentiable

    _assert_cases(make)


def test_flatten_and_softmax_gradients():
    def make_flatten(rng):
        shape = (int(rng.integers(1, 4)), int(rng.integers(2, 5)),
                 int(rng.integers(2, 5)))
        return L.Flatten(), rng.standard_normal(shape), None, True

    def make_softmax(rng):
        shape = (int(rng.integers(1, 5)), int(rng.integers(2, 6)))
        return L.Softmax(), rng.standard_normal(shape), None, True

    _assert_cases(make_flatten)
    _assert_cases(make_softmax)


def test_lstm_gradients():
    def make(rng):
        nin = int(rng.integers(2, 4))
        units = int(rng.integers(2, 4))
        t = int(rng.integers(2, 5))
        b = int(rng.integers(1, 3))
        seqs = bool(rng.random() < 0.5)
        layer = L.LSTM(nin, units, rng, return_sequences=seqs)
        x = rng.standard_normal((b, t, nin))
        # random right-padding mask with at least one live step per row
        lengths = rng.integers(1, t + 1, size=b)
        mask = np.arange(t)[None, :] < lengths[:, None]
        return layer, x, {"mask": mask}, True

    _assert_cases(make, tol=TOL_LSTM)


def test_bidirectional_gradients():
    def make(rng):
        nin = int(rng.integers(2, 4))
        units = int(rng.integers(2, 4))
        t = int(rng.integers(2, 5))
        b = int(rng.integers(1, 3))
        layer = L.Bidirectional(nin, units, rng)
        x = rng.standard_normal((b, t, nin))
        lengths = rng.integers(1, t + 1, size=b)
        mask = np.arange(t)[None, :] < lengths[:, None]
        return layer, x, {"mask": mask}, True

    _assert_cases(make, tol=TOL_LSTM)


def test_dropout_backward_reuses_forward_mask():
    rng = np.random.default_rng(3)
    layer = L.Dropout(0.4, rng)
    x = rng.standard_normal((8, 8)) + 5.0  # strictly positive, no zeros
    y = layer.forward(x, training=True)
    mask = y / x  # 0 where dropped, 1/keep where kept
    dy = rng.standard_normal(x.shape)
    assert np.allclose(layer.backward(dy), dy * mask)
    # inference is the identity
    assert layer.forward(x, training=False) is x
    assert layer.backward(dy) is dy


def test_gradcheck_catches_a_broken_gradient():
    class BrokenDense(L.Dense):
        def backward(self, dy):
            dx = super().backward(dy)
            self.weight.grad *= 1.01  # deliberate 1% error
            return dx

    rng = np.random.default_rng(0)
    layer = BrokenDense(4, 3, rng)
    report = check_layer(layer, rng.standard_normal((5, 4)), rng)
    assert not report.ok
