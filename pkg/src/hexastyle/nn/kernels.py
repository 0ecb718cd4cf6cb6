"""Kernel backend selection.

Set HEXASTYLE_KERNELS=numpy|cython to force one backend for everything.
The default ("auto") mixes the two by measured strength: convolution runs
on the numpy backend (its im2col + tensordot path is BLAS-backed and
beats the compiled loops), pooling on the compiled Cython loops when the
extension was built.  Both backends share the exact same semantics and
are cross-checked in the test suite.
"""

from __future__ import annotations

import os

import numpy as np

from . import kernels_np

_choice = os.environ.get("HEXASTYLE_KERNELS", "auto")
if _choice not in ("auto", "numpy", "cython"):
    raise ValueError("HEXASTYLE_KERNELS must be auto, numpy, or cython")

_cy = None
if _choice in ("auto", "cython"):
    try:
        from . import _kernels_cy as _cy
    except ImportError:
        if _choice == "cython":
            raise ImportError(
                "HEXASTYLE_KERNELS=cython but the compiled extension is missing; "
                "reinstall the package or use HEXASTYLE_KERNELS=numpy"
            )

if _choice == "numpy" or _cy is None:
    _conv, _pool = kernels_np, kernels_np
    BACKEND = "numpy"
elif _choice == "cython":
    _conv, _pool = _cy, _cy
    BACKEND = "cython"
else:
    _conv, _pool = kernels_np, _cy
    BACKEND = "mixed"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def conv2d_forward(x, kernel, bias):
    return _conv.conv2d_forward(_c(x), _c(kernel), _c(bias))


def conv2d_backward(x, kernel, dy):
    return _conv.conv2d_backward(_c(x), _c(kernel), _c(dy))


def avgpool_forward(x):
    return _pool.avgpool_forward(_c(x))


def avgpool_backward(dy, in_shape):
    return _pool.avgpool_backward(_c(dy), tuple(in_shape))


def maxpool_forward(x):
    return _pool.maxpool_forward(_c(x))


def maxpool_backward(dy, arg, in_shape):
    return _pool.maxpool_backward(_c(dy), np.ascontiguousarray(arg, dtype=np.int8), tuple(in_shape))
