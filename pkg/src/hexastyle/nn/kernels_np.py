"""Pure-numpy convolution and pooling kernels (fallback backend).

Convolution is cross-correlation with 'same' zero padding and stride 1,
implemented with an im2col stride-tricks view and tensordot.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

NAME = "numpy"


def _same_pads(k: int) -> tuple[int, int]:
    total = k - 1
    return total // 2, total - total // 2


def _patches(xp: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(B, Hp, Wp, C) padded input -> (B, H, W, kh, kw, C) view."""
    b, hp, wp, c = xp.shape
    sb, sh, sw, sc = xp.strides
    return as_strided(
        xp,
        shape=(b, hp - kh + 1, wp - kw + 1, kh, kw, c),
        strides=(sb, sh, sw, sh, sw, sc),
        writeable=False,
    )


def _pad(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    pt, pb = _same_pads(kh)
    pl, pr = _same_pads(kw)
    return np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    kh, kw, cin, cout = kernel.shape
    xp = _pad(x, kh, kw)
    y = np.tensordot(_patches(xp, kh, kw), kernel, axes=([3, 4, 5], [0, 1, 2]))
    return y + bias


def conv2d_backward(
    x: np.ndarray, kernel: np.ndarray, dy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kh, kw, cin, cout = kernel.shape
    xp = _pad(x, kh, kw)
    dk = np.tensordot(_patches(xp, kh, kw), dy, axes=([0, 1, 2], [0, 1, 2]))
    dbias = dy.sum(axis=(0, 1, 2))
    # scatter-add dy * kernel into the padded input gradient
    contrib = np.tensordot(dy, kernel, axes=([3], [3]))  # (B,H,W,kh,kw,Cin)
    dxp = np.zeros_like(xp)
    h, w = dy.shape[1], dy.shape[2]
    for p in range(kh):
        for q in range(kw):
            dxp[:, p : p + h, q : q + w, :] += contrib[:, :, :, p, q, :]
    pt, _ = _same_pads(kh)
    pl, _ = _same_pads(kw)
    dx = dxp[:, pt : pt + x.shape[1], pl : pl + x.shape[2], :]
    return dx, dk, dbias


def _blocks(x: np.ndarray) -> np.ndarray:
    """(B, H, W, C) -> (B, H//2, W//2, 4, C); odd trailing rows/cols dropped."""
    b, h, w, c = x.shape
    h2, w2 = h // 2 * 2, w // 2 * 2
    x = x[:, :h2, :w2, :]
    x = x.reshape(b, h2 // 2, 2, w2 // 2, 2, c)
    return x.transpose(0, 1, 3, 2, 4, 5).reshape(b, h2 // 2, w2 // 2, 4, c)


def avgpool_forward(x: np.ndarray) -> np.ndarray:
    return _blocks(x).mean(axis=3)


def avgpool_backward(dy: np.ndarray, in_shape: tuple[int, ...]) -> np.ndarray:
    dx = np.zeros(in_shape, dtype=dy.dtype)
    b, ho, wo, c = dy.shape
    g = dy * 0.25
    for p in range(2):
        for q in range(2):
            dx[:, p : 2 * ho : 2, q : 2 * wo : 2, :] = g
    return dx


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    blocks = _blocks(x)
    arg = blocks.argmax(axis=3)
    y = np.take_along_axis(blocks, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return y, arg.astype(np.int8)


def maxpool_backward(
    dy: np.ndarray, arg: np.ndarray, in_shape: tuple[int, ...]
) -> np.ndarray:
    b, ho, wo, c = dy.shape
    dblocks = np.zeros((b, ho, wo, 4, c), dtype=dy.dtype)
    np.put_along_axis(dblocks, arg[:, :, :, None, :].astype(np.intp), dy[:, :, :, None, :], axis=3)
    dblocks = dblocks.reshape(b, ho, wo, 2, 2, c).transpose(0, 1, 3, 2, 4, 5)
    dx = np.zeros(in_shape, dtype=dy.dtype)
    dx[:, : 2 * ho, : 2 * wo, :] = dblocks.reshape(b, 2 * ho, 2 * wo, c)
    return dx
