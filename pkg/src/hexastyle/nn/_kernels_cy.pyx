# Compiled convolution and pooling kernels (double precision, stride 1,
# 'same' padding). Signatures mirror hexastyle.nn.kernels_np.

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef inline int _pad_before(int k) nogil:
    return (k - 1) // 2


def conv2d_forward(double[:, :, :, ::1] x, double[:, :, :, ::1] kernel,
                   double[::1] bias):
    cdef int b = x.shape[0], h = x.shape[1], w = x.shape[2], cin = x.shape[3]
    cdef int kh = kernel.shape[0], kw = kernel.shape[1], cout = kernel.shape[3]
    cdef int pt = _pad_before(kh), pl = _pad_before(kw)
    y_arr = np.empty((b, h, w, cout), dtype=np.float64)
    cdef double[:, :, :, ::1] y = y_arr
    cdef int n, i, j, p, q, ci, co, ii, jj
    cdef double acc
    with nogil:
        for n in range(b):
            for i in range(h):
                for j in range(w):
                    for co in range(cout):
                        acc = bias[co]
                        for p in range(kh):
                            ii = i + p - pt
                            if ii < 0 or ii >= h:
                                continue
                            for q in range(kw):
                                jj = j + q - pl
                                if jj < 0 or jj >= w:
                                    continue
                                for ci in range(cin):
                                    acc += x[n, ii, jj, ci] * kernel[p, q, ci, co]
                        y[n, i, j, co] = acc
    return y_arr


def conv2d_backward(double[:, :, :, ::1] x, double[:, :, :, ::1] kernel,
                    double[:, :, :, ::1] dy):
    cdef int b = x.shape[0], h = x.shape[1], w = x.shape[2], cin = x.shape[3]
    cdef int kh = kernel.shape[0], kw = kernel.shape[1], cout = kernel.shape[3]
    cdef int pt = _pad_before(kh), pl = _pad_before(kw)
    dx_arr = np.zeros((b, h, w, cin), dtype=np.float64)
    dk_arr = np.zeros((kh, kw, cin, cout), dtype=np.float64)
    db_arr = np.zeros(cout, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dk = dk_arr
    cdef double[::1] db = db_arr
    cdef int n, i, j, p, q, ci, co, ii, jj
    cdef double g
    with nogil:
        for n in range(b):
            for i in range(h):
                for j in range(w):
                    for co in range(cout):
                        g = dy[n, i, j, co]
                        db[co] += g
                        for p in range(kh):
                            ii = i + p - pt
                            if ii < 0 or ii >= h:
                                continue
                            for q in range(kw):
                                jj = j + q - pl
                                if jj < 0 or jj >= w:
                                    continue
                                for ci in range(cin):
                                    dk[p, q, ci, co] += x[n, ii, jj, ci] * g
                                    dx[n, ii, jj, ci] += kernel[p, q, ci, co] * g
    return dx_arr, dk_arr, db_arr


def avgpool_forward(double[:, :, :, ::1] x):
    cdef int b = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef int ho = h // 2, wo = w // 2
    y_arr = np.empty((b, ho, wo, c), dtype=np.float64)
    cdef double[:, :, :, ::1] y = y_arr
    cdef int n, i, j, k
    with nogil:
        for n in range(b):
            for i in range(ho):
                for j in range(wo):
                    for k in range(c):
                        y[n, i, j, k] = 0.25 * (
                            x[n, 2 * i, 2 * j, k] + x[n, 2 * i, 2 * j + 1, k]
                            + x[n, 2 * i + 1, 2 * j, k] + x[n, 2 * i + 1, 2 * j + 1, k]
                        )
    return y_arr


def avgpool_backward(double[:, :, :, ::1] dy, in_shape):
    cdef int b = dy.shape[0], ho = dy.shape[1], wo = dy.shape[2], c = dy.shape[3]
    dx_arr = np.zeros(in_shape, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef int n, i, j, k
    cdef double g
    with nogil:
        for n in range(b):
            for i in range(ho):
                for j in range(wo):
                    for k in range(c):
                        g = 0.25 * dy[n, i, j, k]
                        dx[n, 2 * i, 2 * j, k] = g
                        dx[n, 2 * i, 2 * j + 1, k] = g
                        dx[n, 2 * i + 1, 2 * j, k] = g
                        dx[n, 2 * i + 1, 2 * j + 1, k] = g
    return dx_arr


def maxpool_forward(double[:, :, :, ::1] x):
    cdef int b = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef int ho = h // 2, wo = w // 2
    y_arr = np.empty((b, ho, wo, c), dtype=np.float64)
    arg_arr = np.empty((b, ho, wo, c), dtype=np.int8)
    cdef double[:, :, :, ::1] y = y_arr
    cdef signed char[:, :, :, ::1] arg = arg_arr
    cdef int n, i, j, k, p, q, best
    cdef double v, m
    with nogil:
        for n in range(b):
            for i in range(ho):
                for j in range(wo):
                    for k in range(c):
                        best = 0
                        m = x[n, 2 * i, 2 * j, k]
                        for p in range(2):
                            for q in range(2):
                                v = x[n, 2 * i + p, 2 * j + q, k]
                                if v > m:
                                    m = v
                                    best = 2 * p + q
                        y[n, i, j, k] = m
                        arg[n, i, j, k] = <signed char> best
    return y_arr, arg_arr


def maxpool_backward(double[:, :, :, ::1] dy, signed char[:, :, :, ::1] arg,
                     in_shape):
    cdef int b = dy.shape[0], ho = dy.shape[1], wo = dy.shape[2], c = dy.shape[3]
    dx_arr = np.zeros(in_shape, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef int n, i, j, k, best
    with nogil:
        for n in range(b):
            for i in range(ho):
                for j in range(wo):
                    for k in range(c):
                        best = arg[n, i, j, k]
                        dx[n, 2 * i + best // 2, 2 * j + best % 2, k] = dy[n, i, j, k]
    return dx_arr
