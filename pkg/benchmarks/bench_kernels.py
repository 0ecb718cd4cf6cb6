"""Compare the compiled and pure-numpy kernel backends on the real
convolution/pooling shapes used by the classifier.

Usage: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from hexastyle.nn import kernels_np

try:
    from hexastyle.nn import _kernels_cy as kernels_cy
except ImportError:
    kernels_cy = None

# (batch, height, width, cin) and (kh, kw, cin, cout) per conv layer
SHAPES = [
    ("conv1", (32, 64, 20, 32), (4, 2, 32, 24)),
    ("conv2", (32, 32, 10, 24), (4, 2, 24, 48)),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeats=5):
    rng = np.random.default_rng(0)
    rows = []
    for name, xshape, kshape in SHAPES:
        x = np.ascontiguousarray(rng.standard_normal(xshape))
        k = np.ascontiguousarray(rng.standard_normal(kshape))
        b = rng.standard_normal(kshape[-1])
        y = kernels_np.conv2d_forward(x, k, b)
        dy = np.ascontiguousarray(rng.standard_normal(y.shape))
        cases = [
            ("%s fwd" % name, lambda m: m.conv2d_forward(x, k, b)),
            ("%s bwd" % name, lambda m: m.conv2d_backward(x, k, dy)),
            ("%s avgpool fwd" % name, lambda m: m.avgpool_forward(x)),
            ("%s maxpool fwd" % name, lambda m: m.maxpool_forward(x)),
        ]
        for label, fn in cases:
            t_np = _time(lambda: fn(kernels_np), repeats)
            t_cy = _time(lambda: fn(kernels_cy), repeats) if kernels_cy else None
            rows.append((label, t_np, t_cy))
    width = max(len(r[0]) for r in rows)
    print("%-*s  %10s  %10s  %7s" % (width, "kernel", "numpy", "cython", "ratio"))
    for label, t_np, t_cy in rows:
        if t_cy is None:
            print("%-*s  %9.2fms  %10s" % (width, label, t_np * 1e3, "n/a"))
        else:
            print("%-*s  %9.2fms  %8.2fms  %6.2fx"
                  % (width, label, t_np * 1e3, t_cy * 1e3, t_np / t_cy))
    if kernels_cy is None:
        print("\ncompiled extension not built; numpy fallback only")


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 5)
