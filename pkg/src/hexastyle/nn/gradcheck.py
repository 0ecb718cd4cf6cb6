"""Central finite-difference checks for layer gradients.

The scalar probe is sum(output * R) for a fixed random R, so the analytic
gradient is obtained by one backward pass with dy = R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GradReport:
    errors: dict[str, float]  # tensor name -> max relative error
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values())

    @property
    def ok(self) -> bool:
        return self.max_error < self.tolerance

    def __str__(self) -> str:
        lines = [
            "%s: %.3e %s" % (k, v, "ok" if v < self.tolerance else "FAIL")
            for k, v in self.errors.items()
        ]
        return "\n".join(lines)


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.abs(analytic - numeric)
    # the floor absorbs central-difference round-off (~1e-11 absolute at
    # eps=1e-5) on near-zero gradient entries
    den = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float((num / den).max()) if num.size else 0.0


def check_layer(
    layer,
    x: np.ndarray,
    rng: np.random.Generator,
    eps: float = 1e-5,
    tolerance: float = 1e-4,
    check_input: bool = True,
    forward_kwargs: dict | None = None,
) -> GradReport:
    """Compare analytic parameter/input gradients with central differences."""
    kw = forward_kwargs or {}

    def run(inp):
        return layer.forward(inp, **kw)

    y = run(x)
    r = rng.standard_normal(y.shape)

    for p in layer.params():
        p.zero_grad()
    dx = layer.backward(r)

    errors: dict[str, float] = {}
    for p in layer.params():
        numeric = np.zeros_like(p.value)
        flat = p.value.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float((run(x) * r).sum())
            flat[i] = orig - eps
            down = float((run(x) * r).sum())
            flat[i] = orig
            nflat[i] = (up - down) / (2.0 * eps)
        errors[p.name] = _rel_error(p.grad, numeric)

    if check_input and dx is not None:
        numeric = np.zeros_like(x, dtype=np.float64)
        xv = x.astype(np.float64).copy()
        flat = xv.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float((run(xv) * r).sum())
            flat[i] = orig - eps
            down = float((run(xv) * r).sum())
            flat[i] = orig
            nflat[i] = (up - down) / (2.0 * eps)
        errors["input"] = _rel_error(np.asarray(dx, dtype=np.float64), numeric)

    return GradReport(errors=errors, tolerance=tolerance)
