"""Neural-network layers with hand-derived exact gradients.

Each layer implements forward(x, training) and backward(dy) -> dx,
accumulating parameter gradients into its Param buffers.  Everything is
double precision numpy; the convolution/pooling inner loops dispatch to
the selected kernel backend.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class ShapeError(ValueError):
    pass


class Param:
    """A named tensor with a gradient buffer and a trainability flag."""

    def __init__(self, name: str, value: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    def params(self) -> list[Param]:
        return []

    def stats(self) -> list[Param]:
        """Non-trainable state saved in checkpoints (running stats)."""
        return []

    def forward(self, x, training: bool = False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


class Embedding(Layer):
    """Integer id grid -> rows of a V x dim table; id 0 is padding."""

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator):
        self.vocab_size = vocab_size
        self.dim = dim
        self.table = Param(
            "table", glorot_uniform(rng, (vocab_size, dim), vocab_size, dim)
        )

    def params(self):
        return [self.table]

    def forward(self, ids, training: bool = False):
        ids = np.asarray(ids)
        if ids.min() < 0 or ids.max() >= self.vocab_size:
            raise ShapeError("token id out of range for vocab %d" % self.vocab_size)
        self._ids = ids
        return self.table.value[ids]

    def backward(self, dy):
        np.add.at(self.table.grad, self._ids, dy)
        return None  # ids are not differentiable

    def mask(self, ids) -> np.ndarray:
        return np.asarray(ids) != 0


class Dropout(Layer):
    """Inverted dropout: survivors scaled by 1/(1-rate); identity at inference."""

    def __init__(self, rate: float, rng: np.random.Generator):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.rng = rng

    def forward(self, x, training: bool = False):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


class Conv2D(Layer):
    """Stride-1 'same' cross-correlation with optional relu."""

    def __init__(
        self,
        cin: int,
        cout: int,
        kernel_size: tuple[int, int],
        rng: np.random.Generator,
        relu: bool = True,
        name: str = "conv",
    ):
        kh, kw = kernel_size
        fan_in = kh * kw * cin
        fan_out = kh * kw * cout
        self.kernel = Param(
            name + ".kernel", glorot_uniform(rng, (kh, kw, cin, cout), fan_in, fan_out)
        )
        self.bias = Param(name + ".bias", np.zeros(cout))
        self.relu = relu

    def params(self):
        return [self.kernel, self.bias]

    def forward(self, x, training: bool = False):
        if x.ndim != 4 or x.shape[3] != self.kernel.value.shape[2]:
            raise ShapeError("conv2d input %s incompatible with kernel %s"
                             % (x.shape, self.kernel.value.shape))
        self._x = x
        z = kernels.conv2d_forward(x, self.kernel.value, self.bias.value)
        if self.relu:
            self._pos = z > 0
            return np.where(self._pos, z, 0.0)
        return z

    def backward(self, dy):
        if self.relu:
            dy = dy * self._pos
        dx, dk, db = kernels.conv2d_backward(self._x, self.kernel.value, dy)
        self.kernel.grad += dk
        self.bias.grad += db
        return dx


class AvgPool2D(Layer):
    def forward(self, x, training: bool = False):
        self._shape = x.shape
        return kernels.avgpool_forward(x)

    def backward(self, dy):
        return kernels.avgpool_backward(dy, self._shape)


class MaxPool2D(Layer):
    def forward(self, x, training: bool = False):
        self._shape = x.shape
        y, self._arg = kernels.maxpool_forward(x)
        return y

    def backward(self, dy):
        return kernels.maxpool_backward(dy, self._arg, self._shape)


class BatchNorm(Layer):
    """Normalize over all non-channel axes; running stats for inference."""

    def __init__(self, channels: int, momentum: float = 0.99, eps: float = 1e-3,
                 name: str = "norm"):
        self.gamma = Param(name + ".gamma", np.ones(channels))
        self.beta = Param(name + ".beta", np.zeros(channels))
        self.running_mean = Param(name + ".running_mean", np.zeros(channels),
                                  trainable=False)
        self.running_var = Param(name + ".running_var", np.ones(channels),
                                 trainable=False)
        self.momentum = momentum
        self.eps = eps

    def params(self):
        return [self.gamma, self.beta]

    def stats(self):
        return [self.running_mean, self.running_var]

    def forward(self, x, training: bool = False):
        axes = tuple(range(x.ndim - 1))
        if training:
            if x.shape[0] < 2:
                raise ShapeError("batchnorm needs batch size >= 2 in training mode")
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.running_mean.value[...] = m * self.running_mean.value + (1 - m) * mean
            self.running_var.value[...] = m * self.running_var.value + (1 - m) * var
        else:
            mean = self.running_mean.value
            var = self.running_var.value
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv
        self._cache = (xhat, inv, axes, training)
        return self.gamma.value * xhat + self.beta.value

    def backward(self, dy):
        xhat, inv, axes, training = self._cache
        self.gamma.grad += (dy * xhat).sum(axis=axes)
        self.beta.grad += dy.sum(axis=axes)
        g = dy * self.gamma.value
        if not training:
            return g * inv
        m = np.prod([xhat.shape[a] for a in axes])
        return (inv / m) * (
            m * g - g.sum(axis=axes, keepdims=True)
            - xhat * (g * xhat).sum(axis=axes, keepdims=True)
        )


class Flatten(Layer):
    def forward(self, x, training: bool = False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Dense(Layer):
    def __init__(self, nin: int, nout: int, rng: np.random.Generator,
                 activation: str = "none", name: str = "dense"):
        if activation not in ("none", "relu"):
            raise ValueError("unsupported activation %r" % activation)
        self.weight = Param(name + ".weight", glorot_uniform(rng, (nin, nout), nin, nout))
        self.bias = Param(name + ".bias", np.zeros(nout))
        self.activation = activation

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x, training: bool = False):
        if x.shape[-1] != self.weight.value.shape[0]:
            raise ShapeError("dense input %s incompatible with weight %s"
                             % (x.shape, self.weight.value.shape))
        self._x = x
        z = x @ self.weight.value + self.bias.value
        if self.activation == "relu":
            self._pos = z > 0
            return np.where(self._pos, z, 0.0)
        return z

    def backward(self, dy):
        if self.activation == "relu":
            dy = dy * self._pos
        self.weight.grad += self._x.reshape(-1, self._x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
        self.bias.grad += dy.reshape(-1, dy.shape[-1]).sum(axis=0)
        return dy @ self.weight.value.T


class Softmax(Layer):
    def forward(self, x, training: bool = False):
        self._p = softmax(x)
        return self._p

    def backward(self, dy):
        p = self._p
        return p * (dy - (dy * p).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over integer labels; returns (loss, dlogits)."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= logits.shape[-1]:
        raise ShapeError("label out of range")
    z = logits - logits.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    dlogits = softmax(logits)
    dlogits[np.arange(n), labels] -= 1.0
    return float(loss), dlogits / n


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class LSTM(Layer):
    """Standard LSTM cell (gate order i, f, c-candidate, o).

    Masked timesteps copy state through; the backward pass zeroes any
    gradient arriving at masked outputs.  Forget-gate bias starts at 1.
    """

    def __init__(self, nin: int, units: int, rng: np.random.Generator,
                 return_sequences: bool = False, name: str = "lstm"):
        self.units = units
        self.return_sequences = return_sequences
        self.w = Param(name + ".w", glorot_uniform(rng, (nin, 4 * units), nin, units))
        self.u = Param(name + ".u", glorot_uniform(rng, (units, 4 * units), units, units))
        b = np.zeros(4 * units)
        b[units : 2 * units] = 1.0
        self.b = Param(name + ".b", b)

    def params(self):
        return [self.w, self.u, self.b]

    def forward(self, x, training: bool = False, mask: np.ndarray | None = None):
        b, t, d = x.shape
        u = self.units
        if mask is None:
            mask = np.ones((b, t), dtype=bool)
        if not mask.any(axis=1).all():
            raise ShapeError("fully masked sequence")
        h = np.zeros((b, u))
        c = np.zeros((b, u))
        hs = np.zeros((b, t, u))
        cache = []
        for step in range(t):
            z = x[:, step, :] @ self.w.value + h @ self.u.value + self.b.value
            i = _sigmoid(z[:, :u])
            f = _sigmoid(z[:, u : 2 * u])
            g = np.tanh(z[:, 2 * u : 3 * u])
            o = _sigmoid(z[:, 3 * u :])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            m = mask[:, step][:, None]
            cache.append((x[:, step, :], h, c, i, f, g, o, tc, m))
            c = np.where(m, c_new, c)
            h = np.where(m, h_new, h)
            hs[:, step, :] = h * m  # masked steps emit zeros
        self._cache = cache
        self._mask = mask
        self._in_shape = x.shape
        return hs if self.return_sequences else h

    def backward(self, dy):
        b, t, d = self._in_shape
        u = self.units
        dx = np.zeros(self._in_shape)
        dh = np.zeros((b, u))
        dc = np.zeros((b, u))
        if not self.return_sequences:
            dh += dy
        for step in range(t - 1, -1, -1):
            if self.return_sequences:
                dh = dh + dy[:, step, :] * self._mask[:, step][:, None]
            xt, h_prev, c_prev, i, f, g, o, tc, m = self._cache[step]
            # at masked steps the state gradient passes straight through
            dh_m = dh * m
            dc_m = dc * m
            do = dh_m * tc
            dcn = dc_m + dh_m * o * (1.0 - tc * tc)
            di = dcn * g
            df = dcn * c_prev
            dg = dcn * i
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            self.w.grad += xt.T @ dz
            self.u.grad += h_prev.T @ dz
            self.b.grad += dz.sum(axis=0)
            dx[:, step, :] = dz @ self.w.value.T
            dh = dz @ self.u.value.T + dh * (~m)
            dc = dcn * f + dc * (~m)
        return dx


class Bidirectional(Layer):
    """Concatenates a forward and a time-reversed LSTM (2 x units)."""

    def __init__(self, nin: int, units: int, rng: np.random.Generator,
                 name: str = "lstm"):
        self.fwd = LSTM(nin, units, rng, return_sequences=True, name=name + ".fwd")
        self.bwd = LSTM(nin, units, rng, return_sequences=True, name=name + ".bwd")

    def params(self):
        return self.fwd.params() + self.bwd.params()

    def forward(self, x, training: bool = False, mask: np.ndarray | None = None):
        if mask is None:
            mask = np.ones(x.shape[:2], dtype=bool)
        self._mask = mask
        yf = self.fwd.forward(x, training, mask)
        yb = self.bwd.forward(x[:, ::-1, :], training, mask[:, ::-1])[:, ::-1, :]
        return np.concatenate([yf, yb], axis=2)

    def backward(self, dy):
        u = self.fwd.units
        dxf = self.fwd.backward(dy[:, :, :u])
        dxb = self.bwd.backward(dy[:, ::-1, u:])[:, ::-1, :]
        return dxf + dxb
