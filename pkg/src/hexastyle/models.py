"""The two classifier architectures, training, evaluation, checkpoints.

Both models are deliberately tiny: widths were tuned down ("parameter
starvation") to fight overfitting on a ~73k-line corpus.  The CNN treats a
64x20 syllable grid as an image; the LSTM consumes the token sequence with
EOL markers and id-0 padding masked out.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass

import numpy as np

from .encoding import GRID_COLS, GRID_ROWS
from .nn import layers as L
from .nn.optim import Adam

CKPT_MAGIC = b"HEXCKPT1"
CKPT_VERSION = 1


class ModelError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float | None = None  # default per architecture
    seed: int = 0
    ablation: str = "full"
    pooling: str = "avg"
    patience: int = 5

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ModelError("epochs must be >= 0 and batch size >= 1")


class Model:
    kind = "?"
    default_lr = 1e-3

    def __init__(self):
        self.layers: list[tuple[str, L.Layer]] = []
        self.lexicon_fingerprint = ""

    # -- parameter plumbing -------------------------------------------------
    def params(self) -> list[L.Param]:
        return [p for _, layer in self.layers for p in layer.params()]

    def stats(self) -> list[L.Param]:
        return [p for _, layer in self.layers for p in layer.stats()]

    def count_trainable(self) -> int:
        return sum(p.size for p in self.params() if p.trainable)

    def layer(self, name: str) -> L.Layer:
        for n, layer in self.layers:
            if n == name:
                return layer
        raise ModelError("no layer named %r" % name)

    @property
    def embedding(self) -> L.Embedding:
        emb = self.layers[0][1]
        assert isinstance(emb, L.Embedding)
        return emb

    # -- forward / backward -------------------------------------------------
    def forward(self, ids, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def forward_from_embedded(self, x, mask=None) -> np.ndarray:
        """Inference forward over an already-embedded real input."""
        raise NotImplementedError

    def backward(self, dlogits, capture: set[str] | None = None):
        """Backpropagate from the logits; returns the gradient at the
        embedded input and fills self.captured for requested layer names
        (gradient with respect to that layer's output)."""
        self.captured = {}
        dy = dlogits
        for name, layer in reversed(self._active):
            if capture and name in capture:
                self.captured[name] = dy
            dy = layer.backward(dy)
        return dy

    def probs(self, ids) -> np.ndarray:
        return L.softmax(self.forward(ids, training=False))

    # -- checkpointing ------------------------------------------------------
    def spec_text(self) -> str:
        rows = []
        for name, layer in self.layers:
            rows.append("%s: %s" % (name, type(layer).__name__))
        return "\n".join(rows)

    def _meta(self) -> dict:
        raise NotImplementedError

    def save(self, path, rng: np.random.Generator | None = None) -> None:
        header = {
            "kind": self.kind,
            "meta": self._meta(),
            "spec": self.spec_text(),
            "lexicon_fingerprint": self.lexicon_fingerprint,
            "trainable": {p.name: p.trainable for p in self.params()},
            "rng_state": rng.bit_generator.state if rng is not None else None,
        }
        blob = json.dumps(header).encode("utf-8")
        tensors = [(p.name, p.value) for p in self.params() + self.stats()]
        with open(path, "wb") as fh:
            fh.write(CKPT_MAGIC)
            fh.write(struct.pack("<II", CKPT_VERSION, len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<I", len(tensors)))
            for name, value in tensors:
                nb = name.encode("utf-8")
                dt = value.dtype.str.encode("ascii")
                fh.write(struct.pack("<H", len(nb)) + nb)
                fh.write(struct.pack("<H", len(dt)) + dt)
                fh.write(struct.pack("<H", value.ndim))
                fh.write(struct.pack("<%dq" % value.ndim, *value.shape))
                fh.write(np.ascontiguousarray(value).tobytes())


def load_checkpoint(path) -> tuple["Model", dict]:
    with open(path, "rb") as fh:
        if fh.read(len(CKPT_MAGIC)) != CKPT_MAGIC:
            raise ModelError("bad checkpoint magic in %s" % path)
        version, blob_len = struct.unpack("<II", fh.read(8))
        if version != CKPT_VERSION:
            raise ModelError("unsupported checkpoint version %d" % version)
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        (n_tensors,) = struct.unpack("<I", fh.read(4))
        tensors = {}
        for _ in range(n_tensors):
            (ln,) = struct.unpack("<H", fh.read(2))
            name = fh.read(ln).decode("utf-8")
            (ld,) = struct.unpack("<H", fh.read(2))
            dtype = np.dtype(fh.read(ld).decode("ascii"))
            (ndim,) = struct.unpack("<H", fh.read(2))
            shape = struct.unpack("<%dq" % ndim, fh.read(8 * ndim)) if ndim else ()
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * dtype.itemsize), dtype=dtype)
            tensors[name] = data.reshape(shape).copy()
    meta = header["meta"]
    if header["kind"] == "cnn":
        model = build_cnn(**meta)
    elif header["kind"] == "lstm":
        model = build_lstm(**meta)
    else:
        raise ModelError("unknown model kind %r" % header["kind"])
    model.lexicon_fingerprint = header["lexicon_fingerprint"]
    for p in model.params() + model.stats():
        if p.name not in tensors:
            raise ModelError("checkpoint missing tensor %r" % p.name)
        if tensors[p.name].shape != p.value.shape:
            raise ModelError("shape mismatch for tensor %r" % p.name)
        p.value[...] = tensors[p.name]
        if p.name in header["trainable"]:
            p.trainable = header["trainable"][p.name]
    return model, header


class CNNModel(Model):
    kind = "cnn"
    default_lr = 1e-4

    def __init__(self, vocab_size: int, n_classes: int, rng: np.random.Generator,
                 pooling: str = "avg", kernel_size: tuple[int, int] = (4, 2)):
        super().__init__()
        if vocab_size < 2:
            raise ModelError("vocab size must be >= 2")
        self.vocab_size = vocab_size
        self.n_classes = n_classes
        self.pooling = pooling
        self.kernel_size = tuple(kernel_size)
        pool = L.AvgPool2D if pooling == "avg" else L.MaxPool2D
        flat = (GRID_ROWS // 4) * (GRID_COLS // 4) * 48
        self.layers = [
            ("embed", L.Embedding(vocab_size, 32, rng)),
            ("drop0", L.Dropout(0.25, rng)),
            ("conv1", L.Conv2D(32, 24, self.kernel_size, rng, relu=True, name="conv1")),
            ("pool1", pool()),
            ("norm1", L.BatchNorm(24, name="norm1")),
            ("drop1", L.Dropout(0.25, rng)),
            ("conv2", L.Conv2D(24, 48, self.kernel_size, rng, relu=True, name="conv2")),
            ("pool2", pool()),
            ("norm2", L.BatchNorm(48, name="norm2")),
            ("flatten", L.Flatten()),
            ("drop2", L.Dropout(0.5, rng)),
            ("dense1", L.Dense(flat, 64, rng, name="dense1")),
            ("dense2", L.Dense(64, 64, rng, name="dense2")),
            ("drop3", L.Dropout(0.5, rng)),
            ("classify", L.Dense(64, n_classes, rng, name="classify")),
        ]

    def _meta(self):
        return {
            "vocab_size": self.vocab_size,
            "n_classes": self.n_classes,
            "pooling": self.pooling,
            "kernel_size": list(self.kernel_size),
            "seed": 0,
        }

    def forward(self, ids, training: bool = False) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.ndim != 3 or ids.shape[1:] != (GRID_ROWS, GRID_COLS):
            raise ModelError("cnn expects (batch, %d, %d) id grids" % (GRID_ROWS, GRID_COLS))
        x = self.layers[0][1].forward(ids, training)
        return self._tail(x, training, start=1)

    def forward_from_embedded(self, x, mask=None) -> np.ndarray:
        return self._tail(x, training=False, start=1)

    def _tail(self, x, training: bool, start: int) -> np.ndarray:
        self._active = self.layers[start:]
        self.activations = {}
        for name, layer in self._active:
            x = layer.forward(x, training)
            self.activations[name] = x
        return x

    def backward_training(self, dlogits):
        dy = dlogits
        for _, layer in reversed(self.layers):
            dy = layer.backward(dy)
            if dy is None:
                break


class LSTMModel(Model):
    kind = "lstm"
    default_lr = 5e-4

    def __init__(self, vocab_size: int, n_classes: int, rng: np.random.Generator):
        super().__init__()
        if vocab_size < 2:
            raise ModelError("vocab size must be >= 2")
        self.vocab_size = vocab_size
        self.n_classes = n_classes
        self.layers = [
            ("embed", L.Embedding(vocab_size, 32, rng)),
            ("drop0", L.Dropout(0.2, rng)),
            ("lstm1", L.Bidirectional(32, 32, rng, name="lstm1")),
            ("drop1", L.Dropout(0.2, rng)),
            ("lstm2", L.LSTM(64, 32, rng, return_sequences=False, name="lstm2")),
            ("norm", L.BatchNorm(32, name="norm")),
            ("drop2", L.Dropout(0.2, rng)),
            ("dense", L.Dense(32, 64, rng, activation="relu", name="dense")),
            ("drop3", L.Dropout(0.2, rng)),
            ("classify", L.Dense(64, n_classes, rng, name="classify")),
        ]

    def _meta(self):
        return {"vocab_size": self.vocab_size, "n_classes": self.n_classes}

    def forward(self, ids, training: bool = False) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.ndim != 2:
            raise ModelError("lstm expects (batch, time) id sequences")
        mask = ids != 0
        x = self.layers[0][1].forward(ids, training)
        return self._tail(x, mask, training, start=1)

    def forward_from_embedded(self, x, mask=None) -> np.ndarray:
        if mask is None:
            mask = np.ones(x.shape[:2], dtype=bool)
        return self._tail(x, mask, training=False, start=1)

    def _tail(self, x, mask, training: bool, start: int) -> np.ndarray:
        self._active = self.layers[start:]
        self.activations = {}
        for name, layer in self._active:
            if isinstance(layer, (L.LSTM, L.Bidirectional)):
                x = layer.forward(x, training, mask)
            else:
                x = layer.forward(x, training)
            self.activations[name] = x
        return x

    def backward_training(self, dlogits):
        dy = dlogits
        for _, layer in reversed(self.layers):
            dy = layer.backward(dy)
            if dy is None:
                break


def build_cnn(vocab_size: int, n_classes: int, seed: int = 0, pooling: str = "avg",
              kernel_size=(4, 2), rng: np.random.Generator | None = None) -> CNNModel:
    rng = rng if rng is not None else np.random.default_rng(seed)
    return CNNModel(vocab_size, n_classes, rng, pooling, tuple(kernel_size))


def build_lstm(vocab_size: int, n_classes: int, seed: int = 0,
               rng: np.random.Generator | None = None) -> LSTMModel:
    rng = rng if rng is not None else np.random.default_rng(seed)
    return LSTMModel(vocab_size, n_classes, rng)


def transplant_embeddings(target: Model, source: Model, freeze: bool = True) -> None:
    if target.lexicon_fingerprint != source.lexicon_fingerprint:
        raise ModelError("lexicon fingerprint mismatch; embeddings not transferable")
    src = source.embedding.table
    dst = target.embedding.table
    if src.value.shape != dst.value.shape:
        raise ModelError("embedding shape mismatch")
    dst.value[...] = src.value
    if freeze:
        dst.trainable = False


# ---------------------------------------------------------------------------
# training / evaluation


def pad_sequences(seqs: list[np.ndarray]) -> np.ndarray:
    t = max(len(s) for s in seqs)
    out = np.zeros((len(seqs), t), dtype=np.int32)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def _batches(n: int, batch_size: int, rng: np.random.Generator | None):
    order = np.arange(n)
    if rng is not None:
        rng.shuffle(order)
    for i in range(0, n, batch_size):
        yield order[i : i + batch_size]


def _model_inputs(model: Model, inputs, idx):
    if model.kind == "cnn":
        return inputs[idx]
    return pad_sequences([inputs[i] for i in idx])


def train(
    model: Model,
    train_inputs,
    train_labels: np.ndarray,
    val_inputs,
    val_labels: np.ndarray,
    config: TrainConfig,
) -> dict:
    """Minibatch Adam training with early stopping on validation loss.

    The weights (and batch-norm statistics) from the epoch with the best
    validation loss are restored before returning.  Returns a history dict
    with per-epoch losses, accuracies, and wall-clock seconds.
    """
    rng = np.random.default_rng(config.seed)
    lr = config.learning_rate or model.default_lr
    opt = Adam(model.params(), lr=lr)
    train_labels = np.asarray(train_labels)
    history = {"epoch": [], "loss": [], "accuracy": [], "val_loss": [],
               "val_accuracy": [], "seconds": []}
    best_val = np.inf
    best_state: list[np.ndarray] | None = None
    since_best = 0
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        losses = []
        correct = 0
        for idx in _batches(len(train_labels), config.batch_size, rng):
            x = _model_inputs(model, train_inputs, idx)
            y = train_labels[idx]
            if model.kind == "cnn" and len(idx) < 2:
                continue  # batchnorm needs >= 2 samples
            logits = model.forward(x, training=True)
            loss, dlogits = L.softmax_xent(logits, y)
            opt.zero_grad()
            model.backward_training(dlogits)
            opt.step()
            losses.append(loss)
            correct += int((logits.argmax(axis=1) == y).sum())
        val = evaluate(model, val_inputs, np.asarray(val_labels))
        history["epoch"].append(epoch)
        history["loss"].append(float(np.mean(losses)) if losses else float("nan"))
        history["accuracy"].append(correct / max(len(train_labels), 1))
        history["val_loss"].append(val["loss"])
        history["val_accuracy"].append(val["accuracy"])
        history["seconds"].append(time.perf_counter() - t0)
        if val["loss"] < best_val - 1e-6:
            best_val = val["loss"]
            best_state = [p.value.copy() for p in model.params() + model.stats()]
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                break
    if best_state is not None:
        for p, value in zip(model.params() + model.stats(), best_state):
            p.value[...] = value
    return history


def evaluate(model: Model, inputs, labels: np.ndarray, batch_size: int = 64) -> dict:
    """Simple accuracy, confusion matrix (rows = true class), raw logits."""
    labels = np.asarray(labels)
    n_classes = model.n_classes
    all_logits = np.zeros((len(labels), n_classes))
    losses = []
    for idx in _batches(len(labels), batch_size, rng=None):
        x = _model_inputs(model, inputs, idx)
        logits = model.forward(x, training=False)
        loss, _ = L.softmax_xent(logits, labels[idx])
        losses.append(loss * len(idx))
        all_logits[idx] = logits
    pred = all_logits.argmax(axis=1)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(labels, pred):
        confusion[t, p] += 1
    return {
        "accuracy": float((pred == labels).mean()) if len(labels) else 0.0,
        "loss": float(np.sum(losses) / max(len(labels), 1)),
        "confusion": confusion,
        "logits": all_logits,
    }
