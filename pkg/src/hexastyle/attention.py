"""Attention visualization over trained models.

All three visualizers score the embedded (real-valued) input, so they work
for both the CNN grid form and the LSTM sequence form; LSTM per-token
values are regrouped into verse rows at EOL boundaries.
"""

from __future__ import annotations

import numpy as np

from .encoding import GRID_COLS, GRID_ROWS
from .nn import layers as L
from .models import Model

__all__ = [
    "vanilla_saliency",
    "grad_cam",
    "score_cam",
    "render_heatmap",
    "edge_attention_ratio",
    "cosine_distance",
]


class AttentionError(ValueError):
    pass


def _target_prob_grad(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Probability of the target class and its gradient w.r.t. the logits."""
    if not 0 <= target < logits.shape[-1]:
        raise AttentionError("class index %d out of range" % target)
    p = L.softmax(logits)
    onehot = np.zeros_like(p)
    onehot[:, target] = 1.0
    dlogits = p[:, target : target + 1] * (onehot - p)
    return float(p[0, target]), dlogits


def _channel_reduce(grad: np.ndarray, how: str = "max_abs") -> np.ndarray:
    if how == "max_abs":
        return np.abs(grad).max(axis=-1)
    if how == "mean_abs":
        return np.abs(grad).mean(axis=-1)
    raise AttentionError("unknown channel reduction %r" % how)


def regroup_rows(values: np.ndarray, tokens: list[str]) -> np.ndarray:
    """Per-token values + the token stream (with EOLs) -> (64, 20) grid.

    EOL values are dropped; each verse row is padded with zeros."""
    grid = np.zeros((GRID_ROWS, GRID_COLS))
    row, col = 0, 0
    for value, token in zip(values, tokens):
        if token == "EOL":
            row += 1
            col = 0
            continue
        if row < GRID_ROWS and col < GRID_COLS:
            grid[row, col] = value
        col += 1
    if row != GRID_ROWS:
        raise AttentionError("expected %d EOL tokens, saw %d" % (GRID_ROWS, row))
    return grid


def vanilla_saliency(
    model: Model,
    sample: np.ndarray,
    target_class: int,
    tokens: list[str] | None = None,
    reduction: str = "max_abs",
) -> np.ndarray:
    """Gradient of the class score w.r.t. the manually-embedded input,
    reduced across the 32 embedding channels.  Returns a (64, 20) map."""
    sample = np.asarray(sample)
    if model.kind == "cnn":
        ids = sample.reshape(1, GRID_ROWS, GRID_COLS)
        mask = None
    else:
        ids = sample.reshape(1, -1)
        mask = ids != 0
    x = model.embedding.forward(ids)
    logits = model.forward_from_embedded(x, mask)
    _, dlogits = _target_prob_grad(logits, target_class)
    dx = model.backward(dlogits)
    values = _channel_reduce(dx[0], reduction)
    if model.kind == "cnn":
        return values
    if tokens is None:
        raise AttentionError("token stream required to regroup LSTM saliency")
    return regroup_rows(values, tokens)


def bilinear_resize(grid: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Half-pixel-centre bilinear upsampling."""
    h, w = grid.shape
    oh, ow = out_shape
    ys = (np.arange(oh) + 0.5) * h / oh - 0.5
    xs = (np.arange(ow) + 0.5) * w / ow - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - wx) + grid[np.ix_(y0, x1)] * wx
    bot = grid[np.ix_(y1, x0)] * (1 - wx) + grid[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def nearest_resize(grid: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    h, w = grid.shape
    oh, ow = out_shape
    yi = np.minimum(((np.arange(oh) + 0.5) * h / oh).astype(int), h - 1)
    xi = np.minimum(((np.arange(ow) + 0.5) * w / ow).astype(int), w - 1)
    return grid[np.ix_(yi, xi)]


def _conv_layer(model: Model, layer: str) -> str:
    from .nn.layers import Conv2D

    if not isinstance(model.layer(layer), Conv2D):
        raise AttentionError("%r is not a convolutional layer" % layer)
    return layer


def grad_cam(
    model: Model,
    sample: np.ndarray,
    target_class: int,
    layer: str = "conv2",
    upsample: str = "bilinear",
) -> np.ndarray:
    """Rectified, gradient-weighted sum of the conv activation maps."""
    _conv_layer(model, layer)
    ids = np.asarray(sample).reshape(1, GRID_ROWS, GRID_COLS)
    logits = model.forward(ids, training=False)
    acts = model.activations[layer]
    _, dlogits = _target_prob_grad(logits, target_class)
    model.backward(dlogits, capture={layer})
    grads = model.captured[layer]
    weights = grads.mean(axis=(0, 1, 2))
    cam = np.maximum((acts[0] * weights).sum(axis=-1), 0.0)
    resize = bilinear_resize if upsample == "bilinear" else nearest_resize
    return resize(cam, (GRID_ROWS, GRID_COLS))


def score_cam(
    model: Model,
    sample: np.ndarray,
    target_class: int,
    layer: str = "conv2",
    upsample: str = "bilinear",
    chunk: int = 16,
) -> np.ndarray:
    """Forward-only attention: each activation map masks the embedded input
    and the resulting rise in target-class probability (over the zero-input
    baseline) weights that map, softmax-normalized across channels."""
    _conv_layer(model, layer)
    ids = np.asarray(sample).reshape(1, GRID_ROWS, GRID_COLS)
    model.forward(ids, training=False)
    acts = model.activations[layer][0]  # (h, w, C)
    x = model.embedding.forward(ids)  # (1, 64, 20, 32)
    resize = bilinear_resize if upsample == "bilinear" else nearest_resize

    baseline_logits = model.forward_from_embedded(np.zeros_like(x))
    baseline = float(L.softmax(baseline_logits)[0, target_class])

    n_channels = acts.shape[-1]
    masks = np.zeros((n_channels, GRID_ROWS, GRID_COLS))
    for c in range(n_channels):
        m = acts[:, :, c]
        span = m.max() - m.min()
        if span > 0:
            masks[c] = resize((m - m.min()) / span, (GRID_ROWS, GRID_COLS))
    increases = np.zeros(n_channels)
    for start in range(0, n_channels, chunk):
        batch_masks = masks[start : start + chunk]
        masked = x * batch_masks[:, :, :, None]
        probs = L.softmax(model.forward_from_embedded(masked))
        increases[start : start + len(batch_masks)] = probs[:, target_class] - baseline
    weights = L.softmax(increases[None, :])[0]
    cam = np.maximum((acts * weights).sum(axis=-1), 0.0)
    return resize(cam, (GRID_ROWS, GRID_COLS))


# ---------------------------------------------------------------------------
# diagnostics reported (not asserted) in evaluation output


def edge_attention_ratio(values: np.ndarray, edge_frac: float = 0.05) -> float:
    """Mean saliency over the first+last edge_frac of a sequence divided by
    the mean over the middle 50%; > 1 flags the LSTM edge hot-spots."""
    values = np.asarray(values).ravel()
    n = len(values)
    k = max(int(round(n * edge_frac)), 1)
    lo = n // 4
    hi = lo + n // 2
    edges = np.concatenate([values[:k], values[n - k :]])
    middle = values[lo:hi]
    denom = middle.mean()
    return float(edges.mean() / denom) if denom > 0 else float("inf")


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    return float(1.0 - (a @ b) / (na * nb))


# ---------------------------------------------------------------------------
# SVG rendering

_CELL_W = 46
_CELL_H = 16
_MARGIN = 8
_LEGEND_H = 24


def _heat_color(v: float) -> str:
    """0 -> white, 1 -> saturated red-orange."""
    v = min(max(v, 0.0), 1.0)
    r = 255
    g = int(round(255 - 180 * v))
    b = int(round(255 - 235 * v))
    return "#%02x%02x%02x" % (r, g, b)


def render_heatmap(
    values: np.ndarray,
    token_rows: list[list[str]],
    title: str = "",
    subtitle: str = "",
) -> str:
    """Verse-aligned SVG heatmap: one row per line, one cell per syllable,
    colored by map value normalized over the sample."""
    values = np.asarray(values, dtype=float)
    vmax = values.max()
    norm = values / vmax if vmax > 0 else values
    n_rows = len(token_rows)
    n_cols = values.shape[1]
    width = _MARGIN * 2 + n_cols * _CELL_W
    height = _MARGIN * 2 + _LEGEND_H + n_rows * _CELL_H
    out = []
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'font-family="monospace" font-size="10">' % (width, height)
    )
    out.append(
        '<text x="%d" y="%d" font-size="12">%s</text>'
        % (_MARGIN, _MARGIN + 12, _escape(title))
    )
    if subtitle:
        out.append(
            '<text x="%d" y="%d" fill="#555">%s</text>'
            % (width - _MARGIN - 8 * len(subtitle), _MARGIN + 12, _escape(subtitle))
        )
    y0 = _MARGIN + _LEGEND_H
    for r, row in enumerate(token_rows):
        for c in range(n_cols):
            x = _MARGIN + c * _CELL_W
            y = y0 + r * _CELL_H
            v = norm[r, c] if r < norm.shape[0] else 0.0
            out.append(
                '<rect x="%d" y="%d" width="%d" height="%d" fill="%s"/>'
                % (x, y, _CELL_W, _CELL_H, _heat_color(float(v)))
            )
            if c < len(row):
                out.append(
                    '<text x="%d" y="%d">%s</text>'
                    % (x + 2, y + 12, _escape(row[c]))
                )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
