"""Glue between corpus windows and model-ready arrays."""

from __future__ import annotations

import numpy as np

from . import encoding
from .config import RunConfig
from .corpus import Corpus, DataSplits, SampleWindow

UNSCANNED = "<unscanned>"


def tokenize_corpus(corpus: Corpus, cfg: RunConfig) -> tuple[dict, dict]:
    """Tokenize every line of every work.

    -> ({label: [tokens per line]}, stats).  Lines that fail scansion keep
    their slot as a single UNSCANNED token so window offsets stay aligned.
    """
    token_map: dict[str, list[list[str]]] = {}
    stats = {"lines": 0, "unscannable": 0, "ambiguous": 0}
    for work in corpus.works:
        per_line = []
        for line in work.lines:
            stats["lines"] += 1
            try:
                tokens = encoding.tokenize_line(
                    line.text,
                    split_muta_cum_liquida=not cfg.tautosyllabic_muta_cum_liquida,
                    allow_spondaic_fifth=cfg.spondaic_fifth,
                )
            except ValueError:
                stats["unscannable"] += 1
                tokens = [UNSCANNED]
            per_line.append(tokens)
        token_map[work.label] = per_line
    return token_map, stats


def window_tokens(window: SampleWindow, token_map: dict) -> list[list[str]]:
    per_work = token_map[window.label]
    return [per_work[line.ordinal - 1] for line in window.lines]


def corpus_token_stream(token_map: dict, ablation: str = "full"):
    for per_line in token_map.values():
        for tokens in per_line:
            yield from encoding.ablate(tokens, ablation)
            yield encoding.EOL


def encode_split(
    windows,
    token_map: dict,
    lexicon: encoding.Lexicon,
    ablation: str,
    labels: list[str],
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """-> (grids (N,64,20), label indices, label names)."""
    idx = {lab: i for i, lab in enumerate(labels)}
    grids = np.zeros((len(windows), encoding.GRID_ROWS, encoding.GRID_COLS), dtype=np.int32)
    y = np.zeros(len(windows), dtype=np.int32)
    for i, w in enumerate(windows):
        sample = encoding.encode_sample(w, lexicon, window_tokens(w, token_map), ablation)
        grids[i] = sample.grid
        y[i] = idx[w.label]
    return grids, y, labels


def sequences_from_grids(grids: np.ndarray, eol_id: int) -> list[np.ndarray]:
    """Rebuild the LSTM sequence form (ids + EOL per row) from CNN grids."""
    out = []
    for grid in grids:
        seq = []
        for row in grid:
            seq.extend(int(v) for v in row[row != 0])
            seq.append(eol_id)
        out.append(np.asarray(seq, dtype=np.int32))
    return out


def model_inputs(kind: str, grids: np.ndarray, eol_id: int):
    if kind == "cnn":
        return grids.astype(np.int64)
    return sequences_from_grids(grids, eol_id)
