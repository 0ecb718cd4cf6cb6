"""Embedding-space analysis: 2D projection and flag-class density tests.

The projection is plain PCA (the embeddings are exportable as TSV for any
external non-linear projector).  Clustering per flag class is scored as a
z-score of the mean intra-class pairwise distance against size-matched
random token subsets; negative z means tighter than chance.
"""

from __future__ import annotations

import numpy as np

from .encoding import EOL, Lexicon, split_token
from .phonology import DIPHTHONGS, LONG_VOWELS, syllabify_word

FLAG_CLASSES = ("Long", "Accent", "Open", "SC", "WC", "DI")


class AnalysisError(ValueError):
    pass


def export_embeddings(model, lexicon: Lexicon) -> tuple[np.ndarray, list[str]]:
    """-> (V x 32 matrix, token strings by row)."""
    table = model.embedding.table.value.copy()
    if table.shape[0] != lexicon.size:
        raise AnalysisError("checkpoint embedding rows do not match the lexicon")
    return table, list(lexicon.tokens)


def embeddings_tsv(matrix: np.ndarray, tokens: list[str]) -> str:
    if len(tokens) != matrix.shape[0]:
        raise AnalysisError("token list does not match matrix rows")
    rows = []
    for token, row in zip(tokens, matrix):
        rows.append(token + "\t" + "\t".join("%.17g" % v for v in row))
    return "\n".join(rows) + "\n"


def parse_embeddings_tsv(text: str) -> tuple[np.ndarray, list[str]]:
    tokens, rows = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        tokens.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    return np.asarray(rows), tokens


def project_2d(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """PCA to 2D: -> (V x 2 coords, 2 x D components, explained variance ratio)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] < 3:
        raise AnalysisError("need at least 3 points to project")
    centered = matrix - matrix.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size < 2 or s[1] <= s[0] * 1e-12:
        raise AnalysisError("embedding matrix is degenerate (rank < 2)")
    coords = centered @ vt[:2].T
    total = (s**2).sum()
    evr = (s[:2] ** 2) / total if total > 0 else np.zeros(2)
    return coords, vt[:2], evr


def flag_classes(lexicon: Lexicon) -> dict[str, np.ndarray]:
    """Token-id membership for each poetic flag class.

    Long/Accent/SC/WC/DI come from the token flags; Open means the token's
    syllable body has no coda."""
    members: dict[str, list[int]] = {name: [] for name in FLAG_CLASSES}
    for tid, token in enumerate(lexicon.tokens):
        if tid < 2 or token == EOL:
            continue
        body, flags = split_token(token)
        parts = set(flags.split("+")) - {""}
        if "L" in parts:
            members["Long"].append(tid)
        if "S" in parts:
            members["Accent"].append(tid)
        for pause in ("SC", "WC", "DI"):
            if pause in parts:
                members[pause].append(tid)
        if body:
            try:
                sylls = syllabify_word(body)
            except ValueError:
                continue
            if len(sylls) == 1 and sylls[0].coda == "":
                members["Open"].append(tid)
    return {k: np.asarray(v, dtype=int) for k, v in members.items()}


def _mean_pairwise_distance(points: np.ndarray) -> float:
    n = len(points)
    sq = (points**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    iu = np.triu_indices(n, k=1)
    return float(np.sqrt(np.maximum(d2[iu], 0.0)).mean())


def clustering_zscore(
    coords: np.ndarray,
    member_ids: np.ndarray,
    rng: np.random.Generator,
    n_null: int = 1000,
) -> dict:
    """z-score of the class's mean intra-class distance against size-matched
    random subsets; negative = tighter than random."""
    if len(member_ids) < 5:
        raise AnalysisError("class with fewer than 5 members")
    observed = _mean_pairwise_distance(coords[member_ids])
    size = len(member_ids)
    null = np.empty(n_null)
    n = len(coords)
    for i in range(n_null):
        pick = rng.choice(n, size=min(size, n), replace=False)
        null[i] = _mean_pairwise_distance(coords[pick])
    sd = null.std()
    z = (observed - null.mean()) / sd if sd > 0 else 0.0
    return {
        "observed": observed,
        "null_mean": float(null.mean()),
        "null_std": float(sd),
        "z": float(z),
        "n_members": size,
        "small_sample": size < 50,
    }


def kde_grid(
    points: np.ndarray, grid_size: int = 200, bounds: tuple | None = None
) -> tuple[np.ndarray, tuple]:
    """Gaussian KDE (Scott's rule) on a fixed grid; integrates to ~1."""
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    if d != 2:
        raise AnalysisError("kde_grid expects 2D points")
    if bounds is None:
        lo = np.percentile(points, 1, axis=0)
        hi = np.percentile(points, 99, axis=0)
        pad = 0.05 * (hi - lo + 1e-12)
        bounds = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])
    x0, x1, y0, y1 = bounds
    factor = n ** (-1.0 / 6.0)  # Scott's rule for d=2
    hx = max(points[:, 0].std() * factor, 1e-9)
    hy = max(points[:, 1].std() * factor, 1e-9)
    xs = np.linspace(x0, x1, grid_size)
    ys = np.linspace(y0, y1, grid_size)
    gx = (xs[None, :] - points[:, 0][:, None]) / hx
    gy = (ys[None, :] - points[:, 1][:, None]) / hy
    kx = np.exp(-0.5 * gx**2)
    ky = np.exp(-0.5 * gy**2)
    density = (ky[:, :, None] * kx[:, None, :]).sum(axis=0)
    density /= n * 2.0 * np.pi * hx * hy
    return density, bounds


def class_density_report(
    coords: np.ndarray,
    classes: dict[str, np.ndarray],
    seed: int = 0,
    n_null: int = 1000,
    grid_size: int = 200,
) -> dict:
    """Per-class clustering statistics plus a shared-bounds density grid."""
    rng = np.random.default_rng(seed)
    lo = np.percentile(coords, 1, axis=0)
    hi = np.percentile(coords, 99, axis=0)
    pad = 0.05 * (hi - lo + 1e-12)
    bounds = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])
    report: dict = {"bounds": bounds, "classes": {}}
    for name, ids in classes.items():
        if len(ids) < 5:
            report["classes"][name] = {"skipped": "fewer than 5 members",
                                       "n_members": int(len(ids))}
            continue
        stats = clustering_zscore(coords, ids, rng, n_null)
        density, _ = kde_grid(coords[ids], grid_size, bounds)
        stats["density"] = density
        report["classes"][name] = stats
    return report
