"""Embedding analysis: PCA oracle, clustering statistics, KDE, flag classes."""

import numpy as np
import pytest

from hexastyle.analysis import (
    AnalysisError,
    class_density_report,
    clustering_zscore,
    embeddings_tsv,
    export_embeddings,
    flag_classes,
    kde_grid,
    parse_embeddings_tsv,
    project_2d,
)
from hexastyle.encoding import Lexicon
from hexastyle.models import build_lstm


def test_pca_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(0)
    # anisotropic cloud so the principal axes are well separated
    base = rng.standard_normal((300, 6)) * np.array([5.0, 3.0, 1.0, 0.5, 0.2, 0.1])
    mix = rng.standard_normal((6, 6))
    matrix = base @ mix + rng.standard_normal(6)
    coords, components, evr = project_2d(matrix)

    centered = matrix - matrix.mean(axis=0)
    cov = centered.T @ centered / len(matrix)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]

    for k in range(2):
        # same axis up to sign
        dot = abs(float(components[k] @ evecs[:, k]))
        assert abs(dot - 1.0) < 1e-8
        assert abs(evr[k] - evals[k] / evals.sum()) < 1e-10
    # projected variance equals the eigenvalues
    assert np.allclose(coords.var(axis=0), evals[:2], rtol=1e-8)


def test_pca_rejects_degenerate_input():
    with pytest.raises(AnalysisError):
        project_2d(np.ones((10, 4)))  # rank 0 after centering
    with pytest.raises(AnalysisError):
        project_2d(np.outer(np.arange(10.0), np.ones(4)))  # rank 1


def test_planted_cluster_is_strongly_negative():
    rng = np.random.default_rng(1)
    coords = rng.standard_normal((500, 2)) * 3.0
    members = np.arange(50)
    coords[members] = rng.standard_normal((50, 2)) * 0.05 + np.array([1.0, -2.0])
    stats = clustering_zscore(coords, members, np.random.default_rng(2))
    assert stats["z"] < -5.0
    assert not stats["small_sample"]


def test_permuted_labels_are_not_significant():
    rng = np.random.default_rng(3)
    coords = rng.standard_normal((400, 2))
    inside = 0
    trials = 100
    for t in range(trials):
        members = rng.choice(400, size=50, replace=False)
        stats = clustering_zscore(coords, members, np.random.default_rng(100 + t),
                                  n_null=300)
        if abs(stats["z"]) < 3.0:
            inside += 1
    assert inside >= 95


def test_tiny_class_rejected():
    coords = np.random.default_rng(0).standard_normal((50, 2))
    with pytest.raises(AnalysisError):
        clustering_zscore(coords, np.arange(3), np.random.default_rng(0))


def test_kde_integrates_to_one():
    rng = np.random.default_rng(4)
    points = rng.standard_normal((200, 2))
    density, (x0, x1, y0, y1) = kde_grid(points, grid_size=150,
                                         bounds=(-6, 6, -6, 6))
    cell = ((x1 - x0) / 149) * ((y1 - y0) / 149)
    assert abs(density.sum() * cell - 1.0) < 0.02
    assert density.min() >= 0.0


def test_flag_classes_from_lexicon():
    lex = Lexicon(
        ("<pad>", "<unk>", "EOL", "kan+A+L+SC", "pe+WC", "tem+L+DI",
         "ta+L", "wa+A+L+S", "pi", "lor+A+L+SC"),
        tuple([0] * 10),
    )
    classes = flag_classes(lex)
    assert set(classes["Long"]) == {3, 5, 6, 7, 9}
    assert set(classes["Accent"]) == {7}
    assert set(classes["SC"]) == {3, 9}
    assert set(classes["WC"]) == {4}
    assert set(classes["DI"]) == {5}
    # open = single open syllable body; "kan", "tem", "lor" are closed
    assert set(classes["Open"]) == {4, 6, 7, 8}
    # reserved ids and EOL never belong to a class
    for ids in classes.values():
        assert not set(ids) & {0, 1, 2}


def test_export_and_tsv_round_trip(toy_lexicon):
    model = build_lstm(toy_lexicon.size, 3, seed=0)
    matrix, tokens = export_embeddings(model, toy_lexicon)
    assert matrix.shape == (toy_lexicon.size, 32)
    text = embeddings_tsv(matrix, tokens)
    back, back_tokens = parse_embeddings_tsv(text)
    assert back_tokens == tokens
    assert np.array_equal(back, matrix)


def test_export_rejects_wrong_lexicon(toy_lexicon):
    model = build_lstm(toy_lexicon.size + 5, 3, seed=0)
    with pytest.raises(AnalysisError):
        export_embeddings(model, toy_lexicon)


def test_class_density_report_skips_small_classes():
    rng = np.random.default_rng(0)
    coords = rng.standard_normal((100, 2))
    report = class_density_report(
        coords,
        {"big": np.arange(30), "tiny": np.arange(3)},
        n_null=200,
        grid_size=50,
    )
    assert "z" in report["classes"]["big"]
    assert report["classes"]["big"]["density"].shape == (50, 50)
    assert report["classes"]["tiny"]["skipped"]
