"""Shared fixtures: a deterministic synthetic corpus and its encodings.

Everything expensive is session-scoped so the suite builds the corpus,
lexicon and encoded splits exactly once.
"""

import numpy as np
import pytest

from hexastyle import encoding, pipeline
from hexastyle.config import RunConfig
from hexastyle.corpus import ingest, read_manifest, split_and_window
from hexastyle.toydata import write_toy_corpus


@pytest.fixture(scope="session")
def toy_manifest(tmp_path_factory):
    directory = tmp_path_factory.mktemp("toy_corpus")
    return write_toy_corpus(directory)


@pytest.fixture(scope="session")
def toy_corpus(toy_manifest):
    return ingest(read_manifest(toy_manifest))


@pytest.fixture(scope="session")
def toy_token_map(toy_corpus):
    token_map, stats = pipeline.tokenize_corpus(toy_corpus, RunConfig())
    assert stats["unscannable"] == 0
    return token_map


@pytest.fixture(scope="session")
def toy_lexicon(toy_token_map):
    return encoding.build_lexicon(pipeline.corpus_token_stream(toy_token_map))


@pytest.fixture(scope="session")
def toy_splits(toy_corpus):
    """Dense training windows (stride 8) so the classifiers can generalize."""
    return split_and_window(
        toy_corpus, window=64, train_stride=8, eval_stride=16,
        ratios=(0.5, 0.25, 0.25),
    )


@pytest.fixture(scope="session")
def toy_encoded(toy_splits, toy_token_map, toy_lexicon, toy_corpus):
    """dict with train/val/test (grids, label indices) pairs."""
    labels = toy_corpus.labels
    out = {"labels": labels}
    for name, windows in (("train", toy_splits.train), ("val", toy_splits.val),
                          ("test", toy_splits.test)):
        grids, y, _ = pipeline.encode_split(
            windows, toy_token_map, toy_lexicon, "full", labels
        )
        out[name] = (grids.astype(np.int64), y)
    return out
