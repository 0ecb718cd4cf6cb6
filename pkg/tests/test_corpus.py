"""Corpus ingestion, manifests, block splitting and window cutting."""

import pytest

from hexastyle.corpus import (
    CorpusError,
    cut_windows,
    ingest,
    read_manifest,
    split_and_window,
)


def _write_work(path, n, prefix="line"):
    path.write_text("\n".join("%s %d" % (prefix, i) for i in range(1, n + 1)) + "\n")


def test_ingest_orders_and_numbers_lines(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("first\n\n  second  \nthird\n")
    corpus = ingest([(p, "a")])
    work = corpus.works[0]
    assert [l.text for l in work.lines] == ["first", "second", "third"]
    assert [l.ordinal for l in work.lines] == [1, 2, 3]


def test_duplicate_label_rejected(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("x\n")
    with pytest.raises(CorpusError):
        ingest([(p, "a"), (p, "a")])


def test_empty_work_rejected(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("\n\n")
    with pytest.raises(CorpusError):
        ingest([(p, "a")])


def test_manifest_comments_and_relative_paths(tmp_path):
    _write_work(tmp_path / "x.txt", 3)
    (tmp_path / "m.txt").write_text(
        "# corpus\nalpha = x.txt  # trailing comment\n\nbeta x.txt\n"
    )
    pairs = read_manifest(tmp_path / "m.txt")
    assert [(p.name, lab) for p, lab in pairs] == [("x.txt", "alpha"), ("x.txt", "beta")]


def test_empty_manifest_rejected(tmp_path):
    (tmp_path / "m.txt").write_text("# nothing\n")
    with pytest.raises(CorpusError):
        read_manifest(tmp_path / "m.txt")


def test_cut_windows_counts(tmp_path):
    _write_work(tmp_path / "a.txt", 200)
    corpus = ingest([(tmp_path / "a.txt", "a")])
    windows = cut_windows(corpus.works[0].lines, "a", window=64, stride=32)
    assert len(windows) == (200 - 64) // 32 + 1
    assert all(len(w.lines) == 64 for w in windows)
    assert windows[0].origin == ("a", 1)
    assert windows[1].origin == ("a", 33)


def test_no_line_leaks_between_splits(tmp_path):
    _write_work(tmp_path / "a.txt", 512)
    corpus = ingest([(tmp_path / "a.txt", "a")])
    splits = split_and_window(corpus, 64, 8, 16, (0.5, 0.25, 0.25))
    seen = {}
    for name in ("train", "val", "test"):
        for w in getattr(splits, name):
            for line in w.lines:
                assert seen.setdefault(line.ordinal, name) == name, (
                    "line %d appears in both %s and %s"
                    % (line.ordinal, seen[line.ordinal], name)
                )


def test_blocks_are_contiguous_and_cover_the_work(tmp_path):
    _write_work(tmp_path / "a.txt", 512)
    corpus = ingest([(tmp_path / "a.txt", "a")])
    splits = split_and_window(corpus, 64, 32, 64, (0.8, 0.1, 0.1))
    blocks = [b for b in splits.blocks if b[0] == "a"]
    assert blocks[0][1] == 1
    for prev, cur in zip(blocks, blocks[1:]):
        assert cur[1] == prev[2] + 1
    assert blocks[-1][2] == 512
    tsv = splits.manifest_tsv()
    assert tsv.count("\n") == len(splits.blocks)


def test_work_shorter_than_window_rejected(tmp_path):
    _write_work(tmp_path / "a.txt", 40)
    corpus = ingest([(tmp_path / "a.txt", "a")])
    with pytest.raises(CorpusError):
        split_and_window(corpus)


def test_bad_ratios_rejected(tmp_path):
    _write_work(tmp_path / "a.txt", 128)
    corpus = ingest([(tmp_path / "a.txt", "a")])
    with pytest.raises(CorpusError):
        split_and_window(corpus, ratios=(0.5, 0.2, 0.2))
