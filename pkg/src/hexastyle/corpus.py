"""Corpus ingestion, block splitting, and 64-line window cutting.

Works are cut into contiguous train/val/test blocks first and windows are
cut inside each block, so no verse line leaks between splits even when
training windows overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

WINDOW = 64


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class VerseLine:
    text: str
    work_label: str
    ordinal: int  # 1-based


@dataclass(frozen=True)
class Work:
    label: str
    lines: tuple[VerseLine, ...]

    @property
    def line_count(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class Corpus:
    works: tuple[Work, ...]

    @property
    def labels(self) -> list[str]:
        return [w.label for w in self.works]

    @property
    def total_lines(self) -> int:
        return sum(w.line_count for w in self.works)


@dataclass(frozen=True)
class SampleWindow:
    lines: tuple[VerseLine, ...]
    label: str
    origin: tuple[str, int]  # (work label, 1-based start ordinal)

    def __post_init__(self):
        if len(self.lines) != WINDOW:
            raise CorpusError("window must hold exactly %d lines" % WINDOW)


@dataclass(frozen=True)
class DataSplits:
    train: tuple[SampleWindow, ...]
    val: tuple[SampleWindow, ...]
    test: tuple[SampleWindow, ...]
    # (label, start ordinal, end ordinal, split) block rows, for the manifest
    blocks: tuple[tuple[str, int, int, str], ...]

    def manifest_tsv(self) -> str:
        rows = ["\t".join(map(str, row)) for row in self.blocks]
        return "\n".join(rows) + "\n"


def ingest(sources: list[tuple[str | Path, str]]) -> Corpus:
    """Read (path, label) pairs: one verse line per text line."""
    works = []
    seen = set()
    for path, label in sources:
        if label in seen:
            raise CorpusError("duplicate label %r" % label)
        seen.add(label)
        text = Path(path).read_text(encoding="utf-8")
        lines = []
        for raw in text.splitlines():
            if raw.strip():
                lines.append(VerseLine(raw.strip(), label, len(lines) + 1))
        if not lines:
            raise CorpusError("empty work %r (%s)" % (label, path))
        works.append(Work(label=label, lines=tuple(lines)))
    if not works:
        raise CorpusError("no works given")
    return Corpus(works=tuple(works))


def read_manifest(path: str | Path) -> list[tuple[Path, str]]:
    """key = label, value = path, one pair per line, separated by '='
    or whitespace; '#' starts a comment."""
    base = Path(path).parent
    pairs = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            label, p = (part.strip() for part in line.split("=", 1))
        else:
            label, p = line.split(None, 1)
        pairs.append((base / p.strip(), label))
    if not pairs:
        raise CorpusError("empty manifest %s" % path)
    return pairs


def cut_windows(
    lines: tuple[VerseLine, ...], label: str, window: int, stride: int
) -> list[SampleWindow]:
    out = []
    for start in range(0, len(lines) - window + 1, stride):
        chunk = lines[start : start + window]
        out.append(SampleWindow(chunk, label, (label, chunk[0].ordinal)))
    return out


def split_and_window(
    corpus: Corpus,
    window: int = WINDOW,
    train_stride: int = 32,
    eval_stride: int = 64,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> DataSplits:
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError("split ratios must sum to 1")
    if train_stride < 1 or eval_stride < 1:
        raise CorpusError("stride must be >= 1")
    splits: dict[str, list[SampleWindow]] = {"train": [], "val": [], "test": []}
    blocks = []
    for work in corpus.works:
        n = work.line_count
        if n < window:
            raise CorpusError(
                "work %r shorter than window (%d < %d)" % (work.label, n, window)
            )
        n_train = round(n * ratios[0])
        n_val = round(n * ratios[1])
        cuts = {
            "train": work.lines[:n_train],
            "val": work.lines[n_train : n_train + n_val],
            "test": work.lines[n_train + n_val :],
        }
        pos = 1
        for name, chunk in cuts.items():
            if chunk:
                blocks.append((work.label, pos, pos + len(chunk) - 1, name))
                pos += len(chunk)
            stride = train_stride if name == "train" else eval_stride
            splits[name].extend(cut_windows(chunk, work.label, window, stride))
    return DataSplits(
        train=tuple(splits["train"]),
        val=tuple(splits["val"]),
        test=tuple(splits["test"]),
        blocks=tuple(blocks),
    )
