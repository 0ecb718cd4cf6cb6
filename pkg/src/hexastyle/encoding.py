"""Token serialization, lexicon, id grids, ablations, metron vectors.

Token text format: phonetic syllable body followed by flags in the fixed
order +A (ictus), +L (long), +S (accent), one of +SC/+WC/+DI (pause),
+E (elision).  Lines are separated by the literal token EOL.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import phonology, scansion
from .corpus import SampleWindow

EOL = "EOL"
NULL_FLAG_TOKEN = "+∅"
PAD_ID = 0
UNK_ID = 1

GRID_ROWS = 64
GRID_COLS = 20

MAGIC = b"HEXENC1\n"
VERSION = 1


class EncodingError(ValueError):
    pass


def token_string(s: scansion.AnnotatedSyllable) -> str:
    body = phonology.render(s.syllable.text.lower())
    flags = ""
    if s.ictus:
        flags += "+A"
    if s.long:
        flags += "+L"
    if s.accent:
        flags += "+S"
    if s.pause:
        flags += "+" + s.pause
    if s.elided:
        flags += "+E"
    return body + flags


def split_token(token: str) -> tuple[str, str]:
    """-> (body, flags); EOL has no flags."""
    if token == EOL:
        return token, ""
    cut = token.find("+")
    if cut < 0:
        return token, ""
    return token[:cut], token[cut:]


def tokenize_line(
    text: str,
    split_muta_cum_liquida: bool = True,
    allow_spondaic_fifth: bool = False,
) -> list[str]:
    """Raw verse -> token strings for one line (no EOL appended)."""
    words = phonology.transcribe_line(text)
    sylls = phonology.syllabify_line(
        [w.lower() for w in words], split_muta_cum_liquida
    )
    scanned = scansion.scan_line(sylls, allow_spondaic_fifth)
    return [token_string(s) for s in scanned.syllables]


def ablate_token(token: str, mode: str) -> str:
    if mode == "full":
        return token
    body, flags = split_token(token)
    if token == EOL:
        return token
    if mode == "metre_only":
        return flags if flags else NULL_FLAG_TOKEN
    if mode == "sound_only":
        return body
    raise EncodingError("unknown ablation mode %r" % mode)


def ablate(tokens: list[str], mode: str) -> list[str]:
    return [ablate_token(t, mode) for t in tokens]


@dataclass(frozen=True)
class Lexicon:
    tokens: tuple[str, ...]  # index = id; tokens[0] = <pad>, tokens[1] = <unk>
    frequencies: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index().get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def _index(self) -> dict[str, int]:
        idx = getattr(self, "_idx", None)
        if idx is None:
            idx = {t: i for i, t in enumerate(self.tokens)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for t in self.tokens:
            h.update(t.encode("utf-8"))
            h.update(b"\0")
        return h.hexdigest()[:16]

    def to_tsv(self) -> str:
        rows = [
            "%d\t%s\t%d" % (i, t, f)
            for i, (t, f) in enumerate(zip(self.tokens, self.frequencies))
        ]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "Lexicon":
        tokens, freqs = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            _i, tok, freq = line.split("\t")
            tokens.append(tok)
            freqs.append(int(freq))
        return cls(tuple(tokens), tuple(freqs))


def build_lexicon(token_stream) -> Lexicon:
    """Ids by descending frequency, ties broken lexicographically;
    ids 0 and 1 are reserved for padding and unknown."""
    counts = Counter(token_stream)
    if not counts:
        raise EncodingError("empty token stream")
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    tokens = ("<pad>", "<unk>") + tuple(t for t, _ in ordered)
    freqs = (0, 0) + tuple(f for _, f in ordered)
    return Lexicon(tokens, freqs)


@dataclass(frozen=True)
class EncodedSample:
    grid: np.ndarray  # (64, 20) int32, pad id 0 at row tails; no EOL
    sequence: np.ndarray  # flattened ids with EOL after each line
    label: str


def encode_sample(
    window: SampleWindow,
    lexicon: Lexicon,
    line_tokens: list[list[str]],
    ablation: str = "full",
) -> EncodedSample:
    """line_tokens holds the tokenized lines of the window, in order."""
    if len(line_tokens) != GRID_ROWS:
        raise EncodingError("expected %d tokenized lines" % GRID_ROWS)
    grid = np.zeros((GRID_ROWS, GRID_COLS), dtype=np.int32)
    seq: list[int] = []
    eol_id = lexicon.id_of(EOL)
    for r, tokens in enumerate(line_tokens):
        if not tokens:
            raise EncodingError("empty line in window at row %d" % r)
        if len(tokens) > GRID_COLS:
            raise EncodingError("line with %d tokens exceeds grid" % len(tokens))
        tokens = ablate(tokens, ablation)
        ids = [lexicon.id_of(t) for t in tokens]
        grid[r, : len(ids)] = ids
        seq.extend(ids)
        seq.append(eol_id)
    return EncodedSample(grid, np.asarray(seq, dtype=np.int32), window.label)


def write_encoded(path, samples: list[EncodedSample], labels: list[str]) -> None:
    """Binary container: magic, version, dims, label table, label indices,
    then row-major int32 grids."""
    label_blob = "\n".join(labels).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            struct.pack(
                "<IIIII", VERSION, len(samples), GRID_ROWS, GRID_COLS, len(label_blob)
            )
        )
        fh.write(label_blob)
        idx = {lab: i for i, lab in enumerate(labels)}
        fh.write(
            np.asarray([idx[s.label] for s in samples], dtype=np.int32).tobytes()
        )
        for s in samples:
            fh.write(np.ascontiguousarray(s.grid, dtype=np.int32).tobytes())


def read_encoded(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """-> (grids (N,64,20) int32, label indices (N,), label names)."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise EncodingError("bad magic in %s" % path)
        version, n, rows, cols, blob_len = struct.unpack("<IIIII", fh.read(20))
        if version != VERSION:
            raise EncodingError("unsupported container version %d" % version)
        labels = fh.read(blob_len).decode("utf-8").split("\n") if blob_len else []
        y = np.frombuffer(fh.read(4 * n), dtype=np.int32).copy()
        grids = np.frombuffer(fh.read(4 * n * rows * cols), dtype=np.int32)
        grids = grids.reshape(n, rows, cols).copy()
    return grids, y, labels


# ---------------------------------------------------------------------------
# Legacy 9-channel metron encoding (kept as a baseline; underperforms the
# trainable syllable embeddings).

_VOWEL_SCORE = {"i": 0.0, "y": 0.0, "e": 0.25, "a": 0.5, "o": 0.75, "u": 1.0}
_CONS_SCORE = {
    # place of articulation, labial 0.0 -> velar 1.0
    "p": 0.0, "b": 0.0, "m": 0.0, "f": 0.0, "w": 0.0,
    "t": 0.5, "d": 0.5, "n": 0.5, "s": 0.5, "z": 0.5, "r": 0.5, "l": 0.5,
    "j": 0.75, "kw": 0.75, "gw": 0.75,
    "k": 1.0, "g": 1.0, "h": 1.0,
}
_BASE_VOWEL = str.maketrans("āēīōūȳ", "aeiouy")


def _nucleus_score(nucleus: str) -> float:
    nucleus = nucleus.translate(_BASE_VOWEL)
    if nucleus in phonology.DIPHTHONGS:
        return (_VOWEL_SCORE[nucleus[0]] + _VOWEL_SCORE[nucleus[1]]) / 2.0
    return _VOWEL_SCORE[nucleus]


def _cluster_score(cluster: str) -> float:
    if not cluster:
        return 0.5  # neutral for empty onset/coda
    units = phonology.phonemes(cluster)
    return float(np.mean([_CONS_SCORE[u] for u in units]))


def metron_encode(scanned: scansion.ScannedLine) -> np.ndarray:
    """One hexameter line -> (12, 9) metron matrix.

    Channels: onset, nucleus, coda in [0,1]; long, SC, WC, DI,
    ictus/accent conflict, elision in {0,1}.  Each foot fills two metrons:
    the longum, then the biceps (two merged breves for a dactyl).
    """
    out = np.zeros((12, 9), dtype=np.float64)
    groups: dict[int, list[scansion.AnnotatedSyllable]] = {}
    for s in scanned.metrical:
        metron = 2 * (s.foot_index - 1) + (0 if s.position_in_foot == 1 else 1)
        groups.setdefault(metron, []).append(s)
    for metron, sylls in groups.items():
        first, last = sylls[0], sylls[-1]
        out[metron, 0] = _cluster_score(first.syllable.onset)
        out[metron, 1] = float(
            np.mean([_nucleus_score(s.syllable.nucleus) for s in sylls])
        )
        out[metron, 2] = _cluster_score(last.syllable.coda)
        out[metron, 3] = float(any(s.long for s in sylls))
        out[metron, 4] = float(any(s.pause == scansion.SC for s in sylls))
        out[metron, 5] = float(any(s.pause == scansion.WC for s in sylls))
        out[metron, 6] = float(any(s.pause == scansion.DI for s in sylls))
        out[metron, 7] = float(any(s.ictus != s.accent and (s.ictus or s.accent) for s in sylls))
    for s in scanned.syllables:
        if s.elided:
            metron = 2 * (s.foot_index - 1) + (0 if s.position_in_foot == 1 else 1)
            out[metron, 8] = 1.0
    return out
