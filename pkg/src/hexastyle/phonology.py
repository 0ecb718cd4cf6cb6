"""Phonetic transcription of Latin orthography and syllabification.

The phoneme alphabet is: vowels a e i o u y (plus macron forms), the
diphthongs ai / oi / au, consonants b d f g h j k l m n p r s t w z, and
the labiovelar units kw / gw.  Consonantal i is written j internally but
rendered as plain i in user-facing text.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

VOWELS = set("aeiouyāēīōūȳ")
LONG_VOWELS = set("āēīōūȳ")
DIPHTHONGS = {"ai", "oi", "au"}
# Labiovelars count as single consonant phonemes.
UNIT_CONSONANTS = {"kw", "gw"}

_STOPS = set("pbtdkg")
_LIQUIDS = set("lr")

# Onsets legal word-internally.  Stop+liquid clusters (muta cum liquida)
# split heterosyllabically by default; pass split_muta_cum_liquida=False
# to syllabify() for the tautosyllabic treatment.
_S_CLUSTERS = {"sp", "st", "sk", "spr", "str", "skr", "spl", "skl"}


class PhonologyError(ValueError):
    pass


@dataclass(frozen=True)
class Syllable:
    onset: str
    nucleus: str
    coda: str

    def __post_init__(self):
        if not self.nucleus:
            raise PhonologyError("syllable with empty nucleus")

    @property
    def text(self) -> str:
        return self.onset + self.nucleus + self.coda

    @property
    def open(self) -> bool:
        # h never closes a syllable for metrical purposes
        return self.coda.replace("h", "") == ""

    @property
    def heavy_by_nature(self) -> bool:
        return self.nucleus in DIPHTHONGS or self.nucleus in LONG_VOWELS


def _is_vowel(ch: str) -> bool:
    return ch in VOWELS


def _transcribe_word(word: str) -> str:
    """Apply the grapheme rules to one lowercase word."""
    w = word
    w = w.replace("qu", "kw")
    # gu is labiovelar only in the ngu+vowel cluster (lingua, sanguis)
    out = []
    i = 0
    while i < len(w):
        if w.startswith("ngu", i) and i + 3 < len(w) and _is_vowel(w[i + 3]):
            out.append("ngw")
            i += 3
            continue
        out.append(w[i])
        i += 1
    w = "".join(out)
    for src, dst in (("ch", "k"), ("ph", "f"), ("th", "t")):
        w = w.replace(src, dst)
    w = w.replace("c", "k").replace("x", "ks").replace("v", "w")
    # consonantal u and i, resolved before ae/oe become ai/oi so that a
    # diphthong's second element is never mistaken for consonantal i
    out = []
    for i, ch in enumerate(w):
        prev_v = i > 0 and _is_vowel(w[i - 1])
        next_v = i + 1 < len(w) and _is_vowel(w[i + 1])
        if ch == "u" and next_v and (prev_v or i == 0):
            # guard: u after k/g is already folded into kw/gw above
            out.append("w")
        elif ch == "i" and next_v and (prev_v or i == 0):
            out.append("j")
        else:
            out.append(ch)
    w = "".join(out)
    return w.replace("ae", "ai").replace("oe", "oi")


def render(phonetic: str) -> str:
    """User-facing spelling: consonantal j is written i."""
    return phonetic.replace("j", "i")


_ALLOWED = VOWELS | set("bdfghjklmnprstwz")


def transcribe_line(text: str) -> list[str]:
    """Raw verse line -> list of phonetic words.

    Punctuation is stripped and the line-initial word is lowercased;
    capitals on later words (proper nouns in the source editions) are kept.
    """
    text = unicodedata.normalize("NFC", text)
    words = []
    for raw in text.split():
        cleaned = "".join(ch for ch in raw if ch.isalpha())
        if cleaned:
            words.append(cleaned)
    if not words:
        raise PhonologyError("blank verse line")
    out = []
    for idx, word in enumerate(words):
        capital = idx > 0 and word[0].isupper()
        phon = _transcribe_word(word.lower())
        bad = set(phon) - _ALLOWED
        if bad:
            raise PhonologyError(
                "non-Latin character %r in %r" % (sorted(bad)[0], word)
            )
        if capital:
            phon = phon[0].upper() + phon[1:]
        out.append(phon)
    return out


def transcribe_text(text: str) -> str:
    """Multi-line helper used by the CLI; preserves line structure."""
    lines = []
    for line in text.splitlines():
        if line.strip():
            lines.append(" ".join(render(w) for w in transcribe_line(line)))
    return "\n".join(lines)


def phonemes(word: str) -> list[str]:
    """Segment a phonetic word into phoneme units (kw/gw are units)."""
    word = word.lower()
    units = []
    i = 0
    while i < len(word):
        if word[i : i + 2] in UNIT_CONSONANTS:
            units.append(word[i : i + 2])
            i += 2
        else:
            units.append(word[i])
            i += 1
    return units


def _legal_onset(cluster: tuple[str, ...], split_mcl: bool) -> bool:
    if len(cluster) == 0:
        return True
    if len(cluster) == 1:
        return True
    joined = "".join(cluster)
    if joined in _S_CLUSTERS:
        return True
    if not split_mcl and len(cluster) == 2:
        if cluster[0] in _STOPS | {"f"} and cluster[1] in _LIQUIDS:
            return True
    return False


def syllabify_word(word: str, split_muta_cum_liquida: bool = True) -> list[Syllable]:
    """Divide one phonetic word into onset/nucleus/coda syllables.

    Onset-maximal within the legal onset inventory; geminates always split.
    """
    units = phonemes(word)
    # group diphthongs into single nucleus units
    nuclei_idx = []
    grouped: list[str] = []
    i = 0
    while i < len(units):
        pair = "".join(units[i : i + 2])
        if pair in DIPHTHONGS:
            grouped.append(pair)
            i += 2
        else:
            grouped.append(units[i])
            i += 1
    for idx, u in enumerate(grouped):
        if u in DIPHTHONGS or (len(u) == 1 and _is_vowel(u)):
            nuclei_idx.append(idx)
    if not nuclei_idx:
        raise PhonologyError("word with no vowel: %r" % word)

    sylls = []
    prev_end = 0  # index after previous syllable's coda, updated per nucleus
    bounds = []  # (onset_start, nucleus_idx) per syllable
    for k, n in enumerate(nuclei_idx):
        if k == 0:
            bounds.append((0, n))
            continue
        prev_n = nuclei_idx[k - 1]
        cluster = grouped[prev_n + 1 : n]
        # choose the longest legal onset that is a suffix of the cluster,
        # never consuming the whole cluster unless it is word-initial-legal
        split = len(cluster)
        for take in range(len(cluster), -1, -1):
            if _legal_onset(tuple(cluster[len(cluster) - take :]), split_muta_cum_liquida):
                split = len(cluster) - take
                break
        bounds.append((prev_n + 1 + split, n))
    for k, (start, n) in enumerate(bounds):
        end = bounds[k + 1][0] if k + 1 < len(bounds) else len(grouped)
        onset = "".join(grouped[start:n])
        coda = "".join(grouped[n + 1 : end])
        sylls.append(Syllable(onset=onset, nucleus=grouped[n], coda=coda))
    assert "".join(s.text for s in sylls) == "".join(grouped)
    return sylls


def syllabify_line(words: list[str], split_muta_cum_liquida: bool = True) -> list[list[Syllable]]:
    return [syllabify_word(w, split_muta_cum_liquida) for w in words]
