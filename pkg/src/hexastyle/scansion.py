"""Hexameter scansion: foot assignment, ictus, accent, pauses, elision.

Quantity resolution is positional-first.  Closed syllables, long-vowel
nuclei and diphthongs are heavy; open short-vowel syllables are unknowns
that the search may bind either way, so some lines admit more than one
scansion.  Ties prefer dactyls in earlier feet and raise the ambiguity
counter, not an error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .phonology import Syllable

DACTYL = "D"
SPONDEE = "S"

SC = "SC"
WC = "WC"
DI = "DI"


class UnscannableError(ValueError):
    pass


@dataclass
class AnnotatedSyllable:
    syllable: Syllable
    word_index: int
    word_final: bool
    long: bool = False
    accent: bool = False
    ictus: bool = False
    pause: str | None = None  # SC | WC | DI
    elided: bool = False
    foot_index: int = 0  # 1..6 once scanned
    position_in_foot: int = 0


@dataclass
class ScannedLine:
    feet: list[str]  # six entries, D or S (foot 6 recorded as S)
    syllables: list[AnnotatedSyllable]  # includes elided syllables
    ambiguous: bool = False

    @property
    def metrical(self) -> list[AnnotatedSyllable]:
        return [s for s in self.syllables if not s.elided]


def _starts_vocalic(word: list[Syllable]) -> bool:
    onset = word[0].onset
    return onset == "" or onset == "h"


def _flatten(words: list[list[Syllable]]) -> list[AnnotatedSyllable]:
    out = []
    for wi, word in enumerate(words):
        for si, syl in enumerate(word):
            out.append(
                AnnotatedSyllable(
                    syllable=syl,
                    word_index=wi,
                    word_final=si == len(word) - 1,
                )
            )
    return out


def _mark_elisions(syllables: list[AnnotatedSyllable], words: list[list[Syllable]]) -> None:
    for s in syllables:
        if not s.word_final or s.word_index == len(words) - 1:
            continue
        coda = s.syllable.coda.replace("h", "")
        if coda not in ("", "m"):
            continue
        if _starts_vocalic(words[s.word_index + 1]):
            s.elided = True


def _weights(syllables: list[AnnotatedSyllable], words: list[list[Syllable]]) -> list[bool | None]:
    """True = known heavy, None = unknown (never known light)."""
    out = []
    metrical = [s for s in syllables if not s.elided]
    for s in metrical:
        syl = s.syllable
        closed = not syl.open
        if closed and s.word_final and s.word_index < len(words) - 1:
            # a single final consonant resyllabifies onto a following
            # vowel-initial word, leaving the syllable open
            coda = syl.coda.replace("h", "")
            if len(coda) == 1 and _starts_vocalic(words[s.word_index + 1]):
                closed = False
        out.append(True if closed or syl.heavy_by_nature else None)
    return out


def foot_patterns(n_syllables: int, allow_spondaic_fifth: bool = False):
    """All 6-foot patterns consistent with a metrical syllable count,
    in preference order (dactyls in earlier feet first)."""
    fifth_options = [DACTYL, SPONDEE] if allow_spondaic_fifth else [DACTYL]
    for first_four in itertools.product((DACTYL, SPONDEE), repeat=4):
        for fifth in fifth_options:
            feet = list(first_four) + [fifth, SPONDEE]
            dactyls = feet[:5].count(DACTYL)
            if 12 + dactyls == n_syllables:
                yield feet


def _pattern_fits(feet: list[str], weights: list[bool | None]) -> bool:
    """A pattern fits when no known-heavy syllable lands on a breve."""
    i = 0
    for fi, foot in enumerate(feet):
        i += 1  # longum: any weight binds long
        if foot == DACTYL:
            if weights[i] is True or weights[i + 1] is True:
                return False
            i += 2
        else:
            i += 1  # spondee second long (or line-final anceps)
    return i == len(weights)


def search_feet(
    weights: list[bool | None], allow_spondaic_fifth: bool = False
) -> list[list[str]]:
    """Backtracking search over feet 1-4 (and optionally foot 5).

    Returns all consistent patterns in preference order.
    """
    n = len(weights)
    found: list[list[str]] = []

    def descend(feet: list[str], i: int) -> None:
        fi = len(feet)
        remaining_feet = 6 - fi
        if fi == 6:
            if i == n:
                found.append(list(feet))
            return
        # prune on achievable syllable counts
        fifth_opts = [DACTYL, SPONDEE] if allow_spondaic_fifth else [DACTYL]
        if fi < 4:
            options = (DACTYL, SPONDEE)
        elif fi == 4:
            options = tuple(fifth_opts)
        else:
            options = (SPONDEE,)
        for foot in options:
            width = 3 if foot == DACTYL else 2
            if i + width > n:
                continue
            lo = i + width + 2 * (remaining_feet - 1)
            hi = i + width + 3 * (remaining_feet - 1)
            if not (lo <= n <= hi):
                continue
            # weight constraints within this foot
            if foot == DACTYL and (weights[i + 1] is True or weights[i + 2] is True):
                continue
            descend(feet + [foot], i + width)

    descend([], 0)
    return found


def enumerate_feet(
    weights: list[bool | None], allow_spondaic_fifth: bool = False
) -> list[list[str]]:
    """Exhaustive 16-pattern oracle for the backtracking search."""
    return [
        feet
        for feet in foot_patterns(len(weights), allow_spondaic_fifth)
        if _pattern_fits(feet, weights)
    ]


def _accent_word(word_sylls: list[AnnotatedSyllable]) -> None:
    def heavy(s: AnnotatedSyllable) -> bool:
        if not s.elided:
            return s.long
        return not s.syllable.open or s.syllable.heavy_by_nature

    sylls = word_sylls
    if len(sylls) >= 2 and sylls[-1].syllable.text == "kwe":
        # enclitic -que pulls the accent onto the preceding syllable
        sylls[-2].accent = True
        return
    if len(sylls) == 1:
        sylls[0].accent = True
    elif len(sylls) == 2:
        sylls[0].accent = True
    else:
        target = -2 if heavy(sylls[-2]) else -3
        sylls[target].accent = True


def scan_line(
    words: list[list[Syllable]],
    allow_spondaic_fifth: bool = False,
) -> ScannedLine:
    """Scan one syllabified line and complete all metrical flags."""
    syllables = _flatten(words)
    _mark_elisions(syllables, words)
    metrical = [s for s in syllables if not s.elided]
    if not 13 <= len(metrical) <= 17:
        raise UnscannableError(
            "unscannable line: %d metrical syllables" % len(metrical)
        )
    weights = _weights(syllables, words)
    patterns = search_feet(weights, allow_spondaic_fifth)
    if not patterns:
        raise UnscannableError("unscannable line: no consistent foot pattern")
    feet = patterns[0]

    # bind foot positions and positional length
    i = 0
    for fi, foot in enumerate(feet, start=1):
        width = 3 if foot == DACTYL else 2
        for pos in range(1, width + 1):
            s = metrical[i]
            s.foot_index = fi
            s.position_in_foot = pos
            s.ictus = pos == 1
            s.long = pos == 1 or foot == SPONDEE
            i += 1
    # elided syllables inherit the foot of the preceding metrical syllable
    last = None
    for s in syllables:
        if not s.elided:
            last = s
        elif last is not None:
            s.foot_index = last.foot_index
            s.position_in_foot = last.position_in_foot
    for s in syllables:
        if s.elided and s.foot_index == 0:
            s.foot_index = 1
            s.position_in_foot = 1

    # pauses on word-final, non-elided, non-line-final syllables
    line_final = metrical[-1]
    for k, s in enumerate(metrical):
        if not s.word_final or s.elided or s is line_final:
            continue
        if s.word_index == syllables[-1].word_index:
            continue
        foot = feet[s.foot_index - 1]
        width = 3 if foot == DACTYL else 2
        if s.position_in_foot == width:
            s.pause = DI
        elif s.position_in_foot == 1:
            s.pause = SC
        elif foot == DACTYL and s.position_in_foot == 2:
            s.pause = WC

    # accent by the penultimate law, per word
    by_word: dict[int, list[AnnotatedSyllable]] = {}
    for s in syllables:
        by_word.setdefault(s.word_index, []).append(s)
    for word_sylls in by_word.values():
        _accent_word(word_sylls)

    return ScannedLine(feet=feet, syllables=syllables, ambiguous=len(patterns) > 1)
