"""Deterministic synthetic hexameter corpus for tests and benchmarks.

Each class draws its syllables from a disjoint consonant inventory, so a
desk-scale classifier can separate the classes quickly.  Generated lines
are real (if monotonous) hexameters: they transcribe, syllabify and scan.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

# class -> (onset consonants, coda consonants); raw letters chosen so the
# phonetic transcription maps them onto themselves
CLASS_INVENTORIES = {
    "aulus": ("ptk", "st"),
    "balbus": ("bdg", "nr"),
    "mamercus": ("mnl", "ml"),
}

VOWELS = "aeiou"


def _syllable(rng: np.random.Generator, onsets: str, codas: str, closed: bool) -> str:
    onset = onsets[rng.integers(len(onsets))]
    vowel = VOWELS[rng.integers(len(VOWELS))]
    if closed:
        return onset + vowel + codas[rng.integers(len(codas))]
    return onset + vowel


def make_line(rng: np.random.Generator, onsets: str, codas: str) -> str:
    """One synthetic hexameter: random dactyl/spondee pattern, words of
    1-3 syllables, heavy syllables realised as closed syllables."""
    feet = [rng.choice(["D", "S"]) for _ in range(4)] + ["D", "S"]
    sylls = []
    for foot in feet:
        sylls.append(_syllable(rng, onsets, codas, closed=True))  # longum
        if foot == "D":
            sylls.append(_syllable(rng, onsets, codas, closed=False))
            sylls.append(_syllable(rng, onsets, codas, closed=False))
        else:
            sylls.append(_syllable(rng, onsets, codas, closed=True))
    words = []
    i = 0
    while i < len(sylls):
        take = int(rng.integers(1, 4))
        words.append("".join(sylls[i : i + take]))
        i += take
    return " ".join(words)


def write_toy_corpus(
    directory: str | Path, lines_per_class: int = 512, seed: int = 20220501
) -> Path:
    """Write one text file per class plus a manifest; returns manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest_rows = []
    for label, (onsets, codas) in CLASS_INVENTORIES.items():
        path = directory / (label + ".txt")
        with open(path, "w", encoding="utf-8") as fh:
            for _ in range(lines_per_class):
                fh.write(make_line(rng, onsets, codas) + "\n")
        manifest_rows.append("%s = %s" % (label, path.name))
    manifest = directory / "corpus.manifest"
    manifest.write_text("\n".join(manifest_rows) + "\n", encoding="utf-8")
    return manifest
