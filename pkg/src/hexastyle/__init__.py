"""Latin hexameter stylometry: scansion, syllable tokens, tiny classifiers,
and attention heatmaps."""

__version__ = "0.1.0"
