"""Flat key-value run configuration with sections; unknown keys rejected.

Example file:

    [run]
    manifest = corpus.manifest
    output = out/
    seed = 7

    [train]
    model = cnn
    epochs = 30

Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    manifest: str = ""
    output: str = "out"
    seed: int = 0
    model: str = "cnn"  # cnn | lstm
    ablation: str = "full"  # full | metre_only | sound_only
    pooling: str = "avg"  # avg | max
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.0  # 0 = per-architecture default
    patience: int = 5
    window: int = 64
    train_stride: int = 32
    eval_stride: int = 64
    train_ratio: float = 0.8
    val_ratio: float = 0.1
    test_ratio: float = 0.1
    threads: int = 0  # 0 = available cores
    spondaic_fifth: bool = False
    tautosyllabic_muta_cum_liquida: bool = False

    def validate(self) -> None:
        if self.model not in ("cnn", "lstm"):
            raise ConfigError("model must be cnn or lstm")
        if self.ablation not in ("full", "metre_only", "sound_only"):
            raise ConfigError("unknown ablation %r" % self.ablation)
        if self.pooling not in ("avg", "max"):
            raise ConfigError("pooling must be avg or max")

    @property
    def ratios(self) -> tuple[float, float, float]:
        return (self.train_ratio, self.val_ratio, self.test_ratio)


_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_COERCE = {"int": int, "float": float, "str": str, "bool": lambda v: v.lower() in ("1", "true", "yes", "on")}


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value" % lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
        ftype = _FIELDS[key]
        ftype = ftype if isinstance(ftype, str) else ftype.__name__
        try:
            setattr(cfg, key, _COERCE[ftype](value))
        except (KeyError, ValueError):
            raise ConfigError("line %d: bad value %r for %s" % (lineno, value, key))
    cfg.validate()
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))
