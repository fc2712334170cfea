"""Pipeline configuration: defaults < config file < command-line flags."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .cnn import CnnConfig
from .valence import ScorerConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    # input / output
    corpus: str = ""
    corpus_format: str = "jsonl"
    lexicon: str = ""
    output_dir: str = "out"
    model: str = ""
    quarantine: str = ""
    rejects: str = ""
    # valence scorer
    caps_boost: float = 0.733
    negation_scalar: float = -0.74
    negation_window: int = 3
    booster_decay: str = "0.95,0.90"
    exclamation_step: float = 0.292
    max_exclamations: int = 4
    but_before_weight: float = 0.5
    but_after_weight: float = 1.5
    alpha: float = 15.0
    neutral_threshold: float = 0.05
    # filtration
    min_count: int = 2
    grid_nu: str = "0.05,0.1,0.2"
    grid_gamma: str = "0.01,0.1,1"
    folds: int = 10
    repeats: int = 10
    cv_seed: int = 0
    oc_tol: float = 1e-4
    oc_max_passes: int = 1000
    margin: float = 0.0
    quarantine_policy: str = "drop"
    # classifiers
    classifier: str = "cnn"
    label_source: str = "auto"
    test_fraction: float = 0.2
    split_seed: int = 7
    svm_lambda: float = 1e-2
    svm_epochs: int = 20
    svm_seed: int = 0
    svm_weighting: str = "count"
    n_filters: int = 600
    filter_size: int = 3
    dropout: float = 0.5
    epochs: int = 20
    learning_rate: float = 0.3
    batch_size: int = 32
    max_len: int = 256
    cnn_seed: int = 0
    embeddings: str = ""
    embedding_dim: int = 50
    trainable_embeddings: bool = False
    # gradient check
    gradcheck_seeds: int = 5
    gradcheck_epsilon: float = 1e-5

    def __post_init__(self):
        if self.classifier not in ("cnn", "dtm-svm"):
            raise ConfigError(f"classifier must be cnn or dtm-svm, not {self.classifier!r}")
        if self.corpus_format not in ("jsonl", "tsv"):
            raise ConfigError(f"corpus_format must be jsonl or tsv, not {self.corpus_format!r}")
        if self.svm_weighting not in ("count", "tfidf"):
            raise ConfigError("svm_weighting must be count or tfidf")
        if self.quarantine_policy not in ("drop", "relabel"):
            raise ConfigError("quarantine_policy must be drop or relabel")
        if self.label_source not in ("auto", "weak", "gold"):
            raise ConfigError("label_source must be auto, weak or gold")

    # derived objects -------------------------------------------------------

    def scorer_config(self) -> ScorerConfig:
        decay = tuple(_floats(self.booster_decay))
        return ScorerConfig(self.caps_boost, self.negation_scalar, self.negation_window, decay,
                            self.exclamation_step, self.max_exclamations, self.but_before_weight,
                            self.but_after_weight, self.alpha, self.neutral_threshold)

    def cnn_config(self) -> CnnConfig:
        return CnnConfig(n_filters=self.n_filters, filter_size=self.filter_size, dropout=self.dropout,
                         epochs=self.epochs, learning_rate=self.learning_rate,
                         batch_size=self.batch_size, max_len=self.max_len, seed=self.cnn_seed)

    def grid(self) -> list[tuple[float, float]]:
        return [(nu, g) for g in _floats(self.grid_gamma) for nu in _floats(self.grid_nu)]

    def out(self, name: str) -> Path:
        return Path(self.output_dir) / name

    @property
    def model_path(self) -> Path:
        return Path(self.model) if self.model else self.out("model.ngate")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _convert(key: str, raw: str):
    typ = FIELD_TYPES[key]
    try:
        if typ == "bool":
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw.strip()


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` pairs; section headers only group keys."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    parser.read_string("[DEFAULT]\n" + text if not text.lstrip().startswith("[") else text)
    out: dict[str, str] = {}
    for section in [parser.default_section] + parser.sections():
        items = parser.defaults() if section == parser.default_section else parser[section]
        for key, value in items.items():
            if section != parser.default_section and key in parser.defaults():
                continue
            key = key.replace("-", "_")
            if key not in FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            if key in out and section != parser.default_section:
                raise ConfigError(f"config key {key!r} set in more than one section")
            out[key] = value
    return out


def build_config(file_values: dict[str, str] | None = None,
                 overrides: dict[str, str] | None = None) -> PipelineConfig:
    merged: dict[str, object] = {}
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _convert(key, raw) if isinstance(raw, str) else raw
    return PipelineConfig(**merged)
