"""Versioned text container for trained models.

Layout::

    NGATE <version> <kind> <vocab-hash>
    ---<section>
    ...lines...

Floats are written with ``repr`` so a load/save cycle reproduces the file
byte for byte.
"""
from __future__ import annotations

from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .cnn import CnnConfig, EmbeddingTable, TextCnnModel
from .corpus import Vocabulary
from .dtm import IdfTable, SparseVector
from .linear_svm import LinearSvmModel
from .oneclass import OneClassSvmModel

MAGIC = "NGATE"
VERSION = 1
KINDS = ("cnn", "linear-svm", "oneclass")


class ContainerError(ValueError):
    pass


def _f(x) -> str:
    return repr(float(x))


def _vocab_lines(vocab: Vocabulary) -> list[str]:
    lines = [f"min_count = {vocab.min_count}"]
    lines += [f"{t}\t{vocab.frequencies.get(t, 0)}" for t in vocab.index_to_token]
    return lines


def _parse_vocab(lines: list[str]) -> Vocabulary:
    if not lines or not lines[0].startswith("min_count = "):
        raise ContainerError("vocabulary section lacks min_count")
    min_count = int(lines[0].split("=", 1)[1])
    tokens, freqs = [], {}
    for ln in lines[1:]:
        tok, freq = ln.split("\t")
        tokens.append(tok)
        freqs[tok] = int(freq)
    return Vocabulary(tuple(tokens), freqs, min_count)


def _array_lines(a: np.ndarray) -> list[str]:
    a = np.asarray(a, dtype=np.float64)
    lines = ["shape " + " ".join(str(s) for s in a.shape)]
    if a.ndim == 0:
        return lines + [_f(a)]
    flat = a.reshape(-1, a.shape[-1]) if a.ndim > 1 else a.reshape(1, -1)
    lines += [" ".join(_f(x) for x in row) for row in flat]
    return lines


def _parse_array(lines: list[str]) -> np.ndarray:
    shape = tuple(int(s) for s in lines[0].split()[1:])
    values = [float(x) for ln in lines[1:] for x in ln.split()]
    return np.array(values, dtype=np.float64).reshape(shape)


def _kv_lines(d: dict) -> list[str]:
    return [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in d.items()]


def _parse_kv(lines: list[str]) -> dict[str, str]:
    out = {}
    for ln in lines:
        k, v = ln.split(" = ", 1)
        out[k] = v
    return out


def _sparse_line(v: SparseVector) -> str:
    return " ".join(f"{i}:{_f(x)}" for i, x in v.items())


def _parse_sparse(line: str, dim: int) -> SparseVector:
    pairs = []
    for item in line.split():
        i, x = item.split(":")
        pairs.append((int(i), float(x)))
    return SparseVector.from_pairs(pairs, dim)


def dumps(model, vocab: Vocabulary | None = None, idf: IdfTable | None = None,
          extra: dict | None = None) -> str:
    """Serialize a model; ``vocab`` is required for the SVM models."""
    sections: list[tuple[str, list[str]]] = []
    if isinstance(model, TextCnnModel):
        kind = "cnn"
        vocab = model.vocabulary
        cfg = asdict(model.config)
        cfg["trainable_embeddings"] = model.embeddings.trainable
        sections.append(("config", _kv_lines(cfg)))
        sections.append(("vocabulary", _vocab_lines(vocab)))
        sections.append(("embeddings", _array_lines(model.embeddings.vectors)))
        for name in ("filters", "filter_bias", "dense_weights", "dense_bias"):
            sections.append((name, _array_lines(getattr(model, name))))
    elif isinstance(model, LinearSvmModel):
        kind = "linear-svm"
        if vocab is None:
            raise ContainerError("linear-svm container needs the vocabulary")
        meta = {"lam": float(model.lam), "bias": float(model.bias),
                "epochs_trained": model.epochs_trained, "dimension": model.dimension}
        meta.update(extra or {})
        sections.append(("config", _kv_lines(meta)))
        sections.append(("vocabulary", _vocab_lines(vocab)))
        nz = np.flatnonzero(model.weights)
        sections.append(("weights", [f"{i} {_f(model.weights[i])}" for i in nz]))
    elif isinstance(model, OneClassSvmModel):
        kind = "oneclass"
        if vocab is None:
            raise ContainerError("oneclass container needs the vocabulary")
        meta = {"nu": float(model.nu), "gamma": float(model.gamma), "rho": float(model.offset),
                "train_size": model.train_size, "dimension": vocab.dimension}
        meta.update(extra or {})
        sections.append(("config", _kv_lines(meta)))
        sections.append(("vocabulary", _vocab_lines(vocab)))
        sections.append(("support_vectors",
                         [f"{_f(a)} {_sparse_line(sv)}".rstrip()
                          for a, sv in zip(model.coefficients, model.support_vectors)]))
    else:
        raise ContainerError(f"cannot serialize {type(model).__name__}")
    if idf is not None:
        sections.append(("idf", [f"n_docs = {idf.n_docs}"] + _array_lines(idf.idf)))
    out = [f"{MAGIC} {VERSION} {kind} {vocab.content_hash()}"]
    for name, lines in sections:
        out.append(f"---{name}")
        out.extend(lines)
    return "\n".join(out) + "\n"


class LoadedModel:
    """A deserialized model plus the pieces needed to featurize new text."""

    def __init__(self, kind, model, vocabulary, idf=None, meta=None):
        self.kind = kind
        self.model = model
        self.vocabulary = vocabulary
        self.idf = idf
        self.meta = meta or {}


def loads(text: str, expected_vocab_hash: str | None = None) -> LoadedModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ContainerError("empty container")
    header = lines[0].split()
    if len(header) != 4 or header[0] != MAGIC:
        raise ContainerError("not an NGATE container")
    try:
        version = int(header[1])
    except ValueError:
        raise ContainerError(f"bad version {header[1]!r}") from None
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    kind, vhash = header[2], header[3]
    if kind not in KINDS:
        raise ContainerError(f"unknown model kind {kind!r}")
    sections: dict[str, list[str]] = {}
    current = None
    for ln in lines[1:]:
        if ln.startswith("---"):
            current = ln[3:]
            sections[current] = []
        elif current is None:
            raise ContainerError("content before first section")
        else:
            sections[current].append(ln)

    vocab = _parse_vocab(sections.get("vocabulary", []))
    if vocab.content_hash() != vhash:
        raise ContainerError("vocabulary hash does not match container header")
    if expected_vocab_hash is not None and vhash != expected_vocab_hash:
        raise ContainerError(f"vocabulary hash mismatch: model {vhash}, expected {expected_vocab_hash}")
    idf = None
    if "idf" in sections:
        sec = sections["idf"]
        idf = IdfTable(_parse_array(sec[1:]), int(sec[0].split("=", 1)[1]))
    meta = _parse_kv(sections.get("config", []))

    if kind == "cnn":
        known = {f.name for f in fields(CnnConfig)}
        typed = {}
        for f in fields(CnnConfig):
            if f.name in meta:
                raw = meta[f.name]
                typed[f.name] = raw.strip("'") if f.type == "str" else (
                    float(raw) if f.type == "float" else int(raw))
        cfg = CnnConfig(**{k: v for k, v in typed.items() if k in known})
        emb = EmbeddingTable(vocab, _parse_array(sections["embeddings"]),
                             meta.get("trainable_embeddings") == "True")
        model = TextCnnModel(emb, _parse_array(sections["filters"]),
                             _parse_array(sections["filter_bias"]),
                             _parse_array(sections["dense_weights"]),
                             _parse_array(sections["dense_bias"]), cfg)
    elif kind == "linear-svm":
        w = np.zeros(int(meta["dimension"]))
        for ln in sections.get("weights", []):
            i, x = ln.split()
            w[int(i)] = float(x)
        model = LinearSvmModel(w, float(meta["bias"]), float(meta["lam"]), int(meta["epochs_trained"]))
    else:
        dim = int(meta["dimension"])
        alphas, svs = [], []
        for ln in sections.get("support_vectors", []):
            head, _, rest = ln.partition(" ")
            alphas.append(float(head))
            svs.append(_parse_sparse(rest, dim))
        model = OneClassSvmModel(svs, np.array(alphas), float(meta["rho"]), float(meta["gamma"]),
                                 float(meta["nu"]), int(meta["train_size"]))
    return LoadedModel(kind, model, vocab, idf, meta)


def save_model(path, model, vocab=None, idf=None, extra=None) -> None:
    Path(path).write_text(dumps(model, vocab, idf, extra), encoding="utf-8")


def load_model(path, expected_vocab_hash: str | None = None) -> LoadedModel:
    return loads(Path(path).read_text(encoding="utf-8"), expected_vocab_hash)


_BASE_KEYS = {"linear-svm": {"lam", "bias", "epochs_trained", "dimension"},
              "oneclass": {"nu", "gamma", "rho", "train_size", "dimension"}}


def dumps_loaded(loaded: LoadedModel) -> str:
    """Re-serialize a loaded container, carrying its extra config keys along."""
    if loaded.kind == "cnn":
        return dumps(loaded.model)
    extra = {k: v for k, v in loaded.meta.items() if k not in _BASE_KEYS[loaded.kind]}
    return dumps(loaded.model, loaded.vocabulary, loaded.idf, extra)
