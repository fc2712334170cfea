"""Single-width text CNN: embeddings -> conv (valid, stride 1) -> ReLU ->
max-over-time pooling -> dropout -> dense -> softmax, with hand-written
backpropagation and plain mini-batch SGD.

Class 1 is "positive", class 0 "non-positive" (negative or neutral).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (PAD_INDEX, DocumentSet, GateLabel, NewsDocument, PolarityLabel,
                     TokenSequence, Vocabulary, tokenize)

N_CLASSES = 2
PARAM_GROUPS = ("filters", "filter_bias", "dense_weights", "dense_bias")


class EmbeddingFileError(ValueError):
    pass


@dataclass(frozen=True)
class CnnConfig:
    n_filters: int = 600
    filter_size: int = 3
    stride: int = 1
    padding: str = "valid"
    dropout: float = 0.5
    epochs: int = 20
    learning_rate: float = 0.3
    batch_size: int = 32
    max_len: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.stride != 1:
            raise ValueError("only stride 1 is supported")
        if self.padding != "valid":
            raise ValueError("only valid padding is supported")
        if not 1 <= self.filter_size <= self.max_len:
            raise ValueError("filter_size must be between 1 and max_len")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.n_filters < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("n_filters and batch_size must be >= 1, epochs >= 0")


@dataclass
class EmbeddingTable:
    """Row i embeds vocabulary index i; row 0 (padding) is all zeros."""

    vocabulary: Vocabulary
    vectors: np.ndarray
    trainable: bool = False

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.shape[0] != self.vocabulary.dimension:
            raise ValueError("embedding rows do not match vocabulary size")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("non-finite embedding entries")
        self.vectors[PAD_INDEX] = 0.0

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def random_embeddings(vocab: Vocabulary, dim: int, seed: int = 0,
                      trainable: bool = False) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    vecs = rng.uniform(-0.25, 0.25, size=(vocab.dimension, dim))
    return EmbeddingTable(vocab, vecs, trainable)


def load_pretrained_embeddings(path, vocab: Vocabulary, dim: int, seed: int = 0,
                               trainable: bool = False) -> EmbeddingTable:
    """GloVe-style text file: ``token v1 ... v_dim`` per line.

    Vocabulary tokens missing from the file, and the OOV row, get seeded
    uniform(-0.25, 0.25) vectors.
    """
    table = random_embeddings(vocab, dim, seed, trainable)
    vecs = table.vectors
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\r\n").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise EmbeddingFileError(
                    f"line {lineno}: expected token and {dim} values, got {len(parts) - 1} values")
            idx = vocab.lookup(parts[0])
            try:
                row = [float(x) for x in parts[1:]]
            except ValueError:
                raise EmbeddingFileError(f"line {lineno}: non-numeric vector entry") from None
            if idx >= 2:
                vecs[idx] = row
    return EmbeddingTable(vocab, vecs, trainable)


def encode_tokens(seq: TokenSequence, vocab: Vocabulary, max_len: int) -> np.ndarray:
    """Vocabulary indices of the first max_len tokens, zero-padded to max_len."""
    ids = np.zeros(max_len, dtype=np.int64)
    enc = vocab.encode(seq)[:max_len]
    ids[:len(enc)] = enc
    return ids


def embed_document(seq: TokenSequence, table: EmbeddingTable, max_len: int) -> np.ndarray:
    return table.vectors[encode_tokens(seq, table.vocabulary, max_len)]


@dataclass
class TextCnnModel:
    embeddings: EmbeddingTable
    filters: np.ndarray        # n_f x k x d
    filter_bias: np.ndarray    # n_f
    dense_weights: np.ndarray  # C x n_f
    dense_bias: np.ndarray     # C
    config: CnnConfig = field(default_factory=CnnConfig)

    def __post_init__(self):
        n_f, k, d = self.filters.shape
        if (self.filter_bias.shape != (n_f,) or self.dense_weights.shape != (N_CLASSES, n_f)
                or self.dense_bias.shape != (N_CLASSES,) or d != self.embeddings.dim
                or k != self.config.filter_size or n_f != self.config.n_filters):
            raise ValueError("inconsistent CNN parameter shapes")

    @classmethod
    def initialize(cls, embeddings: EmbeddingTable, config: CnnConfig) -> "TextCnnModel":
        rng = np.random.default_rng([config.seed, 1])
        n_f, k, d = config.n_filters, config.filter_size, embeddings.dim
        a = 1.0 / math.sqrt(k * d)
        filters = rng.uniform(-a, a, size=(n_f, k, d))
        b = 1.0 / math.sqrt(n_f)
        dense = rng.uniform(-b, b, size=(N_CLASSES, n_f))
        return cls(embeddings, filters, np.zeros(n_f), dense, np.zeros(N_CLASSES), config)

    @property
    def vocabulary(self) -> Vocabulary:
        return self.embeddings.vocabulary

    def params(self) -> dict[str, np.ndarray]:
        out = {g: getattr(self, g) for g in PARAM_GROUPS}
        if self.embeddings.trainable:
            out["embeddings"] = self.embeddings.vectors
        return out

    def copy(self) -> "TextCnnModel":
        emb = EmbeddingTable(self.vocabulary, self.embeddings.vectors.copy(), self.embeddings.trainable)
        return TextCnnModel(emb, self.filters.copy(), self.filter_bias.copy(),
                            self.dense_weights.copy(), self.dense_bias.copy(), self.config)


# --- forward / backward ------------------------------------------------------

@dataclass
class ForwardCache:
    X: np.ndarray          # B x R x d input rows (R <= L; rows past R are zero)
    length: int            # L, the full padded length
    n_windows: int         # L - k + 1
    argmax: np.ndarray     # B x n_f, first maximal window per filter
    pre_at_max: np.ndarray # B x n_f, pre-activation at that window
    pooled: np.ndarray     # B x n_f
    mask: np.ndarray | None
    hidden: np.ndarray     # pooled after dropout
    logits: np.ndarray
    probs: np.ndarray


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def feature_map(model: TextCnnModel, X: np.ndarray) -> np.ndarray:
    """Full ReLU feature map (n_f x (L-k+1)) of one L x d input; for inspection."""
    k = model.filters.shape[1]
    T = X.shape[0] - k + 1
    if T < 1:
        raise ValueError(f"input length {X.shape[0]} shorter than filter size {k}")
    pre = np.broadcast_to(model.filter_bias, (T, model.filters.shape[0])).copy()
    for o in range(k):
        pre += X[o:o + T] @ model.filters[:, o, :].T
    return np.maximum(pre, 0.0).T


def _forward(model: TextCnnModel, X: np.ndarray, length: int, train_mode: bool,
             rng: np.random.Generator | None) -> ForwardCache:
    F, fb = model.filters, model.filter_bias
    n_f, k, _ = F.shape
    B = X.shape[0]
    T = length - k + 1
    if T < 1:
        raise ValueError(f"input length {length} shorter than filter size {k}")

    # Windows past the last nonzero row are all zero, so their pre-activation
    # is exactly the bias; only the leading windows need the matmul.
    nonzero_rows = np.flatnonzero(np.any(X != 0.0, axis=(0, 2)))
    last = int(nonzero_rows[-1]) + 1 if nonzero_rows.size else 0
    Tc = min(T, max(last, 1))
    rows = min(length, Tc + k)
    if X.shape[1] < rows:
        X = np.concatenate([X, np.zeros((B, rows - X.shape[1], X.shape[2]))], axis=1)
    else:
        X = X[:, :rows]

    pre = np.broadcast_to(fb, (B, Tc, n_f)).copy()
    for o in range(k):
        pre += X[:, o:o + Tc, :] @ F[:, o, :].T
    act = np.maximum(pre, 0.0)
    amax = np.argmax(act, axis=1)
    pooled = np.take_along_axis(act, amax[:, None, :], axis=1)[:, 0, :]
    pre_at_max = np.take_along_axis(pre, amax[:, None, :], axis=1)[:, 0, :]
    if Tc < T:
        tail = np.maximum(fb, 0.0)
        use_tail = tail[None, :] > pooled
        pooled = np.where(use_tail, tail[None, :], pooled)
        pre_at_max = np.where(use_tail, fb[None, :], pre_at_max)
        amax = np.where(use_tail, Tc, amax)

    mask = None
    hidden = pooled
    p = model.config.dropout
    if train_mode and p > 0.0:
        if rng is None:
            raise ValueError("train_mode with dropout needs a random generator")
        mask = (rng.random(pooled.shape) >= p) / (1.0 - p)
        hidden = pooled * mask
    logits = hidden @ model.dense_weights.T + model.dense_bias
    return ForwardCache(X, length, T, amax, pre_at_max, pooled, mask, hidden, logits, softmax(logits))


def _backward(model: TextCnnModel, cache: ForwardCache, dlogits: np.ndarray,
              want_input: bool = False) -> dict[str, np.ndarray]:
    F = model.filters
    n_f, k, d = F.shape
    X = cache.X
    grads = {
        "dense_weights": dlogits.T @ cache.hidden,
        "dense_bias": dlogits.sum(axis=0),
    }
    dhidden = dlogits @ model.dense_weights
    dpooled = dhidden if cache.mask is None else dhidden * cache.mask
    dpre = np.where(cache.pre_at_max > 0.0, dpooled, 0.0)
    grads["filter_bias"] = dpre.sum(axis=0)
    dF = np.empty_like(F)
    b_idx = np.arange(X.shape[0])[:, None]
    for o in range(k):
        win = X[b_idx, cache.argmax + o]              # B x n_f x d
        dF[:, o, :] = np.einsum("bj,bjd->jd", dpre, win)
    grads["filters"] = dF
    if want_input:
        dX = np.zeros_like(X)
        for o in range(k):
            np.add.at(dX, (np.broadcast_to(b_idx, cache.argmax.shape), cache.argmax + o),
                      dpre[:, :, None] * F[None, :, o, :])
        grads["input"] = dX
    return grads


def _cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return lse - logits[np.arange(len(labels)), labels]


def forward(model: TextCnnModel, input: np.ndarray, train_mode: bool = False,
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, ForwardCache]:
    X = np.asarray(input, dtype=np.float64)
    cache = _forward(model, X[None], X.shape[0], train_mode, rng)
    return cache.probs[0], cache


def loss_and_gradients(model: TextCnnModel, input: np.ndarray, label: int,
                       train_mode: bool = False, rng: np.random.Generator | None = None):
    """Cross-entropy loss of one example and gradients of every parameter group.

    ``grads["input"]`` is the gradient with respect to the input matrix.
    """
    if label not in (0, 1):
        raise ValueError("label must be 0 or 1")
    X = np.asarray(input, dtype=np.float64)
    cache = _forward(model, X[None], X.shape[0], train_mode, rng)
    labels = np.array([label])
    loss = float(_cross_entropy(cache.logits, labels)[0])
    dlogits = cache.probs.copy()
    dlogits[0, label] -= 1.0
    grads = _backward(model, cache, dlogits, want_input=True)
    dX = np.zeros_like(X)
    dX[:grads["input"].shape[1]] = grads["input"][0, :X.shape[0]]
    grads["input"] = dX
    return loss, grads


def batch_loss_and_gradients(model: TextCnnModel, ids: np.ndarray, labels: np.ndarray,
                             train_mode: bool, rng: np.random.Generator | None):
    """Mean loss and mean gradients over a batch of encoded documents."""
    length = ids.shape[1]
    last = int(np.max(np.nonzero(ids.any(axis=0))[0], initial=-1)) + 1
    k = model.filters.shape[1]
    rows = min(length, max(last, 1) + k)
    X = model.embeddings.vectors[ids[:, :rows]]
    cache = _forward(model, X, length, train_mode, rng)
    B = ids.shape[0]
    losses = _cross_entropy(cache.logits, labels)
    dlogits = cache.probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B
    trainable = model.embeddings.trainable
    grads = _backward(model, cache, dlogits, want_input=trainable)
    if trainable:
        dX = grads.pop("input")
        dE = np.zeros_like(model.embeddings.vectors)
        np.add.at(dE, ids[:, :dX.shape[1]], dX)
        dE[PAD_INDEX] = 0.0
        grads["embeddings"] = dE
    return float(losses.mean()), grads, cache


# --- training / prediction ---------------------------------------------------

def binary_targets(docs: DocumentSet, source: str = "auto") -> np.ndarray:
    """1 for POSITIVE, 0 otherwise; ``source`` picks weak/gold labels ("auto":
    weak when present, else gold)."""
    out = []
    for d in docs:
        if source == "weak":
            lab = d.weak_label
        elif source == "gold":
            lab = d.gold_label
        else:
            lab = d.weak_label if d.weak_label is not None else d.gold_label
        if lab is None:
            raise ValueError(f"document {d.id!r} has no {source} label")
        out.append(1 if lab == PolarityLabel.POSITIVE else 0)
    return np.array(out, dtype=np.int64)


def encode_documents(docs: Sequence[NewsDocument], vocab: Vocabulary, max_len: int) -> np.ndarray:
    if not len(docs):
        return np.zeros((0, max_len), dtype=np.int64)
    return np.stack([encode_tokens(tokenize(d.text), vocab, max_len) for d in docs])


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    validation_accuracy: float | None = None


def predict_ids(model: TextCnnModel, ids: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Eval-mode class probabilities (n x 2) for encoded documents."""
    out = []
    for s in range(0, ids.shape[0], batch_size):
        chunk = ids[s:s + batch_size]
        last = int(np.max(np.nonzero(chunk.any(axis=0))[0], initial=-1)) + 1
        rows = min(ids.shape[1], max(last, 1) + model.filters.shape[1])
        X = model.embeddings.vectors[chunk[:, :rows]]
        out.append(_forward(model, X, ids.shape[1], False, None).probs)
    return np.concatenate(out) if out else np.zeros((0, N_CLASSES))


def train(model: TextCnnModel, train_docs: DocumentSet, valid_docs: DocumentSet | None = None,
          cfg: CnnConfig | None = None, train_labels=None, valid_labels=None,
          label_source: str = "auto") -> tuple[TextCnnModel, TrainHistory]:
    """Mini-batch SGD (batch-mean gradients, seeded shuffles, dropout on)."""
    cfg = cfg or model.config
    if cfg.n_filters != model.config.n_filters or cfg.filter_size != model.config.filter_size:
        raise ValueError("config does not match model architecture")
    model = model.copy()
    model.config = cfg
    y = np.asarray(train_labels if train_labels is not None else binary_targets(train_docs, label_source))
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single class")
    ids = encode_documents(list(train_docs), model.vocabulary, cfg.max_len)
    history = TrainHistory()
    rng = np.random.default_rng(cfg.seed)
    params = model.params()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(y))
        total = 0.0
        for s in range(0, len(order), cfg.batch_size):
            batch = order[s:s + cfg.batch_size]
            loss, grads, _ = batch_loss_and_gradients(model, ids[batch], y[batch], True, rng)
            total += loss * len(batch)
            for name, p in params.items():
                p -= cfg.learning_rate * grads[name]
            model.embeddings.vectors[PAD_INDEX] = 0.0
        history.loss.append(total / len(y))
        pred = predict_ids(model, ids).argmax(axis=1)
        history.accuracy.append(float(np.mean(pred == y)))
    if valid_docs is not None and len(valid_docs):
        vy = np.asarray(valid_labels if valid_labels is not None else binary_targets(valid_docs, label_source))
        vids = encode_documents(list(valid_docs), model.vocabulary, cfg.max_len)
        history.validation_accuracy = float(np.mean(predict_ids(model, vids).argmax(axis=1) == vy))
    return model, history


def predict(model: TextCnnModel, doc: NewsDocument | str) -> tuple[GateLabel, float]:
    """(label, confidence = max class probability), dropout disabled."""
    text = doc if isinstance(doc, str) else doc.text
    ids = encode_tokens(tokenize(text), model.vocabulary, model.config.max_len)[None]
    probs = predict_ids(model, ids)[0]
    cls = int(np.argmax(probs))
    return (GateLabel.POSITIVE if cls == 1 else GateLabel.NON_POSITIVE), float(probs[cls])


def predict_documents(model: TextCnnModel, docs: Sequence[NewsDocument]) -> np.ndarray:
    return predict_ids(model, encode_documents(docs, model.vocabulary, model.config.max_len))


# --- gradient check ----------------------------------------------------------

def _example_loss(model, ids, label):
    X = model.embeddings.vectors[ids]
    cache = _forward(model, X[None], X.shape[0], False, None)
    return float(_cross_entropy(cache.logits, np.array([label]))[0])


def gradient_check(model: TextCnnModel, example, epsilon: float = 1e-5) -> dict[str, float]:
    """Max relative error per parameter group between backprop and central
    differences, for ``example = (token_ids, label)`` with dropout off.

    Relative error is |a - n| / max(|a|, |n|, 1e-8).  Embedding rows are only
    checked for the indices that occur in the example.
    """
    ids, label = example
    ids = np.asarray(ids, dtype=np.int64)
    model = model.copy()
    _, grads, _ = batch_loss_and_gradients(model, ids[None], np.array([label]), False, None)
    errors = {}
    for name, param in model.params().items():
        analytic = grads[name]
        if name == "embeddings":
            positions = [tuple(ix) for r in np.unique(ids[ids != PAD_INDEX])
                         for ix in ((r, c) for c in range(param.shape[1]))]
        else:
            positions = list(np.ndindex(param.shape))
        worst = 0.0
        for pos in positions:
            orig = param[pos]
            param[pos] = orig + epsilon
            up = _example_loss(model, ids, label)
            param[pos] = orig - epsilon
            down = _example_loss(model, ids, label)
            param[pos] = orig
            num = (up - down) / (2.0 * epsilon)
            a = analytic[pos]
            err = abs(a - num) / max(abs(a), abs(num), 1e-8)
            worst = max(worst, err)
        errors[name] = worst
    return errors
