"""The gate, stage by stage: ingest, annotate, filtrate, train, evaluate, gate."""
from __future__ import annotations

import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from . import cnn, container, linear_svm, oneclass
from .config import PipelineConfig
from .corpus import (CorpusError, DocumentSet, GateLabel, NewsDocument, PolarityLabel,
                     build_vocabulary, load_corpus, save_corpus, train_test_split)
from .dtm import apply_tfidf, build_dtm, fit_idf, tfidf_row, vectorize
from .evaluation import evaluate_predictions
from .valence import ValenceLexicon, annotate_corpus, load_lexicon

log = logging.getLogger("newsgate")

GATE_CLASSES = [1, 0]
GATE_CLASS_NAMES = ["positive", "non_positive"]


class PipelineError(ValueError):
    """Data or contract problem; the CLI maps it to exit code 1."""


def _require_file(path: str, what: str) -> Path:
    if not path:
        raise FileNotFoundError(f"no {what} path given")
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _load_input(cfg: PipelineConfig) -> DocumentSet:
    return load_corpus(_require_file(cfg.corpus, "corpus"), cfg.corpus_format)


def _outdir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def class_counts(docs: DocumentSet) -> dict[str, int]:
    counts = {"positive": 0, "negative": 0, "neutral": 0}
    names = {PolarityLabel.POSITIVE: "positive", PolarityLabel.NEGATIVE: "negative",
             PolarityLabel.NEUTRAL: "neutral"}
    for d in docs:
        if d.weak_label is not None:
            counts[names[d.weak_label]] += 1
    return counts


# --- ingest / annotate -------------------------------------------------------

def run_ingest(cfg: PipelineConfig) -> dict:
    docs = _load_input(cfg)
    out = _outdir(cfg) / "corpus.jsonl"
    save_corpus(docs, out, "jsonl")
    return {"documents": len(docs), "output": str(out)}


def run_annotate(cfg: PipelineConfig) -> dict:
    lex_path = _require_file(cfg.lexicon, "lexicon")
    docs = _load_input(cfg)
    lex = load_lexicon(lex_path)
    if not lex.valences:
        log.warning("lexicon %s has no valence entries; every document will be NEUTRAL", lex_path)
    annotated = annotate_corpus(docs, lex, cfg.scorer_config())
    out = _outdir(cfg) / "annotated.jsonl"
    save_corpus(annotated, out, "jsonl")
    summary = class_counts(annotated)
    summary["output"] = str(out)
    return summary


# --- filtration --------------------------------------------------------------

def run_filtrate(cfg: PipelineConfig) -> dict:
    docs = _load_input(cfg)
    if any(d.weak_label is None for d in docs):
        raise PipelineError("filtrate needs an annotated corpus (weak_label on every document)")
    neg_idx = [i for i, d in enumerate(docs) if d.weak_label != PolarityLabel.POSITIVE]
    pos_idx = [i for i, d in enumerate(docs) if d.weak_label == PolarityLabel.POSITIVE]
    if not neg_idx:
        raise PipelineError("no negative or neutral documents to train the one-class model on")
    if len(neg_idx) < cfg.folds:
        raise PipelineError(f"{len(neg_idx)} negative/neutral documents; need at least folds={cfg.folds}")

    vocab = build_vocabulary(docs, cfg.min_count)
    counts = build_dtm(docs, vocab)
    idf = fit_idf(counts)
    rows = apply_tfidf(counts, idf, l2_normalize=True).rows
    negatives = [rows[i] for i in neg_idx]

    search = oneclass.cv_grid_search(negatives, cfg.grid(), cfg.folds, cfg.repeats, cfg.cv_seed,
                                     cfg.oc_tol, cfg.oc_max_passes)
    nu, gamma = search.selected
    model = oneclass.train_one_class(negatives, nu, gamma, cfg.oc_tol, cfg.oc_max_passes)
    positives = docs.subset(pos_idx)
    kept, quarantined, _ = oneclass.filter_positive_pool(
        model, positives, [rows[i] for i in pos_idx], cfg.margin)

    out = _outdir(cfg)
    save_corpus(kept, out / "kept.jsonl")
    save_corpus(quarantined, out / "quarantine.jsonl")
    (out / "filtration_report.txt").write_text(search.to_text(), encoding="utf-8")
    container.save_model(out / "oneclass.ngate", model, vocab, idf)

    flagged = set(quarantined.ids)
    filtered = []
    for d in docs:
        if d.id in flagged:
            if cfg.quarantine_policy == "relabel":
                filtered.append(replace(d, weak_label=PolarityLabel.NEUTRAL))
        else:
            filtered.append(d)
    save_corpus(DocumentSet(tuple(filtered)), out / "filtered.jsonl")
    return {"kept": len(kept), "quarantined": len(quarantined), "negatives": len(neg_idx),
            "nu": nu, "gamma": gamma, "fits": search.n_fits}


# --- training / evaluation ---------------------------------------------------

def _binary(docs: DocumentSet, source: str) -> np.ndarray:
    try:
        return cnn.binary_targets(docs, source)
    except ValueError as exc:
        raise PipelineError(str(exc)) from None


class Classifier:
    """Uniform predict interface over a loaded CNN or linear-SVM container."""

    def __init__(self, loaded: container.LoadedModel):
        if loaded.kind not in ("cnn", "linear-svm"):
            raise PipelineError(f"model kind {loaded.kind!r} cannot gate documents")
        self.loaded = loaded
        self.kind = loaded.kind

    @classmethod
    def load(cls, path, expected_vocab_hash=None) -> "Classifier":
        return cls(container.load_model(path, expected_vocab_hash))

    def _svm_rows(self, docs):
        vocab = self.loaded.vocabulary
        rows = [vectorize(d, vocab) for d in docs]
        if self.loaded.meta.get("weighting") == "tfidf":
            l2 = self.loaded.meta.get("l2_normalize", "True") == "True"
            rows = [tfidf_row(r, self.loaded.idf, l2) for r in rows]
        return rows

    def positive_scores(self, docs: list[NewsDocument]) -> tuple[np.ndarray, np.ndarray]:
        """(is_positive, confidence) arrays.

        CNN confidence is the winning class probability; for the linear SVM
        it is the logistic of the absolute margin, also in [0.5, 1].
        """
        if not docs:
            return np.zeros(0, dtype=bool), np.zeros(0)
        model = self.loaded.model
        if self.kind == "cnn":
            probs = cnn.predict_documents(model, docs)
            is_pos = probs[:, 1] > probs[:, 0]
            return is_pos, probs.max(axis=1)
        scores = model.scores(self._svm_rows(docs))
        is_pos = scores >= 0
        conf = 1.0 / (1.0 + np.exp(-np.abs(scores)))
        return is_pos, conf

    def predict(self, doc: NewsDocument) -> tuple[GateLabel, float]:
        is_pos, conf = self.positive_scores([doc])
        return (GateLabel.POSITIVE if is_pos[0] else GateLabel.NON_POSITIVE), float(conf[0])


def _report(classifier: Classifier, docs: DocumentSet, y: np.ndarray):
    is_pos, _ = classifier.positive_scores(list(docs))
    pred = is_pos.astype(np.int64)
    return evaluate_predictions(list(y), list(pred), GATE_CLASSES, GATE_CLASS_NAMES)


def train_classifier(cfg: PipelineConfig, train_docs: DocumentSet, y_train: np.ndarray,
                     valid_docs: DocumentSet | None = None, y_valid=None):
    """Fit the configured classifier; returns (serialized container text, history lines)."""
    vocab = build_vocabulary(train_docs, cfg.min_count)
    if cfg.classifier == "dtm-svm":
        counts = build_dtm(train_docs, vocab)
        idf = None
        X = counts
        extra = {"weighting": cfg.svm_weighting}
        if cfg.svm_weighting == "tfidf":
            idf = fit_idf(counts)
            X = apply_tfidf(counts, idf, l2_normalize=True)
            extra["l2_normalize"] = True
        model = linear_svm.train_linear_svm(X, np.where(y_train == 1, 1, -1), cfg.svm_lambda,
                                            cfg.svm_epochs, cfg.svm_seed)
        history = [f"objective[{i + 1}]={v!r}" for i, v in enumerate(model.objective_history)]
        return container.dumps(model, vocab, idf, extra), history
    ccfg = cfg.cnn_config()
    if cfg.embeddings:
        emb = cnn.load_pretrained_embeddings(_require_file(cfg.embeddings, "embeddings"), vocab,
                                             cfg.embedding_dim, cfg.cnn_seed, cfg.trainable_embeddings)
    else:
        emb = cnn.random_embeddings(vocab, cfg.embedding_dim, cfg.cnn_seed, cfg.trainable_embeddings)
    model = cnn.TextCnnModel.initialize(emb, ccfg)
    model, hist = cnn.train(model, train_docs, valid_docs, ccfg, y_train, y_valid)
    history = [f"loss[{i + 1}]={l!r} accuracy[{i + 1}]={a!r}"
               for i, (l, a) in enumerate(zip(hist.loss, hist.accuracy))]
    return container.dumps(model), history


def run_train_evaluate(cfg: PipelineConfig) -> dict:
    docs = _load_input(cfg)
    y = _binary(docs, cfg.label_source)
    if len(set(y.tolist())) < 2:
        raise PipelineError("training corpus has a single class")
    train_docs, test_docs = train_test_split(docs, cfg.test_fraction, cfg.split_seed, labels=list(y))
    index = {d.id: i for i, d in enumerate(docs)}
    y_train = y[[index[d.id] for d in train_docs]]
    y_test = y[[index[d.id] for d in test_docs]]
    if len(set(y_train.tolist())) < 2:
        raise PipelineError("training split has a single class")

    text, history = train_classifier(cfg, train_docs, y_train, test_docs, y_test)
    out = _outdir(cfg)
    model_path = cfg.model_path
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model_path.write_text(text, encoding="utf-8")
    clf = Classifier(container.loads(text))
    train_report = _report(clf, train_docs, y_train)
    test_report = _report(clf, test_docs, y_test)
    (out / "train_report.txt").write_text(
        f"classifier={cfg.classifier}\n" + train_report.to_text() + "\n".join(history) + "\n",
        encoding="utf-8")
    (out / "test_report.txt").write_text(
        f"classifier={cfg.classifier}\n" + test_report.to_text(), encoding="utf-8")
    return {"train_accuracy": train_report.accuracy, "test_accuracy": test_report.accuracy,
            "n_train": len(train_docs), "n_test": len(test_docs), "model": str(model_path)}


def run_evaluate(cfg: PipelineConfig) -> dict:
    clf = Classifier.load(_require_file(str(cfg.model_path), "model"))
    docs = _load_input(cfg)
    source = cfg.label_source
    if source == "auto" and all(d.gold_label is not None for d in docs):
        source = "gold"
    y = _binary(docs, source)
    report = _report(clf, docs, y)
    out = _outdir(cfg) / "eval_report.txt"
    out.write_text(f"classifier={clf.kind}\nlabels={source}\n" + report.to_text(), encoding="utf-8")
    return {"accuracy": report.accuracy, "n": report.n, "output": str(out)}


# --- gate --------------------------------------------------------------------

def gate_stream(classifier: Classifier, lines: Iterable[str], emit: IO[str],
                quarantine: IO[str], rejects: IO[str]) -> dict:
    """Route each jsonl record to ``emit`` (predicted positive), ``quarantine``
    (predicted non-positive) or ``rejects`` (unparseable); order is kept."""
    counts = {"input": 0, "emitted": 0, "quarantined": 0, "rejected": 0}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        counts["input"] += 1
        try:
            if not line.strip():
                raise CorpusError("empty line")
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed json ({exc.msg})") from None
            doc = NewsDocument.from_record(record)
        except CorpusError as exc:
            rejects.write(json.dumps({"line": lineno, "reason": str(exc), "raw": line},
                                     ensure_ascii=False) + "\n")
            counts["rejected"] += 1
            continue
        label, conf = classifier.predict(doc)
        if label == GateLabel.POSITIVE:
            emit.write(json.dumps({**record, "confidence": conf}, ensure_ascii=False) + "\n")
            counts["emitted"] += 1
        else:
            quarantine.write(json.dumps({**record, "predicted_label": label.value,
                                         "confidence": conf}, ensure_ascii=False) + "\n")
            counts["quarantined"] += 1
    return counts


def run_gate(cfg: PipelineConfig, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> dict:
    clf = Classifier.load(_require_file(str(cfg.model_path), "model"))
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    qpath = Path(cfg.quarantine) if cfg.quarantine else _outdir(cfg) / "gate_quarantine.jsonl"
    rpath = Path(cfg.rejects) if cfg.rejects else _outdir(cfg) / "gate_rejects.jsonl"
    qpath.parent.mkdir(parents=True, exist_ok=True)
    rpath.parent.mkdir(parents=True, exist_ok=True)
    with open(qpath, "w", encoding="utf-8", newline="\n") as q, \
            open(rpath, "w", encoding="utf-8", newline="\n") as r:
        return gate_stream(clf, stdin, stdout, q, r)


# --- gradient check ----------------------------------------------------------

def run_gradcheck(cfg: PipelineConfig, n_filters=8, filter_size=3, dim=10, length=12) -> dict:
    """Finite-difference check of the CNN backward pass on small random models."""
    from .corpus import Vocabulary
    vocab = Vocabulary(tuple(f"w{i}" for i in range(40)))
    worst: dict[str, float] = {}
    for seed in range(cfg.gradcheck_seeds):
        emb = cnn.random_embeddings(vocab, dim, seed, trainable=cfg.trainable_embeddings)
        model = cnn.TextCnnModel.initialize(
            emb, cnn.CnnConfig(n_filters=n_filters, filter_size=filter_size, max_len=length, seed=seed))
        rng = np.random.default_rng([seed, 99])
        # nonzero biases keep padding windows off the ReLU kink, where
        # central differences see half a slope
        model.filter_bias[:] = rng.uniform(-0.1, 0.1, n_filters)
        model.dense_bias[:] = rng.uniform(-0.1, 0.1, 2)
        ids = np.zeros(length, dtype=np.int64)
        n_tok = int(rng.integers(filter_size, length + 1))
        ids[:n_tok] = rng.integers(1, vocab.dimension, n_tok)
        errs = cnn.gradient_check(model, (ids, seed % 2), cfg.gradcheck_epsilon)
        for k, v in errs.items():
            worst[k] = max(worst.get(k, 0.0), v)
    return worst
