import numpy as np
import pytest

from newsgate import container
from newsgate.cnn import CnnConfig, TextCnnModel, predict_documents, random_embeddings
from newsgate.corpus import build_vocabulary
from newsgate.dtm import apply_tfidf, build_dtm, fit_idf
from newsgate.linear_svm import train_linear_svm
from newsgate.oneclass import train_one_class
from synth import synthetic_corpus


@pytest.fixture(scope="module")
def corpus():
    return synthetic_corpus(120, seed=3)


@pytest.fixture(scope="module")
def vocab(corpus):
    return build_vocabulary(corpus, 2)


def labels(docs):
    return np.array([1 if d.gold_label == 1 else -1 for d in docs])


def cnn_model(vocab):
    emb = random_embeddings(vocab, 6, seed=1, trainable=True)
    return TextCnnModel.initialize(emb, CnnConfig(n_filters=5, max_len=40, seed=1))


def test_cnn_roundtrip(corpus, vocab):
    m = cnn_model(vocab)
    text = container.dumps(m)
    assert text.startswith(f"NGATE 1 cnn {vocab.content_hash()}\n")
    loaded = container.loads(text)
    assert loaded.kind == "cnn" and loaded.model.config == m.config
    assert loaded.model.embeddings.trainable
    assert container.dumps(loaded.model) == text
    docs = list(corpus)[:20]
    assert np.array_equal(predict_documents(loaded.model, docs), predict_documents(m, docs))


@pytest.mark.parametrize("weighting", ["count", "tfidf"])
def test_linear_svm_roundtrip(corpus, vocab, weighting):
    X = build_dtm(corpus, vocab)
    idf = None
    if weighting == "tfidf":
        idf = fit_idf(X)
        X = apply_tfidf(X, idf)
    m = train_linear_svm(X, labels(corpus), epochs=5)
    text = container.dumps(m, vocab, idf, {"weighting": weighting})
    loaded = container.loads(text)
    assert container.dumps_loaded(loaded) == text
    assert loaded.meta["weighting"] == weighting
    assert np.array_equal(loaded.model.weights, m.weights) and loaded.model.bias == m.bias
    assert np.array_equal(loaded.model.scores(X), m.scores(X))
    if idf is not None:
        assert loaded.idf == idf


def test_oneclass_roundtrip(corpus, vocab):
    counts = build_dtm(corpus, vocab)
    idf = fit_idf(counts)
    rows = apply_tfidf(counts, idf).rows
    m = train_one_class(rows, 0.2, 0.5)
    text = container.dumps(m, vocab, idf)
    loaded = container.loads(text)
    assert container.dumps_loaded(loaded) == text
    assert np.array_equal(loaded.model.decision_many(list(rows)), m.decision_many(list(rows)))


def test_rejects_bad_headers(vocab):
    text = container.dumps(cnn_model(vocab))
    with pytest.raises(container.ContainerError, match="version"):
        container.loads(text.replace("NGATE 1 ", "NGATE 2 ", 1))
    with pytest.raises(container.ContainerError):
        container.loads("hello\n")
    with pytest.raises(container.ContainerError, match="kind"):
        container.loads(text.replace(" cnn ", " rnn ", 1))
    with pytest.raises(container.ContainerError, match="hash"):
        container.loads(text, expected_vocab_hash="0" * 16)
    tampered = text.replace("---vocabulary\nmin_count = 2\n", "---vocabulary\nmin_count = 2\nzzzz\t9\n")
    with pytest.raises(container.ContainerError, match="hash"):
        container.loads(tampered)


def test_save_load_files(tmp_path, vocab):
    m = cnn_model(vocab)
    container.save_model(tmp_path / "m.ngate", m)
    assert container.load_model(tmp_path / "m.ngate", vocab.content_hash()).kind == "cnn"
