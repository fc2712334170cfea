import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsgate.corpus import NewsDocument, build_vocabulary, tokenize
from newsgate.dtm import (DimensionError, IdfTable, SparseVector, apply_tfidf, build_dtm, fit_idf,
                          read_dtm_dump, tfidf_row, vectorize)


def docs_of(*bodies):
    return [NewsDocument(str(i), "", b) for i, b in enumerate(bodies)]


@pytest.fixture
def abc():
    docs = docs_of("a b a", "b c")
    return docs, build_vocabulary(docs, 1)


def test_counts(abc):
    docs, v = abc
    dtm = build_dtm(docs, v)
    a, b, c = v.lookup("a"), v.lookup("b"), v.lookup("c")
    assert dtm.rows[0].items() == [(a, 2.0), (b, 1.0)]
    assert dtm.rows[1].items() == [(b, 1.0), (c, 1.0)]


def test_empty_and_oov_rows(abc):
    _, v = abc
    assert vectorize(NewsDocument("e", "", "zzz qqq"), v).nnz == 0
    assert vectorize("", v).nnz == 0


def test_idf_examples():
    docs = docs_of("a b", "a", "a")
    v = build_vocabulary(docs, 1)
    idf = fit_idf(build_dtm(docs, v))
    assert idf.idf[v.lookup("a")] == 1.0
    assert idf.idf[0] == pytest.approx(math.log(4.0) + 1.0, abs=1e-15)
    assert round(float(idf.idf[0]), 3) == 2.386
    one = build_vocabulary(docs_of("x"), 1)
    assert fit_idf(build_dtm(docs_of("x"), one)).idf[one.lookup("x")] == 1.0


def test_tfidf_examples():
    idf = IdfTable(np.array([0.0, 0.0, 1.0, 3.0]), 3)
    row = SparseVector.from_pairs([(2, 2.0)], 4)
    assert tfidf_row(row, idf).items() == [(2, 1.0)]
    empty = SparseVector.from_pairs([], 4)
    assert tfidf_row(empty, idf).nnz == 0
    raw = tfidf_row(SparseVector.from_pairs([(2, 2.0), (3, 1.0)], 4), idf, l2_normalize=False)
    assert raw.items() == [(2, 2.0), (3, 3.0)]


def test_idf_dimension_mismatch(abc):
    docs, v = abc
    with pytest.raises(DimensionError):
        apply_tfidf(build_dtm(docs, v), IdfTable(np.ones(2), 2))


def test_dump_roundtrip(tmp_path, abc):
    docs, v = abc
    dtm = apply_tfidf(build_dtm(docs, v), fit_idf(build_dtm(docs, v)))
    dtm.dump(tmp_path / "m.txt")
    back = read_dtm_dump(tmp_path / "m.txt", v)
    assert back.weighting == "tfidf"
    assert np.array_equal(back.to_dense(), dtm.to_dense())


def test_sparse_vector_rules():
    with pytest.raises(ValueError):
        SparseVector(np.array([2, 1]), np.array([1.0, 1.0]), 5)
    v = SparseVector.from_dense([0.0, 2.0, 0.0, -1.0])
    assert v.items() == [(1, 2.0), (3, -1.0)]
    assert v.dot(np.array([1.0, 1.0, 1.0, 1.0])) == 1.0
    assert v.squared_norm() == 5.0


# --- properties --------------------------------------------------------------

corpora = st.lists(st.lists(st.sampled_from([f"w{i}" for i in range(50)]), min_size=1, max_size=15)
                   .map(" ".join), min_size=1, max_size=20)


@given(corpora)
@settings(max_examples=60)
def test_build_dtm_matches_dense_oracle(bodies):
    docs = docs_of(*bodies)
    v = build_vocabulary(docs, 1)
    oracle = np.zeros((len(docs), v.dimension))
    for i, d in enumerate(docs):
        for tok in tokenize(d.text).normalized:
            oracle[i, v.lookup(tok)] += 1
    got = build_dtm(docs, v).to_dense()
    assert np.array_equal(got, oracle)
    assert np.array_equal(got.sum(axis=1), [len(tokenize(d.text)) for d in docs])


@given(corpora, st.integers(1, 3))
@settings(max_examples=60)
def test_row_sum_equals_in_vocab_tokens(bodies, min_count):
    docs = docs_of(*bodies)
    v = build_vocabulary(docs, min_count)
    for d in docs:
        n_in = sum(1 for t in tokenize(d.text).normalized if v.lookup(t) >= 2)
        assert vectorize(d, v).values.sum() == n_in


@given(corpora)
@settings(max_examples=60)
def test_tfidf_rows_unit_norm(bodies):
    docs = docs_of(*bodies)
    v = build_vocabulary(docs, 1)
    dtm = build_dtm(docs, v)
    for r in apply_tfidf(dtm, fit_idf(dtm)).rows:
        if r.nnz:
            assert abs(math.sqrt(r.squared_norm()) - 1.0) <= 1e-12
