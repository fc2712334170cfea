"""Sparse document-term matrices with count or tf-idf weighting."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import N_RESERVED, NewsDocument, Vocabulary, tokenize


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sorted (index, value) pairs over a fixed dimension; zeros are not stored."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-D and aligned")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dimension:
                raise ValueError("index out of range")
        keep = val != 0
        if not keep.all():
            idx, val = idx[keep], val[keep]
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, dense) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64)
        nz = np.flatnonzero(dense)
        return cls(nz, dense[nz], dense.shape[0])

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dimension: int) -> "SparseVector":
        pairs = sorted(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.int64),
                   np.array([p[1] for p in pairs], dtype=np.float64), dimension)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out

    def items(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def dot(self, other) -> float:
        if isinstance(other, SparseVector):
            if other.dimension != self.dimension:
                raise DimensionError(f"dimension mismatch: {self.dimension} vs {other.dimension}")
            common, ia, ib = np.intersect1d(self.indices, other.indices,
                                            assume_unique=True, return_indices=True)
            return float(self.values[ia] @ other.values[ib])
        other = np.asarray(other)
        if other.shape[0] != self.dimension:
            raise DimensionError(f"dimension mismatch: {self.dimension} vs {other.shape[0]}")
        return float(self.values @ other[self.indices])

    def squared_norm(self) -> float:
        return float(self.values @ self.values)

    def __eq__(self, other):
        return (isinstance(other, SparseVector) and self.dimension == other.dimension
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"SparseVector({self.items()!r}, dimension={self.dimension})"


def stack_rows(rows: Sequence[SparseVector], dimension: int | None = None) -> sp.csr_matrix:
    """CSR matrix with one row per vector."""
    if dimension is None:
        if not rows:
            raise ValueError("dimension required for an empty row list")
        dimension = rows[0].dimension
    for r in rows:
        if r.dimension != dimension:
            raise DimensionError(f"dimension mismatch: {r.dimension} vs {dimension}")
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([r.nnz for r in rows])
    indices = np.concatenate([r.indices for r in rows]) if rows else np.zeros(0, np.int64)
    data = np.concatenate([r.values for r in rows]) if rows else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), dimension))


@dataclass(frozen=True)
class DocumentTermMatrix:
    rows: tuple[SparseVector, ...]
    vocabulary: Vocabulary
    weighting: str = "count"

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if self.weighting not in ("count", "tfidf"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        dim = self.dimension
        for r in self.rows:
            if r.dimension != dim:
                raise DimensionError("row dimension does not match vocabulary")

    @property
    def dimension(self) -> int:
        return self.vocabulary.dimension

    def __len__(self):
        return len(self.rows)

    def to_csr(self) -> sp.csr_matrix:
        return stack_rows(self.rows, self.dimension)

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def dump(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"%%dtm {len(self.rows)} {self.dimension} {self.weighting}\n")
            for i, row in enumerate(self.rows):
                for j, v in row.items():
                    fh.write(f"{i} {j} {v!r}\n")


def read_dtm_dump(path, vocabulary: Vocabulary) -> DocumentTermMatrix:
    with open(Path(path), encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "%%dtm":
            raise ValueError("missing %%dtm header")
        n_rows, n_cols, weighting = int(header[1]), int(header[2]), header[3]
        if n_cols != vocabulary.dimension:
            raise DimensionError("dump dimension does not match vocabulary")
        pairs: list[list[tuple[int, float]]] = [[] for _ in range(n_rows)]
        for line in fh:
            if line.strip():
                i, j, v = line.split()
                pairs[int(i)].append((int(j), float(v)))
    return DocumentTermMatrix(tuple(SparseVector.from_pairs(p, n_cols) for p in pairs),
                              vocabulary, weighting)


def vectorize(doc: NewsDocument | str, vocab: Vocabulary) -> SparseVector:
    """Count vector of one document (OOV tokens dropped)."""
    seq = tokenize(doc.text if isinstance(doc, NewsDocument) else doc)
    counts = Counter(i for i in vocab.encode(seq) if i >= N_RESERVED)
    return SparseVector.from_pairs(((i, float(c)) for i, c in counts.items()), vocab.dimension)


def build_dtm(docs: Iterable[NewsDocument], vocab: Vocabulary) -> DocumentTermMatrix:
    return DocumentTermMatrix(tuple(vectorize(d, vocab) for d in docs), vocab, "count")


@dataclass(frozen=True, eq=False)
class IdfTable:
    idf: np.ndarray
    n_docs: int

    def __eq__(self, other):
        return (isinstance(other, IdfTable) and self.n_docs == other.n_docs
                and np.array_equal(self.idf, other.idf))


def fit_idf(dtm: DocumentTermMatrix) -> IdfTable:
    """Smoothed idf: ln((1 + n) / (1 + df)) + 1 for every index."""
    if dtm.weighting != "count":
        raise ValueError("fit_idf expects a count-weighted matrix")
    n = len(dtm.rows)
    df = np.zeros(dtm.dimension)
    for r in dtm.rows:
        df[r.indices] += 1
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return IdfTable(idf, n)


def tfidf_row(row: SparseVector, idf: IdfTable, l2_normalize: bool = True) -> SparseVector:
    vals = row.values * idf.idf[row.indices]
    if l2_normalize and vals.size:
        norm = math.sqrt(float(vals @ vals))
        if norm > 0:
            vals = vals / norm
    return SparseVector(row.indices, vals, row.dimension)


def apply_tfidf(dtm: DocumentTermMatrix, idf: IdfTable, l2_normalize: bool = True) -> DocumentTermMatrix:
    if dtm.weighting != "count":
        raise ValueError("apply_tfidf expects a count-weighted matrix")
    if idf.idf.shape[0] != dtm.dimension:
        raise DimensionError("idf table does not match matrix dimension")
    return DocumentTermMatrix(tuple(tfidf_row(r, idf, l2_normalize) for r in dtm.rows),
                              dtm.vocabulary, "tfidf")
