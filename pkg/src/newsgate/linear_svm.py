"""Linear SVM over document-term rows, trained with Pegasos."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .dtm import DimensionError, DocumentTermMatrix, SparseVector, stack_rows


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    lam: float
    epochs_trained: int = 0
    objective_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("non-finite model parameters")

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    def scores(self, X) -> np.ndarray:
        X = _rows(X, self.dimension)
        return X @ self.weights + self.bias


def _rows(X, dimension=None) -> sp.csr_matrix:
    if isinstance(X, DocumentTermMatrix):
        M = X.to_csr()
    elif sp.issparse(X):
        M = sp.csr_matrix(X, dtype=np.float64)
    elif isinstance(X, np.ndarray):
        M = sp.csr_matrix(np.atleast_2d(X).astype(np.float64))
    else:
        M = stack_rows(list(X), dimension)
    if dimension is not None and M.shape[1] != dimension:
        raise DimensionError(f"dimension mismatch: model {dimension} vs input {M.shape[1]}")
    return M


def _labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be +1 or -1")
    return y


def hinge_objective(model: LinearSvmModel, X, y) -> float:
    """lambda/2 ||w||^2 + mean hinge loss (bias unregularized)."""
    M = _rows(X, model.dimension)
    y = _labels(y)
    if M.shape[0] != y.shape[0]:
        raise ValueError("X and y are not aligned")
    reg = 0.5 * model.lam * float(model.weights @ model.weights)
    if y.size == 0:
        return reg
    margins = y * (M @ model.weights + model.bias)
    return reg + float(np.maximum(0.0, 1.0 - margins).mean())


def train_linear_svm(X, y: Sequence[int], lam: float = 1e-2, epochs: int = 20,
                     seed: int = 0) -> LinearSvmModel:
    """Pegasos: step 1/(lambda t), one seeded shuffled pass per epoch.

    The returned parameters are those of the epoch-end iterate with the
    lowest training objective; ``objective_history`` holds every epoch-end
    objective.
    """
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    M = _rows(X)
    y = _labels(y)
    if M.shape[0] != y.shape[0]:
        raise ValueError("X and y are not aligned")
    if len(set(y.tolist())) < 2:
        raise ValueError("training labels contain a single class")
    M.sort_indices()
    indptr = M.indptr.astype(np.int64)
    indices = M.indices.astype(np.int64)
    data = np.ascontiguousarray(M.data, dtype=np.float64)

    rng = np.random.default_rng(seed)
    v = np.zeros(M.shape[1])
    scale, bias, t = 1.0, 0.0, 0
    best = None
    history = []
    for epoch in range(epochs):
        order = rng.permutation(M.shape[0]).astype(np.int64)
        scale, bias, t = _kernels.pegasos_epoch(indptr, indices, data, y, order, v,
                                                scale, bias, lam, t)
        w = scale * v
        obj = hinge_objective(LinearSvmModel(w, bias, lam), M, y)
        history.append(obj)
        if best is None or obj < best[0]:
            best = (obj, w.copy(), bias, epoch + 1)
    if best is None:
        return LinearSvmModel(np.zeros(M.shape[1]), 0.0, lam, 0, history)
    return LinearSvmModel(best[1], best[2], lam, epochs, history)


def predict(model: LinearSvmModel, x) -> int:
    """sign(w.x + b) with sign(0) = +1."""
    if isinstance(x, SparseVector):
        if x.dimension != model.dimension:
            raise DimensionError(f"dimension mismatch: model {model.dimension} vs input {x.dimension}")
        s = x.dot(model.weights) + model.bias
    else:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (model.dimension,):
            raise DimensionError(f"dimension mismatch: model {model.dimension} vs input {x.shape}")
        s = float(x @ model.weights) + model.bias
    return 1 if s >= 0 else -1


def predict_many(model: LinearSvmModel, X) -> np.ndarray:
    return np.where(model.scores(X) >= 0, 1, -1)
