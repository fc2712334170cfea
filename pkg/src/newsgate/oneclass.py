"""One-class nu-SVM (RBF kernel) for quarantining suspect positive documents.

The model is fitted on documents the scorer marked negative or neutral.
A weakly-positive document whose decision value is >= 0 looks like that
distribution and is quarantined instead of being passed on as positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .corpus import DocumentSet
from .dtm import DimensionError, SparseVector, stack_rows
from .evaluation import kfold_indices

DEFAULT_NU_GRID = (0.05, 0.1, 0.2)
DEFAULT_GAMMA_GRID = (0.01, 0.1, 1.0)
# decision values are differences of O(1) sums; anything this close to the
# threshold is on the boundary
BOUNDARY_TOL = 1e-12


class InfeasibleError(ValueError):
    """nu * l < 1: the box constraints cannot sum to one."""


def rbf_kernel(u: SparseVector, v: SparseVector, gamma: float) -> float:
    if u.dimension != v.dimension:
        raise DimensionError(f"dimension mismatch: {u.dimension} vs {v.dimension}")
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    d2 = u.squared_norm() + v.squared_norm() - 2.0 * u.dot(v)
    return math.exp(-gamma * max(d2, 0.0))


def _as_csr(vectors) -> sp.csr_matrix:
    if sp.issparse(vectors):
        return sp.csr_matrix(vectors, dtype=np.float64)
    if isinstance(vectors, np.ndarray):
        return sp.csr_matrix(np.atleast_2d(vectors).astype(np.float64))
    return stack_rows(list(vectors))


def squared_distances(A: sp.csr_matrix, B: sp.csr_matrix) -> np.ndarray:
    na = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    nb = np.asarray(B.multiply(B).sum(axis=1)).ravel()
    cross = (A @ B.T).toarray()
    d2 = na[:, None] + nb[None, :] - 2.0 * cross
    np.maximum(d2, 0.0, out=d2)
    return d2


def gram_matrix(X: sp.csr_matrix, gamma: float) -> np.ndarray:
    K = np.exp(-gamma * squared_distances(X, X))
    K = 0.5 * (K + K.T)  # exact symmetry; the solver reads rows for columns
    np.fill_diagonal(K, 1.0)
    return np.ascontiguousarray(K)


@dataclass
class OneClassSvmModel:
    support_vectors: list[SparseVector]
    coefficients: np.ndarray
    offset: float
    gamma: float
    nu: float
    train_size: int
    iterations: int = 0
    kkt_gap: float = 0.0
    objective: float = float("nan")

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        self._sv = stack_rows(self.support_vectors, self.dimension) if self.support_vectors else None

    @property
    def dimension(self) -> int:
        return self.support_vectors[0].dimension if self.support_vectors else 0

    def decision_many(self, vectors) -> np.ndarray:
        X = _as_csr(vectors)
        if X.shape[0] == 0:
            return np.zeros(0)
        if X.shape[1] != self.dimension:
            raise DimensionError(f"dimension mismatch: model {self.dimension} vs input {X.shape[1]}")
        K = np.exp(-self.gamma * squared_distances(X, self._sv))
        return K @ self.coefficients - self.offset


def _initial_alpha(n: int, upper: float) -> np.ndarray:
    full = min(n, int(math.floor(1.0 / upper + 1e-9)))
    alpha = np.zeros(n)
    alpha[:full] = upper
    if full < n:
        alpha[full] = max(0.0, 1.0 - full * upper)
    return alpha


def solve_dual(K: np.ndarray, nu: float, tol: float = 1e-4, max_passes: int = 1000):
    """Solve the one-class dual on a precomputed Gram matrix.

    Returns (alpha, rho, iterations, kkt_gap).
    """
    n = K.shape[0]
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if n < 1:
        raise ValueError("need at least one training vector")
    if nu * n < 1.0 - 1e-12:
        raise InfeasibleError(
            f"nu * l = {nu * n:.3g} < 1: box constraints cannot sum to 1; use a larger nu or more data")
    upper = 1.0 / (nu * n)
    alpha = _initial_alpha(n, upper)
    iterations, gap = _kernels.smo_one_class(K, upper, float(tol), int(max_passes) * n, alpha)
    grad = K @ alpha
    margin = (alpha > 0.0) & (alpha < upper)
    if margin.any():
        rho = float(grad[margin].mean())
    else:
        rho = float(grad[alpha > 0.0].mean())
    return alpha, rho, int(iterations), float(gap)


def dual_objective(K: np.ndarray, alpha: np.ndarray) -> float:
    return float(0.5 * alpha @ K @ alpha)


def _fit_from_gram(K, X: sp.csr_matrix, nu, gamma, tol, max_passes) -> OneClassSvmModel:
    alpha, rho, iterations, gap = solve_dual(K, nu, tol, max_passes)
    sv = np.flatnonzero(alpha > 0.0)
    rows = X[sv]
    vectors = [SparseVector(rows.indices[rows.indptr[r]:rows.indptr[r + 1]].astype(np.int64),
                            rows.data[rows.indptr[r]:rows.indptr[r + 1]], X.shape[1])
               for r in range(rows.shape[0])]
    return OneClassSvmModel(vectors, alpha[sv], rho, gamma, nu, K.shape[0],
                            iterations, gap, dual_objective(K, alpha))


def train_one_class(data, nu: float, gamma: float, tol: float = 1e-4,
                    max_passes: int = 1000) -> OneClassSvmModel:
    """Fit a one-class nu-SVM; ``max_passes`` caps pair updates at max_passes * l."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    X = _as_csr(data)
    if X.shape[0] < 1:
        raise ValueError("need at least one training vector")
    return _fit_from_gram(gram_matrix(X, gamma), X, nu, gamma, tol, max_passes)


def decision(model: OneClassSvmModel, v: SparseVector) -> float:
    return float(model.decision_many([v])[0])


def filter_positive_pool(model: OneClassSvmModel, positives: DocumentSet,
                         vectors: Sequence[SparseVector], margin: float = 0.0):
    """Split ``positives`` into (kept, quarantined, decision values)."""
    if len(vectors) != len(positives):
        raise ValueError(f"{len(vectors)} vectors for {len(positives)} documents")
    if len(positives) == 0:
        return positives.subset([]), positives.subset([]), np.zeros(0)
    scores = model.decision_many(list(vectors))
    flagged = scores >= margin - BOUNDARY_TOL
    kept = positives.subset(np.flatnonzero(~flagged))
    quarantined = positives.subset(np.flatnonzero(flagged))
    return kept, quarantined, scores


@dataclass
class CvSearchResult:
    grid: list[tuple[float, float]]
    scores: list[np.ndarray]          # per cell: repeats x folds
    selected: tuple[float, float]
    criterion_value: float
    n_fits: int = 0
    folds: int = 10
    repeats: int = 10
    mean_scores: list[float] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"folds={self.folds}", f"repeats={self.repeats}", f"fits={self.n_fits}",
                 f"selected_nu={self.selected[0]!r}", f"selected_gamma={self.selected[1]!r}",
                 f"criterion={self.criterion_value!r}"]
        for (nu, gamma), m in zip(self.grid, self.mean_scores):
            lines.append(f"cell nu={nu!r} gamma={gamma!r} mean_score={m!r}")
        return "\n".join(lines) + "\n"


def cv_grid_search(negatives, grid: Sequence[tuple[float, float]] | None = None,
                   folds: int = 10, repeats: int = 10, seed: int = 0,
                   tol: float = 1e-4, max_passes: int = 1000) -> CvSearchResult:
    """Repeated k-fold search over (nu, gamma).

    A fold's score is |share of held-out negatives with decision >= 0 - (1 - nu)|;
    the cell with the smallest mean wins, ties going to smaller gamma, then
    smaller nu.  Folds for repeat r come from the seed pair (seed, r), so
    every cell sees the same partitions.  Cells where nu times the training
    size is below one are scored +inf without fitting.
    """
    if grid is None:
        grid = [(nu, g) for g in DEFAULT_GAMMA_GRID for nu in DEFAULT_NU_GRID]
    grid = [(float(nu), float(g)) for nu, g in grid]
    if not grid:
        raise ValueError("grid must be non-empty")
    X = _as_csr(negatives)
    n = X.shape[0]
    if n < folds:
        raise ValueError(f"need at least {folds} negatives for {folds}-fold CV, got {n}")

    partitions = []
    for r in range(repeats):
        rseed = int(np.random.SeedSequence([seed, r]).generate_state(1)[0])
        partitions.append(kfold_indices(n, folds, rseed))
    d2 = squared_distances(X, X)
    grams: dict[float, np.ndarray] = {}

    n_fits = 0
    all_scores = []
    for nu, gamma in grid:
        if gamma not in grams:
            K = np.exp(-gamma * d2)
            K = 0.5 * (K + K.T)
            np.fill_diagonal(K, 1.0)
            grams[gamma] = K
        K = grams[gamma]
        cell = np.empty((repeats, folds))
        for r, parts in enumerate(partitions):
            for f, held in enumerate(parts):
                train_idx = np.setdiff1d(np.arange(n), held, assume_unique=True)
                if nu * len(train_idx) < 1.0 - 1e-12:
                    cell[r, f] = np.inf
                    continue
                Ktr = np.ascontiguousarray(K[np.ix_(train_idx, train_idx)])
                alpha, rho, _, _ = solve_dual(Ktr, nu, tol, max_passes)
                n_fits += 1
                dec = K[np.ix_(held, train_idx)] @ alpha - rho
                accept = float(np.mean(dec >= 0.0))
                cell[r, f] = abs(accept - (1.0 - nu))
        all_scores.append(cell)

    means = [float(c.mean()) for c in all_scores]
    best = min(range(len(grid)), key=lambda c: (means[c], grid[c][1], grid[c][0]))
    return CvSearchResult(grid, all_scores, grid[best], means[best], n_fits, folds, repeats, means)
