import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from newsgate.corpus import DocumentSet, NewsDocument
from newsgate.dtm import SparseVector
from newsgate.oneclass import (InfeasibleError, cv_grid_search, decision, dual_objective,
                               filter_positive_pool, gram_matrix, rbf_kernel, solve_dual,
                               train_one_class)
from qp_oracle import solve_qp


def sv(*xs):
    return SparseVector.from_dense(np.array(xs, dtype=float))


def gaussian(n, dim=2, seed=0):
    return np.random.default_rng(seed).normal(size=(n, dim))


def test_rbf_examples():
    assert rbf_kernel(sv(0.3, -1.0), sv(0.3, -1.0), 5.0) == 1.0
    assert rbf_kernel(sv(1, 0), sv(0, 1), 0.5) == pytest.approx(math.exp(-1.0), abs=1e-15)
    vals = [rbf_kernel(sv(1, 0), sv(0, 1), g) for g in (0.1, 1, 10, 100)]
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-80


def test_single_point():
    m = train_one_class(np.array([[1.0, 2.0]]), nu=1.0, gamma=1.0)
    assert np.allclose(m.coefficients, [1.0]) and m.offset == 1.0
    assert decision(m, sv(1.0, 2.0)) == 0.0


def test_two_identical_points():
    m = train_one_class(np.array([[1.0, 2.0], [1.0, 2.0]]), nu=1.0, gamma=1.0)
    assert np.allclose(m.coefficients, [0.5, 0.5])
    assert abs(decision(m, sv(1.0, 2.0))) < 1e-12


def test_infeasible():
    with pytest.raises(InfeasibleError):
        train_one_class(gaussian(5), nu=0.1, gamma=1.0)


def unit_rows(n, dim, seed):
    X = gaussian(n, dim, seed)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def test_matches_qp_oracle_l20():
    X = unit_rows(20, 3, 1)
    K = gram_matrix(sp.csr_matrix(X), 1.0)
    alpha, _, _, _ = solve_dual(K, 0.25, tol=1e-10)
    _, ref = solve_qp(K, 1.0 / (0.25 * 20))
    assert abs(dual_objective(K, alpha) - ref) <= 1e-5


@pytest.mark.parametrize("seed", range(10))
def test_random_instances_vs_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(5, 26))
    nu = float(rng.uniform(max(1.0 / n, 0.05), 0.9))
    gamma = float(rng.choice([0.1, 0.5, 2.0]))
    K = gram_matrix(sp.csr_matrix(gaussian(n, 3, seed)), gamma)
    alpha, _, _, _ = solve_dual(K, nu, tol=1e-10)
    upper = 1.0 / (nu * n)
    _, ref = solve_qp(K, upper)
    assert abs(dual_objective(K, alpha) - ref) <= 1e-5
    assert alpha.min() >= -1e-8 and alpha.max() <= upper + 1e-8
    assert abs(alpha.sum() - 1.0) <= 1e-8


@pytest.mark.parametrize("nu", [0.1, 0.3, 0.5])
def test_nu_property(nu):
    X = gaussian(500, 2, 7)
    m = train_one_class(X, nu=nu, gamma=0.5)
    scores = m.decision_many(sp.csr_matrix(X))
    outliers = float(np.mean(scores < 0))
    sv_frac = len(m.coefficients) / 500
    assert abs(outliers - nu) <= 0.05
    assert sv_frac >= nu - 0.05


def test_margin_sv_on_boundary():
    X = gaussian(60, 2, 3)
    m = train_one_class(X, nu=0.2, gamma=0.5, tol=1e-9)
    upper = 1.0 / (0.2 * 60)
    margin = [v for a, v in zip(m.coefficients, m.support_vectors) if 1e-9 < a < upper - 1e-9]
    assert margin
    for v in margin:
        assert abs(decision(m, v)) < 1e-6


def test_far_point_and_determinism():
    m = train_one_class(gaussian(40, 2, 2), nu=0.2, gamma=5.0)
    far = sv(1e3, -1e3)
    assert decision(m, far) == pytest.approx(-m.offset, abs=1e-12)
    assert decision(m, far) < 0
    v = sv(0.1, 0.2)
    assert decision(m, v) == decision(m, v)


def test_decision_continuous():
    m = train_one_class(gaussian(40, 2, 4), nu=0.2, gamma=0.5)
    a, b = decision(m, sv(0.3, 0.3)), decision(m, sv(0.3 + 1e-7, 0.3))
    assert abs(a - b) < 1e-5
    m2 = train_one_class(gaussian(40, 2, 4), nu=0.2, gamma=0.5 + 1e-9)
    assert abs(decision(m2, sv(0.3, 0.3)) - a) < 1e-5


def docs(n):
    return DocumentSet(tuple(NewsDocument(f"p{i}", "", "x") for i in range(n)))


def test_filter_pool_identical_to_training():
    X = gaussian(100, 2, 5)
    m = train_one_class(X, nu=0.1, gamma=0.5)
    vecs = [SparseVector.from_dense(x) for x in X]
    kept, quarantined, _ = filter_positive_pool(m, docs(100), vecs)
    assert len(quarantined) > 50


def test_filter_pool_far_and_empty():
    m = train_one_class(gaussian(50, 2, 6), nu=0.1, gamma=1.0)
    far = [sv(100.0 + i, 100.0) for i in range(5)]
    kept, quarantined, _ = filter_positive_pool(m, docs(5), far)
    assert len(kept) == 5 and len(quarantined) == 0
    kept, quarantined, scores = filter_positive_pool(m, docs(0), [])
    assert len(kept) == len(quarantined) == 0 and scores.size == 0


@given(st.integers(0, 10**6), st.integers(1, 40))
@settings(max_examples=25, deadline=None)
def test_filter_partitions(seed, n):
    m = train_one_class(gaussian(30, 2, 1), nu=0.2, gamma=0.5)
    P = gaussian(n, 2, seed) * 2
    ds = docs(n)
    kept, quarantined, _ = filter_positive_pool(m, ds, [SparseVector.from_dense(p) for p in P])
    assert sorted(kept.ids + quarantined.ids) == sorted(ds.ids)
    assert set(kept.ids).isdisjoint(quarantined.ids)


@given(st.integers(3, 25), st.floats(0.2, 1.0), st.floats(0.05, 3.0), st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_dual_feasibility(n, nu, gamma, seed):
    K = gram_matrix(sp.csr_matrix(gaussian(n, 3, seed)), gamma)
    if nu * n < 1:
        return
    alpha, _, _, _ = solve_dual(K, nu)
    upper = 1.0 / (nu * n)
    assert alpha.min() >= -1e-8 and alpha.max() <= upper + 1e-8
    assert abs(alpha.sum() - 1.0) <= 1e-8


def test_cv_grid_shape_and_reproducibility():
    X = gaussian(60, 2, 9)
    grid = [(nu, g) for g in (0.1, 0.5, 1.0) for nu in (0.1, 0.2, 0.3)]
    a = cv_grid_search(X, grid, folds=10, repeats=10, seed=3)
    b = cv_grid_search(X, grid, folds=10, repeats=10, seed=3)
    assert a.n_fits == 900
    assert all(s.shape == (10, 10) for s in a.scores)
    assert a.selected == b.selected
    assert a.to_text() == b.to_text()
    best = min(a.mean_scores)
    assert a.criterion_value == best


def test_cv_single_cell():
    r = cv_grid_search(gaussian(30, 2, 1), [(0.5, 1.0)], folds=10, repeats=2, seed=0)
    assert r.selected == (0.5, 1.0)


def test_cv_tie_prefers_smaller_gamma():
    # points so far apart that every kernel value is 0 for both gammas
    X = np.eye(30) * 1e3
    r = cv_grid_search(X, [(0.5, 10.0), (0.5, 1.0)], folds=10, repeats=1, seed=0)
    assert r.mean_scores[0] == r.mean_scores[1]
    assert r.selected == (0.5, 1.0)


def test_cv_needs_enough_negatives():
    with pytest.raises(ValueError):
        cv_grid_search(gaussian(5, 2, 0), folds=10)
