"""Least squares through the normal equations with a pivot-based rank check.

Designs here are tall and narrow (a handful of columns), so forming
``X'X`` and factoring it as ``L D L'`` without pivoting is cheap and
deterministic. A system counts as full rank when every pivot of ``D``
exceeds ``tol`` times the largest pivot.
"""

import numpy as np

from . import _kernels
from .errors import RankDeficient

PIVOT_TOL = 1e-10


def _check(design, response=None):
    X = np.asarray(design, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("design must be a 2-d array with at least one column")
    if not np.all(np.isfinite(X)):
        raise ValueError("design contains non-finite entries")
    if response is None:
        return X
    y = np.asarray(response, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"design has {X.shape[0]} rows but response has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite entries")
    return X, y


def ldl_pivots(gram):
    """Pivots ``D`` of the unpivoted ``L D L'`` factorization of ``gram``."""
    A = np.asarray(gram, dtype=np.float64)
    q = A.shape[0]
    L = np.eye(q)
    d = np.zeros(q)
    for j in range(q):
        d[j] = A[j, j] - np.sum(L[j, :j] ** 2 * d[:j])
        if d[j] == 0.0:
            L[j + 1:, j] = 0.0
            continue
        for i in range(j + 1, q):
            L[i, j] = (A[i, j] - np.sum(L[i, :j] * L[j, :j] * d[:j])) / d[j]
    return d


def rank_check(design, tol=PIVOT_TOL):
    """True when the smallest pivot of ``X'X`` exceeds ``tol`` times the largest."""
    X = _check(design)
    if X.shape[0] < X.shape[1]:
        return False
    d = ldl_pivots(X.T @ X)
    return bool(d.max() > 0 and d.min() > tol * d.max())


def solve_normal(gram, rhs, tol=PIVOT_TOL):
    """Solve ``gram @ b = rhs`` for a symmetric positive definite ``gram``.

    Raises
    ------
    RankDeficient
        If a pivot falls below ``tol`` times the largest pivot.
    """
    gram = np.asarray(gram, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    coef, ok = _kernels.ldl_solve_batch(gram[None], rhs[None], tol)
    if not ok[0]:
        raise RankDeficient("normal equations are rank deficient")
    return coef[0]


def ols(design, response, tol=PIVOT_TOL):
    """Ordinary least squares coefficients of ``response`` on the columns of ``design``.

    Examples
    --------
    >>> ols([[1, 0], [1, 1], [1, 2]], [1, 3, 5])
    array([1., 2.])
    """
    X, y = _check(design, response)
    if X.shape[0] < X.shape[1]:
        raise RankDeficient(f"{X.shape[0]} rows cannot identify {X.shape[1]} coefficients")
    return solve_normal(X.T @ X, X.T @ y, tol)
