"""Pure-numpy implementations of the hot kernels.

Every function here has a loop twin in ``_numba.py`` with the same signature
and the same floating-point results up to summation order.
"""

import numpy as np


def locf_matrix(eval_times, offsets, mtimes, mvalues):
    n = offsets.shape[0] - 1
    out = np.full((eval_times.shape[0], n), np.nan)
    for i in range(n):
        lo, hi = offsets[i], offsets[i + 1]
        if hi == lo:
            continue
        # count of measurements strictly before each evaluation time
        k = np.searchsorted(mtimes[lo:hi], eval_times, side="left")
        have = k > 0
        out[have, i] = mvalues[lo + k[have] - 1]
    return out


def cross_products(static, meds, followup, event, times):
    n_times = times.shape[0]
    q = static.shape[1] + meds.shape[0]
    gram = np.zeros((n_times, q, q))
    rhs = np.zeros((n_times, q))
    n_risk = np.zeros(n_times, dtype=np.int64)
    for k in range(n_times):
        t = times[k]
        mask = followup >= t
        if meds.shape[0]:
            mask &= ~np.isnan(meds[:, k, :]).any(axis=0)
        X = np.concatenate([static[mask], meds[:, k, mask].T], axis=1)
        dn = event[mask] & (followup[mask] == t)
        gram[k] = X.T @ X
        rhs[k] = X[dn].sum(axis=0)
        n_risk[k] = X.shape[0]
    return gram, rhs, n_risk


def ldl_solve(gram, rhs, tol):
    q = gram.shape[0]
    L = np.eye(q)
    d = np.zeros(q)
    dmax = 0.0
    for j in range(q):
        d[j] = gram[j, j] - np.dot(L[j, :j] ** 2, d[:j])
        dmax = max(dmax, d[j])
        if not d[j] > tol * dmax:
            return np.full(q, np.nan), False
        for i in range(j + 1, q):
            L[i, j] = (gram[i, j] - np.dot(L[i, :j] * L[j, :j], d[:j])) / d[j]
    if not d.min() > tol * d.max():
        return np.full(q, np.nan), False
    z = np.zeros(q)
    for i in range(q):
        z[i] = rhs[i] - np.dot(L[i, :i], z[:i])
    y = z / d
    x = np.zeros(q)
    for i in range(q - 1, -1, -1):
        x[i] = y[i] - np.dot(L[i + 1:, i], x[i + 1:])
    return x, True


def ldl_solve_batch(gram, rhs, tol):
    n_sys, q = rhs.shape
    coef = np.full((n_sys, q), np.nan)
    ok = np.zeros(n_sys, dtype=np.bool_)
    for k in range(n_sys):
        coef[k], ok[k] = ldl_solve(gram[k], rhs[k], tol)
    return coef, ok


def discrete_event_steps(treat, med, u, beta0, beta_treat, beta_med, delta):
    n, n_steps = med.shape
    step = np.full(n, -1, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    n_negative = 0
    for h in range(n_steps):
        a = beta0[h] + beta_treat[h] * treat + beta_med[h] * med[:, h]
        n_negative += int(np.count_nonzero(alive & (a < 0.0)))
        p = np.minimum(np.maximum(a * delta, 0.0), 1.0)
        hit = alive & (u[:, h] < p)
        step[hit] = h
        alive &= ~hit
    return step, n_negative
