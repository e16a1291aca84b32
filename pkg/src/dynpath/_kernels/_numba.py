"""Loop implementations compiled with numba.

Importing this module does not compile anything; each kernel is compiled
lazily on first call and cached on disk.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def locf_matrix(eval_times, offsets, mtimes, mvalues):
    n = offsets.shape[0] - 1
    n_times = eval_times.shape[0]
    out = np.full((n_times, n), np.nan)
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        # eval_times is sorted, so the pointer only moves forward
        j = lo
        for k in range(n_times):
            t = eval_times[k]
            while j < hi and mtimes[j] < t:
                j += 1
            if j > lo:
                out[k, i] = mvalues[j - 1]
    return out


@njit(cache=True, nogil=True)
def cross_products(static, meds, followup, event, times):
    n, a = static.shape
    m = meds.shape[0]
    q = a + m
    n_times = times.shape[0]
    gram = np.zeros((n_times, q, q))
    rhs = np.zeros((n_times, q))
    n_risk = np.zeros(n_times, dtype=np.int64)
    x = np.empty(q)
    for k in range(n_times):
        t = times[k]
        g = gram[k]
        r = rhs[k]
        count = 0
        for i in range(n):
            if followup[i] < t:
                continue
            missing = False
            for c in range(m):
                v = meds[c, k, i]
                if np.isnan(v):
                    missing = True
                    break
                x[a + c] = v
            if missing:
                continue
            for c in range(a):
                x[c] = static[i, c]
            for u in range(q):
                xu = x[u]
                for v in range(u, q):
                    g[u, v] += xu * x[v]
            if event[i] and followup[i] == t:
                for u in range(q):
                    r[u] += x[u]
            count += 1
        for u in range(q):
            for v in range(u):
                g[u, v] = g[v, u]
        n_risk[k] = count
    return gram, rhs, n_risk


@njit(cache=True, nogil=True)
def ldl_solve(gram, rhs, tol):
    q = gram.shape[0]
    L = np.eye(q)
    d = np.zeros(q)
    x = np.full(q, np.nan)
    dmax = 0.0
    for j in range(q):
        s = gram[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k] * d[k]
        d[j] = s
        if s > dmax:
            dmax = s
        if not s > tol * dmax:
            return x, False
        for i in range(j + 1, q):
            s = gram[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k] * d[k]
            L[i, j] = s / d[j]
    if not d.min() > tol * d.max():
        return x, False
    z = np.empty(q)
    for i in range(q):
        s = rhs[i]
        for k in range(i):
            s -= L[i, k] * z[k]
        z[i] = s
    for i in range(q - 1, -1, -1):
        s = z[i] / d[i]
        for k in range(i + 1, q):
            s -= L[k, i] * x[k]
        x[i] = s
    return x, True


@njit(cache=True, nogil=True)
def ldl_solve_batch(gram, rhs, tol):
    n_sys, q = rhs.shape
    coef = np.full((n_sys, q), np.nan)
    ok = np.zeros(n_sys, dtype=np.bool_)
    for k in range(n_sys):
        c, good = ldl_solve(gram[k], rhs[k], tol)
        coef[k] = c
        ok[k] = good
    return coef, ok


@njit(cache=True, nogil=True)
def discrete_event_steps(treat, med, u, beta0, beta_treat, beta_med, delta):
    n, n_steps = med.shape
    step = np.full(n, -1, dtype=np.int64)
    n_negative = 0
    for i in range(n):
        for h in range(n_steps):
            a = beta0[h] + beta_treat[h] * treat[i] + beta_med[h] * med[i, h]
            if a < 0.0:
                n_negative += 1
            p = min(max(a * delta, 0.0), 1.0)
            if u[i, h] < p:
                step[i] = h
                break
    return step, n_negative
