"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import: numba when it is importable and the
environment variable ``DYNPATH_NO_NUMBA`` is unset (or ``0``), numpy
otherwise. :func:`set_backend` switches at runtime, which the tests and the
benchmark use to exercise both paths in one process.
"""

import os
from contextlib import contextmanager

import numpy as np

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

BACKENDS = {"numpy": _numpy}
if _numba is not None:
    BACKENDS["numba"] = _numba

_FLAG = os.environ.get("DYNPATH_NO_NUMBA", "").strip().lower()
_backend = "numba" if _numba is not None and _FLAG in ("", "0", "false") else "numpy"


def get_backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}")
    _backend = name


@contextmanager
def backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def _impl():
    return BACKENDS[_backend]


def locf_matrix(eval_times, offsets, mtimes, mvalues):
    """Left-limit lookup of a ragged measurement table.

    Returns a ``(len(eval_times), n_subjects)`` array whose entry ``[k, i]`` is
    the value of subject ``i``'s latest measurement taken strictly before
    ``eval_times[k]``, or NaN when there is none. ``eval_times`` must be sorted.
    """
    return _impl().locf_matrix(
        np.ascontiguousarray(eval_times, dtype=np.float64),
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(mtimes, dtype=np.float64),
        np.ascontiguousarray(mvalues, dtype=np.float64),
    )


def cross_products(static, meds, followup, event, times):
    """Per-time Gram matrices ``X'X`` and event sums ``X'dN`` over the risk set.

    The design row of an at-risk subject at ``times[k]`` is ``static[i]``
    followed by ``meds[:, k, i]``. Subjects with a NaN mediator at that time
    are left out. Returns ``(gram, rhs, n_at_risk)``.
    """
    static = np.ascontiguousarray(static, dtype=np.float64)
    meds = np.ascontiguousarray(meds, dtype=np.float64)
    if meds.ndim != 3:
        meds = meds.reshape(0, len(times), static.shape[0])
    return _impl().cross_products(
        static,
        meds,
        np.ascontiguousarray(followup, dtype=np.float64),
        np.ascontiguousarray(event, dtype=np.bool_),
        np.ascontiguousarray(times, dtype=np.float64),
    )


def ldl_solve_batch(gram, rhs, tol):
    return _impl().ldl_solve_batch(
        np.ascontiguousarray(gram, dtype=np.float64),
        np.ascontiguousarray(rhs, dtype=np.float64),
        float(tol),
    )


def discrete_event_steps(treat, med, u, beta0, beta_treat, beta_med, delta):
    """First grid step at which a Bernoulli event fires, ``-1`` if none.

    Also returns how many subject-steps had a negative hazard while the
    subject was still event-free.
    """
    return _impl().discrete_event_steps(
        np.ascontiguousarray(treat, dtype=np.float64),
        np.ascontiguousarray(med, dtype=np.float64),
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(beta0, dtype=np.float64),
        np.ascontiguousarray(beta_treat, dtype=np.float64),
        np.ascontiguousarray(beta_med, dtype=np.float64),
        float(delta),
    )
