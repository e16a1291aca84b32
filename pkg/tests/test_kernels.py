import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynpath import _kernels
from dynpath._kernels import _numba, _numpy
from oracles import left_limit


def ragged(rng, n):
    counts = rng.integers(0, 4, n)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    times = np.concatenate([np.sort(rng.choice(np.arange(0.0, 5.0, 0.25), c, replace=False)) for c in counts])
    return offsets, times, rng.normal(size=times.size)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_locf_backends_and_oracle(seed):
    rng = np.random.default_rng(seed)
    offsets, mt, mv = ragged(rng, 12)
    ev = np.sort(rng.choice(np.arange(0.0, 5.5, 0.25), 8))
    a = _numba.locf_matrix(ev, offsets, mt, mv)
    b = _numpy.locf_matrix(ev, offsets, mt, mv)
    np.testing.assert_array_equal(a, b)
    for i in range(12):
        series = list(zip(mt[offsets[i]:offsets[i + 1]], mv[offsets[i]:offsets[i + 1]]))
        for k, t in enumerate(ev):
            ref = left_limit(series, t) if series else None
            assert (np.isnan(a[k, i]) and ref is None) or a[k, i] == ref


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_cross_products_backends(seed):
    rng = np.random.default_rng(seed)
    n, T = 25, 6
    static = np.column_stack([np.ones(n), rng.integers(0, 2, n)]).astype(float)
    meds = rng.normal(size=(1, T, n))
    meds[rng.random(meds.shape) < 0.1] = np.nan
    followup = rng.choice(np.arange(0.5, 5.0, 0.5), n)
    event = rng.random(n) < 0.7
    times = np.unique(followup[event])[:T]
    meds = meds[:, : times.size]
    a = _numba.cross_products(static, meds, followup, event, times)
    b = _numpy.cross_products(static, meds, followup, event, times)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_ldl_backends_and_lstsq(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(5, 20, 3))
    A[0, :, 2] = A[0, :, 1]  # singular system
    gram = np.einsum("kij,kil->kjl", A, A)
    y = rng.normal(size=(5, 20))
    rhs = np.einsum("kij,ki->kj", A, y)
    ca, oka = _numba.ldl_solve_batch(gram, rhs, 1e-10)
    cb, okb = _numpy.ldl_solve_batch(gram, rhs, 1e-10)
    np.testing.assert_array_equal(oka, okb)
    assert not oka[0] and oka[1:].all()
    np.testing.assert_allclose(ca[1:], cb[1:], rtol=1e-12, atol=1e-12)
    for k in range(1, 5):
        np.testing.assert_allclose(ca[k], np.linalg.lstsq(A[k], y[k], rcond=None)[0], atol=1e-10)


def test_discrete_event_steps_backends():
    rng = np.random.default_rng(1)
    n, H = 500, 60
    treat = rng.integers(0, 2, n).astype(float)
    med = rng.normal(11, 1.5, (n, H))
    u = rng.random((n, H))
    b0 = np.linspace(-0.3, 0.1, H)
    bt = np.full(H, -0.1)
    bm = np.full(H, 0.03)
    a = _numba.discrete_event_steps(treat, med, u, b0, bt, bm, 1 / 52)
    b = _numpy.discrete_event_steps(treat, med, u, b0, bt, bm, 1 / 52)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1] > 0


def test_set_backend():
    before = _kernels.get_backend()
    with _kernels.backend("numpy"):
        assert _kernels.get_backend() == "numpy"
    assert _kernels.get_backend() == before
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba")])
def test_environment_flag(flag, expected):
    env = {**os.environ, "DYNPATH_NO_NUMBA": flag}
    out = subprocess.run(
        [sys.executable, "-c", "from dynpath import _kernels; print(_kernels.get_backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected
