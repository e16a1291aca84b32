"""Natural cubic interpolating splines for time-varying coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


def _thomas(sub, diag, sup, rhs):
    """Solve a tridiagonal system; ``sub[0]`` and ``sup[-1]`` are ignored."""
    n = diag.shape[0]
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = sup[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - sub[i] * c[i - 1]
        c[i] = sup[i] / m if i < n - 1 else 0.0
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


@dataclass(frozen=True, eq=False)
class SplineFunction:
    """Piecewise cubic with knot values and second derivatives.

    Call it like a function; arrays broadcast. Outside the knot range the
    endpoint value is held constant.
    """

    knots: np.ndarray
    values: np.ndarray
    second_derivatives: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        x, y, m = self.knots, self.values, self.second_derivatives
        tc = np.clip(t, x[0], x[-1])
        i = np.clip(np.searchsorted(x, tc, side="right") - 1, 0, x.shape[0] - 2)
        h = x[i + 1] - x[i]
        a = (x[i + 1] - tc) / h
        b = (tc - x[i]) / h
        out = a * y[i] + b * y[i + 1] + ((a**3 - a) * m[i] + (b**3 - b) * m[i + 1]) * h * h / 6.0
        return out if out.ndim else float(out)

    def derivative2(self, t):
        t = np.asarray(t, dtype=np.float64)
        x, m = self.knots, self.second_derivatives
        inside = (t >= x[0]) & (t <= x[-1])
        tc = np.clip(t, x[0], x[-1])
        i = np.clip(np.searchsorted(x, tc, side="right") - 1, 0, x.shape[0] - 2)
        h = x[i + 1] - x[i]
        out = np.where(inside, ((x[i + 1] - tc) * m[i] + (tc - x[i]) * m[i + 1]) / h, 0.0)
        return out if out.ndim else float(out)

    def integral(self, t):
        """Exact integral of the spline (with its constant extension) from 0 to ``t``."""
        t = np.asarray(t, dtype=np.float64)
        return self._antiderivative(t) - self._antiderivative(np.zeros_like(t))

    def _antiderivative(self, t):
        x, y, m = self.knots, self.values, self.second_derivatives
        h = np.diff(x)
        # integral over each full segment
        seg = h * (y[:-1] + y[1:]) / 2.0 - h**3 * (m[:-1] + m[1:]) / 24.0
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        tc = np.clip(t, x[0], x[-1])
        i = np.clip(np.searchsorted(x, tc, side="right") - 1, 0, x.shape[0] - 2)
        hi = h[i]
        b = (tc - x[i]) / hi
        a = 1.0 - b
        # integral from x[i] to tc in terms of a, b
        part = hi * (
            y[i] * (1 - a**2) / 2
            + y[i + 1] * b**2 / 2
            + hi**2 / 6 * (-m[i] * (1 - a**2) ** 2 / 4 + m[i + 1] * (b**4 / 4 - b**2 / 2))
        )
        inner = cum[i] + part
        left = np.minimum(t - x[0], 0.0) * y[0]
        right = np.maximum(t - x[-1], 0.0) * y[-1]
        return inner + left + right


def natural_spline(knots, values) -> SplineFunction:
    """Natural cubic spline (zero curvature at both ends) through ``(knots, values)``."""
    x = np.array(knots, dtype=np.float64).ravel()
    y = np.array(values, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataError(f"knots and values differ in length ({x.size} vs {y.size})")
    if x.size < 2:
        raise DataError("a spline needs at least two knots")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise DataError("knots and values must be finite")
    if np.any(np.diff(x) <= 0):
        raise DataError("knots must be strictly increasing")
    m = np.zeros_like(x)
    if x.size > 2:
        h = np.diff(x)
        sub = h[:-1].copy()
        sup = h[1:].copy()
        diag = 2.0 * (h[:-1] + h[1:])
        rhs = 6.0 * (np.diff(y[1:]) / h[1:] - np.diff(y[:-1]) / h[:-1])
        m[1:-1] = _thomas(sub, diag, sup, rhs)
    for a in (x, y, m):
        a.setflags(write=False)
    return SplineFunction(x, y, m)


def constant(value: float, start: float = 0.0, stop: float = 1.0) -> SplineFunction:
    return natural_spline([start, stop], [value, value])
