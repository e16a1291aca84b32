"""Aalen additive hazard regression by per-event-time least squares.

At each distinct event time ``t`` the at-risk design ``L(t)`` has rows
``(1, x_1, ..., x_q)`` and the response is the vector of event indicators
``dN(t)``. The local increments solve ``L'L dB = L'dN``; the cumulative
regression functions are their running sums.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .data import TREATMENT, Dataset, event_times, mediator_exclusions
from .errors import NoUsableEventTimes
from .regress import PIVOT_TOL

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"


@dataclass(frozen=True, eq=False)
class RiskSetDesign:
    """Cross products of the full design at every event time.

    Columns are ``labels``: the intercept, the time-fixed columns, then the
    mediators (left limits). Any subset of columns can be regressed on any
    other column, or on ``dN``, without revisiting the data.
    """

    times: np.ndarray
    labels: tuple[str, ...]
    gram: np.ndarray
    rhs: np.ndarray
    n_at_risk: np.ndarray
    n_excluded: int = 0

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown covariate {label!r}") from None

    def solve(self, cols: Sequence[int], response: int | None = None, tol: float = PIVOT_TOL):
        """Per-time OLS on columns ``cols``; ``response=None`` means ``dN``.

        Returns ``(coef, ok)`` where ``coef`` is ``(n_times, len(cols))`` and
        ``ok`` flags the times whose system was solvable.
        """
        cols = np.asarray(cols, dtype=np.int64)
        g = self.gram[:, cols[:, None], cols[None, :]]
        r = self.rhs[:, cols] if response is None else self.gram[:, cols, response]
        coef, ok = _kernels.ldl_solve_batch(g, r, tol)
        ok &= self.n_at_risk >= len(cols)
        coef[~ok] = np.nan
        return coef, ok


def build_design(
    ds: Dataset,
    static: Sequence[str] = (),
    mediators: Sequence[str] = (),
) -> RiskSetDesign:
    """Assemble :class:`RiskSetDesign` for the given time-fixed and mediator labels."""
    times = event_times(ds)
    if times.size == 0:
        raise NoUsableEventTimes("dataset has no observed events")
    for m in mediators:
        if m not in ds.mediators:
            raise KeyError(f"unknown mediator {m!r}")
    cols = [np.ones(ds.n)] + [ds.column(label) for label in static]
    static_arr = np.column_stack(cols)
    excluded = mediator_exclusions(ds, mediators) if mediators else np.zeros(ds.n, dtype=bool)
    meds = np.empty((len(mediators), times.size, ds.n))
    for c, m in enumerate(mediators):
        tab = ds.mediators[m]
        meds[c] = _kernels.locf_matrix(times, tab.offsets, tab.times, tab.values)
    if excluded.any():
        meds[:, :, excluded] = np.nan
    if mediators:
        # at-risk subjects still lacking a left-limit value drop out of that time only
        gaps = np.isnan(meds).any(axis=0) & (ds.followup[None, :] >= times[:, None]) & ~excluded
        if gaps.any():
            logger.info("%d at-risk subject-time(s) dropped for a missing mediator value", int(gaps.sum()))
    gram, rhs, n_risk = _kernels.cross_products(static_arr, meds, ds.followup, ds.event, times)
    return RiskSetDesign(
        times=times,
        labels=(INTERCEPT, *static, *mediators),
        gram=gram,
        rhs=rhs,
        n_at_risk=n_risk,
        n_excluded=int(excluded.sum()),
    )


@dataclass(frozen=True, eq=False)
class CumulativeCurve:
    """Right-continuous step functions over the event times.

    ``increments[k, j]`` is the local estimate for ``labels[j]`` at
    ``times[k]`` and ``cumulative`` its running sum in ascending time.
    Skipped times carry a zero increment.
    """

    times: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray
    labels: tuple[str, ...]
    skipped: np.ndarray = field(default=None)
    n_at_risk: np.ndarray = field(default=None)

    @classmethod
    def from_increments(cls, times, increments, labels, skipped=None, n_at_risk=None):
        inc = np.asarray(increments, dtype=np.float64)
        if inc.ndim == 1:
            inc = inc[:, None]
        if skipped is None:
            skipped = np.zeros(inc.shape[0], dtype=bool)
        return cls(
            times=np.asarray(times, dtype=np.float64),
            increments=inc,
            cumulative=np.cumsum(inc, axis=0),
            labels=tuple(labels),
            skipped=np.asarray(skipped, dtype=bool),
            n_at_risk=n_at_risk,
        )

    @property
    def n_skipped(self) -> int:
        return int(self.skipped.sum())

    def __getitem__(self, label: str) -> np.ndarray:
        return self.cumulative[:, self._col(label)]

    def _col(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}; have {list(self.labels)}") from None

    def __call__(self, label: str, t):
        return eval_cumulative(self, label, t)

    def to_csv(self, path) -> None:
        header = ["time"]
        for label in self.labels:
            header += [f"{label}_dB", f"{label}_B"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [repr(float(t))]
                for j in range(len(self.labels)):
                    row += [repr(float(self.increments[k, j])), repr(float(self.cumulative[k, j]))]
                w.writerow(row)


def step_eval(times, values, t):
    """Right-continuous step function through ``(times, values)``, zero before ``times[0]``."""
    t_arr = np.asarray(t, dtype=np.float64)
    k = np.searchsorted(times, t_arr, side="right") - 1
    values = np.asarray(values)
    out = np.where(k >= 0, values[np.maximum(k, 0)], 0.0)
    return out if out.ndim else float(out)


def eval_cumulative(c: CumulativeCurve, covariate: str, t):
    """Value of the cumulative regression function of ``covariate`` at ``t``."""
    return step_eval(c.times, c.cumulative[:, c._col(covariate)], t)


def fit_additive(
    ds: Dataset,
    covariates: Sequence[str] | None = None,
    *,
    tol: float = PIVOT_TOL,
) -> CumulativeCurve:
    """Fit the additive hazard model with an intercept and ``covariates``.

    ``covariates`` may name ``"treatment"``, baseline covariates and
    mediators (entered as left limits). By default all of them are used.
    Event times where the design is rank deficient, or where fewer subjects
    are at risk than there are columns, are skipped.

    Raises
    ------
    NoUsableEventTimes
        If no event time could be used.
    """
    if covariates is None:
        covariates = (TREATMENT, *ds.covariate_names, *ds.mediator_names)
    covariates = tuple(covariates)
    mediators = [c for c in covariates if c in ds.mediators]
    static = [c for c in covariates if c not in ds.mediators]
    design = build_design(ds, static, mediators)
    order = [design.index(INTERCEPT)] + [design.index(c) for c in covariates]
    coef, ok = design.solve(order, tol=tol)
    n_skip = int((~ok).sum())
    if n_skip == ok.size:
        raise NoUsableEventTimes(f"all {n_skip} event time(s) were skipped", n_skipped=n_skip)
    if n_skip:
        logger.warning("skipped %d of %d event time(s) (rank deficient or small risk set)", n_skip, ok.size)
    inc = np.where(ok[:, None], coef, 0.0)
    return CumulativeCurve.from_increments(
        design.times, inc, (INTERCEPT, *covariates), skipped=~ok, n_at_risk=design.n_at_risk
    )
