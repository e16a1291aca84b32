"""Dynamic path analysis.

At every event time two regressions share one risk set: the additive hazard
regression of ``dN`` on ``(1, treatment, mediators, adjusters)`` and, for each
mediator, an OLS regression on the nodes that precede it. Local path effects
are products of edge coefficients times the terminal hazard increment;
cumulative effects are running sums over event times.
"""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .data import DEFAULT_MEDIATOR, TREATMENT, Dataset, at_risk, mediator_exclusions
from .errors import DataError, NoUsableEventTimes, RankDeficient
from .hazard import INTERCEPT, CumulativeCurve, RiskSetDesign, build_design, step_eval
from .regress import PIVOT_TOL, ols
from . import _kernels

logger = logging.getLogger(__name__)

MAX_NODES = 15
OUTCOME = "outcome"


@dataclass(frozen=True)
class PathSpec:
    """A causal path ``nodes[0] -> ... -> nodes[-1] -> outcome``."""

    nodes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes:
            raise DataError("a path needs at least one node")

    @property
    def name(self) -> str:
        return " -> ".join((*self.nodes, OUTCOME))

    def check_order(self, order: Sequence[str]) -> None:
        order = list(order)
        try:
            pos = [order.index(n) for n in self.nodes]
        except ValueError:
            unknown = [n for n in self.nodes if n not in order]
            raise DataError(f"path node(s) {unknown} not in the model {order}") from None
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise DataError(f"path {self.name} is not increasing in measurement order {order}")


class _PathFit(NamedTuple):
    design: RiskSetDesign
    nodes: tuple[str, ...]
    hazard: np.ndarray  # (T, q) increments, columns = intercept, nodes, adjusters
    hazard_labels: tuple[str, ...]
    edges: dict  # (to, from) -> (T,) coefficients
    ok: np.ndarray


def _fit_paths(ds: Dataset, nodes: Sequence[str], adjust: Sequence[str], tol: float) -> _PathFit:
    nodes = tuple(nodes)
    adjust = tuple(adjust)
    if len(nodes) > MAX_NODES + 1:
        raise DataError(f"at most {MAX_NODES} mediators are supported ({2**MAX_NODES} paths)")
    if len(set(nodes + adjust)) != len(nodes) + len(adjust):
        raise DataError("nodes and adjusters must be distinct")
    mediators = [n for n in nodes if n in ds.mediators]
    static = [n for n in nodes if n not in ds.mediators] + list(adjust)
    design = build_design(ds, static, mediators)
    ix = design.index
    hazard_cols = [ix(INTERCEPT)] + [ix(n) for n in nodes] + [ix(a) for a in adjust]
    hazard, ok = design.solve(hazard_cols, tol=tol)
    edges = {}
    for k in range(1, len(nodes)):
        cols = [ix(INTERCEPT)] + [ix(n) for n in nodes[:k]] + [ix(a) for a in adjust]
        coef, good = design.solve(cols, response=ix(nodes[k]), tol=tol)
        ok &= good
        for j in range(k):
            edges[(nodes[k], nodes[j])] = coef[:, 1 + j]
    n_skip = int((~ok).sum())
    if n_skip == ok.size:
        raise NoUsableEventTimes(f"all {n_skip} event time(s) were skipped", n_skipped=n_skip)
    if n_skip:
        logger.warning("skipped %d of %d event time(s) (rank deficient or small risk set)", n_skip, ok.size)
    labels = (INTERCEPT, *nodes, *adjust)
    return _PathFit(design, nodes, hazard, labels, edges, ok)


def _path_increments(fit: _PathFit, path: PathSpec) -> np.ndarray:
    inc = fit.hazard[:, fit.hazard_labels.index(path.nodes[-1])].copy()
    for to, frm in zip(path.nodes[::-1], path.nodes[-2::-1]):
        inc = inc * fit.edges[(to, frm)]
    return np.where(fit.ok, inc, 0.0)


@dataclass(frozen=True, eq=False)
class DpaResult:
    """Cumulative direct, indirect and total effects on a shared time axis."""

    times: np.ndarray
    direct: np.ndarray
    indirect: np.ndarray
    total: np.ndarray
    direct_increments: np.ndarray
    indirect_increments: np.ndarray
    local_b21: np.ndarray
    skipped: np.ndarray
    hazard: CumulativeCurve
    n_at_risk: np.ndarray
    n_excluded: int
    treatment: str = TREATMENT
    mediator: str = DEFAULT_MEDIATOR

    @property
    def n_skipped(self) -> int:
        return int(self.skipped.sum())

    def curve(self, name: str) -> np.ndarray:
        if name not in ("direct", "indirect", "total"):
            raise KeyError(name)
        return getattr(self, name)

    def at(self, name: str, t):
        """Step-function value of ``direct``, ``indirect`` or ``total`` at ``t``."""
        return step_eval(self.times, self.curve(name), t)

    def to_csv(self, path, extra_columns: dict | None = None) -> None:
        header = ["time", "direct", "indirect", "total", "local_b21", "skipped"]
        extra = extra_columns or {}
        header += list(extra)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(self.times.size):
                row = [
                    repr(float(self.times[k])),
                    repr(float(self.direct[k])),
                    repr(float(self.indirect[k])),
                    repr(float(self.total[k])),
                    repr(float(self.local_b21[k])),
                    "1" if self.skipped[k] else "0",
                ]
                row += [repr(float(v[k])) for v in extra.values()]
                w.writerow(row)


def fit_dpa(
    ds: Dataset,
    treatment: str = TREATMENT,
    mediator: str = DEFAULT_MEDIATOR,
    adjust: Sequence[str] = (),
    *,
    tol: float = PIVOT_TOL,
) -> DpaResult:
    """Decompose the cumulative treatment effect into direct and mediated parts.

    Parameters
    ----------
    ds : Dataset
    treatment : str
        ``"treatment"`` or a baseline covariate acting as the exposure.
    mediator : str
        Name of a time-dependent mediator in ``ds``.
    adjust : sequence of str
        Baseline covariates entered in both regressions.

    Returns
    -------
    DpaResult
        ``total`` is ``direct + indirect`` elementwise.
    """
    if mediator not in ds.mediators:
        raise KeyError(f"unknown mediator {mediator!r}")
    fit = _fit_paths(ds, (treatment, mediator), adjust, tol)
    direct_inc = _path_increments(fit, PathSpec((treatment,)))
    indirect_inc = _path_increments(fit, PathSpec((treatment, mediator)))
    direct = np.cumsum(direct_inc)
    indirect = np.cumsum(indirect_inc)
    hazard = CumulativeCurve.from_increments(
        fit.design.times,
        np.where(fit.ok[:, None], fit.hazard, 0.0),
        fit.hazard_labels,
        skipped=~fit.ok,
        n_at_risk=fit.design.n_at_risk,
    )
    b21 = np.where(fit.ok, fit.edges[(mediator, treatment)], np.nan)
    return DpaResult(
        times=fit.design.times,
        direct=direct,
        indirect=indirect,
        total=direct + indirect,
        direct_increments=direct_inc,
        indirect_increments=indirect_inc,
        local_b21=b21,
        skipped=~fit.ok,
        hazard=hazard,
        n_at_risk=fit.design.n_at_risk,
        n_excluded=fit.design.n_excluded,
        treatment=treatment,
        mediator=mediator,
    )


def mediator_regression_at(
    ds: Dataset,
    t: float,
    adjust: Sequence[str] = (),
    *,
    treatment: str = TREATMENT,
    mediator: str = DEFAULT_MEDIATOR,
    tol: float = PIVOT_TOL,
) -> np.ndarray:
    """OLS of the mediator's left limit at ``t`` on ``(1, treatment, adjust)``.

    Uses the same risk set as :func:`fit_dpa` at ``t``. Returns the
    coefficients in that column order.
    """
    tab = ds.mediators[mediator]
    values = _kernels.locf_matrix(np.array([t]), tab.offsets, tab.times, tab.values)[0]
    keep = at_risk(ds, t) & ~np.isnan(values) & ~mediator_exclusions(ds, [mediator])
    X = np.column_stack([np.ones(ds.n), ds.column(treatment)] + [ds.column(a) for a in adjust])[keep]
    if X.shape[0] < X.shape[1]:
        raise RankDeficient(f"only {X.shape[0]} subject(s) at risk at t={t}")
    return ols(X, values[keep], tol)


def path_effect(
    ds: Dataset,
    path: PathSpec | Sequence[str],
    nodes: Sequence[str] | None = None,
    adjust: Sequence[str] = (),
    *,
    tol: float = PIVOT_TOL,
) -> CumulativeCurve:
    """Cumulative effect flowing along one path.

    ``nodes`` is the full ordered node set of the model (default: treatment
    then every mediator of ``ds``); the hazard regression and every edge
    regression condition on all preceding nodes.
    """
    if not isinstance(path, PathSpec):
        path = PathSpec(tuple(path))
    if nodes is None:
        nodes = (TREATMENT, *ds.mediator_names)
    path.check_order(nodes)
    fit = _fit_paths(ds, nodes, adjust, tol)
    inc = _path_increments(fit, path)
    return CumulativeCurve.from_increments(
        fit.design.times, inc, (path.name,), skipped=~fit.ok, n_at_risk=fit.design.n_at_risk
    )


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Every path from the treatment to the outcome, with cumulative effects."""

    times: np.ndarray
    paths: dict  # tuple of nodes -> cumulative curve (ndarray)
    increments: dict
    skipped: np.ndarray
    total: np.ndarray
    marginal_total: np.ndarray

    @property
    def direct(self) -> np.ndarray:
        return self.paths[min(self.paths, key=len)]


def total_decomposition(
    ds: Dataset,
    nodes: Sequence[str],
    treatment: str = TREATMENT,
    adjust: Sequence[str] = (),
    *,
    tol: float = PIVOT_TOL,
) -> Decomposition:
    """Split the treatment's total effect over all increasing paths.

    ``nodes`` lists the mediators in measurement order. ``total`` is the sum
    of the path curves; ``marginal_total`` is the cumulative treatment
    coefficient of the hazard model without mediators, fitted on the same
    risk sets. The two agree up to rounding.
    """
    nodes = tuple(nodes)
    if len(nodes) > MAX_NODES:
        raise DataError(f"{len(nodes)} mediators give {2 ** len(nodes)} paths; the limit is {2**MAX_NODES}")
    order = (treatment, *nodes)
    fit = _fit_paths(ds, order, adjust, tol)
    paths, incs = {}, {}
    for r in range(len(nodes) + 1):
        for sub in itertools.combinations(nodes, r):
            p = (treatment, *sub)
            incs[p] = _path_increments(fit, PathSpec(p))
            paths[p] = np.cumsum(incs[p])
    total_inc = np.zeros(fit.design.times.size)
    for inc in incs.values():
        total_inc = total_inc + inc
    ix = fit.design.index
    cols = [ix(INTERCEPT), ix(treatment)] + [ix(a) for a in adjust]
    marg, ok_m = fit.design.solve(cols, tol=tol)
    marg_inc = np.where(fit.ok & ok_m, marg[:, 1], 0.0)
    return Decomposition(
        times=fit.design.times,
        paths=paths,
        increments=incs,
        skipped=~fit.ok,
        total=np.cumsum(total_inc),
        marginal_total=np.cumsum(marg_inc),
    )


class Proportion(NamedTuple):
    value: float
    status: str  # "ok", "unstable" or "undefined"


def proportion_mediated(r: DpaResult, t: float, tol_abs: float = 1e-8, unstable_frac: float = 0.05) -> Proportion:
    """Indirect over total effect at ``t``.

    The ratio is ``"undefined"`` (value NaN) when ``|total(t)| <= tol_abs``
    and flagged ``"unstable"`` when ``|total(t)|`` is below ``unstable_frac``
    of the largest ``|total|`` on the curve.
    """
    if t < r.times[0]:
        raise ValueError(f"t={t} precedes the first event time {r.times[0]}")
    total = r.at("total", t)
    if not abs(total) > tol_abs:
        return Proportion(float("nan"), "undefined")
    value = r.at("indirect", t) / total
    status = "unstable" if abs(total) < unstable_frac * np.max(np.abs(r.total)) else "ok"
    return Proportion(float(value), status)
