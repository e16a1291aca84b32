"""Monte-Carlo checks that survival selection leaves linear structure intact.

Covariates follow a recursive linear structural model

    X_k = b_k0 + sum_{j<k} b_kj X_j + W_k

with independent mean-zero errors ``W_k``. Survival depends on the
covariates through either an additive hazard ``beta_0(s) + sum_j beta_j(s) X_j``
or a multiplicative one ``lambda_0(s) exp(sum_j beta_j X_j)``. Survivors at
``t`` are drawn exactly: ``T > t`` iff ``U < S(t | X)`` for a uniform ``U``.

Under the additive form, regression slopes among survivors equal the
structural coefficients, independent covariates stay independent and
dropping a survival-only covariate changes no other hazard coefficient. The
multiplicative form serves as a contrast and its checks are informational.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import DataError, InsufficientSurvivors, NegativeHazard
from .hazard import eval_cumulative, fit_additive
from .simgen import SplineSpec

logger = logging.getLogger(__name__)

CHUNK = 1 << 16
MIN_SURVIVOR_FRACTION = 1e-4
N_SE = 3.0
ERROR_KINDS = ("gaussian", "shifted_exponential")
FORMS = ("additive", "multiplicative")


@dataclass(frozen=True)
class ErrorSpec:
    """Mean-zero error: Gaussian with sd ``scale`` or ``scale * (Exp(1) - 1)``."""

    kind: str = "gaussian"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise DataError(f"unknown error distribution {self.kind!r}; expected one of {ERROR_KINDS}")
        if not self.scale >= 0:
            raise DataError("error scale must be non-negative")

    def draw(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, m)
        return self.scale * (rng.standard_exponential(m) - 1.0)


def _weight(w):
    if isinstance(w, SplineSpec):
        return w
    if isinstance(w, dict):
        return SplineSpec(w["times"], w["values"])
    return float(w)


@dataclass(frozen=True, eq=False)
class SemSpec:
    """Recursive linear model for the covariates plus a hazard on top of them.

    Parameters
    ----------
    names : variable names, in causal order.
    intercepts : ``b_k0`` per variable.
    coefficients : strictly lower triangular ``B`` with ``B[k, j] = b_kj``.
    errors : one :class:`ErrorSpec` per variable.
    weights : hazard weight per variable; a constant or a :class:`SplineSpec`
        (additive form only).
    baseline : baseline hazard, constant or :class:`SplineSpec`.
    form : ``"additive"`` or ``"multiplicative"``.
    """

    names: tuple[str, ...]
    intercepts: np.ndarray
    coefficients: np.ndarray
    errors: tuple[ErrorSpec, ...]
    weights: tuple
    baseline: object = 0.0
    form: str = "additive"
    _fns: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.names)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "intercepts", np.asarray(self.intercepts, dtype=np.float64).reshape(n))
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=np.float64).reshape(n, n))
        object.__setattr__(
            self, "errors", tuple(e if isinstance(e, ErrorSpec) else ErrorSpec(**e) for e in self.errors)
        )
        object.__setattr__(self, "weights", tuple(_weight(w) for w in self.weights))
        object.__setattr__(self, "baseline", _weight(self.baseline))
        object.__setattr__(self, "_fns", {})
        if len(set(self.names)) != n:
            raise DataError("variable names must be unique")
        if len(self.errors) != n or len(self.weights) != n:
            raise DataError("errors and weights need one entry per variable")
        if np.any(np.triu(self.coefficients) != 0):
            raise DataError("coefficient matrix must be strictly lower triangular")
        if self.form not in FORMS:
            raise DataError(f"unknown hazard form {self.form!r}; expected one of {FORMS}")
        if self.form == "multiplicative" and any(isinstance(w, SplineSpec) for w in self.weights):
            raise DataError("multiplicative form takes constant weights only")

    @classmethod
    def from_dict(cls, d: dict) -> SemSpec:
        return cls(
            names=d["names"],
            intercepts=d["intercepts"],
            coefficients=d["coefficients"],
            errors=[ErrorSpec(**e) for e in d["errors"]],
            weights=d["weights"],
            baseline=d.get("baseline", 0.0),
            form=d.get("form", "additive"),
        )

    def to_dict(self) -> dict:
        def w(x):
            return {"times": list(x.times), "values": list(x.values)} if isinstance(x, SplineSpec) else x

        return {
            "names": list(self.names),
            "intercepts": self.intercepts.tolist(),
            "coefficients": self.coefficients.tolist(),
            "errors": [{"kind": e.kind, "scale": e.scale} for e in self.errors],
            "weights": [w(x) for x in self.weights],
            "baseline": w(self.baseline),
            "form": self.form,
        }

    def replace(self, **changes) -> SemSpec:
        d = self.to_dict()
        d.update(changes)
        return SemSpec.from_dict(d)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def _fn(self, w):
        if not isinstance(w, SplineSpec):
            return None
        if w not in self._fns:
            self._fns[w] = w.build()
        return self._fns[w]

    def _value(self, w, s):
        f = self._fn(w)
        return np.full_like(np.asarray(s, dtype=np.float64), w) if f is None else f(s)

    def _integral(self, w, t):
        f = self._fn(w)
        return w * np.asarray(t, dtype=np.float64) if f is None else f.integral(t)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """``m`` draws of the covariate vector, shape ``(m, n_vars)``."""
        x = np.empty((m, self.n_vars))
        for k in range(self.n_vars):
            x[:, k] = self.intercepts[k] + x[:, :k] @ self.coefficients[k, :k] + self.errors[k].draw(rng, m)
        return x

    def hazard(self, x: np.ndarray, s) -> np.ndarray:
        """Hazard at times ``s`` for rows of ``x``; shape ``(m, len(s))``."""
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        base = self._value(self.baseline, s)
        w = np.stack([self._value(wk, s) for wk in self.weights], axis=1)  # (len(s), n)
        if self.form == "additive":
            return base[None, :] + x @ w.T
        return base[None, :] * np.exp(x @ w[0])[:, None]

    def cumulative_hazard(self, x: np.ndarray, t) -> np.ndarray:
        """Cumulative hazard to ``t`` (scalar, or one time per row) for rows of ``x``."""
        base = self._integral(self.baseline, t)
        if self.form == "additive":
            w = np.stack([np.broadcast_to(self._integral(wk, t), x.shape[:1]) for wk in self.weights], axis=1)
            return base + (x * w).sum(axis=1)
        return base * np.exp(x @ np.array(self.weights, dtype=np.float64))

    def check_hazard(self, x: np.ndarray, t_max: float, n_grid: int = 101) -> None:
        """Raise :class:`NegativeHazard` if the additive hazard dips below zero for any row."""
        if self.form != "additive" or t_max <= 0:
            return
        s = np.linspace(0.0, t_max, n_grid)
        bad = int((self.hazard(x, s).min(axis=1) < 0).sum())
        if bad:
            raise NegativeHazard(f"{bad} of {x.shape[0]} draw(s) have a negative additive hazard before t={t_max}")

    def validate(self, t_max: float, seed: int = 0, pilot: int = 10_000) -> None:
        """Rejection check of hazard positivity on a pilot sample."""
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xFFFF,)))
        self.check_hazard(self.sample(rng, pilot), t_max)

    def event_times(self, x: np.ndarray, u: np.ndarray, t_max: float, iters: int = 64) -> np.ndarray:
        """Inverse-transform event times ``H(T | x) = -log u``; ``inf`` beyond ``t_max``."""
        target = -np.log(u)
        at_max = self.cumulative_hazard(x, t_max)
        out = np.full(x.shape[0], np.inf)
        hit = at_max >= target
        xh, th = x[hit], target[hit]
        lo, hi = np.zeros(th.size), np.full(th.size, float(t_max))
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            below = self.cumulative_hazard(xh, mid) < th
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[hit] = 0.5 * (lo + hi)
        return out


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def sample_survivors(spec: SemSpec, t: float, n_draws: int, seed: int) -> np.ndarray:
    """``n_draws`` covariate vectors from the population still event-free at ``t``.

    Candidates are drawn in fixed-size chunks, each with its own stream
    derived from ``seed``, until enough survivors are collected; the result
    is truncated to exactly ``n_draws`` rows.

    Raises
    ------
    InsufficientSurvivors
        If fewer than a fraction ``1e-4`` of the candidates survive.
    NegativeHazard
        If an additive hazard is negative for a drawn covariate vector.
    """
    if n_draws < 1:
        raise DataError("n_draws must be positive")
    if t < 0:
        raise DataError("t must be non-negative")
    kept, have, chunk = [], 0, 0
    while have < n_draws:
        rng = _chunk_rng(seed, chunk)
        x = spec.sample(rng, CHUNK)
        u = rng.random(CHUNK)
        spec.check_hazard(x, t)
        alive = u < np.exp(-spec.cumulative_hazard(x, t))
        frac = alive.mean()
        if chunk == 0 and frac < MIN_SURVIVOR_FRACTION:
            raise InsufficientSurvivors(f"only {frac:.2e} of draws survive to t={t}")
        kept.append(x[alive])
        have += int(alive.sum())
        chunk += 1
        if chunk * CHUNK * MIN_SURVIVOR_FRACTION > n_draws * 10 and have < n_draws:
            raise InsufficientSurvivors(f"survivor fraction at t={t} too small to collect {n_draws} draws")
    return np.concatenate(kept)[:n_draws]


# ---------------------------------------------------------------- statistics


def ols_with_se(y: np.ndarray, x: np.ndarray):
    """OLS of ``y`` on ``(1, x)``; returns ``(coef, se)`` with classical standard errors."""
    design = np.column_stack([np.ones(y.shape[0]), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = y.shape[0] - design.shape[1]
    sigma2 = resid @ resid / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return coef, np.sqrt(np.diag(cov))


def binned_mutual_information(a: np.ndarray, b: np.ndarray, bins: int = 10) -> float:
    """Plug-in mutual information (nats) on an equal-count ``bins x bins`` grid."""
    ia, ib = _rank_bins(a, bins), _rank_bins(b, bins)
    return _mi_from_bins(ia, ib, bins)


def _rank_bins(v: np.ndarray, bins: int) -> np.ndarray:
    r = np.empty(v.size, dtype=np.int64)
    r[np.argsort(v, kind="stable")] = np.arange(v.size)
    return r * bins // v.size


def _mi_from_bins(ia, ib, bins):
    joint = np.bincount(ia * bins + ib, minlength=bins * bins).reshape(bins, bins) / ia.size
    pa, pb = joint.sum(1), joint.sum(0)
    nz = joint > 0
    return float((joint[nz] * np.log(joint[nz] / np.outer(pa, pb)[nz])).sum())


def permutation_null_mi(a, b, n_perm: int, seed: int, bins: int = 10) -> np.ndarray:
    ia, ib = _rank_bins(a, bins), _rank_bins(b, bins)
    rng = np.random.default_rng(seed)
    return np.array([_mi_from_bins(ia, rng.permutation(ib), bins) for _ in range(n_perm)])


# ---------------------------------------------------------------- reports


@dataclass
class Assertion:
    name: str
    estimate: float
    se: float
    threshold: float
    passed: bool
    informational: bool = False
    target: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "target": self.target,
            "se": self.se,
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "informational": bool(self.informational),
        }


def _within(name, estimate, target, se, informational=False, n_se=N_SE):
    thr = n_se * se
    return Assertion(name, float(estimate), float(se), float(thr), bool(abs(estimate - target) <= thr), informational, float(target))


@dataclass
class Report:
    suite: str
    seed: int
    assertions: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions if not a.informational)

    def extend(self, other: Report) -> None:
        self.assertions.extend(other.assertions)
        self.details.update(other.details)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "n_assertions": sum(not a.informational for a in self.assertions),
            "n_failed": sum((not a.passed) and not a.informational for a in self.assertions),
            "assertions": [a.to_dict() for a in self.assertions],
            "details": self.details,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sub_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------- checks


def verify_independence(
    spec: SemSpec,
    t: float,
    n_draws: int,
    seed: int,
    pair: tuple[str, str] | None = None,
    n_perm: int = 199,
) -> Report:
    """Survivor correlation and binned mutual information for two independent variables."""
    a_name, b_name = pair or spec.names[:2]
    ia, ib = spec.index(a_name), spec.index(b_name)
    if spec.coefficients[ib, ia] != 0 or spec.coefficients[ia, ib] != 0:
        raise DataError(f"{a_name} and {b_name} are not structurally independent")
    info = spec.form != "additive"
    x = sample_survivors(spec, t, n_draws, seed)
    a, b = x[:, ia], x[:, ib]
    rho = float(np.corrcoef(a, b)[0, 1])
    bound = 3.0 / math.sqrt(n_draws)
    mi = binned_mutual_information(a, b)
    null = permutation_null_mi(a, b, n_perm, _sub_seed(seed, 1))
    q99 = float(np.quantile(null, 0.99, method="higher"))
    rep = Report("independence", seed)
    rep.assertions.append(
        Assertion(f"corr({a_name},{b_name})|T>{t:g} [{spec.form}]", rho, 1 / math.sqrt(n_draws), bound, abs(rho) < bound, info)
    )
    rep.assertions.append(
        Assertion(f"mi({a_name},{b_name})|T>{t:g} [{spec.form}]", mi, float(null.std()), q99, mi <= q99, info)
    )
    return rep


def verify_coefficient_stability(
    spec: SemSpec,
    times: Sequence[float],
    n_draws: int,
    seed: int,
    label: str = "",
) -> Report:
    """Survivor OLS slopes of each variable on its predecessors against the structural ``B``.

    One assertion per (time, k, j) for every ``j < k``: slope within three
    standard errors of ``B[k, j]``. Intercepts are reported in ``details``
    only, as selection shifts them. Under the multiplicative form all
    assertions are informational.
    """
    info = spec.form != "additive"
    rep = Report("stability", seed)
    tag = f" [{spec.form}{', ' + label if label else ''}]"
    drift = {}
    for i, t in enumerate(times):
        x = sample_survivors(spec, t, n_draws, _sub_seed(seed, i))
        for k in range(1, spec.n_vars):
            coef, se = ols_with_se(x[:, k], x[:, :k])
            drift[f"{spec.names[k]}~1@{t:g}"] = float(coef[0])
            for j in range(k):
                rep.assertions.append(
                    _within(f"b[{spec.names[k]},{spec.names[j]}]|T>{t:g}{tag}", coef[j + 1], spec.coefficients[k, j], se[j + 1], info)
                )
    rep.details[f"intercepts{tag}"] = drift
    return rep


def verify_collapsibility(
    spec: SemSpec,
    times: Sequence[float],
    n_draws: int,
    seed: int,
    *,
    exposure: str,
    outcome: str,
    survival_only: str,
    n_batches: int = 20,
    hazard_reps: int = 20,
    hazard_n: int = 4000,
) -> Report:
    """Dropping a survival-only variable leaves survivor slopes and hazard coefficients unchanged.

    Two checks per time:

    * slope of ``outcome`` on ``exposure`` among survivors, with versus
      without ``survival_only`` as an extra regressor; the standard error of
      the difference comes from ``n_batches`` disjoint batches;
    * cumulative additive-hazard coefficient of ``exposure`` fitted with and
      without ``survival_only`` on ``hazard_reps`` simulated cohorts of
      ``hazard_n`` subjects each (administratively censored at the last time).
    """
    iu, ix, iy = spec.index(survival_only), spec.index(exposure), spec.index(outcome)
    if np.any(spec.coefficients[iu] != 0) or np.any(spec.coefficients[:, iu] != 0):
        raise DataError(f"{survival_only} must have no structural links to the other variables")
    info = spec.form != "additive"
    rep = Report("collapsibility", seed)
    tag = f" [{spec.form}]"
    for i, t in enumerate(times):
        x = sample_survivors(spec, t, n_draws, _sub_seed(seed, i))
        diffs = []
        for idx in np.array_split(np.arange(n_draws), n_batches):
            diffs.append(_slope_gap(x[idx], ix, iy, iu))
        full = _slope_gap(x, ix, iy, iu)
        se = float(np.std(diffs, ddof=1) / math.sqrt(n_batches))
        rep.assertions.append(_within(f"slope({outcome}~{exposure}) gap from {survival_only}|T>{t:g}{tag}", full, 0.0, se, info))

    gaps = np.array([_hazard_gap(spec, times, hazard_n, _sub_seed(seed, 1000 + r), exposure, survival_only) for r in range(hazard_reps)])
    mean = gaps.mean(axis=0)
    se = gaps.std(axis=0, ddof=1) / math.sqrt(hazard_reps)
    for k, t in enumerate(times):
        rep.assertions.append(_within(f"B[{exposure}]({t:g}) gap from {survival_only}{tag}", mean[k], 0.0, se[k], info))
    return rep


def _slope_gap(x, ix, iy, iu) -> float:
    without, _ = ols_with_se(x[:, iy], x[:, [ix]])
    if np.ptp(x[:, iu]) == 0:
        # a constant column is collinear with the intercept and carries no information
        return 0.0
    with_u, _ = ols_with_se(x[:, iy], x[:, [ix, iu]])
    return float(without[1] - with_u[1])


def cohort(spec: SemSpec, n: int, seed: int, horizon: float, exposure: str) -> Dataset:
    """Simulated cohort with exact event times, administratively censored at ``horizon``.

    ``exposure`` becomes the treatment column; the other variables are baseline covariates.
    """
    rng = _chunk_rng(seed, 0)
    x = spec.sample(rng, n)
    spec.check_hazard(x, horizon)
    t = spec.event_times(x, 1.0 - rng.random(n), horizon)
    event = t <= horizon
    followup = np.where(event, t, horizon)
    ie = spec.index(exposure)
    others = [k for k in range(spec.n_vars) if k != ie]
    return Dataset.from_arrays(
        np.arange(1, n + 1).astype(str).astype(object),
        x[:, ie],
        x[:, others],
        followup,
        event,
        {},
        [spec.names[k] for k in others],
    )


def _hazard_gap(spec, times, n, seed, exposure, survival_only):
    ds = cohort(spec, n, seed, max(times), exposure)
    measured = [c for c in ds.covariate_names if c != survival_only]
    without = fit_additive(ds, ["treatment", *measured])
    with_u = fit_additive(ds, ["treatment", *measured, survival_only])
    return np.array([eval_cumulative(without, "treatment", t) - eval_cumulative(with_u, "treatment", t) for t in times])


def cox_contrast(spec: SemSpec, n: int, seed: int, horizon: float, *, exposure: str, survival_only: str) -> Report:
    """Cox coefficient of ``exposure`` with versus without ``survival_only`` (informational).

    Under a multiplicative hazard the two fits target different parameters,
    so a nonzero gap is expected.
    """
    from statsmodels.duration.hazard_regression import PHReg

    ds = cohort(spec, n, seed, horizon, exposure)
    measured = [c for c in ds.covariate_names if c != survival_only]

    def coef(cols):
        exog = np.column_stack([ds.treatment] + [ds.column(c) for c in cols])
        res = PHReg(ds.followup, exog, status=ds.event.astype(float), ties="breslow").fit()
        return float(res.params[0]), float(res.bse[0])

    b_with, se_with = coef([*measured, survival_only])
    b_without, _ = coef(measured)
    rep = Report("collapsibility", seed)
    rep.assertions.append(
        _within(f"cox[{exposure}] gap from {survival_only} [{spec.form}]", b_without - b_with, 0.0, se_with, True)
    )
    rep.details[f"cox[{exposure}]"] = {"with": b_with, "without": b_without}
    return rep


# ---------------------------------------------------------------- suites

SUITES = ("independence", "stability", "collapsibility", "all")


@dataclass(frozen=True)
class VerifyConfig:
    draws: int
    times: tuple[float, ...]
    seed: int
    independence: SemSpec
    stability: SemSpec
    stability_skewed: SemSpec
    collapsibility: SemSpec
    contrast: SemSpec
    exposure: str = "x1"
    outcome: str = "x2"
    survival_only: str = "u"
    hazard_reps: int = 20
    hazard_n: int = 4000
    cox_n: int = 20000

    @classmethod
    def from_dict(cls, d: dict) -> VerifyConfig:
        specs = {k: SemSpec.from_dict(d[k]) for k in ("independence", "stability", "stability_skewed", "collapsibility", "contrast")}
        rest = {k: d[k] for k in ("exposure", "outcome", "survival_only", "hazard_reps", "hazard_n", "cox_n") if k in d}
        return cls(draws=int(d["draws"]), times=tuple(float(t) for t in d["times"]), seed=int(d["seed"]), **specs, **rest)

    @classmethod
    def from_json(cls, path) -> VerifyConfig:
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"invalid verify config: {exc}") from exc

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("draws", "seed", "exposure", "outcome", "survival_only", "hazard_reps", "hazard_n", "cox_n")}
        d["times"] = list(self.times)
        for k in ("independence", "stability", "stability_skewed", "collapsibility", "contrast"):
            d[k] = getattr(self, k).to_dict()
        return d


def default_verify_config() -> VerifyConfig:
    text = resources.files("dynpath").joinpath("configs/collider_default.json").read_text(encoding="utf-8")
    return VerifyConfig.from_dict(json.loads(text))


def _multiplicative(spec: SemSpec, contrast: SemSpec) -> SemSpec:
    """``spec`` with the hazard replaced by the contrast's multiplicative hazard."""
    keep = {contrast.names[i]: contrast.weights[i] for i in range(contrast.n_vars)}
    return spec.replace(
        form="multiplicative",
        baseline=contrast.baseline,
        weights=[keep.get(n, 0.0) for n in spec.names],
    )


def run_suite(cfg: VerifyConfig, suite: str = "all", seed: int | None = None, *, multiplicative: bool = False) -> Report:
    """Run one verification suite (or all) and collect its assertions.

    With ``multiplicative=True`` the checks run under the contrast's
    multiplicative hazard and every assertion is informational. The ``all``
    suite always appends the multiplicative contrasts as informational entries.
    """
    if suite not in SUITES:
        raise DataError(f"unknown suite {suite!r}; expected one of {SUITES}")
    seed = cfg.seed if seed is None else seed
    t_max = max(cfg.times)
    report = Report(suite, seed)
    report.details["config"] = cfg.to_dict()
    run = SUITES[:3] if suite == "all" else (suite,)

    def pick(spec):
        return _multiplicative(spec, cfg.contrast) if multiplicative else spec

    for spec in (cfg.independence, cfg.stability, cfg.stability_skewed, cfg.collapsibility):
        if spec.form == "additive":
            spec.validate(t_max, seed)
    if "independence" in run:
        spec = pick(cfg.independence)
        for i, t in enumerate(cfg.times):
            report.extend(verify_independence(spec, t, cfg.draws, _sub_seed(seed, 10, i)))
    if "stability" in run:
        report.extend(verify_coefficient_stability(pick(cfg.stability), cfg.times, cfg.draws, _sub_seed(seed, 20)))
        if not multiplicative:
            report.extend(
                verify_coefficient_stability(cfg.stability_skewed, cfg.times, cfg.draws, _sub_seed(seed, 21), label="skewed")
            )
    if "collapsibility" in run:
        report.extend(
            verify_collapsibility(
                pick(cfg.collapsibility),
                cfg.times,
                cfg.draws,
                _sub_seed(seed, 30),
                exposure=cfg.exposure,
                outcome=cfg.outcome,
                survival_only=cfg.survival_only,
                hazard_reps=cfg.hazard_reps,
                hazard_n=cfg.hazard_n,
            )
        )
    if suite == "all" and not multiplicative:
        c = cfg.contrast
        report.extend(verify_independence(c, t_max, cfg.draws, _sub_seed(seed, 40)))
        report.extend(verify_coefficient_stability(_multiplicative(cfg.stability, c), cfg.times, cfg.draws, _sub_seed(seed, 41)))
        report.extend(
            cox_contrast(
                _multiplicative(cfg.collapsibility, c), cfg.cox_n, _sub_seed(seed, 42), t_max,
                exposure=cfg.exposure, survival_only=cfg.survival_only,
            )
        )
    report.details["seed"] = seed
    return report
