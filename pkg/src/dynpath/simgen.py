"""Discrete-time trial simulator with a time-varying mediator process.

Time ``[0, horizon]`` is cut into steps of length ``delta``. On step ``h``
(the interval ``(t_h, t_h + delta]``) a subject still event-free has an event
with probability ``alpha(t_h) * delta`` where

    alpha(t) = beta0(t) + beta_treat(t) * x1 + beta_med(t) * x2(t)

and ``x2(t_h) = baseline + b21(t_h) * x1 + noise_h``. The event is recorded at
the right end of the step, so the analysis left limit ``x2(t-)`` is exactly the
value that drove the hazard. The mediator is measured at every grid point
``t_h`` strictly before the end of follow-up.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from typing import Sequence

import numpy as np

from . import _kernels
from .data import DEFAULT_MEDIATOR, Dataset, MediatorTable
from .errors import DataError, NegativeHazard
from .spline import SplineFunction, natural_spline

CHUNK = 4096
SPLINE_NAMES = ("beta0", "beta_treat", "beta_med", "b21")


@dataclass(frozen=True)
class SplineSpec:
    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def build(self) -> SplineFunction:
        return natural_spline(self.times, self.values)


def _delta(value) -> float:
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError):
            raise DataError(f"grid.delta: cannot parse {value!r}") from None
    return float(value)


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of the trial generator.

    ``censor_max`` is the upper end of the uniform censoring distribution;
    ``None`` disables random censoring. ``negative_hazard`` is ``"error"`` or
    ``"clamp"``.
    """

    beta0: SplineSpec
    beta_treat: SplineSpec
    beta_med: SplineSpec
    b21: SplineSpec
    delta: float = 1 / 52
    horizon: float = 5.0
    treat_prob: float = 0.5
    med_baseline_mean: float = 11.0
    med_baseline_sd: float = 1.5
    noise_sd: float = math.sqrt(0.05)
    censor_max: float | None = None
    negative_hazard: str = "error"
    n: int = 2000
    seed: int = 0
    _cache: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})
        self.validate()

    def validate(self) -> None:
        if not self.delta > 0:
            raise DataError("grid.delta must be positive")
        if not self.horizon > 0:
            raise DataError("grid.horizon must be positive")
        steps = self.horizon / self.delta
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise DataError(f"horizon {self.horizon} is not a multiple of delta {self.delta}")
        if not 0 <= self.treat_prob <= 1:
            raise DataError("treat_prob must lie in [0, 1]")
        if self.med_baseline_sd < 0 or self.noise_sd < 0:
            raise DataError("standard deviations must be non-negative")
        if self.censor_max is not None and not self.censor_max > 0:
            raise DataError("censor_max must be positive (or null for no censoring)")
        if self.negative_hazard not in ("error", "clamp"):
            raise DataError("negative_hazard must be 'error' or 'clamp'")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DataError(f"n must be a positive integer, got {self.n!r}")
        for name in SPLINE_NAMES:
            getattr(self, name).build()

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.delta))

    @property
    def grid(self) -> np.ndarray:
        """Grid points ``t_0 = 0, ..., t_H = horizon``."""
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def spline(self, name: str) -> SplineFunction:
        if name not in self._cache:
            self._cache[name] = getattr(self, name).build()
        return self._cache[name]

    def replace(self, **changes) -> SimConfig:
        return replace(self, **changes)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "grid": {"delta": self.delta, "horizon": self.horizon},
            "splines": {
                name: {"times": list(s.times), "values": list(s.values)}
                for name in SPLINE_NAMES
                for s in [getattr(self, name)]
            },
            "distributions": {
                "treat_prob": self.treat_prob,
                "med_baseline_mean": self.med_baseline_mean,
                "med_baseline_sd": self.med_baseline_sd,
                "noise_sd": self.noise_sd,
            },
            "censoring": {"censor_max": self.censor_max, "negative_hazard": self.negative_hazard},
            "n": self.n,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SimConfig:
        try:
            grid = d.get("grid", {})
            splines = d["splines"]
            dist = d.get("distributions", {})
            cens = d.get("censoring", {})
            kw = {name: SplineSpec(splines[name]["times"], splines[name]["values"]) for name in SPLINE_NAMES}
        except (KeyError, TypeError) as exc:
            raise DataError(f"config is missing {exc}") from None
        if "delta" in grid:
            kw["delta"] = _delta(grid["delta"])
        if "horizon" in grid:
            kw["horizon"] = float(grid["horizon"])
        for key in ("treat_prob", "med_baseline_mean", "med_baseline_sd", "noise_sd"):
            if key in dist:
                kw[key] = float(dist[key])
        if "noise_var" in dist:
            kw["noise_sd"] = math.sqrt(float(dist["noise_var"]))
        if "censor_max" in cens:
            kw["censor_max"] = None if cens["censor_max"] is None else float(cens["censor_max"])
        if "negative_hazard" in cens:
            kw["negative_hazard"] = str(cens["negative_hazard"])
        if "n" in d:
            kw["n"] = d["n"]
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        return cls(**kw)

    @classmethod
    def from_json(cls, path) -> SimConfig:
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON ({exc})") from None

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def default_trial_config(**changes) -> SimConfig:
    """The shipped default: reference spline values plus calibrated baseline and censoring."""
    text = resources.files("dynpath").joinpath("configs/trial_default.json").read_text(encoding="utf-8")
    cfg = SimConfig.from_dict(json.loads(text))
    return cfg.replace(**changes) if changes else cfg


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _simulate_chunk(cfg: SimConfig, m: int, rng: np.random.Generator, with_censoring: bool = True):
    H = cfg.n_steps
    t = cfg.grid[:H]
    treat = (rng.random(m) < cfg.treat_prob).astype(np.float64)
    base = rng.normal(cfg.med_baseline_mean, cfg.med_baseline_sd, m)
    noise = rng.normal(0.0, cfg.noise_sd, (m, H))
    u = rng.random((m, H))
    v = 1.0 - rng.random(m)  # in (0, 1]
    med = base[:, None] + cfg.spline("b21")(t)[None, :] * treat[:, None] + noise
    step, n_negative = _kernels.discrete_event_steps(
        treat, med, u, cfg.spline("beta0")(t), cfg.spline("beta_treat")(t), cfg.spline("beta_med")(t), cfg.delta
    )
    if n_negative and cfg.negative_hazard == "error":
        raise NegativeHazard(f"{n_negative} subject-step(s) with a negative hazard; adjust beta0 or use 'clamp'")
    event_time = np.where(step >= 0, cfg.grid[np.maximum(step, 0) + 1], np.inf)
    return treat, med, event_time, v, n_negative


def _assemble(cfg, treat, med, event_time, cens_u, ids_from=0) -> Dataset:
    H = cfg.n_steps
    censor = np.full(treat.shape, np.inf) if cfg.censor_max is None else cfg.censor_max * cens_u
    event = event_time <= np.minimum(censor, cfg.horizon)
    followup = np.where(event, event_time, np.minimum(censor, cfg.horizon))
    t = cfg.grid[:H]
    counts = np.searchsorted(t, followup, side="left")
    keep = np.arange(H)[None, :] < counts[:, None]
    offsets = np.zeros(treat.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    table = MediatorTable(offsets, np.broadcast_to(t, med.shape)[keep], med[keep])
    ids = np.array([str(i + 1) for i in range(ids_from, ids_from + treat.shape[0])], dtype=object)
    return Dataset.from_arrays(ids, treat, np.empty((treat.shape[0], 0)), followup, event, {DEFAULT_MEDIATOR: table})


def generate_trial(cfg: SimConfig, *, n: int | None = None, seed: int | None = None) -> Dataset:
    """Simulate one trial. Identical ``(cfg, n, seed)`` give identical datasets.

    Subjects are drawn in fixed blocks of ``CHUNK`` with one random stream per
    block derived from the seed, so memory stays bounded for large ``n``.
    """
    n = cfg.n if n is None else n
    seed = cfg.seed if seed is None else seed
    if n < 1:
        raise DataError("n must be positive")
    parts = []
    for c, start in enumerate(range(0, n, CHUNK)):
        m = min(CHUNK, n - start)
        treat, med, event_time, v, _ = _simulate_chunk(cfg, m, _chunk_rng(seed, c))
        parts.append((treat, med, event_time, v))
    if len(parts) == 1:
        return _assemble(cfg, *parts[0])
    treat, med, event_time, v = (np.concatenate(x) for x in zip(*parts))
    return _assemble(cfg, treat, med, event_time, v)


def trial_summary(ds: Dataset, horizon: float) -> dict:
    """Event, random-censoring and end-of-study fractions."""
    n = ds.n
    admin = (~ds.event) & (ds.followup >= horizon)
    censored = (~ds.event) & (ds.followup < horizon)
    return {
        "n": n,
        "events": int(ds.event.sum()),
        "censoring_fraction": float(censored.sum() / n),
        "administrative_fraction": float(admin.sum() / n),
        "event_fraction": float(ds.event.sum() / n),
    }


def censoring_fraction(ds: Dataset, horizon: float) -> float:
    """Share of subjects lost to random censoring before the end of study."""
    return trial_summary(ds, horizon)["censoring_fraction"]


def calibrate_censor_max(
    cfg: SimConfig,
    target: float = 0.13,
    pilot: int = 1_000_000,
    seed: int = 12345,
    tol: float = 1e-6,
) -> float:
    """Uniform censoring bound giving a ``target`` random-censoring fraction.

    Event times of a ``pilot``-subject trial are simulated once; the censoring
    fraction is then a monotone function of ``censor_max`` over fixed uniforms,
    solved by bisection.
    """
    ends, vs = [], []
    for c, start in enumerate(range(0, pilot, CHUNK)):
        m = min(CHUNK, pilot - start)
        _, _, event_time, v, _ = _simulate_chunk(cfg, m, _chunk_rng(seed, c))
        ends.append(np.minimum(event_time, cfg.horizon))
        vs.append(v)
    end = np.concatenate(ends)
    v = np.concatenate(vs)

    def frac(cmax):
        return np.mean(cmax * v < end)

    lo, hi = 1e-3, 1.0
    while frac(hi) > target:
        hi *= 2.0
        if hi > 1e9:
            raise DataError("cannot reach the target censoring fraction")
    if frac(lo) < target:
        raise DataError("target censoring fraction is unreachable")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if frac(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def snapshot(ds: Dataset, keep_times: Sequence[float], horizon: float | None = None, atol: float = 1e-9) -> Dataset:
    """Keep only mediator measurements taken at ``keep_times`` (within ``atol``).

    A measurement survives only if the subject was still under follow-up,
    i.e. its time is strictly below the subject's followup.
    """
    keep_times = np.asarray(keep_times, dtype=np.float64).ravel()
    if keep_times.size == 0:
        raise DataError("keep_times is empty")
    if np.any(np.diff(keep_times) < 0):
        raise DataError("keep_times must be sorted")
    if keep_times[0] < 0 or (horizon is not None and keep_times[-1] > horizon + atol):
        raise DataError(f"keep_times must lie within [0, {horizon}]")
    new = {}
    for name, tab in ds.mediators.items():
        k = np.searchsorted(keep_times, tab.times)
        below = keep_times[np.clip(k - 1, 0, keep_times.size - 1)]
        above = keep_times[np.clip(k, 0, keep_times.size - 1)]
        near = np.minimum(np.abs(tab.times - below), np.abs(tab.times - above))
        owner = np.repeat(np.arange(ds.n), tab.counts)
        keep = (near <= atol) & (tab.times < ds.followup[owner])
        new[name] = tab.select(keep)
    return ds.replace(mediators=new)


@dataclass(frozen=True, eq=False)
class TruthCurves:
    grid: np.ndarray
    direct: np.ndarray
    indirect: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.direct + self.indirect


def true_curves(cfg: SimConfig, grid: Sequence[float] | None = None) -> TruthCurves:
    """Cumulative direct and indirect effects implied by the generator's splines.

    direct(t) = int_0^t beta_treat uses the closed-form spline integral.
    indirect(t) = int_0^t b21 * beta_med integrates a piecewise polynomial of
    degree six, so four-point Gauss-Legendre between merged knots is exact.
    """
    grid = cfg.grid if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise DataError("grid must be non-empty, increasing and non-negative")
    b21, bm = cfg.spline("b21"), cfg.spline("beta_med")
    direct = np.asarray(cfg.spline("beta_treat").integral(grid), dtype=np.float64)
    knots = np.concatenate([[0.0], grid, b21.knots, bm.knots])
    nodes = np.unique(knots[(knots >= 0) & (knots <= grid[-1])])
    x, w = np.polynomial.legendre.leggauss(4)
    mid, half = (nodes[1:] + nodes[:-1]) / 2, np.diff(nodes) / 2
    pts = mid[:, None] + half[:, None] * x[None, :]
    pieces = half * ((b21(pts) * bm(pts)) @ w)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    indirect = cum[np.searchsorted(nodes, grid)]
    return TruthCurves(grid, direct, indirect)
