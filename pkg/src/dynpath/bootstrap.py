"""Subject-level nonparametric bootstrap bands for DPA effect curves."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import DEFAULT_MEDIATOR, TREATMENT, Dataset
from .dpa import DpaResult, fit_dpa
from .errors import NoUsableEventTimes
from .hazard import step_eval

logger = logging.getLogger(__name__)

CURVES = ("direct", "indirect", "total")
MAX_DISCARD = 0.2


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("DYNPATH_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class BandSet:
    """Pointwise percentile band for one curve on a fixed time grid."""

    curve: str
    grid: np.ndarray
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    B: int
    level: float
    seed: int
    n_discarded: int = 0

    def __eq__(self, other):
        if not isinstance(other, BandSet):
            return NotImplemented
        return (
            (self.curve, self.B, self.level, self.seed, self.n_discarded)
            == (other.curve, other.B, other.level, other.seed, other.n_discarded)
            and all(
                np.array_equal(getattr(self, a), getattr(other, a), equal_nan=True)
                for a in ("grid", "point", "lower", "upper")
            )
        )

    __hash__ = None


def replicate_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Stream for replicate ``index``; independent of execution order."""
    return np.random.SeedSequence(seed, spawn_key=(index,))


def _replicate(ds, grid, index, seed, fit_kw):
    rng = np.random.default_rng(replicate_seed(seed, index))
    idx = rng.integers(0, ds.n, ds.n)
    try:
        r = fit_dpa(ds.take(idx), **fit_kw)
    except NoUsableEventTimes:
        logger.info("bootstrap replicate %d discarded: no usable event times", index)
        return None
    return np.stack([step_eval(r.times, r.curve(c), grid) for c in CURVES])


def order_statistic_band(samples: np.ndarray, level: float):
    """Lower/upper order statistics at floor/ceil of ``(B-1)(1 -+ level)/2``."""
    B = samples.shape[0]
    s = np.sort(samples, axis=0)
    # round first so that e.g. 200 * (1 - 0.9) / 2 lands on 10, not 9.999...
    lo = math.floor(round((B - 1) * (1.0 - level) / 2.0, 9))
    hi = math.ceil(round((B - 1) * (1.0 + level) / 2.0, 9))
    return s[lo], s[hi]


def bootstrap_bands(
    ds: Dataset,
    B: int = 200,
    level: float = 0.95,
    seed: int = 0,
    *,
    treatment: str = TREATMENT,
    mediator: str = DEFAULT_MEDIATOR,
    adjust: Sequence[str] = (),
    threads: int | None = None,
    point: DpaResult | None = None,
    return_samples: bool = False,
):
    """Percentile bands for the direct, indirect and total curves.

    Subjects are resampled with replacement ``B`` times and each resample is
    refitted. Replicate curves are read off as step functions on the event
    times of the original fit. Results do not depend on ``threads``.

    Returns
    -------
    dict
        ``{"direct": BandSet, "indirect": BandSet, "total": BandSet}``; with
        ``return_samples=True`` also the ``(B_used, 3, n_times)`` replicate array.
    """
    if B < 2:
        raise ValueError("B must be at least 2")
    if not 0 < level < 1:
        raise ValueError("level must lie strictly between 0 and 1")
    fit_kw = dict(treatment=treatment, mediator=mediator, adjust=tuple(adjust))
    if point is None:
        point = fit_dpa(ds, **fit_kw)
    grid = point.times
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        reps = [_replicate(ds, grid, i, seed, fit_kw) for i in range(B)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(lambda i: _replicate(ds, grid, i, seed, fit_kw), range(B)))
    kept = [r for r in reps if r is not None]
    n_discarded = B - len(kept)
    if n_discarded > MAX_DISCARD * B:
        raise NoUsableEventTimes(f"{n_discarded} of {B} bootstrap replicates had no usable event times")
    if n_discarded:
        logger.warning("%d of %d bootstrap replicates discarded", n_discarded, B)
    samples = np.stack(kept)
    bands = {}
    for j, name in enumerate(CURVES):
        lower, upper = order_statistic_band(samples[:, j, :], level)
        bands[name] = BandSet(name, grid, point.curve(name), lower, upper, B, level, seed, n_discarded)
    return (bands, samples) if return_samples else bands


def bands_to_csv(bands: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "point", "lower", "upper", "curve_name"])
        for name, b in bands.items():
            for k in range(b.grid.size):
                w.writerow([repr(float(b.grid[k])), repr(float(b.point[k])),
                            repr(float(b.lower[k])), repr(float(b.upper[k])), name])
