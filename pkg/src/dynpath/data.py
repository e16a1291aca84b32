"""Counting-process data model: subjects, risk sets and mediator lookups.

A :class:`Dataset` is stored column-wise (numpy arrays plus one ragged
:class:`MediatorTable` per mediator) because every estimator works on whole
risk sets at once. :class:`Subject` objects are materialized on demand.
"""

from __future__ import annotations

import bisect
import csv
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_MEDIATOR = "mediator"
TREATMENT = "treatment"

_FIXED_COLUMNS = ("id", "treatment", "med_time", "med_value", "followup", "event")
_OPTIONAL_COLUMNS = ("med_name",)


def _as_series(pairs) -> tuple[tuple[float, float], ...]:
    series = tuple((float(t), float(v)) for t, v in pairs)
    for (t0, _), (t1, _) in zip(series, series[1:]):
        if not t1 > t0:
            raise DataError(f"mediator times must be strictly increasing, got {t0} then {t1}")
    return series


@dataclass(frozen=True)
class Subject:
    """One trial participant.

    ``mediators`` maps a mediator name to its ``(time, value)`` measurements.
    The single-mediator case uses the name ``"mediator"``, exposed as
    :attr:`mediator_series`.
    """

    id: str
    treatment: float
    baseline: tuple[float, ...]
    followup: float
    event: bool
    mediators: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "treatment", float(self.treatment))
        object.__setattr__(self, "baseline", tuple(float(z) for z in self.baseline))
        object.__setattr__(self, "followup", float(self.followup))
        object.__setattr__(self, "event", bool(self.event))
        object.__setattr__(
            self, "mediators", {str(k): _as_series(v) for k, v in self.mediators.items()}
        )
        if not (self.followup > 0 and np.isfinite(self.followup)):
            raise DataError(f"subject {self.id}: followup must be positive, got {self.followup}")

    @property
    def mediator_series(self) -> tuple[tuple[float, float], ...]:
        return self.mediators.get(DEFAULT_MEDIATOR, ())


def locf(subject: Subject, t: float, mediator: str = DEFAULT_MEDIATOR) -> float | None:
    """Mediator value carried forward from the last measurement strictly before ``t``."""
    series = subject.mediators.get(mediator, ())
    k = bisect.bisect_left([s for s, _ in series], t)
    return series[k - 1][1] if k > 0 else None


@dataclass(frozen=True, eq=False)
class MediatorTable:
    """Ragged measurements for all subjects: subject ``i`` owns ``offsets[i]:offsets[i+1]``."""

    offsets: np.ndarray
    times: np.ndarray
    values: np.ndarray

    @classmethod
    def from_series(cls, series: Sequence[Sequence[tuple[float, float]]]) -> MediatorTable:
        counts = np.array([len(s) for s in series], dtype=np.int64)
        offsets = np.zeros(len(series) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        flat = [p for s in series for p in s]
        arr = np.array(flat, dtype=np.float64).reshape(-1, 2)
        return cls(offsets, arr[:, 0].copy(), arr[:, 1].copy())

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def series(self, i: int) -> tuple[tuple[float, float], ...]:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return tuple(zip(self.times[lo:hi].tolist(), self.values[lo:hi].tolist()))

    def first_times(self) -> np.ndarray:
        """Time of each subject's first measurement (``inf`` if none)."""
        counts = self.counts
        out = np.full(counts.shape[0], np.inf)
        have = counts > 0
        out[have] = self.times[self.offsets[:-1][have]]
        return out

    def take(self, idx: np.ndarray) -> MediatorTable:
        idx = np.asarray(idx, dtype=np.int64)
        counts = self.counts[idx]
        offsets = np.zeros(idx.shape[0] + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        # gather positions: start of each selected block plus a within-block ramp
        starts = np.repeat(self.offsets[:-1][idx], counts)
        ramp = np.arange(offsets[-1]) - np.repeat(offsets[:-1], counts)
        pos = starts + ramp
        return MediatorTable(offsets, self.times[pos], self.values[pos])

    def select(self, keep: np.ndarray) -> MediatorTable:
        """Keep the measurements flagged in the boolean array ``keep``."""
        keep = np.asarray(keep, dtype=bool)
        csum = np.concatenate([[0], np.cumsum(keep)])
        offsets = csum[self.offsets].astype(np.int64)
        return MediatorTable(offsets, self.times[keep], self.values[keep])


class Dataset:
    """Immutable collection of subjects in column form.

    Parameters
    ----------
    subjects : iterable of Subject
    covariate_names : sequence of str, optional
        Labels of the baseline covariates; defaults to ``z_1 .. z_p``.
    """

    def __init__(self, subjects: Iterable[Subject], covariate_names: Sequence[str] | None = None):
        subjects = tuple(subjects)
        if not subjects:
            raise DataError("a dataset needs at least one subject")
        p = len(subjects[0].baseline)
        if any(len(s.baseline) != p for s in subjects):
            raise DataError("all subjects must have the same number of baseline covariates")
        ids = [s.id for s in subjects]
        if len(set(ids)) != len(ids):
            raise DataError("subject ids must be unique")
        names = sorted({m for s in subjects for m in s.mediators})
        tables = {m: MediatorTable.from_series([s.mediators.get(m, ()) for s in subjects]) for m in names}
        self._init(
            np.array(ids, dtype=object),
            np.array([s.treatment for s in subjects], dtype=np.float64),
            np.array([s.baseline for s in subjects], dtype=np.float64).reshape(len(subjects), p),
            np.array([s.followup for s in subjects], dtype=np.float64),
            np.array([s.event for s in subjects], dtype=bool),
            tables,
            covariate_names,
        )
        self.__dict__["subjects"] = subjects

    def _init(self, ids, treatment, baseline, followup, event, mediators, covariate_names):
        p = baseline.shape[1]
        if covariate_names is None:
            covariate_names = [f"z_{j + 1}" for j in range(p)]
        covariate_names = tuple(str(c) for c in covariate_names)
        if len(covariate_names) != p:
            raise DataError(f"expected {p} covariate names, got {len(covariate_names)}")
        reserved = {TREATMENT, *mediators}
        clash = reserved.intersection(covariate_names)
        if clash or len(set(covariate_names)) != p:
            raise DataError(f"covariate names must be unique and distinct from {sorted(reserved)}")
        for a in (treatment, baseline, followup):
            a.setflags(write=False)
        self.ids = ids
        self.treatment = treatment
        self.baseline = baseline
        self.followup = followup
        self.event = event
        self.mediators = dict(mediators)
        self.covariate_names = covariate_names

    @classmethod
    def from_arrays(
        cls,
        ids,
        treatment,
        baseline,
        followup,
        event,
        mediators: Mapping[str, MediatorTable],
        covariate_names: Sequence[str] | None = None,
    ) -> Dataset:
        """Build directly from columns; ids need not be unique (bootstrap resamples)."""
        obj = cls.__new__(cls)
        treatment = np.array(treatment, dtype=np.float64)
        n = treatment.shape[0]
        baseline = np.array(baseline, dtype=np.float64).reshape(n, -1)
        followup = np.array(followup, dtype=np.float64)
        if np.any(~(followup > 0)):
            raise DataError("followup must be positive")
        obj._init(
            np.asarray(ids, dtype=object),
            treatment,
            baseline,
            followup,
            np.array(event, dtype=bool),
            mediators,
            covariate_names,
        )
        return obj

    @cached_property
    def subjects(self) -> tuple[Subject, ...]:
        return tuple(
            Subject(
                id=self.ids[i],
                treatment=self.treatment[i],
                baseline=tuple(self.baseline[i]),
                followup=self.followup[i],
                event=self.event[i],
                mediators={m: tab.series(i) for m, tab in self.mediators.items() if tab.counts[i]},
            )
            for i in range(self.n)
        )

    @property
    def n(self) -> int:
        return self.treatment.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def mediator_names(self) -> tuple[str, ...]:
        return tuple(self.mediators)

    def column(self, label: str) -> np.ndarray:
        """Time-fixed column by label: ``"treatment"`` or a baseline covariate."""
        if label == TREATMENT:
            return self.treatment
        try:
            return self.baseline[:, self.covariate_names.index(label)]
        except ValueError:
            raise KeyError(f"unknown covariate {label!r}") from None

    def take(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset.from_arrays(
            self.ids[idx],
            self.treatment[idx],
            self.baseline[idx],
            self.followup[idx],
            self.event[idx],
            {m: tab.take(idx) for m, tab in self.mediators.items()},
            self.covariate_names,
        )

    def replace(self, **changes) -> Dataset:
        parts = dict(
            ids=self.ids,
            treatment=self.treatment,
            baseline=self.baseline,
            followup=self.followup,
            event=self.event,
            mediators=self.mediators,
            covariate_names=self.covariate_names,
        )
        parts.update(changes)
        return Dataset.from_arrays(**parts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.covariate_names != other.covariate_names or self.mediator_names != other.mediator_names:
            return False
        same = (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.treatment, other.treatment)
            and np.array_equal(self.baseline, other.baseline)
            and np.array_equal(self.followup, other.followup)
            and np.array_equal(self.event, other.event)
        )
        return same and all(
            np.array_equal(a.offsets, b.offsets)
            and np.array_equal(a.times, b.times)
            and np.array_equal(a.values, b.values)
            for a, b in zip(self.mediators.values(), other.mediators.values())
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Dataset(n={self.n}, events={int(self.event.sum())}, "
            f"covariates={list(self.covariate_names)}, mediators={list(self.mediators)})"
        )


def event_times(ds: Dataset) -> np.ndarray:
    """Distinct observed event times in increasing order."""
    return np.unique(ds.followup[ds.event])


def at_risk(ds: Dataset, t: float) -> np.ndarray:
    return ds.followup >= t


def risk_set(ds: Dataset, t: float) -> list[Subject]:
    """Subjects still under observation at ``t`` (followup >= t)."""
    return [ds.subjects[i] for i in np.flatnonzero(at_risk(ds, t))]


def mediator_exclusions(ds: Dataset, mediators: Sequence[str]) -> np.ndarray:
    """Subjects lacking a measurement of some mediator before the first event time.

    Returns a boolean mask of excluded subjects. Such subjects cannot enter
    any design that contains the mediator.
    """
    times = event_times(ds)
    excluded = np.zeros(ds.n, dtype=bool)
    if not times.size:
        return excluded
    for m in mediators:
        excluded |= ~(ds.mediators[m].first_times() < times[0])
    if excluded.any():
        logger.info("excluding %d subject(s) with no %s measurement before t=%g",
                    int(excluded.sum()), "/".join(mediators), times[0])
    return excluded


# ---------------------------------------------------------------------------
# CSV long format


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` in long format, one row per mediator measurement.

    A ``med_name`` column is added only when the dataset holds more than one
    mediator (or a mediator not named ``"mediator"``).
    """
    names = list(ds.mediators)
    with_name = names not in ([], [DEFAULT_MEDIATOR])
    header = ["id", "treatment", *ds.covariate_names]
    header += ["med_name"] if with_name else []
    header += ["med_time", "med_value", "followup", "event"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n):
            head = [str(ds.ids[i]), _fmt(ds.treatment[i]), *(_fmt(z) for z in ds.baseline[i])]
            tail = [_fmt(ds.followup[i]), "1" if ds.event[i] else "0"]
            wrote = False
            for m in names:
                tab = ds.mediators[m]
                for j in range(tab.offsets[i], tab.offsets[i + 1]):
                    mid = [m] if with_name else []
                    w.writerow(head + mid + [_fmt(tab.times[j]), _fmt(tab.values[j])] + tail)
                    wrote = True
            if not wrote:
                w.writerow(head + ([""] if with_name else []) + ["", ""] + tail)


def _parse_float(value: str, what: str, line: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise DataError(f"line {line}: {what} is not a number: {value!r}") from None
    if not np.isfinite(x):
        raise DataError(f"line {line}: {what} must be finite")
    return x


def read_csv(path) -> Dataset:
    """Read a long-format CSV written by :func:`write_csv` or by hand."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        missing = [c for c in _FIXED_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {missing}")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names")
        col = {h: k for k, h in enumerate(header)}
        covariates = [h for h in header if h not in _FIXED_COLUMNS + _OPTIONAL_COLUMNS]
        rows: dict[str, dict] = {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            sid = row[col["id"]].strip()
            fixed = (
                _parse_float(row[col["treatment"]], "treatment", line),
                tuple(_parse_float(row[col[c]], c, line) for c in covariates),
                _parse_float(row[col["followup"]], "followup", line),
                row[col["event"]].strip(),
            )
            if fixed[3] not in ("0", "1", "true", "false", "True", "False"):
                raise DataError(f"line {line}: event must be 0/1, got {fixed[3]!r}")
            rec = rows.setdefault(sid, {"fixed": fixed, "meds": {}})
            if rec["fixed"] != fixed:
                raise DataError(f"line {line}: subject {sid} has inconsistent followup/event/covariates")
            mt, mv = row[col["med_time"]].strip(), row[col["med_value"]].strip()
            if mt == "" and mv == "":
                continue
            name = row[col["med_name"]].strip() if "med_name" in col else DEFAULT_MEDIATOR
            name = name or DEFAULT_MEDIATOR
            rec["meds"].setdefault(name, []).append(
                (_parse_float(mt, "med_time", line), _parse_float(mv, "med_value", line))
            )
    if not rows:
        raise DataError(f"{path}: no data rows")
    subjects = []
    for sid, rec in rows.items():
        treat, base, fu, ev = rec["fixed"]
        meds = {m: sorted(v) for m, v in rec["meds"].items()}
        subjects.append(Subject(sid, treat, base, fu, ev in ("1", "true", "True"), meds))
    return Dataset(subjects, covariates)
