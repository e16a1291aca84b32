"""Dynamic path analysis for survival outcomes with time-dependent mediators."""

from importlib.metadata import PackageNotFoundError, version

from .bootstrap import BandSet, bootstrap_bands
from .data import Dataset, Subject, at_risk, event_times, locf, read_csv, risk_set, write_csv
from .dpa import (
    DpaResult,
    PathSpec,
    fit_dpa,
    path_effect,
    proportion_mediated,
    total_decomposition,
)
from .errors import (
    DataError,
    DynpathError,
    InsufficientSurvivors,
    NegativeHazard,
    NoUsableEventTimes,
    RankDeficient,
)
from .hazard import CumulativeCurve, eval_cumulative, fit_additive
from .regress import ols, rank_check, solve_normal
from .simgen import SimConfig, default_trial_config, generate_trial, snapshot, true_curves
from .spline import SplineFunction, natural_spline

try:
    __version__ = version("dynpath")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0+unknown"

__all__ = [
    "BandSet",
    "CumulativeCurve",
    "DataError",
    "Dataset",
    "DpaResult",
    "DynpathError",
    "InsufficientSurvivors",
    "NegativeHazard",
    "NoUsableEventTimes",
    "PathSpec",
    "RankDeficient",
    "SimConfig",
    "SplineFunction",
    "Subject",
    "at_risk",
    "bootstrap_bands",
    "eval_cumulative",
    "event_times",
    "fit_additive",
    "fit_dpa",
    "generate_trial",
    "locf",
    "natural_spline",
    "ols",
    "default_trial_config",
    "path_effect",
    "proportion_mediated",
    "rank_check",
    "read_csv",
    "risk_set",
    "snapshot",
    "solve_normal",
    "total_decomposition",
    "true_curves",
    "write_csv",
]
