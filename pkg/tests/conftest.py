import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dynpath.data import Dataset, Subject  # noqa: E402


def make_dataset(records, covariate_names=None):
    """Records are ``(treatment, baseline, followup, event, series)`` tuples."""
    subjects = [
        Subject(
            id=str(i + 1),
            treatment=tr,
            baseline=tuple(base),
            followup=fu,
            event=ev,
            mediators={"mediator": series} if series else {},
        )
        for i, (tr, base, fu, ev, series) in enumerate(records)
    ]
    return Dataset(subjects, covariate_names=covariate_names)


def random_dataset(rng, n, p=0, n_meas=3, tie_grid=None):
    """Small random trial with a single mediator measured at 0 and later times."""
    records = []
    for _ in range(n):
        fu = float(rng.uniform(0.1, 5.0)) if tie_grid is None else float(rng.choice(tie_grid))
        k = int(rng.integers(0, n_meas))
        extra = np.sort(rng.uniform(0.01, 5.0, k))
        times = [0.0] + [float(t) for t in extra if t < fu]
        times = sorted(set(times))
        series = [(t, float(rng.normal())) for t in times]
        records.append((float(rng.integers(0, 2)), rng.normal(size=p).tolist(), fu, bool(rng.random() < 0.7), series))
    if not any(r[3] for r in records):
        r = records[0]
        records[0] = (r[0], r[1], r[2], True, r[4])
    return make_dataset(records, [f"z{j + 1}" for j in range(p)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["numba", "numpy"])
def any_backend(request):
    from dynpath import _kernels

    with _kernels.backend(request.param):
        yield request.param


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is not None and acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.VERDICTS:
            terminalreporter.write_line(line)
