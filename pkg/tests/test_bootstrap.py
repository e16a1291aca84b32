import csv

import numpy as np
import pytest

from conftest import make_dataset
from dynpath.bootstrap import CURVES, bands_to_csv, bootstrap_bands, order_statistic_band
from dynpath.dpa import fit_dpa
from dynpath.errors import NoUsableEventTimes
from dynpath.simgen import default_trial_config, generate_trial
from test_dpa import WORKED


@pytest.fixture(scope="module")
def small():
    return generate_trial(default_trial_config(n=300), seed=5)


@pytest.fixture(scope="module")
def bands(small):
    return bootstrap_bands(small, B=40, seed=9, threads=1)


def test_order_statistic_indices():
    # B = 201, level .9: indices floor(200 * .05) = 10 and ceil(200 * .95) = 190
    samples = np.random.default_rng(0).permutation(201).astype(float)[:, None]
    lo, hi = order_statistic_band(samples, 0.9)
    assert (lo[0], hi[0]) == (10.0, 190.0)
    # B = 4, level .5: floor(.75) = 0 and ceil(2.25) = 3
    lo, hi = order_statistic_band(np.array([[3.0], [1.0], [4.0], [2.0]]), 0.5)
    assert (lo[0], hi[0]) == (1.0, 4.0)


def test_point_is_full_sample_fit(small, bands):
    point = fit_dpa(small)
    for c in CURVES:
        np.testing.assert_array_equal(bands[c].point, point.curve(c))
        np.testing.assert_array_equal(bands[c].grid, point.times)


def test_lower_not_above_upper(bands):
    for b in bands.values():
        assert np.all(b.lower <= b.upper)


@pytest.mark.parametrize("threads", [2, 8])
def test_threads_do_not_change_bands(small, bands, threads):
    assert bootstrap_bands(small, B=40, seed=9, threads=threads) == bands


def test_repeatable_and_seed_sensitive(small, bands):
    assert bootstrap_bands(small, B=40, seed=9) == bands
    assert bootstrap_bands(small, B=40, seed=10)["direct"] != bands["direct"]


def test_wider_level_contains_narrower(small):
    wide = bootstrap_bands(small, B=40, level=0.99, seed=3)
    narrow = bootstrap_bands(small, B=40, level=0.90, seed=3)
    for c in CURVES:
        assert np.all(wide[c].lower <= narrow[c].lower)
        assert np.all(wide[c].upper >= narrow[c].upper)


def test_samples_shape(small):
    bands, samples = bootstrap_bands(small, B=5, seed=1, return_samples=True)
    assert samples.shape == (5, 3, bands["direct"].grid.size)


@pytest.mark.parametrize("kw", [dict(B=1), dict(level=0.0), dict(level=1.0)])
def test_argument_errors(small, kw):
    with pytest.raises(ValueError):
        bootstrap_bands(small, **kw)


def test_too_many_discarded_replicates():
    # four subjects: most resamples lose one arm or every event
    with pytest.raises(NoUsableEventTimes):
        bootstrap_bands(make_dataset(WORKED), B=50, seed=0)


def test_csv_layout(tmp_path, bands):
    path = tmp_path / "b.csv"
    bands_to_csv(bands, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["time", "point", "lower", "upper", "curve_name"]
    n = bands["direct"].grid.size
    assert len(rows) == 1 + 3 * n
    assert [r[4] for r in rows[1::n]] == list(CURVES)
    assert float(rows[1][1]) == bands["direct"].point[0]
