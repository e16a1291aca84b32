import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from dynpath.collider import (
    ErrorSpec,
    SemSpec,
    VerifyConfig,
    _slope_gap,
    binned_mutual_information,
    default_verify_config,
    ols_with_se,
    permutation_null_mi,
    run_suite,
    sample_survivors,
    verify_collapsibility,
    verify_independence,
)
from dynpath.errors import DataError, InsufficientSurvivors, NegativeHazard

M = 100_000


@pytest.fixture(scope="module")
def cfg():
    return default_verify_config()


def test_time_zero_is_unconditional(cfg):
    x = sample_survivors(cfg.independence, 0.0, M, seed=1)
    assert x.shape == (M, 2)
    np.testing.assert_allclose(x.mean(0), 0.0, atol=4 / math.sqrt(M))
    np.testing.assert_allclose(x.var(0), 1.0, atol=4 * math.sqrt(2 / M))


def test_additive_survivor_moments_match_exponential_tilt(cfg):
    # Gaussian covariates tilted by exp(-A(t)'x): x2 | x1 keeps slope -0.6 and its intercept
    # drops by A2(t) = 0.05 t; x1 is shifted by -(A1(t) - 0.6 A2(t))
    spec = cfg.stability
    a1 = spec.weights[0].build()
    for t in (1.0, 5.0):
        x = sample_survivors(spec, t, M, seed=int(10 * t))
        coef, se = ols_with_se(x[:, 1], x[:, 0])
        assert abs(coef[0] - (1 - 0.05 * t)) < 4 * se[0]
        assert abs(coef[1] + 0.6) < 4 * se[1]
        shift = -(float(a1.integral(t)) - 0.6 * 0.05 * t)
        assert abs(x[:, 0].mean() - shift) < 4 / math.sqrt(M)


def _multiplicative_survivor_corr(t, beta, weights=(0.8, 0.8, 1.0)):
    # selection depends on s = w'x only; (x1, x2) given s is Gaussian, so
    # cov = E[cov | s] + c1 c2 Var_sel(s) with c_k = w_k / var(s)
    v = sum(w * w for w in weights)
    dens = lambda s, k: s**k * math.exp(-s * s / (2 * v)) * math.exp(-beta * t * math.exp(s))
    z = [quad(dens, -30, 30, args=(k,), epsabs=0, epsrel=1e-12, limit=400)[0] for k in range(3)]
    var_s = z[2] / z[0] - (z[1] / z[0]) ** 2
    c1, c2 = weights[0] / v, weights[1] / v
    cov = -weights[0] * weights[1] / v + c1 * c2 * var_s
    var1 = 1 - weights[0] ** 2 / v + c1 * c1 * var_s
    var2 = 1 - weights[1] ** 2 / v + c2 * c2 * var_s
    return cov / math.sqrt(var1 * var2)


def test_multiplicative_correlation_matches_quadrature(cfg):
    spec = cfg.contrast
    t = 5.0
    expected = _multiplicative_survivor_corr(t, spec.baseline)
    assert expected < -0.05
    x = sample_survivors(spec, t, M, seed=3)
    rho = np.corrcoef(x[:, 0], x[:, 1])[0, 1]
    assert abs(rho - expected) < 4 / math.sqrt(M)


def test_additive_independence_holds(cfg):
    rep = verify_independence(cfg.independence, 5.0, M, seed=4)
    assert rep.passed and len(rep.assertions) == 2


def test_multiplicative_independence_is_informational(cfg):
    rep = verify_independence(cfg.contrast, 5.0, 20_000, seed=4)
    assert all(a.informational for a in rep.assertions)
    assert not any(a.passed for a in rep.assertions)
    assert rep.passed


def test_mutual_information_detects_dependence():
    rng = np.random.default_rng(0)
    a = rng.normal(size=5000)
    b = a**2 + 0.5 * rng.normal(size=5000)
    null = permutation_null_mi(a, b, 99, seed=1)
    assert binned_mutual_information(a, b) > null.max()
    assert binned_mutual_information(a, rng.normal(size=5000)) < 0.05


def test_constant_survival_only_gives_zero_gap():
    rng = np.random.default_rng(2)
    x = np.column_stack([rng.normal(size=500), rng.normal(size=500), np.full(500, 3.0)])
    assert _slope_gap(x, 0, 1, 2) == 0.0


def test_collapsibility_additive(cfg):
    rep = verify_collapsibility(
        cfg.collapsibility, (2.0, 5.0), 50_000, seed=8, exposure="x1", outcome="x2", survival_only="u",
        hazard_reps=5, hazard_n=1500,
    )
    assert len(rep.assertions) == 4
    assert rep.passed


def test_collapsibility_rejects_linked_variable(cfg):
    linked = cfg.collapsibility.replace(coefficients=[[0, 0, 0], [0.7, 0, 0], [0.3, 0, 0]])
    with pytest.raises(DataError):
        verify_collapsibility(linked, (1.0,), 100, 0, exposure="x1", outcome="x2", survival_only="u")


def test_event_times_invert_cumulative_hazard(cfg):
    spec = cfg.stability
    rng = np.random.default_rng(5)
    x = spec.sample(rng, 200)
    u = rng.random(200)
    t = spec.event_times(x, u, 5.0)
    hit = np.isfinite(t)
    assert hit.any() and (~hit).any()
    np.testing.assert_allclose(spec.cumulative_hazard(x[hit], t[hit]), -np.log(u[hit]), rtol=1e-10)
    assert np.all(spec.cumulative_hazard(x[~hit], 5.0) < -np.log(u[~hit]))


@pytest.mark.parametrize(
    "changes",
    [
        dict(coefficients=[[0.0, 0.5], [0.0, 0.0]]),
        dict(form="weibull"),
        dict(names=["x1", "x1"]),
        dict(weights=[0.1]),
        dict(form="multiplicative"),  # spline weight is additive-only
    ],
)
def test_spec_validation(cfg, changes):
    with pytest.raises(DataError):
        cfg.stability.replace(**changes)


def test_error_spec_validation():
    with pytest.raises(DataError):
        ErrorSpec("cauchy")
    with pytest.raises(DataError):
        ErrorSpec("gaussian", -1.0)


def test_shifted_exponential_is_centered():
    e = ErrorSpec("shifted_exponential", 2.0).draw(np.random.default_rng(0), M)
    assert abs(e.mean()) < 4 * 2 / math.sqrt(M)
    assert e.min() >= -2.0


def test_insufficient_survivors(cfg):
    with pytest.raises(InsufficientSurvivors):
        sample_survivors(cfg.independence.replace(baseline=10.0), 5.0, 100, seed=0)


def test_negative_hazard_detected(cfg):
    with pytest.raises(NegativeHazard):
        sample_survivors(cfg.independence.replace(baseline=0.0), 1.0, 100, seed=0)


def test_sample_argument_errors(cfg):
    with pytest.raises(DataError):
        sample_survivors(cfg.independence, 1.0, 0, seed=0)
    with pytest.raises(DataError):
        sample_survivors(cfg.independence, -1.0, 10, seed=0)


@pytest.fixture(scope="module")
def small_cfg(cfg):
    d = cfg.to_dict()
    d.update(draws=4000, times=[1, 5], hazard_reps=3, hazard_n=600, cox_n=800)
    return VerifyConfig.from_dict(d)


def test_report_reproducible_and_records_seed(small_cfg, tmp_path):
    a = run_suite(small_cfg, "independence", seed=77)
    b = run_suite(small_cfg, "independence", seed=77)
    assert a.to_dict() == b.to_dict()
    a.to_json(tmp_path / "r.json")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["seed"] == 77 and d["details"]["config"]["seed"] == small_cfg.seed
    assert d["n_assertions"] == 4


def test_multiplicative_flag_makes_everything_informational(small_cfg):
    rep = run_suite(small_cfg, "stability", multiplicative=True)
    assert rep.assertions and all(a.informational for a in rep.assertions)


def test_all_suite_adds_informational_contrasts(small_cfg):
    rep = run_suite(small_cfg, "all")
    names = [a.name for a in rep.assertions if a.informational]
    assert any(n.startswith("cox[") for n in names)
    assert any("multiplicative" in n for n in names)


def test_unknown_suite(small_cfg):
    with pytest.raises(DataError):
        run_suite(small_cfg, "everything")


def test_config_round_trip(cfg):
    assert VerifyConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))).to_dict() == cfg.to_dict()
