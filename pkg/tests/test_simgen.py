import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from dynpath import _kernels
from dynpath.errors import DataError, NegativeHazard
from dynpath.hazard import eval_cumulative, fit_additive
from dynpath.simgen import (
    SimConfig,
    SplineSpec,
    generate_trial,
    default_trial_config,
    snapshot,
    trial_summary,
    true_curves,
)
from oracles import midpoint_integral

ZERO = SplineSpec((0, 5), (0.0, 0.0))


@pytest.fixture(scope="module")
def cfg():
    return default_trial_config()


@pytest.fixture(scope="module")
def trial(cfg):
    return generate_trial(cfg)


def test_reference_values_in_default(cfg):
    assert cfg.beta_med == SplineSpec((0, 1, 3, 5), (0.04, 0.03, 0.02, 0.02))
    assert cfg.beta_treat == SplineSpec((0, 0.2, 0.8, 1.1, 3.5, 5), (-0.3, -0.1, -0.6, -0.05, -0.05, -0.05))
    assert cfg.b21 == SplineSpec((0, 1, 2, 3, 4, 5), (-0.1, -3, -2.2, -3.3, -2.9, -2.9))
    assert (cfg.n, cfg.med_baseline_mean, cfg.med_baseline_sd) == (2000, 11.0, 1.5)
    assert cfg.noise_sd**2 == pytest.approx(0.05)
    assert cfg.delta == pytest.approx(1 / 52)


def test_baseline_hazard_margin(cfg):
    # hazard stays positive six standard deviations below/above the mediator mean in both arms
    t = cfg.grid
    sd = np.hypot(cfg.med_baseline_sd, cfg.noise_sd)
    for x1 in (0.0, 1.0):
        mean = cfg.med_baseline_mean + cfg.spline("b21")(t) * x1
        for x2 in (mean - 6 * sd, mean + 6 * sd):
            alpha = cfg.spline("beta0")(t) + cfg.spline("beta_treat")(t) * x1 + cfg.spline("beta_med")(t) * x2
            assert alpha.min() > 0


def test_censoring_fraction_near_target(cfg):
    fr = [trial_summary(generate_trial(cfg, seed=s), cfg.horizon)["censoring_fraction"] for s in range(5)]
    assert abs(np.mean(fr) - 0.13) <= 0.02


def test_deterministic(cfg, trial):
    assert generate_trial(cfg) == trial
    assert generate_trial(cfg, seed=cfg.seed + 1) != trial


def test_large_n_spans_chunks(cfg):
    ds = generate_trial(cfg, n=9000, seed=4)
    assert ds.n == 9000 and len(set(ds.ids)) == 9000


def test_backends_generate_same_trial(cfg):
    with _kernels.backend("numba"):
        a = generate_trial(cfg, n=3000)
    with _kernels.backend("numpy"):
        b = generate_trial(cfg, n=3000)
    assert a == b


def test_measurements_only_before_followup(trial):
    tab = trial.mediators["mediator"]
    owner = np.repeat(np.arange(trial.n), tab.counts)
    assert np.all(tab.times < trial.followup[owner])
    assert np.all(tab.first_times() == 0.0)


def test_null_arms_exchangeable():
    cfg = default_trial_config(beta_treat=ZERO, b21=ZERO)
    ok = 0
    for s in range(20):
        ds = generate_trial(cfg, seed=s)
        arm = ds.treatment == 1
        ok += ks_2samp(ds.followup[arm & ds.event], ds.followup[~arm & ds.event]).pvalue > 0.01
    assert ok >= 19


def test_marginal_survival():
    # the shipped baseline is only positive together with the mediator term, so use its own
    cfg = default_trial_config(beta0=SplineSpec((0, 1, 3, 5), (0.3, 0.2, 0.25, 0.15)), beta_treat=ZERO, beta_med=ZERO, censor_max=None)
    assert cfg.spline("beta0")(np.linspace(0, 5, 1001)).min() > 0
    ds = generate_trial(cfg, n=2000, seed=7)
    beta0 = cfg.spline("beta0")
    for t in (1.0, 2.5, 5.0):
        emp = np.mean(~(ds.event & (ds.followup <= t)))
        truth = np.exp(-float(beta0.integral(t)))
        assert abs(emp - truth) < 3 * np.sqrt(truth * (1 - truth) / ds.n)


def test_nelson_aalen_converges_with_step():
    # without a baseline spread the at-risk mean of the mediator stays 11 (fresh noise per step),
    # so the only gap between the estimate and the integral is the time discretization
    base = default_trial_config(beta_treat=ZERO, b21=ZERO, censor_max=None, med_baseline_sd=0.0)
    target = midpoint_integral(lambda s: base.spline("beta0")(s) + 11.0 * base.spline("beta_med")(s), 5.0, 10**6)
    gaps = []
    for delta in (0.5, 0.125):
        ds = generate_trial(base.replace(delta=delta), n=50000, seed=11)
        na = eval_cumulative(fit_additive(ds, []), "intercept", 5.0)
        gaps.append(abs(na - target))
    assert gaps[1] < gaps[0]


def test_negative_hazard_policy(cfg):
    bad = cfg.replace(beta0=SplineSpec((0, 5), (-1.0, -1.0)))
    with pytest.raises(NegativeHazard):
        generate_trial(bad, n=100)
    clamped = generate_trial(bad.replace(negative_hazard="clamp", beta_med=ZERO, beta_treat=ZERO), n=100)
    assert not clamped.event.any()


@pytest.mark.parametrize(
    "changes",
    [dict(n=0), dict(delta=0.3), dict(treat_prob=1.5), dict(noise_sd=-1.0), dict(censor_max=0.0), dict(negative_hazard="x")],
)
def test_config_validation(cfg, changes):
    with pytest.raises(DataError):
        cfg.replace(**changes)


def test_config_json_round_trip(cfg, tmp_path):
    cfg.to_json(tmp_path / "c.json")
    back = SimConfig.from_json(tmp_path / "c.json")
    assert back == cfg and back.digest() == cfg.digest()
    d = json.loads((tmp_path / "c.json").read_text())
    d["grid"]["delta"] = "1/52"
    d["distributions"] = {"noise_var": 0.05}
    alt = SimConfig.from_dict(d)
    assert alt.delta == cfg.delta and alt.noise_sd == pytest.approx(cfg.noise_sd)


def test_snapshot_all_grid_times_is_identity(cfg, trial):
    assert snapshot(trial, cfg.grid, cfg.horizon) == trial


def test_snapshot_baseline_only(trial):
    s = snapshot(trial, [0.0])
    assert np.all(s.mediators["mediator"].counts == 1)


def test_snapshot_respects_followup(cfg, trial):
    i = int(np.argmin(np.abs(trial.followup - 10 / 52)))
    sub = trial.take([i]).replace(followup=np.array([10 / 52]), event=np.array([False]))
    s = snapshot(sub, [0.0, 12 / 52])
    assert s.subjects[0].mediator_series == ((0.0, sub.subjects[0].mediator_series[0][1]),)


def test_snapshot_errors(trial):
    with pytest.raises(DataError):
        snapshot(trial, [])
    with pytest.raises(DataError):
        snapshot(trial, [1.0, 0.5])
    with pytest.raises(DataError):
        snapshot(trial, [0.0, 6.0], horizon=5.0)


@given(st.sets(st.integers(0, 260), min_size=1, max_size=6))
@settings(max_examples=15, deadline=None)
def test_snapshot_idempotent(weeks):
    cfg = default_trial_config(n=200)
    ds = generate_trial(cfg)
    keep = cfg.grid[sorted(weeks)]
    once = snapshot(ds, keep)
    assert snapshot(once, keep) == once


def test_truth_constant_direct(cfg):
    c = cfg.replace(beta_treat=SplineSpec((0, 5), (-0.2, -0.2)))
    tc = true_curves(c, [1, 2, 3, 4, 5])
    np.testing.assert_allclose(tc.direct, -0.2 * np.arange(1, 6), atol=1e-10)


def test_truth_zero_indirect(cfg):
    assert np.all(true_curves(cfg.replace(b21=ZERO)).indirect == 0.0)


def test_truth_against_riemann_oracle(cfg):
    tc = true_curves(cfg)
    bt, b21, bm = cfg.spline("beta_treat"), cfg.spline("b21"), cfg.spline("beta_med")
    assert tc.direct[-1] == pytest.approx(midpoint_integral(bt, 5.0, 10**6), abs=1e-6)
    assert tc.indirect[-1] == pytest.approx(midpoint_integral(lambda s: b21(s) * bm(s), 5.0, 10**6), abs=1e-6)
