"""Derive the baseline hazard spline and the censoring bound, then write the default config.

1. ``beta0``: a natural spline on a quarter-year knot grid, raised until the
   additive hazard stays at least ``MARGIN`` above zero for mediator values
   within six standard deviations of their mean, in both arms.
2. ``censor_max``: uniform censoring bound giving a 13% random-censoring
   fraction on a one-million-subject pilot trial.

Run from the repository root::

    python scripts/calibrate_default.py
"""

import json
import math
from pathlib import Path

import numpy as np

from dynpath.simgen import SimConfig, SplineSpec, calibrate_censor_max
from dynpath.spline import natural_spline

OUT = Path(__file__).resolve().parents[1] / "src" / "dynpath" / "configs" / "trial_default.json"

MARGIN = 0.01
N_SD = 6.0

BETA_MED = SplineSpec((0, 1, 3, 5), (0.04, 0.03, 0.02, 0.02))
BETA_TREAT = SplineSpec((0, 0.2, 0.8, 1.1, 3.5, 5), (-0.3, -0.1, -0.6, -0.05, -0.05, -0.05))
B21 = SplineSpec((0, 1, 2, 3, 4, 5), (-0.1, -3, -2.2, -3.3, -2.9, -2.9))


def requirement(s, base_mean=11.0, base_sd=1.5, noise_sd=math.sqrt(0.05)):
    """Smallest beta0(s) keeping the hazard non-negative over the +-6 sd mediator band."""
    bm, bt, b21 = BETA_MED.build(), BETA_TREAT.build(), B21.build()
    sd = math.hypot(base_sd, noise_sd)
    need = np.full_like(s, -np.inf)
    for x1 in (0.0, 1.0):
        mean = base_mean + b21(s) * x1
        low = np.minimum(bm(s) * (mean - N_SD * sd), bm(s) * (mean + N_SD * sd))
        need = np.maximum(need, -(bt(s) * x1 + low))
    return need


def calibrate_beta0():
    knots = np.arange(0, 5.0001, 0.25)
    fine = np.linspace(0, 5, 20001)
    need = requirement(fine) + MARGIN
    values = np.array([need[np.abs(fine - k) <= 0.125].max() for k in knots])
    values = np.maximum(values, MARGIN)
    for _ in range(200):
        gap = need - natural_spline(knots, values)(fine)
        if gap.max() <= 0:
            break
        j = np.argmin(np.abs(knots - fine[gap.argmax()]))
        values[j] += gap.max() + 1e-4
    else:
        raise RuntimeError("beta0 calibration did not converge")
    return SplineSpec(tuple(knots.tolist()), tuple(np.round(values, 4).tolist()))


def main():
    beta0 = calibrate_beta0()
    fine = np.linspace(0, 5, 20001)
    slack = beta0.build()(fine) - requirement(fine)
    print("beta0 knots :", beta0.times)
    print("beta0 values:", beta0.values)
    print(f"min slack over [0, 5]: {slack.min():.4f}")
    cfg = SimConfig(beta0=beta0, beta_treat=BETA_TREAT, beta_med=BETA_MED, b21=B21, n=2000, seed=20150201)
    cmax = calibrate_censor_max(cfg, target=0.13, pilot=1_000_000)
    print(f"censor_max  : {cmax:.6f}")
    cfg = cfg.replace(censor_max=round(cmax, 6))
    cfg.to_json(OUT)
    print("wrote", OUT)
    print(json.dumps(cfg.to_dict()["censoring"]))


if __name__ == "__main__":
    main()
