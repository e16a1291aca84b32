"""Time the numba kernels against the pure-numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--n 2000] [--repeat 5]``

Each kernel runs once untimed per backend (JIT compile or cache load), then
``repeat`` timed runs; the table reports the best time and the speedup. The
end-to-end rows time a full trial simulation and a full effect fit.
"""

import argparse
import time

import numpy as np

from dynpath import _kernels
from dynpath.dpa import fit_dpa
from dynpath.simgen import default_trial_config, generate_trial


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(n, rng):
    cfg = default_trial_config(n=n)
    ds = generate_trial(cfg)
    tab = ds.mediators["mediator"]
    event_times = np.unique(ds.followup[ds.event])
    offsets = np.concatenate([[0], np.cumsum(tab.counts)])
    meds = _kernels.locf_matrix(event_times, offsets, tab.times, tab.values)[None]
    static = np.column_stack([np.ones(ds.n), ds.treatment])
    gram, rhs, _ = _kernels.cross_products(static, meds, ds.followup, ds.event, event_times)
    H = cfg.n_steps
    treat = rng.integers(0, 2, n).astype(float)
    med = rng.normal(11.0, 1.5, (n, H))
    u = rng.random((n, H))
    grid = cfg.grid[:-1]
    b0, bt, bm = (cfg.spline(k)(grid) for k in ("beta0", "beta_treat", "beta_med"))
    return {
        "locf_matrix": lambda: _kernels.locf_matrix(event_times, offsets, tab.times, tab.values),
        "cross_products": lambda: _kernels.cross_products(static, meds, ds.followup, ds.event, event_times),
        "ldl_solve_batch": lambda: _kernels.ldl_solve_batch(gram, rhs, 1e-10),
        "discrete_event_steps": lambda: _kernels.discrete_event_steps(treat, med, u, b0, bt, bm, cfg.delta),
        "generate_trial (end to end)": lambda: generate_trial(cfg),
        "fit_dpa (end to end)": lambda: fit_dpa(ds),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="subjects per trial")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    available = [b for b in ("numba", "numpy") if b in _kernels.BACKENDS]
    rows = {}
    for name in available:
        with _kernels.backend(name):
            for label, fn in workloads(args.n, np.random.default_rng(0)).items():
                rows.setdefault(label, {})[name] = best_of(fn, args.repeat)
    header = f"{'kernel':<30}" + "".join(f"{b + ' [ms]':>14}" for b in available) + f"{'speedup':>10}"
    print(f"n = {args.n}, best of {args.repeat}")
    print(header)
    print("-" * len(header))
    for label, t in rows.items():
        cells = "".join(f"{1e3 * t[b]:>14.2f}" for b in available)
        speed = f"{t['numpy'] / t['numba']:>9.1f}x" if len(available) == 2 else ""
        print(f"{label:<30}{cells}{speed}")


if __name__ == "__main__":
    main()
