"""Command-line interface: ``dynpath simulate | fit | study | verify | rerun``.

Exit codes: 0 success, 1 verification assertions failed, 2 usage or
validation error, 3 insufficient data, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bootstrap import bands_to_csv, bootstrap_bands, default_threads
from .collider import SUITES, VerifyConfig, default_verify_config, run_suite
from .data import DEFAULT_MEDIATOR, TREATMENT, read_csv, write_csv
from .dpa import fit_dpa
from .errors import DataError, InsufficientSurvivors, NegativeHazard, NoUsableEventTimes, RankDeficient
from .simgen import SimConfig, default_trial_config, generate_trial, trial_summary
from .study import ALL, default_scenarios, run_study

logger = logging.getLogger("dynpath")

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4


class _Counter(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.count = 0

    def emit(self, record):
        self.count += 1


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class RunManifest(dict):
    """JSON record of one invocation, sufficient to rerun it."""

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _manifest(command, argv, cfg_dict, seed, inputs, outputs, started, counters) -> RunManifest:
    return RunManifest(
        command=command,
        argv=list(argv),
        cwd=os.getcwd(),
        config_hash=config_hash(cfg_dict) if cfg_dict is not None else None,
        seed=seed,
        inputs={str(p): _sha256_file(p) for p in inputs},
        outputs={str(p): _sha256_file(p) for p in outputs},
        wall_time=round(time.perf_counter() - started, 6),
        counters=counters,
        version=__version__,
    )


def _parse_time(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise DataError(f"cannot parse time {text!r}") from None


def parse_scenario(text: str):
    """``all``, ``baseline+wk12`` or ``name=t1,t2,...`` (times in years; fractions allowed)."""
    builtin = default_scenarios()
    if text in builtin:
        return text, builtin[text]
    if "=" not in text:
        raise DataError(f"unknown scenario {text!r}; use 'all', 'baseline+wk12' or name=t1,t2,...")
    name, times = text.split("=", 1)
    if not name or name == ALL:
        raise DataError(f"invalid scenario name in {text!r}")
    return name, tuple(_parse_time(t) for t in times.split(",") if t.strip())


def _labels(text: str | None) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip()) if text else ()


# ---------------------------------------------------------------- commands


def cmd_simulate(args, argv, counter):
    started = time.perf_counter()
    cfg = SimConfig.from_json(args.config) if args.config else default_trial_config()
    changes = {}
    if args.n is not None:
        changes["n"] = args.n
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        cfg = cfg.replace(**changes)
    ds = generate_trial(cfg)
    write_csv(ds, args.out)
    summary = trial_summary(ds, cfg.horizon)
    print(
        f"wrote {ds.n} subjects to {args.out}: {summary['events']} events, "
        f"censoring fraction {summary['censoring_fraction']:.3f}"
    )
    counters = {"warnings": counter.count, **summary}
    inputs = [args.config] if args.config else []
    return _manifest("simulate", argv, cfg.to_dict(), cfg.seed, inputs, [args.out], started, counters), args.out


def cmd_fit(args, argv, counter):
    started = time.perf_counter()
    ds = read_csv(args.data)
    adjust = _labels(args.adjust)
    result = fit_dpa(ds, treatment=args.treatment, mediator=args.mediator, adjust=adjust)
    outputs = [args.out]
    extra = {}
    fit_cfg = {"treatment": args.treatment, "mediator": args.mediator, "adjust": list(adjust)}
    if args.bootstrap:
        bands = bootstrap_bands(
            ds, B=args.bootstrap, level=args.level, seed=args.seed,
            treatment=args.treatment, mediator=args.mediator, adjust=adjust,
            threads=args.threads, point=result,
        )
        for name, b in bands.items():
            extra[f"{name}_lower"] = b.lower
            extra[f"{name}_upper"] = b.upper
        bands_path = str(Path(args.out).with_suffix("")) + "_bands.csv"
        bands_to_csv(bands, bands_path)
        outputs.append(bands_path)
        fit_cfg.update(bootstrap=args.bootstrap, level=args.level)
    result.to_csv(args.out, extra_columns=extra)
    print(f"fitted {result.times.size} event times ({result.n_skipped} skipped); wrote {', '.join(outputs)}")
    counters = {
        "warnings": counter.count,
        "event_times": int(result.times.size),
        "skipped": result.n_skipped,
        "excluded": result.n_excluded,
    }
    seed = args.seed if args.bootstrap else None
    return _manifest("fit", argv, fit_cfg, seed, [args.data], outputs, started, counters), args.out


def cmd_study(args, argv, counter):
    started = time.perf_counter()
    cfg = SimConfig.from_json(args.config) if args.config else default_trial_config()
    if args.n is not None:
        cfg = cfg.replace(n=args.n)
    scenarios = dict(parse_scenario(s) for s in (args.scenario or [ALL, "baseline+wk12"]))
    seed = cfg.seed if args.seed is None else args.seed
    result = run_study(cfg, args.reps, scenarios, seed=seed, threads=args.threads)
    outputs = result.write(args.out_dir)
    skipped = {s: int(v.sum()) for s, v in result.skipped.items()}
    print(f"{args.reps} replication(s) x {len(scenarios)} scenario(s); wrote {len(outputs)} files to {args.out_dir}")
    counters = {"warnings": counter.count, "skipped": skipped, "reps": args.reps}
    cfg_dict = {"sim": cfg.to_dict(), "scenarios": {k: v and list(v) for k, v in scenarios.items()}}
    inputs = [args.config] if args.config else []
    return _manifest("study", argv, cfg_dict, seed, inputs, outputs, started, counters), os.path.join(args.out_dir, "study")


def cmd_verify(args, argv, counter):
    started = time.perf_counter()
    cfg = VerifyConfig.from_json(args.config) if args.config else default_verify_config()
    if args.draws is not None:
        cfg = VerifyConfig.from_dict({**cfg.to_dict(), "draws": args.draws})
    report = run_suite(cfg, args.suite, args.seed, multiplicative=args.multiplicative)
    report.to_json(args.out)
    d = report.to_dict()
    print(f"suite {args.suite}: {d['n_assertions'] - d['n_failed']}/{d['n_assertions']} assertions passed; report {args.out}")
    counters = {"warnings": counter.count, "assertions": d["n_assertions"], "failed": d["n_failed"]}
    inputs = [args.config] if args.config else []
    manifest = _manifest("verify", argv, cfg.to_dict(), report.seed, inputs, [args.out], started, counters)
    manifest["passed"] = report.passed
    return manifest, args.out


def rerun_manifest(path) -> int:
    """Re-execute the command recorded in a manifest from its working directory."""
    with open(path, encoding="utf-8") as fh:
        m = json.load(fh)
    cwd = os.getcwd()
    try:
        os.chdir(m.get("cwd", cwd))
        return main(m["argv"])
    finally:
        os.chdir(cwd)


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DataError(message)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dynpath", description="Dynamic path analysis for survival data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, manifest=True):
        sp.add_argument("--threads", type=_positive_int, default=default_threads(),
                        help="worker threads (default: $DYNPATH_THREADS or 1)")
        if manifest:
            sp.add_argument("--manifest", help="manifest path (default: next to the main output)")

    s = sub.add_parser("simulate", help="simulate a trial and write it as CSV")
    s.add_argument("--config", help="generator config JSON (default: shipped default)")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    common(s)

    f = sub.add_parser("fit", help="fit direct/indirect/total effect curves")
    f.add_argument("--data", required=True)
    f.add_argument("--treatment", default=TREATMENT)
    f.add_argument("--mediator", default=DEFAULT_MEDIATOR)
    f.add_argument("--adjust", help="comma-separated baseline covariates")
    f.add_argument("--out", required=True)
    f.add_argument("--bootstrap", type=int, default=0, metavar="B", help="bootstrap replicates (0 = none)")
    f.add_argument("--level", type=float, default=0.95)
    f.add_argument("--seed", type=int, default=0)
    common(f)

    st = sub.add_parser("study", help="replicated simulation study over measurement scenarios")
    st.add_argument("--config")
    st.add_argument("--scenario", action="append",
                    help="'all', 'baseline+wk12' or name=t1,t2,... (repeatable; default: all and baseline+wk12)")
    st.add_argument("--reps", type=int, default=100)
    st.add_argument("--n", type=int)
    st.add_argument("--seed", type=int)
    st.add_argument("--out-dir", required=True)
    common(st)

    v = sub.add_parser("verify", help="Monte-Carlo survival-selection checks")
    v.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}")
    v.add_argument("--config")
    v.add_argument("--seed", type=int)
    v.add_argument("--draws", type=int)
    v.add_argument("--multiplicative", action="store_true", help="run under the multiplicative contrast (informational)")
    v.add_argument("--out", required=True)
    common(v)

    r = sub.add_parser("rerun", help="re-execute the command recorded in a manifest")
    r.add_argument("manifest")
    return p


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "study": cmd_study, "verify": cmd_verify}


def _validate(args):
    if args.command == "fit" and args.bootstrap:
        if args.bootstrap < 2:
            raise DataError("--bootstrap must be at least 2")
        if not 0 < args.level < 1:
            raise DataError("--level must lie strictly between 0 and 1")
    if args.command == "verify" and args.suite not in SUITES:
        raise DataError(f"unknown suite {args.suite!r}; expected one of {', '.join(SUITES)}")
    if args.command == "study" and args.reps < 1:
        raise DataError("--reps must be positive")
    if args.command in ("simulate", "study") and args.n is not None and args.n < 1:
        raise DataError(f"n must be a positive integer, got {args.n}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    counter = _Counter()
    root = logging.getLogger("dynpath")
    root.addHandler(counter)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "rerun":
            return rerun_manifest(args.manifest)
        _validate(args)
        manifest, main_out = COMMANDS[args.command](args, argv, counter)
        manifest.write(args.manifest or f"{main_out}.manifest.json")
        if args.command == "verify" and not manifest["passed"]:
            return EXIT_FAILED
        return EXIT_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (DataError, KeyError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"dynpath: error: {_message(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except (NoUsableEventTimes, InsufficientSurvivors) as exc:
        print(f"dynpath: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (RankDeficient, NegativeHazard, FloatingPointError, ArithmeticError) as exc:
        print(f"dynpath: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        root.removeHandler(counter)


def _message(exc) -> str:
    return exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
