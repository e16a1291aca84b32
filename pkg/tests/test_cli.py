import csv
import hashlib
import json

import pytest

from dynpath.cli import config_hash, main, parse_scenario
from dynpath.collider import default_verify_config
from dynpath.errors import DataError
from dynpath.simgen import SplineSpec, default_trial_config


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def trial_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim") / "trial.csv"
    assert main(["simulate", "--n", "300", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_simulate_is_byte_identical(tmp_path, trial_csv):
    other = tmp_path / "again.csv"
    assert main(["simulate", "--n", "300", "--seed", "3", "--out", str(other)]) == 0
    assert other.read_bytes() == trial_csv.read_bytes()


def test_simulate_manifest(trial_csv):
    m = json.loads(open(f"{trial_csv}.manifest.json").read())
    assert m["command"] == "simulate" and m["seed"] == 3
    assert m["config_hash"] == config_hash(default_trial_config(n=300, seed=3).to_dict())
    assert list(m["outputs"]) == [str(trial_csv)]
    assert m["counters"]["n"] == 300 and m["counters"]["warnings"] == 0


def test_fit_writes_curves(tmp_path, trial_csv):
    out = tmp_path / "fit.csv"
    assert main(["fit", "--data", str(trial_csv), "--out", str(out)]) == 0
    header = rows(out)[0]
    assert header[:1] == ["time"] and {"direct", "indirect", "total"} <= set(header)


def test_fit_with_bootstrap_appends_band_columns(tmp_path, trial_csv):
    out = tmp_path / "fit.csv"
    assert main(["fit", "--data", str(trial_csv), "--out", str(out), "--bootstrap", "10", "--seed", "4"]) == 0
    header = rows(out)[0]
    for c in ("direct", "indirect", "total"):
        assert f"{c}_lower" in header and f"{c}_upper" in header
    band_rows = rows(tmp_path / "fit_bands.csv")
    assert band_rows[0] == ["time", "point", "lower", "upper", "curve_name"]
    m = json.loads(open(f"{out}.manifest.json").read())
    assert m["seed"] == 4 and len(m["outputs"]) == 2


def test_unknown_covariate_is_named(tmp_path, trial_csv, capsys):
    code = main(["fit", "--data", str(trial_csv), "--out", str(tmp_path / "f.csv"), "--adjust", "age"])
    assert code == 2
    assert "age" in capsys.readouterr().err


def test_missing_file_is_usage_error(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "f.csv")]) == 2


def test_bad_arguments_are_usage_errors(tmp_path, trial_csv):
    assert main(["simulate"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["simulate", "--n", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["fit", "--data", str(trial_csv), "--out", str(tmp_path / "f.csv"), "--bootstrap", "1"]) == 2
    assert main(["verify", "--suite", "nonsense", "--out", str(tmp_path / "r.json")]) == 2


def test_no_events_is_insufficient_data(tmp_path, trial_csv):
    table = rows(trial_csv)
    k = table[0].index("event")
    for r in table[1:]:
        r[k] = "0"
    path = tmp_path / "noevents.csv"
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(table)
    assert main(["fit", "--data", str(path), "--out", str(tmp_path / "f.csv")]) == 3


def test_negative_hazard_is_numerical_failure(tmp_path):
    cfg = tmp_path / "bad.json"
    default_trial_config(n=50, beta0=SplineSpec((0, 5), (-1.0, -1.0))).to_json(cfg)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 4


def test_study_single_replicate_mean_equals_replicate(tmp_path):
    out = tmp_path / "study"
    assert main(["study", "--reps", "1", "--n", "400", "--seed", "2", "--scenario", "all", "--out-dir", str(out)]) == 0
    mean = rows(out / "all_mean.csv")
    reps = rows(out / "all_reps.csv")
    assert (out / "truth.csv").exists() and (out / "study.manifest.json").exists()
    mh, rh = mean[0], reps[0]
    for c in ("direct", "indirect", "total"):
        m = [float(r[mh.index(c)]) for r in mean[1:]]
        r1 = [float(r[rh.index(c)]) for r in reps[1:]]
        assert m == r1


def test_parse_scenario():
    assert parse_scenario("all") == ("all", None)
    assert parse_scenario("baseline+wk12") == ("baseline+wk12", (0.0, 12 / 52))
    assert parse_scenario("q=0,1/4,1/2") == ("q", (0.0, 0.25, 0.5))
    with pytest.raises(DataError):
        parse_scenario("weekly")


@pytest.fixture(scope="module")
def verify_cfg(tmp_path_factory):
    d = default_verify_config().to_dict()
    d.update(draws=3000, times=[1, 5], hazard_reps=3, hazard_n=500, cox_n=600)
    path = tmp_path_factory.mktemp("verify") / "cfg.json"
    path.write_text(json.dumps(d))
    return path


def test_verify_report(tmp_path, verify_cfg):
    out = tmp_path / "r.json"
    code = main(["verify", "--suite", "independence", "--config", str(verify_cfg), "--seed", "5", "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == (0 if report["passed"] else 1)
    assert report["seed"] == 5 and report["suite"] == "independence"


def test_verify_multiplicative_is_informational(tmp_path, verify_cfg):
    out = tmp_path / "r.json"
    code = main(["verify", "--suite", "stability", "--config", str(verify_cfg), "--multiplicative", "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == 0 and report["n_assertions"] == 0
    assert all(a["informational"] for a in report["assertions"])


def test_rerun_from_manifest_is_byte_identical(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["fit", "--data", "trial.csv", "--out", "f.csv"]) == 2
    assert main(["simulate", "--n", "200", "--seed", "8", "--out", "trial.csv"]) == 0
    assert main(["fit", "--data", "trial.csv", "--out", "f.csv", "--bootstrap", "5"]) == 0
    first = {p: (tmp_path / p).read_bytes() for p in ("trial.csv", "f.csv", "f_bands.csv")}
    for p in first:
        (tmp_path / p).unlink()
    assert main(["rerun", "trial.csv.manifest.json"]) == 0
    assert main(["rerun", "f.csv.manifest.json"]) == 0
    for p, data in first.items():
        assert (tmp_path / p).read_bytes() == data
    m = json.loads((tmp_path / "f.csv.manifest.json").read_text())
    assert all(v == hashlib.sha256(first[k]).hexdigest() for k, v in m["outputs"].items())


def test_version_and_help(capsys):
    assert main(["--version"]) == 0
    assert main(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_threads_flag_does_not_change_output(tmp_path, trial_csv):
    outs = []
    for th in ("1", "4"):
        out = tmp_path / f"f{th}.csv"
        assert main(["fit", "--data", str(trial_csv), "--out", str(out), "--bootstrap", "8", "--threads", th]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
