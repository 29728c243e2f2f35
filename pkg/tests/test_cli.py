import csv
import json

import pytest

from locfpca.cli import CSV_HEADER, main, rows_to_csv, run, write_report
from locfpca.config import ExperimentConfig, build_model, validate

SIM = """
[experiment]
kind = simulate
seed = 7
n = 50
[model]
dim = 3
profile.kind = arithmetic
profile.param = 1
family = gaussian
shift.profile = power
shift.params = 0.5, 1
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_build_model_from_config():
    m = build_model(ExperimentConfig.from_text(SIM))
    assert m.dim == 3 and m.family.kind == "gaussian"
    assert m.x0[1] == pytest.approx(0.5 * 0.25)


def test_validate_lists_every_violation():
    cfg = ExperimentConfig.from_text("[experiment]\nkind = covop-mse\nn = -4\n[model]\ndim = x\n")
    problems = validate(cfg)
    joined = "\n".join(problems)
    for key in ("seed", "n", "reps", "dim"):
        assert key in joined
    assert len(problems) >= 4


def test_infeasible_local_config_reports_predicted_count():
    cfg = ExperimentConfig.from_text(
        "[experiment]\nkind = covop-mse\nseed = 1\nn = 50\nreps = 100\nh = 0.05\n[model]\ndim = 3\n")
    (msg,) = [p for p in validate(cfg) if "infeasible" in p]
    assert "predicted" in msg


def test_validate_command_exit_codes(tmp_path, capsys):
    assert main(["validate", str(write(tmp_path, SIM))]) == 0
    assert main(["validate", str(write(tmp_path, "[experiment]\nkind = nope\n", "b.ini"))]) == 2
    assert main(["validate", str(tmp_path / "missing.ini")]) == 2
    assert "invalid" in capsys.readouterr().err


def test_run_writes_csv_and_json(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, SIM)), "--out", str(out)]) == 0
    rows = list(csv.reader((out / "report.csv").open()))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 4 and rows[1][0] == "k=1|variance" and rows[1][5] == "mc"
    doc = json.loads((out / "report.json").read_text())
    assert doc["config"]["experiment"]["kind"] == "simulate"
    assert "wall_clock_seconds" in doc and doc["library_version"]
    samples = list(csv.reader((out / "samples.csv").open()))
    assert samples[0] == ["k1", "k2", "k3"] and len(samples) == 51


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, SIM)
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", str(cfg), "--out", str(tmp_path / "b")])
    for name in ("report.csv", "samples.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from locfpca import cli
    from locfpca.errors import NumericalError

    def boom(cfg):
        raise NumericalError("forced")

    monkeypatch.setitem(cli.RUNNERS, "simulate", boom)
    assert main(["run", str(write(tmp_path, SIM)), "--out", str(tmp_path / "o")]) == 3


def test_nan_is_written_as_text_and_null(tmp_path):
    rep = run(ExperimentConfig.from_text(SIM.replace("simulate", "kt-ratio")
                                         .replace("n = 50", "h_grid = 0.6, 0.4")))
    text = rows_to_csv(rep.rows)
    assert ",nan," in text
    (p_json,) = [p for p in write_report(rep, tmp_path, "json")]
    assert "NaN" not in p_json.read_text()


GAMMA = """
[experiment]
kind = gamma-checks
seed = 0
form = arithmetic
alpha = 1
h_grid = 0.1, 0.01
"""


def test_gamma_checks_rows():
    rep = run(ExperimentConfig.from_text(GAMMA))
    points = [r.point for r in rep.rows]
    assert "x=1|h=0.01" in points and "integral-ratio|h=0.1" in points
    assert all(v for v in rep.summary["limit_decreasing"].values())


def test_thread_cap_env_does_not_change_output(tmp_path, monkeypatch):
    text = """
[experiment]
kind = covop-mse
seed = 11
n = 200
reps = 100
h = 0.8
[model]
dim = 3
shift.profile = power
shift.params = 0.5, 1
"""
    cfg = write(tmp_path, text)
    monkeypatch.setenv("LOCFPCA_THREADS", "1")
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    monkeypatch.setenv("LOCFPCA_THREADS", "4")
    main(["run", str(cfg), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_single_field_violations():
    no_seed = SIM.replace("seed = 7\n", "")
    assert len(validate(ExperimentConfig.from_text(no_seed))) == 1
    gamma_up = GAMMA.replace("h_grid = 0.1, 0.01", "h_grid = 0.01, 0.1")
    assert len(validate(ExperimentConfig.from_text(gamma_up))) == 1


def test_covop_rows_carry_all_three_quantities():
    text = SIM.replace("kind = simulate", "kind = covop-mse").replace(
        "n = 50", "n = 200\nreps = 200\nh = 0.8")
    rep = run(ExperimentConfig.from_text(text))
    labels = [r.point.split("|")[1] for r in rep.rows]
    assert labels == ["mse-hs", "identity", "asymptote", "mse-sup"]
    assert all(r.flag.split("|")[0] in ("quadrature", "mc", "closed-form") for r in rep.rows)
