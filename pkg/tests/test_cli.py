"""
Command-line tests: exit codes and file output of `python -m tsgd`.
"""
import json

import numpy as np
import pytest

from tsgd import cli
from tsgd.models.trace import AggregateTrace
from tsgd.schemas.verification import CheckResult
from tsgd.services.experiment import emit_csv, read_aggregate_csv

SMALL_RUN = {
    "problem": {"kind": "quadratic", "diag": [1.0, 4.0], "target": [1.0, -1.0], "noise_sigma": 0.3},
    "schedule": {"theta": 1.0, "gamma": 1.0},
    "n_steps": 100,
    "n_paths": 2,
    "record_every": 10,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(SMALL_RUN))
    return path


@pytest.fixture
def inverse_n_csv(tmp_path):
    n = np.arange(10, 1010, 10)
    mean = 2.0 / n
    zeros = np.zeros(n.size)
    path = tmp_path / "agg.csv"
    emit_csv(AggregateTrace(n, 1.0 / n, mean, zeros, mean, zeros, np.ones(n.size, dtype=np.int64)), path)
    return path


class TestRun:
    def test_writes_aggregate_csv(self, config_file, tmp_path):
        output = tmp_path / "out.csv"
        assert cli.main(["run", str(config_file), "--output", str(output)]) == 0
        agg = read_aggregate_csv(output)
        assert agg.n.tolist() == list(range(10, 101, 10))

    def test_prints_summary_without_output(self, config_file, capsys):
        assert cli.main(["run", str(config_file)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["n_paths"] == 2

    def test_missing_config(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "absent.json")]) == 1

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**SMALL_RUN, "n_paths": 0}))
        assert cli.main(["run", str(path)]) == 1

    def test_usage_error_is_invalid_input(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["run"])
        assert excinfo.value.code == 1


class TestSweep:
    def test_writes_sweep_csv(self, config_file, tmp_path):
        output = tmp_path / "sweep.csv"
        code = cli.main(["sweep", str(config_file), "--gammas", "1,100", "--optimizers", "tsgd", "--output", str(output)])
        assert code == 0
        lines = output.read_text().splitlines()
        assert lines[0] == "gamma,optimizer,final_err,max_err,diverged"
        assert len(lines) == 3


class TestRate:
    def test_prints_slope(self, inverse_n_csv, capsys):
        assert cli.main(["rate", str(inverse_n_csv), "--from", "100", "--to", "1000"]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(-1.0, abs=1e-6)

    def test_slope_inside_expected_range(self, inverse_n_csv):
        args = ["rate", str(inverse_n_csv), "--from", "100", "--to", "1000", "--expect-min", "-1.3", "--expect-max", "-0.8"]
        assert cli.main(args) == 0

    def test_slope_outside_expected_range(self, inverse_n_csv):
        args = ["rate", str(inverse_n_csv), "--from", "100", "--to", "1000", "--expect-min", "-0.9"]
        assert cli.main(args) == 2

    def test_too_few_points(self, inverse_n_csv):
        assert cli.main(["rate", str(inverse_n_csv), "--from", "10", "--to", "30"]) == 1


class TestVerify:
    def test_failed_check_exits_with_two(self, monkeypatch):
        failing = CheckResult(name="taming_sandwich", passed=False, cases=1, violations=1, worst=1.0)
        monkeypatch.setattr(cli, "run_verification", lambda seed=0: [failing])
        assert cli.main(["verify"]) == 2

    def test_passing_checks_exit_zero(self, monkeypatch):
        passing = CheckResult(name="taming_sandwich", passed=True, cases=1, violations=0, worst=-1.0)
        monkeypatch.setattr(cli, "run_verification", lambda seed=0: [passing])
        assert cli.main(["verify", "--seed", "4"]) == 0
