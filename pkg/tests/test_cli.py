import json
import subprocess
import sys

import pytest

from qmemcheck.cli import (
    EXIT_CHECK_FAILED,
    EXIT_IO,
    EXIT_OK,
    EXIT_VALIDATION,
    SEED_ENV_VAR,
    main,
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"n": 3, "trials": 50, "seed": 4}))
    return str(path)


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSimulate:
    def test_json_output(self, config_path, capsys):
        code, out, _ = run_cli(["simulate", "--config", config_path], capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["schema"] == "qmemcheck.results.v1"
        assert doc["config"]["n"] == 3
        assert doc["aggregates"]["rates"]["correctness"] == 1.0

    def test_deterministic_stdout(self, config_path, capsys):
        _, first, _ = run_cli(["simulate", "--config", config_path], capsys)
        _, second, _ = run_cli(["simulate", "--config", config_path], capsys)
        assert first == second

    def test_csv_format(self, config_path, capsys):
        code, out, _ = run_cli(["simulate", "--config", config_path, "--format", "csv"], capsys)
        assert code == EXIT_OK
        assert out.splitlines()[0] == "metric,step,numerator,denominator,value"

    def test_overrides_reflected(self, config_path, capsys):
        code, out, _ = run_cli(
            ["simulate", "--config", config_path, "--trials", "7", "--seed", "123"], capsys
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["config"]["trials"] == 7
        assert doc["config"]["seed"] == 123

    def test_out_dir_writes_files(self, config_path, capsys, tmp_path):
        out_dir = tmp_path / "results"
        code, _, _ = run_cli(["simulate", "--config", config_path, "--out", str(out_dir)], capsys)
        assert code == EXIT_OK
        for name in ("results.json", "results.csv", "run_meta.json"):
            assert (out_dir / name).exists()

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, err = run_cli(["simulate", "--config", str(tmp_path / "nope.json")], capsys)
        assert code == EXIT_IO
        assert err

    def test_malformed_json(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code, _, err = run_cli(["simulate", "--config", str(path)], capsys)
        assert code == EXIT_VALIDATION
        assert err

    def test_invalid_config_reports_field(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n": 0}))
        code, _, err = run_cli(["simulate", "--config", str(path)], capsys)
        assert code == EXIT_VALIDATION
        assert "n" in err

    def test_unknown_flag(self, config_path, capsys):
        code, _, err = run_cli(["simulate", "--config", config_path, "--fast"], capsys)
        assert code == EXIT_VALIDATION
        assert err


class TestSeedPrecedence:
    def test_env_seed_used(self, config_path, capsys, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "555")
        _, out, _ = run_cli(["simulate", "--config", config_path], capsys)
        assert json.loads(out)["config"]["seed"] == 555

    def test_flag_beats_env(self, config_path, capsys, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "555")
        _, out, _ = run_cli(["simulate", "--config", config_path, "--seed", "9"], capsys)
        assert json.loads(out)["config"]["seed"] == 9

    def test_config_seed_when_no_override(self, config_path, capsys):
        _, out, _ = run_cli(["simulate", "--config", config_path], capsys)
        assert json.loads(out)["config"]["seed"] == 4

    def test_invalid_env_seed(self, config_path, capsys, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "not-a-seed")
        code, _, err = run_cli(["simulate", "--config", config_path], capsys)
        assert code == EXIT_VALIDATION
        assert SEED_ENV_VAR in err


class TestBounds:
    def test_reference_parameters(self, capsys):
        code, out, _ = run_cli(
            ["bounds", "--epsilon", "0.01", "--delta", "0.5", "--deltas", "0.25,0.25"], capsys
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["required_k"] == 7
        assert doc["p_single"] == 0.5
        assert doc["p_multi"] == 0.390625
        assert doc["all_accept_bound"] == 0.0078125
        assert doc["detection_lower_bound"] == 0.9921875

    def test_explicit_k(self, capsys):
        code, out, _ = run_cli(["bounds", "--delta", "0.5", "--k", "2"], capsys)
        assert code == EXIT_OK
        assert json.loads(out)["all_accept_bound"] == 0.25

    def test_bad_delta(self, capsys):
        code, _, err = run_cli(["bounds", "--delta", "1.5"], capsys)
        assert code == EXIT_VALIDATION
        assert err


class TestVerifyLemma2:
    def test_small_grid(self, capsys):
        code, out, _ = run_cli(["verify-lemma2", "--grid", "6", "--t-max", "3"], capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["passed"] is True
        assert doc["details"]["violations"] == 0
        assert doc["details"]["t2_variant_consistent"] is False

    def test_bad_grid(self, capsys):
        code, _, err = run_cli(["verify-lemma2", "--grid", "0"], capsys)
        assert code == EXIT_VALIDATION
        assert err


class TestOracleCheck:
    def test_small_sizes(self, capsys):
        code, out, _ = run_cli(["oracle-check", "--sizes", "2,4", "--pairs", "20"], capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["passed"] is True
        assert doc["samples"] == 40

    def test_bad_sizes(self, capsys):
        code, _, err = run_cli(["oracle-check", "--sizes", "2,x"], capsys)
        assert code == EXIT_VALIDATION
        assert err


def test_installed_entry_point(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"n": 3, "trials": 10, "seed": 1}))
    proc = subprocess.run(
        ["qmemcheck", "simulate", "--config", str(config)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["aggregates"]["trials"] == 10


def test_module_invocation():
    proc = subprocess.run(
        [sys.executable, "-m", "qmemcheck.cli", "bounds", "--delta", "0.5", "--k", "7"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["all_accept_bound"] == 0.0078125
