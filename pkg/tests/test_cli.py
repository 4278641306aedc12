"""Command-line interface: scenario parsing, seed precedence, CSV output.

Runs main() in-process and captures stdout; the golden six-cell scenario
file in examples_scenarios/ anchors the parsing checks.
"""

import csv
import io
import json
import os
from pathlib import Path

import pytest

from cdfsched.cli import SEED_ENV_VAR, load_scenario, main, scenario_profiles
from cdfsched.errors import ScenarioError

GOLDEN = str(
    Path(__file__).resolve().parents[1]
    / "examples_scenarios" / "hetnet_two_macro_four_pico.json"
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def rows_of(out: str):
    return list(csv.DictReader(io.StringIO(out)))


def write_json(tmp_path, payload, name="scn.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


MINIMAL = {
    "cells": [{"tier": "macro", "position_m": [0, 0]}],
    "users": [[60, 25]],
}


class TestLoadScenario:
    def test_golden_six_cell_file(self):
        scenario, raw = load_scenario(GOLDEN)
        assert len(scenario.cells) == 6
        assert sum(c.tier == "macro" for c in scenario.cells) == 2
        assert sum(c.tier == "pico" for c in scenario.cells) == 4
        assert len(scenario.users) == 5
        assert raw["seed"] == 42
        # defaults fill the unspecified numerology
        assert scenario.num_rb == 16
        assert scenario.bandwidth_hz == 5e6

    def test_default_tx_power_by_tier(self):
        scenario, _ = load_scenario(GOLDEN)
        assert scenario.cells[0].tx_power_dbm == 43.0
        assert scenario.cells[2].tx_power_dbm == 30.0

    def test_missing_required_fields(self, tmp_path):
        path = write_json(tmp_path, {"cells": MINIMAL["cells"]})
        with pytest.raises(ScenarioError, match="users"):
            load_scenario(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioError, match="not valid JSON"):
            load_scenario(str(path))

    def test_unknown_field_rejected(self, tmp_path):
        payload = dict(MINIMAL, carrier_ghz=2.0)
        path = write_json(tmp_path, payload)
        with pytest.raises(ScenarioError, match="carrier_ghz"):
            load_scenario(path)

    def test_bad_cell_entry(self, tmp_path):
        payload = {"cells": [{"tier": "macro"}], "users": [[1, 2]]}
        path = write_json(tmp_path, payload)
        with pytest.raises(ScenarioError, match=r"cells\[0\]"):
            load_scenario(path)

    def test_missing_file(self):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario("/nonexistent/scenario.json")

    def test_profiles_match_simulator_drop_zero(self):
        scenario, raw = load_scenario(GOLDEN)
        a = scenario_profiles(scenario, raw["seed"])
        b = scenario_profiles(scenario, raw["seed"])
        assert a == b
        assert len(a) == 5


class TestRateCommands:
    def test_single_user_one_row(self, capsys, tmp_path):
        path = write_json(tmp_path, MINIMAL)
        code, out, _ = run_cli(capsys, "rate-exact", "--scenario", path,
                               "--M", "4")
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 1
        assert rows[0]["user_rate_bps_hz"] == rows[0]["sum_rate_bps_hz"]
        assert rows[0]["M"] == "4"

    def test_rate_asymptotic_columns(self, capsys):
        code, out, _ = run_cli(capsys, "rate-asymptotic", "--scenario",
                               GOLDEN, "--M", "8")
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 5
        assert all(float(r["b_bps_hz"]) > 0 for r in rows)

    def test_bad_m_exits_two(self, capsys):
        code, _, err = run_cli(capsys, "rate-exact", "--scenario", GOLDEN,
                               "--M", "99")
        assert code == 2
        assert "error:" in err

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "report.csv"
        code, out, _ = run_cli(capsys, "rate-exact", "--scenario", GOLDEN,
                               "--M", "2", "--out", str(dest))
        assert code == 0
        assert out == ""
        assert len(rows_of(dest.read_text())) == 5


class TestSeedPrecedence:
    def _first_rate(self, capsys, *extra, env=None, monkeypatch=None):
        if env is not None:
            monkeypatch.setenv(SEED_ENV_VAR, env)
        code, out, _ = run_cli(capsys, "rate-exact", "--scenario", GOLDEN,
                               "--M", "2", *extra)
        assert code == 0
        return rows_of(out)[0]["user_rate_bps_hz"]

    def test_flag_overrides_file_seed(self, capsys, monkeypatch):
        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
        from_file = self._first_rate(capsys)
        from_flag = self._first_rate(capsys, "--seed", "7")
        same_flag = self._first_rate(capsys, "--seed", "7")
        assert from_flag == same_flag
        assert from_flag != from_file

    def test_env_lowest_precedence(self, capsys, monkeypatch, tmp_path):
        # file has no seed: env applies; file seed beats env
        path = write_json(tmp_path, MINIMAL)
        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
        default = self._first_rate_for(capsys, path)
        monkeypatch.setenv(SEED_ENV_VAR, "99")
        via_env = self._first_rate_for(capsys, path)
        assert via_env != default
        seeded = write_json(tmp_path, dict(MINIMAL, seed=0), "seeded.json")
        via_file = self._first_rate_for(capsys, seeded)
        assert via_file == default

    def _first_rate_for(self, capsys, path):
        code, out, _ = run_cli(capsys, "rate-exact", "--scenario", path,
                               "--M", "2")
        assert code == 0
        return rows_of(out)[0]["user_rate_bps_hz"]

    def test_bad_env_seed(self, capsys, monkeypatch, tmp_path):
        path = write_json(tmp_path, MINIMAL)
        monkeypatch.setenv(SEED_ENV_VAR, "not-a-number")
        code, _, err = run_cli(capsys, "rate-exact", "--scenario", path,
                               "--M", "2")
        assert code == 2
        assert SEED_ENV_VAR in err


class TestSimulateCommand:
    def test_reproducible_stdout(self, capsys):
        argv = ("simulate", "--scenario", GOLDEN, "--M", "4",
                "--drops", "1", "--slots", "300")
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2
        rows = rows_of(out1)
        assert len(rows) == 5
        assert rows[0]["policy"] == "cdf"
        assert rows[0]["master_seed"] == "42"

    def test_threads_do_not_change_output(self, capsys):
        base = ("simulate", "--scenario", GOLDEN, "--M", "4",
                "--drops", "4", "--slots", "100")
        _, out1, _ = run_cli(capsys, *base, "--threads", "1")
        _, out4, _ = run_cli(capsys, *base, "--threads", "4")
        assert out1 == out4  # bitwise identical CSV

    def test_policy_flag(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--scenario", GOLDEN,
                               "--policy", "round_robin", "--slots", "100")
        assert code == 0
        assert float(rows_of(out)[0]["fairness_theta"]) == 1.0


class TestPlanAndValidate:
    def test_plan_feedback_row(self, capsys):
        code, out, _ = run_cli(capsys, "plan-feedback", "--scenario", GOLDEN,
                               "--eta", "0.9")
        assert code == 0
        row = rows_of(out)[0]
        assert 1 <= int(row["m_exact"]) <= 16
        assert float(row["ratio_at_m"]) >= 0.9

    def test_validate_golden_all_pass(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "--scenario", GOLDEN)
        assert code == 0
        rows = rows_of(out)
        assert rows and all(r["status"] == "PASS" for r in rows)
