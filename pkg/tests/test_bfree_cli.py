"""
Tests for scripts/bfree.py

Smoke tests: runs the CLI in-process through run_cli() and checks output
tokens and exit codes.

Tests cover:
- families / experiments listings
- run subcommands with flags, a config file, and --format before or after the subcommand
- exit codes: 2 configuration error (including any other ValueError), 3 budget
  exceeded, 4 reproduce FAIL
- --log-file

Run: pytest tests/test_bfree_cli.py -v
"""

import importlib.util
import json
import os
from unittest import mock

import pytest

from core.interval_sieve import SIEVE_MEMORY_BUDGET
from core.reproduce_catalog import ExperimentOutcome


def _load_module():
    spec = importlib.util.spec_from_file_location(
        "bfree_cli",
        os.path.join(os.path.dirname(__file__), "..", "scripts", "bfree.py"),
    )
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


cli = _load_module()


def _json_out(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


# ---------------------------------------------------------------------------
# Listings
# ---------------------------------------------------------------------------

class TestListings:

    def test_families(self, capsys):
        assert cli.run_cli(["families"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "two-three" in out
        assert "count:" in out

    def test_experiments(self, capsys):
        assert cli.run_cli(["experiments"]) == cli.EXIT_OK
        assert "sec2.5-block" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

class TestRuns:

    def test_sieve_json(self, capsys):
        code = cli.run_cli(["--format", "json", "sieve", "--elements", "2,3", "--lo", "0", "--hi", "9"])
        assert code == cli.EXIT_OK
        data = _json_out(capsys)
        assert data["results"]["eta"]["bits"] == "0100010100"
        assert data["config"]["bset"] == {"elements": [2, 3]}
        assert "timing" not in data

    def test_format_after_subcommand(self, capsys):
        code = cli.run_cli(["mef", "--family", "two-three", "--depth", "3", "--format", "json"])
        assert code == cli.EXIT_OK
        assert _json_out(capsys)["results"]["mef"]["label"] == "Z/6Z"

    def test_timing_flag(self, capsys):
        cli.run_cli(["--format", "json", "--timing", "sieve", "--family", "primes", "--hi", "50"])
        assert "seconds" in _json_out(capsys)["timing"]

    def test_table_default(self, capsys):
        assert cli.run_cli(["filtration", "--family", "two-three", "--depth", "2"]) == cli.EXIT_OK
        assert capsys.readouterr().out.startswith("== filtration [ok] ==")

    def test_csv(self, capsys):
        cli.run_cli(["--format", "csv", "filtration", "--family", "cascade", "--depth", "2"])
        assert capsys.readouterr().out.splitlines()[0].startswith("k,S_k,s_k")

    def test_params_json(self, capsys):
        code = cli.run_cli(["--format", "json", "classify", "--family", "power2",
                            "--params", '{"count": 3}', "--depth", "3", "--horizon", "10000"])
        assert code == cli.EXIT_OK
        assert _json_out(capsys)["results"]["toeplitz"]["value"] == "yes"

    def test_config_file_with_override(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"bset": {"family": "two-three"}, "depth": 2, "output_format": "json"}))
        assert cli.run_cli(["--config", str(path), "filtration", "--depth", "3"]) == cli.EXIT_OK
        data = _json_out(capsys)
        assert len(data["stages"]) == 3
        assert data["config"]["depth"] == 3

    def test_crt(self, capsys):
        code = cli.run_cli(["--format", "json", "crt", "--family", "mod12", "--residues", "4:1,6:5",
                            "--horizon", "10000"])
        assert code == cli.EXIT_OK
        data = _json_out(capsys)
        assert data["results"]["crt"]["n0"] == 5
        assert data["results"]["crt"]["modulus"] == "12"
        assert data["results"]["search"]["count"] == 0

    def test_reproduce_pass(self, capsys):
        assert cli.run_cli(["--format", "json", "reproduce", "ex5.6-two-three"]) == cli.EXIT_OK
        assert _json_out(capsys)["status"] == "PASS"

    def test_log_file(self, tmp_path, capsys):
        log = tmp_path / "bfree.log"
        cli.run_cli(["--log-file", str(log), "sieve", "--family", "primes", "--hi", "30"])
        assert "sieve finished" in log.read_text()


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

class TestExitCodes:

    def test_unknown_family(self):
        assert cli.run_cli(["sieve", "--family", "fibonacci"]) == cli.EXIT_CONFIG

    def test_params_without_family(self):
        assert cli.run_cli(["sieve", "--params", '{"count": 3}']) == cli.EXIT_CONFIG

    def test_bad_config_value(self):
        assert cli.run_cli(["filtration", "--family", "primes", "--depth", "0"]) == cli.EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert cli.run_cli(["--config", str(tmp_path / "none.json"), "sieve"]) == cli.EXIT_CONFIG

    def test_unresolved_coordinate(self):
        code = cli.run_cli(["phi", "--family", "odd-primes", "--residues", "3:0",
                            "--default-rule", "none", "--lo", "0", "--hi", "8"])
        assert code == cli.EXIT_CONFIG

    def test_unknown_experiment(self):
        assert cli.run_cli(["reproduce", "ex9.9-nothing"]) == cli.EXIT_CONFIG

    def test_bad_residue_syntax_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            cli.run_cli(["crt", "--residues", "4-1"])
        assert err.value.code == 2

    def test_sieve_budget(self):
        code = cli.run_cli(["sieve", "--family", "primes", "--lo", "0", "--hi", str(SIEVE_MEMORY_BUDGET * 2)])
        assert code == cli.EXIT_BUDGET

    def test_plain_value_error_is_config_error(self, capsys):
        with mock.patch.object(cli, "run_subcommand", side_effect=ValueError("block index must be >= 1")):
            code = cli.run_cli(["sieve", "--family", "primes"])
        assert code == cli.EXIT_CONFIG
        assert capsys.readouterr().out == ""

    def test_budget_error_keeps_its_code(self):
        err = cli.SieveBudgetError(SIEVE_MEMORY_BUDGET * 2)
        with mock.patch.object(cli, "run_subcommand", side_effect=err):
            assert cli.run_cli(["sieve", "--family", "primes"]) == cli.EXIT_BUDGET

    def test_reproduce_fail(self, capsys):
        failing = ExperimentOutcome("sec2.5-block", "claim", {"phi_block": False})
        with mock.patch("core.reproduce_catalog.run_experiment", return_value=failing):
            code = cli.run_cli(["--format", "json", "reproduce", "sec2.5-block"])
        assert code == cli.EXIT_FAIL
        assert _json_out(capsys)["status"] == "FAIL"


class TestOverrides:

    def test_elements_win_over_family(self):
        args = cli.build_parser().parse_args(["sieve", "--elements", "4,6", "--family", "primes"])
        assert cli.overrides_from_args(args)["bset"] == {"elements": [4, 6]}

    def test_unset_flags_are_none(self):
        args = cli.build_parser().parse_args(["sieve"])
        overrides = cli.overrides_from_args(args)
        assert "bset" not in overrides
        assert overrides["depth"] is None
