"""
tests/test_report_builder.py — run configuration, dispatch and serialization

Tests cover:
- RunConfig validation, from_dict / to_dict, load() with file + overrides
- parse_residues
- jsonable: big ints, period keys, Fractions, sets, numpy scalars
- run_subcommand for every subcommand on small inputs
- Report rendering: key-sorted deterministic JSON, CSV stage table, text table

Run: pytest tests/test_report_builder.py -v
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from core.crt_coding import UnresolvedCoordinateError

from core.report_builder import (
    ConfigError,
    Report,
    RunConfig,
    jsonable,
    parse_residues,
    run_subcommand,
)


def _cfg(**kwargs) -> RunConfig:
    kwargs.setdefault("horizon", 10 ** 4)
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------

class TestRunConfig:

    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.mode == "blocks"
        assert cfg.output_format == "table"

    @pytest.mark.parametrize("overrides, match", [
        ({"depth": 0}, "depth"),
        ({"horizon": -5}, "horizon"),
        ({"lookahead": -1}, "lookahead"),
        ({"mode": "random"}, "Invalid mode"),
        ({"output_format": "xml"}, "Invalid format"),
        ({"lo": 5, "hi": 1}, "lo must be"),
        ({"regularity_ratio": 2.0}, "regularity_ratio"),
        ({"cutoffs": [10, 0]}, "cutoffs"),
        ({"bset": {"params": {}}}, "bset"),
        ({"default_rule": "one"}, "Invalid default rule"),
    ])
    def test_invalid(self, overrides, match):
        with pytest.raises(ConfigError, match=match):
            RunConfig(**overrides)

    def test_config_error_is_value_error(self):
        assert issubclass(ConfigError, ValueError)

    def test_round_trip(self):
        cfg = _cfg(bset={"family": "mod12", "params": {}}, residues={4: 1, 6: 5})
        again = RunConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert cfg.to_dict()["residues"] == {"4": 1, "6": 5}

    def test_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys: colour"):
            RunConfig.from_dict({"colour": "red"})

    def test_residue_string_coerced(self):
        assert RunConfig.from_dict({"residues": "4:1,6:5"}).residues == {4: 1, 6: 5}

    def test_bad_residue_type(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"residues": [4, 1]})

    def test_load_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"depth": 4, "mode": "prefix", "bset": {"family": "primes"}}))
        cfg = RunConfig.load(str(path), {"depth": 6, "mode": None})
        assert cfg.depth == 6
        assert cfg.mode == "prefix"
        assert cfg.bset == {"family": "primes"}

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            RunConfig.load(str(tmp_path / "nope.json"))

    def test_load_non_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            RunConfig.load(str(path))


class TestParseResidues:

    def test_parse(self):
        assert parse_residues("4:1, 6:5") == {4: 1, 6: 5}

    def test_empty(self):
        assert parse_residues("") == {}

    @pytest.mark.parametrize("text", ["4-1", "0:1", "4:1,4:3", "a:b"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_residues(text)


# ---------------------------------------------------------------------------
# jsonable
# ---------------------------------------------------------------------------

class TestJsonable:

    def test_big_int_string(self):
        assert jsonable(2 ** 60) == str(2 ** 60)
        assert jsonable(2 ** 40) == 2 ** 40

    def test_period_keys_always_strings(self):
        assert jsonable({"s_k": 6, "k": 1, "modulus": 12}) == {"s_k": "6", "k": 1, "modulus": "12"}

    def test_period_key_applies_to_lists(self):
        assert jsonable({"d_k": [6, 210]}) == {"d_k": ["6", "210"]}

    def test_fraction(self):
        assert jsonable(Fraction(2, 3)) == "2/3"

    def test_sets_sorted_and_numpy(self):
        assert jsonable({3, 1, 2}) == [1, 2, 3]
        assert jsonable(np.int64(7)) == 7
        assert jsonable(np.array([True, False])) == [True, False]

    def test_int_keys(self):
        assert jsonable({4: 1}) == {"4": 1}


# ---------------------------------------------------------------------------
# run_subcommand
# ---------------------------------------------------------------------------

class TestRunSubcommand:

    def test_unknown(self):
        with pytest.raises(ConfigError, match="Unknown subcommand"):
            run_subcommand("plot", _cfg())

    def test_sieve(self):
        report = run_subcommand("sieve", _cfg(bset={"elements": [2, 3]}, lo=0, hi=9))
        assert report.results["eta"]["bits"] == "0100010100"
        assert report.results["eta"]["free_count"] == 3
        assert report.status == "ok"

    def test_density_exact(self):
        report = run_subcommand("density", _cfg(bset={"elements": [2, 3]}, horizon=1000))
        data = report.to_dict()
        assert data["results"]["exact_multiples"]["value"] == "2/3"
        assert data["results"]["interval_free"]["count"] == 333
        assert "light_tails" in data["results"]

    def test_filtration(self):
        report = run_subcommand("filtration", _cfg(bset={"family": "two-three"}, depth=3))
        assert [row["d_k"] for row in report.stages] == [6, 6, 6]
        assert [row["d_k_status"] for row in report.stages] == ["stable"] * 3
        assert len(report.results["period_branching"]) == 3
        assert report.to_dict()["stages"][0]["c_k"] == "6"

    def test_mef(self):
        report = run_subcommand("mef", _cfg(bset={"family": "two-three"}, depth=4))
        assert report.to_dict()["results"]["mef"]["label"] == "Z/6Z"

    def test_classify_finite(self):
        cfg = _cfg(bset={"family": "power2", "params": {"count": 3}}, depth=3)
        report = run_subcommand("classify", cfg)
        assert report.results["toeplitz"]["value"] == "yes"
        assert report.results["toeplitz"]["certified"]
        assert report.results["taut_evidence"]["value"] == "yes"
        assert report.results["regular_toeplitz"]["value"] == "yes"

    def test_window(self):
        cfg = _cfg(bset={"family": "power2", "params": {"count": 3}}, depth=3, stage=1, periods=4)
        report = run_subcommand("window", cfg)
        pos = report.results["toeplitz_positions"]
        assert pos["counts"]["unresolved"] == 2
        assert pos["consistent"]
        assert "dense_orbit" in report.results

    def test_crt(self):
        cfg = _cfg(bset={"family": "mod12"}, residues={4: 1, 6: 5})
        report = run_subcommand("crt", cfg)
        assert report.results["crt"].n0 == 5
        assert report.results["search"].count == 0

    def test_crt_incompatible_has_no_search(self):
        report = run_subcommand("crt", _cfg(bset={"family": "mod12"}, residues={4: 1, 6: 2}))
        assert not report.results["crt"].compatible
        assert "search" not in report.results

    def test_crt_needs_residues(self):
        with pytest.raises(ConfigError, match="residues"):
            run_subcommand("crt", _cfg())

    def test_phi_with_needle(self):
        cfg = _cfg(
            bset={"family": "odd-primes"},
            residues={3: 0, 5: 1, 7: 0, 11: 0},
            lo=0, hi=8,
            needle="11001001",
            search_radius=2000,
        )
        report = run_subcommand("phi", cfg)
        assert report.results["phi"]["bits"] == "011001001"
        assert report.results["needle_in_phi"] == [1]
        assert report.results["needle_dominated_in_eta"] == []
        assert report.results["theta"][5].g == 1

    def test_phi_rejects_point_outside_h(self):
        cfg = _cfg(bset={"family": "two-three"}, residues={10: 0, 36: 1})
        with pytest.raises(ConfigError, match="not in H"):
            run_subcommand("phi", cfg)

    def test_phi_key_outside_b_stays_unresolved(self):
        cfg = _cfg(bset={"family": "two-three"}, residues={7: 0})
        with pytest.raises(UnresolvedCoordinateError) as err:
            run_subcommand("phi", cfg)
        assert not isinstance(err.value, ConfigError)

    def test_reproduce(self):
        report = run_subcommand("reproduce", _cfg(experiment="ex5.6-two-three"))
        assert report.status == "PASS"
        assert all(report.results["checks"].values())

    def test_reproduce_needs_id(self):
        with pytest.raises(ConfigError):
            run_subcommand("reproduce", _cfg())


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

class TestRender:

    def _report(self) -> Report:
        return run_subcommand("filtration", _cfg(bset={"family": "two-three"}, depth=2, output_format="json"))

    def test_json_sorted_and_deterministic(self):
        a, b = self._report(), self._report()
        assert a.to_json() == b.to_json()
        data = json.loads(a.to_json())
        assert list(data) == sorted(data)
        assert "timing" not in data

    def test_timing_opt_in(self):
        data = json.loads(self._report().to_json(include_timing=True))
        assert data["timing"]["seconds"] >= 0

    def test_render_uses_config_format(self):
        assert json.loads(self._report().render())["subcommand"] == "filtration"

    def test_csv(self):
        text = self._report().render("csv")
        header = text.splitlines()[0]
        assert header.startswith("k,S_k,s_k")
        assert "d_k_status" in header

    def test_table(self):
        text = self._report().render("table")
        assert text.startswith("== filtration [ok] ==")
        assert "B: two-three" in text

    def test_csv_without_stages(self):
        report = run_subcommand("crt", _cfg(bset={"family": "mod12"}, residues={4: 1, 6: 5}))
        assert "crt.n0" in report.to_csv().splitlines()[0]
