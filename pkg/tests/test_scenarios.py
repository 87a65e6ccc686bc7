"""Scenario fixtures and the manifest/interpolation drivers."""

import json
import shutil

import numpy as np
import pytest

from flightscape import scenarios
from flightscape.hplp import parse_diagnostics, parse_program
from flightscape.pipeline import StageError
from flightscape.scenarios import (
    SCENARIO_NAMES,
    ScenarioFixture,
    evaluate_manifest,
    fixtures_root,
    format_report,
    load_scenario,
    mission_config,
    run_interp_study,
    run_scenario,
    write_interp_csv,
)

from conftest import make_grid
from flightscape.landscape import MissionLandscape


def make_landscape(values):
    values = np.asarray(values, dtype=np.float64)
    grid = make_grid(rows=values.shape[0], cols=values.shape[1])
    return MissionLandscape(grid=grid, values=values)


# --------------------------------------------------------------------------
# fixture loading


class TestLoadScenario:
    @pytest.mark.parametrize("name", SCENARIO_NAMES)
    def test_bundled_scenarios_load(self, name):
        fixture = load_scenario(name)
        assert fixture.name == name
        assert fixture.map_path.is_file()
        for key in ("origin_lat", "origin_lon", "width_m", "height_m",
                    "rows", "cols", "n_ensemble", "n_inf", "seed"):
            assert key in fixture.settings
        assert len(fixture.manifest()) >= 2

    def test_unknown_name_rejected(self):
        with pytest.raises(StageError, match="unknown scenario") as err:
            load_scenario("volcano")
        assert err.value.stage == "fixture"

    @pytest.mark.parametrize("name", SCENARIO_NAMES)
    def test_rules_parse_clean_with_one_grid_query(self, name):
        fixture = load_scenario(name)
        text = fixture.rules_text()
        assert parse_diagnostics(text) == []
        program = parse_program(text)
        queries = [s for s in program.statements if type(s).__name__ == "Query"]
        assert len(queries) == 1
        atom = queries[0].atom
        assert atom.functor == "landscape"
        assert len(atom.args) == 2

    def test_missing_file_is_reported(self, tmp_path, monkeypatch):
        shutil.copytree(fixtures_root() / "park", tmp_path / "park")
        (tmp_path / "park" / "errors.json").unlink()
        monkeypatch.setattr(scenarios, "fixtures_root", lambda: tmp_path)
        with pytest.raises(StageError, match="missing fixture file"):
            load_scenario("park")

    def test_out_of_bounds_manifest_is_reported(self, tmp_path, monkeypatch):
        shutil.copytree(fixtures_root() / "park", tmp_path / "park")
        manifest_path = tmp_path / "park" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        manifest[0]["region"]["r1"] = 50  # grid is 50 rows: 0..49
        manifest_path.write_text(json.dumps(manifest))
        monkeypatch.setattr(scenarios, "fixtures_root", lambda: tmp_path)
        with pytest.raises(StageError, match="out of grid bounds"):
            load_scenario("park")

    def test_bad_stat_is_reported(self, tmp_path, monkeypatch):
        shutil.copytree(fixtures_root() / "park", tmp_path / "park")
        manifest_path = tmp_path / "park" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        manifest[0]["stat"] = "median"
        manifest_path.write_text(json.dumps(manifest))
        monkeypatch.setattr(scenarios, "fixtures_root", lambda: tmp_path)
        with pytest.raises(StageError, match="unknown manifest stat"):
            load_scenario("park")

    def test_mission_config_applies_pinned_settings(self):
        fixture = load_scenario("park")
        config = mission_config(fixture)
        assert config.rows == fixture.settings["rows"]
        assert config.seed == fixture.settings["seed"]
        assert config.map_path == fixture.map_path
        override = mission_config(fixture, rows=10, n_inf=100)
        assert override.rows == 10
        assert override.n_inf == 100


# --------------------------------------------------------------------------
# manifest evaluation


MANIFEST = [
    {
        "label": "hot corner",
        "region": {"r0": 0, "c0": 0, "r1": 1, "c1": 1},
        "stat": "mean",
        "op": ">",
        "value": 0.5,
    },
    {
        "label": "cold edge",
        "region": {"r0": 3, "c0": 0, "r1": 3, "c1": 3},
        "stat": "max",
        "op": "<",
        "value": 0.1,
    },
    {
        "label": "floor",
        "region": {"r0": 0, "c0": 0, "r1": 0, "c1": 0},
        "stat": "min",
        "op": ">",
        "value": 0.95,
    },
]


class TestEvaluateManifest:
    def test_statistics_and_verdicts(self):
        values = np.zeros((4, 4))
        values[0:2, 0:2] = [[1.0, 0.8], [0.6, 0.4]]
        report = evaluate_manifest(make_landscape(values), MANIFEST)
        assert [row["passed"] for row in report] == [True, True, True]
        assert report[0]["actual"] == pytest.approx(0.7)
        assert report[1]["actual"] == 0.0
        assert report[2]["actual"] == 1.0

    def test_region_bounds_are_inclusive(self):
        values = np.zeros((4, 4))
        values[1, 1] = 1.0
        manifest = [
            {
                "label": "includes r1c1",
                "region": {"r0": 0, "c0": 0, "r1": 1, "c1": 1},
                "stat": "max",
                "op": ">",
                "value": 0.9,
            }
        ]
        report = evaluate_manifest(make_landscape(values), manifest)
        assert report[0]["passed"] is True

    def test_failures_are_reported_not_raised(self):
        report = evaluate_manifest(make_landscape(np.zeros((4, 4))), MANIFEST)
        assert [row["passed"] for row in report] == [False, True, False]

    def test_format_report_lines(self):
        values = np.zeros((4, 4))
        report = evaluate_manifest(make_landscape(values), MANIFEST[:1])
        (line,) = format_report(report)
        assert line.startswith("[FAIL]")
        assert "mean(rows 0..1 cols 0..1) > 0.5" in line
        assert "actual 0.0000" in line
        values[:] = 1.0
        report = evaluate_manifest(make_landscape(values), MANIFEST[:1])
        (line,) = format_report(report)
        assert line.startswith("[pass]")


# --------------------------------------------------------------------------
# scenario runs (structural; the pinned full runs are acceptance tests)


class TestRunScenario:
    def test_substituted_rules_drive_the_report(self):
        # An always-true program turns every > assertion into a pass and
        # every < assertion into a failure, making the report decidable
        # without sampling noise.
        fixture = load_scenario("park")
        landscape, report = run_scenario(
            fixture,
            rules_text="landscape(R, C) :- ready. ready. query(landscape(R, C)).",
            n_inf=8,
            n_ensemble=4,
        )
        assert landscape.values.shape == (50, 50)
        assert np.array_equal(landscape.values, np.ones((50, 50)))
        manifest = fixture.manifest()
        assert len(report) == len(manifest)
        for row in report:
            assert row["passed"] is (row["op"] == ">")

    def test_report_rows_extend_manifest_entries(self):
        fixture = load_scenario("park")
        _, report = run_scenario(
            fixture,
            rules_text="landscape(R, C) :- ready. ready. query(landscape(R, C)).",
            n_inf=8,
            n_ensemble=4,
        )
        for row in report:
            assert set(row) >= {"region", "stat", "op", "value", "actual", "passed"}


# --------------------------------------------------------------------------
# interpolation study


class TestInterpStudy:
    def test_requires_resolutions(self):
        fixture = load_scenario("park")
        with pytest.raises(ValueError, match="at least one resolution"):
            run_interp_study(fixture, [], 200)

    def test_reference_must_be_finest(self):
        fixture = load_scenario("park")
        with pytest.raises(ValueError, match="reference resolution"):
            run_interp_study(fixture, [25, 50], 50)

    def test_small_study_produces_scores(self):
        fixture = load_scenario("park")
        rows = run_interp_study(fixture, [2, 4], 8, n_inf=30)
        assert [row["resolution"] for row in rows] == [2, 4]
        for row in rows:
            assert 0.0 <= row["mse"] <= 1.0

    def test_csv_round_trip(self, tmp_path):
        rows = [
            {"resolution": 25, "mse": 0.0123456789012345},
            {"resolution": 50, "mse": 0.0065},
        ]
        path = tmp_path / "interp.csv"
        write_interp_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "resolution,mse"
        assert len(lines) == 3
        res, score = lines[1].split(",")
        assert int(res) == 25
        assert float(score) == rows[0]["mse"]
