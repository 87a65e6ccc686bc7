"""Bundled mission scenarios and the experiment drivers built on them.

Four self-contained fixtures ship with the package: an urban park
bordered by a major road, an over-water bay survey, a signalled road
crossing, and a rail-corridor inspection. Each fixture directory holds
the map (GeoJSON), the tag mapping, the error model, the rule program,
a scenario.json with grid and sampling parameters, and a manifest of
region assertions the computed landscape must satisfy.

Manifest regions use inclusive cell bounds: {r0, c0, r1, c1} selects
rows r0..r1 and columns c0..c1, both ends included.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .landscape import MissionLandscape, interpolate_bilinear, mse
from .pipeline import MissionConfig, StageError, run_mission

SCENARIO_NAMES = ("park", "bay", "crossing", "rails")

_STATS = ("mean", "min", "max")
_OPS = (">", "<")


def fixtures_root() -> Path:
    return Path(__file__).resolve().parent / "fixtures"


@dataclass(frozen=True)
class ScenarioFixture:
    """One committed scenario: file paths plus pinned run parameters."""

    name: str
    map_path: Path
    mapping_path: Path
    errors_path: Path
    rules_path: Path
    manifest_path: Path
    settings: dict

    def manifest(self) -> list[dict]:
        manifest = json.loads(self.manifest_path.read_text())
        rows, cols = self.settings["rows"], self.settings["cols"]
        for entry in manifest:
            _check_assertion(entry, rows, cols)
        return manifest

    def rules_text(self) -> str:
        return self.rules_path.read_text()


def _check_assertion(entry: dict, rows: int, cols: int) -> None:
    region = entry["region"]
    r0, c0, r1, c1 = region["r0"], region["c0"], region["r1"], region["c1"]
    if not (0 <= r0 <= r1 < rows and 0 <= c0 <= c1 < cols):
        raise StageError("fixture", f"manifest region out of grid bounds: {region}")
    if entry["stat"] not in _STATS:
        raise StageError("fixture", f"unknown manifest stat: {entry['stat']!r}")
    if entry["op"] not in _OPS:
        raise StageError("fixture", f"unknown manifest op: {entry['op']!r}")


def load_scenario(name: str) -> ScenarioFixture:
    if name not in SCENARIO_NAMES:
        raise StageError("fixture", f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    root = fixtures_root() / name
    paths = {
        "map_path": root / "map.geojson",
        "mapping_path": root / "mapping.json",
        "errors_path": root / "errors.json",
        "rules_path": root / "rules.pl",
        "manifest_path": root / "manifest.json",
    }
    settings_path = root / "scenario.json"
    for path in list(paths.values()) + [settings_path]:
        if not path.is_file():
            raise StageError("fixture", f"missing fixture file: {path}")
    fixture = ScenarioFixture(name=name, settings=json.loads(settings_path.read_text()), **paths)
    fixture.manifest()  # validate eagerly
    return fixture


def mission_config(fixture: ScenarioFixture, **overrides) -> MissionConfig:
    """MissionConfig from a fixture's pinned settings, with overrides."""
    s = fixture.settings
    kwargs = dict(
        map_path=fixture.map_path,
        mapping_path=fixture.mapping_path,
        errors_path=fixture.errors_path,
        rules_path=fixture.rules_path,
        origin_lat=s["origin_lat"],
        origin_lon=s["origin_lon"],
        width_m=s["width_m"],
        height_m=s["height_m"],
        rows=s["rows"],
        cols=s["cols"],
        n_ensemble=s["n_ensemble"],
        n_inf=s["n_inf"],
        seed=s["seed"],
        tiling_s=s.get("tiling_s", 0),
    )
    kwargs.update(overrides)
    return MissionConfig(**kwargs)


def evaluate_manifest(landscape: MissionLandscape, manifest: Sequence[dict]) -> list[dict]:
    """Check each region assertion against the landscape.

    Returns one report row per assertion with the observed statistic
    and a passed flag; never raises on a failed assertion.
    """
    report = []
    for entry in manifest:
        region = entry["region"]
        block = landscape.values[region["r0"]:region["r1"] + 1,
                                 region["c0"]:region["c1"] + 1]
        actual = {"mean": block.mean, "min": block.min, "max": block.max}[entry["stat"]]()
        actual = float(actual)
        passed = actual > entry["value"] if entry["op"] == ">" else actual < entry["value"]
        report.append({**entry, "actual": actual, "passed": bool(passed)})
    return report


def format_report(report: Sequence[dict]) -> list[str]:
    lines = []
    for row in report:
        region = row["region"]
        where = f"rows {region['r0']}..{region['r1']} cols {region['c0']}..{region['c1']}"
        verdict = "pass" if row["passed"] else "FAIL"
        lines.append(f"[{verdict}] {row['stat']}({where}) {row['op']} {row['value']}"
                     f" (actual {row['actual']:.4f})")
    return lines


def run_scenario(fixture: ScenarioFixture, *, rules_text: Optional[str] = None,
                 workers: Optional[int] = None,
                 **overrides) -> tuple[MissionLandscape, list[dict]]:
    """Compute a fixture's landscape and evaluate its manifest.

    rules_text substitutes the rule program while keeping everything
    else pinned; that is how the crossing signal variants are compared.
    """
    manifest = fixture.manifest()
    if rules_text is None:
        config = mission_config(fixture, workers=workers, **overrides)
        landscape = run_mission(config)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            rules_path = Path(tmp) / "rules.pl"
            rules_path.write_text(rules_text)
            config = mission_config(fixture, rules_path=rules_path,
                                    workers=workers, **overrides)
            landscape = run_mission(config)
    return landscape, evaluate_manifest(landscape, manifest)


def run_interp_study(fixture: ScenarioFixture, resolutions: Sequence[int],
                     reference_resolution: int, *,
                     workers: Optional[int] = None,
                     n_inf: Optional[int] = None) -> list[dict]:
    """Mean-squared interpolation error against a fine reference.

    Computes the landscape at the reference resolution, then at each
    coarser resolution; each coarse landscape is upsampled to the
    reference grid and scored with mse. All runs share the fixture's
    pinned seed, so differences come from resolution alone.
    """
    resolutions = list(resolutions)
    if not resolutions:
        raise ValueError("at least one resolution is required")
    if reference_resolution <= max(resolutions):
        raise ValueError("reference resolution must exceed every studied resolution")

    def run_at(res: int) -> MissionLandscape:
        overrides = {"rows": res, "cols": res, "workers": workers}
        if n_inf is not None:
            overrides["n_inf"] = n_inf
        config = mission_config(fixture, **overrides)
        return run_mission(config)

    reference = run_at(reference_resolution)
    rows = []
    for res in resolutions:
        coarse = run_at(res)
        upsampled = interpolate_bilinear(coarse, reference.grid)
        rows.append({"resolution": int(res), "mse": float(mse(upsampled, reference))})
    return rows


def write_interp_csv(rows: Sequence[dict], path: Path) -> None:
    lines = ["resolution,mse"]
    lines += [f"{row['resolution']},{row['mse']!r}" for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")
