"""End-to-end mission pipeline: map in, landscape out.

Chains the stages ingest -> feature ensembles -> clause database ->
rule parsing -> per-cell inference -> artifact export. Each stage
failure is wrapped in a StageError so callers (CLI, service) can
report which stage broke without unwinding tracebacks.

The clause database is the expensive, rules-independent intermediate;
it is cached on disk keyed by a content hash of everything upstream of
it, so editing rules and recomputing touches inference only.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import ingest
from .hplp import MissionProgram, ParseError, parse_program
from .hplp.semantics import InferenceParams
from .landscape import MissionLandscape, compute_pml, split
from .pcm import DistributionalClauseDB, GridSpec, build_clause_db
from .uncertainty import AffineErrorModel, FeatureEnsemble, generate_ensemble

log = logging.getLogger(__name__)

DEFAULT_OVERPASS = "https://overpass-api.de/api/interpreter"


class StageError(Exception):
    """Pipeline failure tagged with the stage that produced it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message


@dataclass
class MissionConfig:
    """Everything needed for one landscape computation.

    Exactly one of map_path or bbox must be set; bbox switches the
    ingest stage to a live Overpass fetch.
    """

    mapping_path: Path
    rules_path: Path
    origin_lat: float
    origin_lon: float
    width_m: float
    height_m: float
    rows: int
    cols: int
    map_path: Optional[Path] = None
    bbox: Optional[tuple[float, float, float, float]] = None
    overpass_endpoint: str = DEFAULT_OVERPASS
    errors_path: Optional[Path] = None
    n_ensemble: int = 50
    n_inf: int = 2500
    seed: int = 0
    tiling_s: int = 0
    workers: Optional[int] = None
    out_path: Optional[Path] = None
    png_path: Optional[Path] = None
    csv_path: Optional[Path] = None
    cache_dir: Optional[Path] = None
    extra_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mapping_path = Path(self.mapping_path)
        self.rules_path = Path(self.rules_path)
        if self.map_path is not None:
            self.map_path = Path(self.map_path)
        if self.errors_path is not None:
            self.errors_path = Path(self.errors_path)
        for name in ("out_path", "png_path", "csv_path", "cache_dir"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))

    def validate(self) -> None:
        if (self.map_path is None) == (self.bbox is None):
            raise StageError("config", "exactly one of map_path or bbox is required")
        for label, path in (("mapping", self.mapping_path), ("rules", self.rules_path),
                            ("map", self.map_path), ("errors", self.errors_path)):
            if path is not None and not Path(path).is_file():
                raise StageError("config", f"{label} file not found: {path}")
        if self.rows < 1 or self.cols < 1:
            raise StageError("config", "resolution must be at least 1x1")
        if self.n_ensemble < 1 or self.n_inf < 1:
            raise StageError("config", "ensemble and sample counts must be at least 1")
        if self.tiling_s < 0:
            raise StageError("config", "tiling factor must be non-negative")

    def grid(self) -> GridSpec:
        from .geo import PolarLocation

        return GridSpec(
            origin=PolarLocation(self.origin_lat, self.origin_lon),
            width=self.width_m,
            height=self.height_m,
            rows=self.rows,
            cols=self.cols,
        )

    def inference_params(self) -> InferenceParams:
        return InferenceParams(sample_count=self.n_inf, seed=self.seed)


def _stage(stage: str, exc: Exception) -> StageError:
    if isinstance(exc, StageError):
        return exc
    return StageError(stage, str(exc))


def load_error_model(path: Optional[Path]) -> AffineErrorModel:
    """Error model from a config file, or the exact (zero-error) model."""
    if path is None:
        return AffineErrorModel.zero()
    return AffineErrorModel.load(path)


def build_ensembles(bundle: ingest.MapBundle, model: AffineErrorModel,
                    n_ensemble: int, seed: int) -> list[FeatureEnsemble]:
    return [generate_ensemble(fs, model, n_ensemble, seed) for fs in bundle.feature_sets]


def clause_db_cache_key(map_bytes: bytes, mapping_bytes: bytes,
                        errors_bytes: bytes, grid: GridSpec,
                        n_ensemble: int, seed: int) -> str:
    """Content hash of every input the clause database depends on."""
    digest = hashlib.sha256()
    for chunk in (map_bytes, mapping_bytes, errors_bytes):
        digest.update(hashlib.sha256(chunk).digest())
    tail = json.dumps({"grid": grid.to_dict(), "n_ensemble": n_ensemble, "seed": seed},
                      sort_keys=True)
    digest.update(tail.encode())
    return digest.hexdigest()


def cached_clause_db(cache_dir: Optional[Path], key: Optional[str],
                     builder) -> DistributionalClauseDB:
    """Build the clause DB, reusing a cached copy when one exists.

    Writes go through a temp file and os.replace so concurrent readers
    never observe a partial database.
    """
    if cache_dir is None or key is None:
        return builder()
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    target = cache_dir / f"db-{key}.json"
    if target.is_file():
        try:
            return DistributionalClauseDB.load(target)
        except Exception as exc:
            log.warning("discarding unreadable cache entry %s: %s", target, exc)
    db = builder()
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            json.dump(db.to_dict(), handle)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return db


def parse_rules(text: str) -> MissionProgram:
    try:
        return parse_program(text)
    except ParseError as exc:
        raise StageError("rules", str(exc)) from exc


def run_mission(config: MissionConfig) -> MissionLandscape:
    """Execute the full pipeline described by config.

    Returns the landscape; also writes any configured output files.
    On failure every output file created by this run is removed, so a
    non-zero exit never leaves half-written artifacts behind.
    """
    config.validate()
    grid = config.grid()

    try:
        mapping = ingest.FeatureTypeMapping.load(config.mapping_path)
        if config.map_path is not None:
            document = json.loads(config.map_path.read_text())
            map_bytes = config.map_path.read_bytes()
        else:
            document = ingest.fetch_overpass(config.overpass_endpoint, config.bbox, mapping)
            map_bytes = json.dumps(document, sort_keys=True).encode()
        bundle = ingest.load_geojson(document, mapping, grid.origin)
    except StageError:
        raise
    except Exception as exc:
        raise _stage("ingest", exc) from exc

    try:
        model = load_error_model(config.errors_path)
        ensembles = build_ensembles(bundle, model, config.n_ensemble, config.seed)
    except Exception as exc:
        raise _stage("uncertainty", exc) from exc

    try:
        errors_bytes = config.errors_path.read_bytes() if config.errors_path else b""
        key = clause_db_cache_key(map_bytes, config.mapping_path.read_bytes(),
                                  errors_bytes, grid, config.n_ensemble, config.seed)
        db = cached_clause_db(config.cache_dir, key,
                              lambda: build_clause_db(ensembles, grid))
    except Exception as exc:
        raise _stage("pcm", exc) from exc

    program = parse_rules(config.rules_path.read_text())

    try:
        plan = split(grid, config.tiling_s)
        landscape = compute_pml(program, db, config.inference_params(),
                                plan=plan, workers=config.workers,
                                n_ensemble=config.n_ensemble)
        if config.extra_metadata:
            landscape.metadata.update(config.extra_metadata)
    except Exception as exc:
        raise _stage("inference", exc) from exc

    written: list[Path] = []
    try:
        if config.out_path is not None:
            landscape.save(config.out_path)
            written.append(config.out_path)
        if config.png_path is not None:
            landscape.to_png(config.png_path)
            written.append(config.png_path)
        if config.csv_path is not None:
            landscape.to_csv(config.csv_path)
            written.append(config.csv_path)
    except Exception as exc:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        # the file being written when the failure hit may exist half-done
        for path in (config.out_path, config.png_path, config.csv_path):
            if path is not None and path.exists() and path not in written:
                try:
                    path.unlink()
                except OSError:
                    pass
        raise _stage("output", exc) from exc

    return landscape
