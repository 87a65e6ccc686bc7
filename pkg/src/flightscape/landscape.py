"""Mission landscapes: per-cell constraint probabilities over a grid.

``compute_pml`` evaluates the mission program once per cell.  The grid
can be split into 4^s tiles that run on a process pool, but tiling is
purely a scheduling concern: every cell draws from its own stream keyed
by (seed, "pml", r, c), so the output is bitwise identical for every
tiling factor and worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import geo
from .geo import GeoError
from .hplp.ast import Const, MissionProgram, Var
from .hplp.semantics import CellProgramTemplate, GroundAtom, InferenceParams
from .pcm import DistributionalClauseDB, GridSpec, cell_center, emit_clauses


@dataclass(frozen=True, eq=False)
class MissionLandscape:
    """Row-major raster of P(mission constraints hold at cell)."""

    grid: GridSpec
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise GeoError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        if np.isnan(values).any() or (values < 0).any() or (values > 1).any():
            raise GeoError("landscape values must lie in [0, 1]")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "values": self.values.ravel().tolist(),
            "metadata": dict(self.metadata),
        }

    @staticmethod
    def from_dict(doc: dict) -> "MissionLandscape":
        grid = GridSpec.from_dict(doc["grid"])
        values = np.array(doc["values"], dtype=np.float64).reshape(grid.shape)
        return MissionLandscape(grid=grid, values=values, metadata=doc.get("metadata", {}))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle)

    @staticmethod
    def load(path: str) -> "MissionLandscape":
        with open(path, encoding="utf-8") as handle:
            return MissionLandscape.from_dict(json.load(handle))

    def to_csv(self, path: str) -> None:
        """Per-cell rows `r,c,lat,lon,probability`."""
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["r", "c", "lat", "lon", "probability"])
            for r in range(self.grid.rows):
                for c in range(self.grid.cols):
                    spot = geo.unproject(cell_center(self.grid, r, c), self.grid.origin)
                    writer.writerow(
                        [r, c, repr(spot.latitude), repr(spot.longitude),
                         repr(float(self.values[r, c]))]
                    )

    def to_png(self, path: str, transparency_below: float = 0.1) -> None:
        """Heatmap: red at 0 blending to cyan at 1, low cells transparent."""
        v = self.values
        rgba = np.empty((self.grid.rows, self.grid.cols, 4), dtype=np.uint8)
        rgba[..., 0] = np.round(255 * (1.0 - v))
        rgba[..., 1] = np.round(255 * v)
        rgba[..., 2] = np.round(255 * v)
        rgba[..., 3] = np.where(v < transparency_below, 0, 255)
        Image.fromarray(rgba, mode="RGBA").save(path)


@dataclass(frozen=True)
class TilingPlan:
    """4^s rectangular tiles (r0, r1, c0, c1), half-open, covering the grid."""

    s: int
    tiles: tuple[tuple[int, int, int, int], ...]


def split(grid: GridSpec, s: int) -> TilingPlan:
    """Recursively quarter the grid s times; odd spans split floor/ceil."""
    if s < 0:
        raise ValueError(f"tiling factor must be >= 0: {s}")
    tiles = [(0, grid.rows, 0, grid.cols)]
    for _ in range(s):
        step = []
        for r0, r1, c0, c1 in tiles:
            rm = r0 + (r1 - r0) // 2
            cm = c0 + (c1 - c0) // 2
            step.extend(
                [(r0, rm, c0, cm), (r0, rm, cm, c1), (rm, r1, c0, cm), (rm, r1, cm, c1)]
            )
        tiles = step
    return TilingPlan(s=s, tiles=tuple(tiles))


@dataclass(frozen=True, eq=False)
class ValidityMask:
    """Boolean validity per cell: probability >= threshold."""

    grid: GridSpec
    mask: np.ndarray
    threshold: float


def threshold_mask(landscape: MissionLandscape, tau: float) -> ValidityMask:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1]: {tau}")
    mask = landscape.values >= tau
    mask.flags.writeable = False
    return ValidityMask(grid=landscape.grid, mask=mask, threshold=tau)


# --------------------------------------------------------------------------
# PML computation


def _grid_bindings(program: MissionProgram) -> dict[str, Const]:
    """Bind the query's grid variables to the placeholder cell constants."""
    queries = program.queries
    if not queries:
        raise ValueError("program declares no query")
    atom = queries[0].atom
    if len(atom.args) != 2:
        raise ValueError(
            f"grid query must have two arguments, got {len(atom.args)}"
        )
    bindings: dict[str, Const] = {}
    for arg, name in zip(atom.args, ("r", "c")):
        if isinstance(arg, Var):
            bindings[arg.name] = Const(name)
    return bindings


def _slot_keys(db: DistributionalClauseDB) -> tuple[dict, dict]:
    over_keys = {tag: ("over", "r", "c", tag) for tag in db.over}
    dist_keys = {tag: ("distance", "r", "c", tag) for tag in db.distance}
    return over_keys, dist_keys


def _compute_tile(args) -> list[tuple[int, int, float]]:
    template, params, tile, prob_payload, dist_payload = args
    r0, r1, c0, c1 = tile
    out = []
    for r in range(r0, r1):
        for c in range(c0, c1):
            prob_values = {
                key: float(raster[r - r0, c - c0])
                for key, raster in prob_payload.items()
            }
            dist_values = {
                key: (float(mean[r - r0, c - c0]), float(var[r - r0, c - c0]))
                for key, (mean, var) in dist_payload.items()
            }
            p = template.infer_cell(("pml", r, c), params, prob_values, dist_values)
            out.append((r, c, p))
    return out


def compute_pml(
    program: MissionProgram,
    db: DistributionalClauseDB,
    params: InferenceParams,
    plan: TilingPlan | None = None,
    workers: int | None = None,
    n_ensemble: int = 0,
) -> MissionLandscape:
    """Evaluate the program's grid query at every cell of the DB's grid.

    The per-cell program is ground once and its clause parameters rebound
    per cell; the result equals specializing and inferring each cell in
    isolation, bitwise, because streams are keyed by cell coordinates.
    """
    grid = db.grid
    if plan is None:
        plan = split(grid, 0)
    bindings = _grid_bindings(program)
    template = CellProgramTemplate(program, emit_clauses(db, 0, 0), bindings)
    over_keys, dist_keys = _slot_keys(db)

    tasks = []
    for tile in plan.tiles:
        r0, r1, c0, c1 = tile
        if r0 == r1 or c0 == c1:
            continue
        prob_payload = {
            key: db.over[tag][r0:r1, c0:c1] for tag, key in over_keys.items()
        }
        dist_payload = {
            key: (db.distance[tag][0][r0:r1, c0:c1], db.distance[tag][1][r0:r1, c0:c1])
            for tag, key in dist_keys.items()
        }
        tasks.append((template, params, tile, prob_payload, dist_payload))

    values = np.zeros(grid.shape)
    if workers is None:
        workers = 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compute_tile, tasks))
    else:
        results = [_compute_tile(task) for task in tasks]
    for chunk in results:
        for r, c, p in chunk:
            values[r, c] = p

    metadata = {
        "program_hash": hashlib.sha256(program.render().encode("utf-8")).hexdigest(),
        "db_hash": db.content_hash(),
        "seed": params.seed,
        "n_ensemble": n_ensemble,
        "n_inf": params.sample_count,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return MissionLandscape(grid=grid, values=values, metadata=metadata)


# --------------------------------------------------------------------------
# resolution study helpers


def interpolate_bilinear(src: MissionLandscape, target: GridSpec) -> MissionLandscape:
    """Resample onto ``target`` by bilinear interpolation of cell centers.

    Grids must share origin and extent.  Beyond the outermost source
    centers the edge value extends (clamped indexing), and outputs are
    clamped to [0, 1].
    """
    sg = src.grid
    if (
        sg.origin != target.origin
        or abs(sg.width - target.width) > 1e-9
        or abs(sg.height - target.height) > 1e-9
    ):
        raise GeoError("interpolation requires identical origin and extent")

    cell_w = sg.width / sg.cols
    cell_h = sg.height / sg.rows
    east = -target.width / 2.0 + (np.arange(target.cols) + 0.5) * target.width / target.cols
    north = target.height / 2.0 - (np.arange(target.rows) + 0.5) * target.height / target.rows

    col_f = np.clip((east + sg.width / 2.0) / cell_w - 0.5, 0.0, sg.cols - 1.0)
    row_f = np.clip((sg.height / 2.0 - north) / cell_h - 0.5, 0.0, sg.rows - 1.0)

    c0 = np.floor(col_f).astype(int)
    r0 = np.floor(row_f).astype(int)
    c1 = np.minimum(c0 + 1, sg.cols - 1)
    r1 = np.minimum(r0 + 1, sg.rows - 1)
    fc = col_f - c0
    fr = row_f - r0

    v = src.values
    top = v[np.ix_(r0, c0)] * (1 - fc)[None, :] + v[np.ix_(r0, c1)] * fc[None, :]
    bottom = v[np.ix_(r1, c0)] * (1 - fc)[None, :] + v[np.ix_(r1, c1)] * fc[None, :]
    out = top * (1 - fr)[:, None] + bottom * fr[:, None]
    out = np.clip(out, 0.0, 1.0)

    metadata = dict(src.metadata)
    metadata["interpolated_from"] = [sg.rows, sg.cols]
    return MissionLandscape(grid=target, values=out, metadata=metadata)


def mse(a: MissionLandscape, b: MissionLandscape) -> float:
    if a.grid != b.grid:
        raise GeoError("MSE requires identical grids")
    return float(np.mean((a.values - b.values) ** 2))


# --------------------------------------------------------------------------
# tiling benchmark


def benchmark_tiling(
    program: MissionProgram,
    db: DistributionalClauseDB,
    params: InferenceParams,
    s_values: list[int],
    workers: int,
) -> list[dict]:
    """Time compute_pml per tiling factor and verify outputs match.

    Any cell-level difference between tilings is an internal consistency
    failure, since tiling must never affect results.
    """
    if not s_values:
        raise ValueError("s_values must be non-empty")
    rows = []
    reference: np.ndarray | None = None
    for s in s_values:
        plan = split(db.grid, s)
        start = time.perf_counter()
        pml = compute_pml(program, db, params, plan=plan, workers=workers)
        elapsed = time.perf_counter() - start
        if reference is None:
            reference = pml.values
        elif not np.array_equal(reference, pml.values):
            raise RuntimeError(
                f"tiling s={s} changed the landscape; tiling must be "
                "scheduling-only (internal consistency failure)"
            )
        rows.append({"s": s, "tiles": len(plan.tiles), "seconds": elapsed})
    return rows


def write_timing_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["s", "tiles", "seconds"])
        for row in rows:
            writer.writerow([row["s"], row["tiles"], repr(row["seconds"])])
