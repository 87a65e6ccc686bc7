"""Probabilistic clause maps: per-cell distance and occupancy statistics.

Feature ensembles are collapsed into two per-cell summaries for each map
type: the moment-matched Gaussian of the distance to the nearest feature
(``distance(r, c, tag) ~ normal(mu, var).``) and the occupancy frequency
(``p::over(r, c, tag).``).  The resulting database is a plain raster
bundle that serializes to JSON, so clause generation and inference can
run as separate pipeline stages.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geo
from .geo import CartesianLocation, GeoError, PolarLocation, TypedFeatureSet
from .hplp.ast import Atom, Const, DistFact, ProbFact, Statement
from .uncertainty import FeatureEnsemble, GaussianParams

log = logging.getLogger(__name__)

# Distance reported when a feature type has no features at all.  Any
# `<` comparison against it is false and any `>` comparison is true.
DISTANCE_SENTINEL = math.inf


@dataclass(frozen=True)
class GridSpec:
    """A rows x cols raster of square-ish cells centered on origin.

    Row 0 is the northernmost row, matching image raster order.
    """

    origin: PolarLocation
    width: float
    height: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise GeoError(f"grid extent must be positive: {self.width}x{self.height}")
        if self.rows < 1 or self.cols < 1:
            raise GeoError(f"grid resolution must be >= 1: {self.rows}x{self.cols}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dict(self) -> dict:
        return {
            "origin_lat": self.origin.latitude,
            "origin_lon": self.origin.longitude,
            "width_m": self.width,
            "height_m": self.height,
            "rows": self.rows,
            "cols": self.cols,
        }

    @staticmethod
    def from_dict(doc: dict) -> "GridSpec":
        return GridSpec(
            origin=PolarLocation(doc["origin_lat"], doc["origin_lon"]),
            width=doc["width_m"],
            height=doc["height_m"],
            rows=doc["rows"],
            cols=doc["cols"],
        )


def cell_center(grid: GridSpec, r: int, c: int) -> CartesianLocation:
    """Center of cell (r, c) in the grid's local east/north frame."""
    if not (0 <= r < grid.rows and 0 <= c < grid.cols):
        raise GeoError(f"cell ({r}, {c}) outside {grid.rows}x{grid.cols} grid")
    east = -grid.width / 2.0 + (c + 0.5) * grid.width / grid.cols
    north = grid.height / 2.0 - (r + 0.5) * grid.height / grid.rows
    return CartesianLocation(east, north)


def cell_centers(grid: GridSpec) -> np.ndarray:
    """All cell centers, row-major, shape (rows*cols, 2) as (east, north)."""
    east = -grid.width / 2.0 + (np.arange(grid.cols) + 0.5) * grid.width / grid.cols
    north = grid.height / 2.0 - (np.arange(grid.rows) + 0.5) * grid.height / grid.rows
    ee, nn = np.meshgrid(east, north)
    return np.column_stack([ee.ravel(), nn.ravel()])


def _min_distance_field(points: np.ndarray, features: TypedFeatureSet) -> np.ndarray:
    """Distance from each point to the nearest feature of the set."""
    best = np.full(points.shape[0], np.inf)
    for feature in features.features:
        a, b = feature.segments()
        d = geo.segment_distances(points, a, b).min(axis=1)
        if feature.kind == "polygon":
            d = np.where(geo.points_in_polygon(points, feature.vertices), 0.0, d)
        best = np.minimum(best, d)
    return best


def _coverage_field(points: np.ndarray, features: TypedFeatureSet) -> np.ndarray:
    """Boolean occupancy of each point by any feature of the set."""
    covered = np.zeros(points.shape[0], dtype=bool)
    for feature in features.features:
        if feature.kind == "polygon":
            covered |= geo.points_in_polygon(points, feature.vertices)
        else:
            a, b = feature.segments()
            near = geo.segment_distances(points, a, b).min(axis=1)
            covered |= near <= features.line_width / 2.0
    return covered


def compute_distance_clauses(
    ensemble: FeatureEnsemble, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell (mean, variance) of the min distance over ensemble samples.

    Each ensemble sample contributes one distance per cell: the minimum
    over all features of that sample.  The per-cell sample collection is
    then moment matched.  An ensemble whose source has no features yields
    the (+inf, 0) sentinel everywhere.
    """
    points = cell_centers(grid)
    if not ensemble.source.features:
        log.warning("feature type %r has no features; emitting sentinel distances",
                    ensemble.type_tag)
        return np.full(grid.shape, DISTANCE_SENTINEL), np.zeros(grid.shape)
    n = ensemble.sample_count
    distances = np.empty((points.shape[0], n))
    for k, sample in enumerate(ensemble.samples):
        distances[:, k] = _min_distance_field(points, sample)
    mean = distances.mean(axis=1)
    if n > 1:
        variance = distances.var(axis=1, ddof=1)
        # constant collections have zero spread by definition; the two-pass
        # formula leaks ulp^2 noise there because the mean itself rounds
        variance[np.ptp(distances, axis=1) == 0.0] = 0.0
    else:
        variance = np.zeros(points.shape[0])
    return mean.reshape(grid.shape), variance.reshape(grid.shape)


def compute_over_clauses(ensemble: FeatureEnsemble, grid: GridSpec) -> np.ndarray:
    """Per-cell occupancy frequency: fraction of samples where any feature
    covers the cell center."""
    points = cell_centers(grid)
    if not ensemble.source.features:
        log.warning("feature type %r has no features; occupancy is zero",
                    ensemble.type_tag)
        return np.zeros(grid.shape)
    hits = np.zeros(points.shape[0], dtype=np.int64)
    for sample in ensemble.samples:
        hits += _coverage_field(points, sample)
    return (hits / ensemble.sample_count).reshape(grid.shape)


def gaussian_exceedance(params: GaussianParams, threshold: float) -> float:
    """P(X > threshold) for X ~ N(mean, variance).

    Variance zero is the Dirac case: 1 if the mean exceeds the threshold,
    else 0.  An infinite mean therefore gives 1 for any finite threshold.
    """
    if params.variance == 0.0:
        return 1.0 if params.mean > threshold else 0.0
    z = (threshold - params.mean) / math.sqrt(2.0 * params.variance)
    return 0.5 * math.erfc(z)


@dataclass(frozen=True, eq=False)
class DistributionalClauseDB:
    """Immutable per-tag rasters of distance Gaussians and occupancy.

    Equality is by content hash; the rasters themselves are arrays.
    """

    grid: GridSpec
    distance: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    over: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        distance = {}
        for tag, (mean, variance) in self.distance.items():
            mean = np.array(mean, dtype=np.float64)
            variance = np.array(variance, dtype=np.float64)
            if mean.shape != self.grid.shape or variance.shape != self.grid.shape:
                raise GeoError(f"distance raster for {tag!r} does not match the grid")
            if (variance < 0).any():
                raise GeoError(f"negative distance variance for {tag!r}")
            mean.flags.writeable = False
            variance.flags.writeable = False
            distance[tag] = (mean, variance)
        over = {}
        for tag, probs in self.over.items():
            probs = np.array(probs, dtype=np.float64)
            if probs.shape != self.grid.shape:
                raise GeoError(f"occupancy raster for {tag!r} does not match the grid")
            if (probs < 0).any() or (probs > 1).any():
                raise GeoError(f"occupancy raster for {tag!r} outside [0, 1]")
            probs.flags.writeable = False
            over[tag] = probs
        object.__setattr__(self, "distance", distance)
        object.__setattr__(self, "over", over)

    def distance_params(self, tag: str, r: int, c: int) -> GaussianParams:
        mean, variance = self.distance[tag]
        return GaussianParams(float(mean[r, c]), float(variance[r, c]))

    def over_probability(self, tag: str, r: int, c: int) -> float:
        return float(self.over[tag][r, c])

    @property
    def empty_tags(self) -> tuple[str, ...]:
        """Tags whose distance raster is the empty-feature sentinel."""
        return tuple(
            tag for tag, (mean, _) in sorted(self.distance.items())
            if np.isinf(mean).all()
        )

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "distance": {
                tag: {
                    "mean": [None if math.isinf(v) else v for v in mean.ravel()],
                    "variance": variance.ravel().tolist(),
                }
                for tag, (mean, variance) in sorted(self.distance.items())
            },
            "over": {
                tag: probs.ravel().tolist()
                for tag, probs in sorted(self.over.items())
            },
        }

    @staticmethod
    def from_dict(doc: dict) -> "DistributionalClauseDB":
        grid = GridSpec.from_dict(doc["grid"])
        distance = {}
        for tag, rasters in doc.get("distance", {}).items():
            mean = np.array(
                [math.inf if v is None else v for v in rasters["mean"]]
            ).reshape(grid.shape)
            variance = np.array(rasters["variance"]).reshape(grid.shape)
            distance[tag] = (mean, variance)
        over = {
            tag: np.array(values).reshape(grid.shape)
            for tag, values in doc.get("over", {}).items()
        }
        return DistributionalClauseDB(grid=grid, distance=distance, over=over)

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistributionalClauseDB):
            return NotImplemented
        return self.content_hash() == other.content_hash()

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle)

    @staticmethod
    def load(path: str) -> "DistributionalClauseDB":
        with open(path, encoding="utf-8") as handle:
            return DistributionalClauseDB.from_dict(json.load(handle))


def build_clause_db(
    ensembles: list[FeatureEnsemble], grid: GridSpec
) -> DistributionalClauseDB:
    """Distance and occupancy rasters for every ensemble's type tag."""
    distance = {}
    over = {}
    for ensemble in ensembles:
        distance[ensemble.type_tag] = compute_distance_clauses(ensemble, grid)
        over[ensemble.type_tag] = compute_over_clauses(ensemble, grid)
    return DistributionalClauseDB(grid=grid, distance=distance, over=over)


def emit_clauses(db: DistributionalClauseDB, r: int, c: int) -> tuple[Statement, ...]:
    """Clause statements describing cell (r, c), one per tag.

    The emitted atoms always name the cell with the placeholder constants
    ``r`` and ``c``; cell identity enters through the parameter values
    (and, during inference, the per-cell sampling stream).  This keeps the
    ground structure of every cell program identical, which is what lets
    a single grounding be reused across the whole grid.
    """
    if not (0 <= r < db.grid.rows and 0 <= c < db.grid.cols):
        raise GeoError(f"cell ({r}, {c}) outside {db.grid.rows}x{db.grid.cols} grid")
    cell = (Const("r"), Const("c"))
    statements: list[Statement] = []
    for tag in sorted(db.distance):
        params = db.distance_params(tag, r, c)
        statements.append(
            DistFact(
                Atom("distance", cell + (Const(tag),)),
                "normal",
                (params.mean, params.variance),
            )
        )
    for tag in sorted(db.over):
        statements.append(
            ProbFact(db.over_probability(tag, r, c), Atom("over", cell + (Const(tag),)))
        )
    return tuple(statements)
