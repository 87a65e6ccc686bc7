"""Coordinate handling and exact geometry in a local Cartesian frame.

Polar (lat/lon) inputs are projected onto a tangent plane at a declared
origin using a local equirectangular projection. All downstream geometry
(distances, containment) is plain 2D Euclidean math in meters. Valid for
mission-sized extents (below ~10 km the projection error is negligible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

_DEG = math.pi / 180.0


class GeoError(ValueError):
    """Raised for out-of-domain coordinates or malformed geometry."""


@dataclass(frozen=True)
class PolarLocation:
    """WGS84 coordinate in degrees."""

    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.latitude <= 90.0):
            raise GeoError(f"latitude {self.latitude} outside [-90, 90]")
        if not (-180.0 <= self.longitude <= 180.0):
            raise GeoError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class CartesianLocation:
    """Local tangent-plane coordinate in meters relative to a declared origin."""

    east: float
    north: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.east) and math.isfinite(self.north)):
            raise GeoError(f"non-finite cartesian location ({self.east}, {self.north})")


def project(p: PolarLocation, origin: PolarLocation) -> CartesianLocation:
    """Project a polar location onto the tangent plane at ``origin``.

    east = dlon * R * cos(origin.lat), north = dlat * R, angles in radians.
    Exact inverse of :func:`unproject`.
    """
    if abs(p.latitude) >= 89.0 or abs(origin.latitude) >= 89.0:
        raise GeoError("projection undefined near the poles (|lat| >= 89)")
    east = (p.longitude - origin.longitude) * _DEG * EARTH_RADIUS_M * math.cos(
        origin.latitude * _DEG
    )
    north = (p.latitude - origin.latitude) * _DEG * EARTH_RADIUS_M
    return CartesianLocation(east=east, north=north)


def unproject(c: CartesianLocation, origin: PolarLocation) -> PolarLocation:
    """Algebraic inverse of :func:`project` for the same origin."""
    latitude = origin.latitude + c.north / (_DEG * EARTH_RADIUS_M)
    longitude = origin.longitude + c.east / (
        _DEG * EARTH_RADIUS_M * math.cos(origin.latitude * _DEG)
    )
    return PolarLocation(latitude=latitude, longitude=longitude)


_KINDS = ("point", "line", "polygon")


@dataclass(frozen=True)
class Geometry:
    """A point, polyline, or simple polygon with vertices in meters.

    Polygons are stored open (first vertex is not repeated at the end);
    closure is implicit. Vertex array has shape (n, 2) with columns
    (east, north) and is frozen after construction.
    """

    kind: str
    vertices: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise GeoError(f"unknown geometry kind {self.kind!r}")
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeoError(f"vertices must have shape (n, 2), got {v.shape}")
        if not np.isfinite(v).all():
            raise GeoError("geometry contains non-finite coordinates")
        minimum = {"point": 1, "line": 2, "polygon": 3}[self.kind]
        if v.shape[0] < minimum:
            raise GeoError(f"{self.kind} needs at least {minimum} vertices, got {v.shape[0]}")
        if self.kind == "point" and v.shape[0] != 1:
            raise GeoError("point geometry must have exactly 1 vertex")
        if self.kind == "polygon" and np.array_equal(v[0], v[-1]):
            v = v[:-1]
            if v.shape[0] < 3:
                raise GeoError("polygon needs at least 3 distinct vertices")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @staticmethod
    def point(east: float, north: float) -> "Geometry":
        return Geometry("point", np.array([[east, north]]))

    @staticmethod
    def line(coords: "np.ndarray | list") -> "Geometry":
        return Geometry("line", np.asarray(coords, dtype=np.float64))

    @staticmethod
    def polygon(coords: "np.ndarray | list") -> "Geometry":
        return Geometry("polygon", np.asarray(coords, dtype=np.float64))

    @property
    def centroid(self) -> np.ndarray:
        """Arithmetic mean of the vertices (the transform fixed point)."""
        return self.vertices.mean(axis=0)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Segment endpoint arrays (a, b), closing the ring for polygons."""
        v = self.vertices
        if self.kind == "point":
            return v, v
        if self.kind == "polygon":
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]


@dataclass(frozen=True)
class TypedFeatureSet:
    """All features sharing one map type tag (e.g. building, primary)."""

    type_tag: str
    features: tuple[Geometry, ...]
    line_width: float = 5.0  # buffer for occupancy of line/point features

    def __post_init__(self) -> None:
        if not self.type_tag:
            raise GeoError("type_tag must be non-empty")
        if self.line_width <= 0:
            raise GeoError("line_width must be positive")
        object.__setattr__(self, "features", tuple(self.features))


def segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from each point to each segment, shape (npoints, nsegments).

    Degenerate segments (a == b) reduce to point distance.
    """
    points = np.asarray(points, dtype=np.float64)
    d = b - a  # (m, 2)
    rel = points[:, None, :] - a[None, :, :]  # (n, m, 2)
    denom = (d * d).sum(axis=1)  # (m,)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom > 0.0, (rel * d[None, :, :]).sum(axis=2) / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    diff = points[:, None, :] - closest
    return np.sqrt((diff * diff).sum(axis=2))


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd point-in-polygon test, boundary counted as inside.

    ``polygon`` is an open (n, 2) ring. Returns a boolean array per point.
    """
    points = np.asarray(points, dtype=np.float64)
    poly = np.asarray(polygon, dtype=np.float64)
    x, y = points[:, 0], points[:, 1]
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)

    # Even-odd ray cast towards +east.
    cond = (y1[None, :] > y[:, None]) != (y2[None, :] > y[:, None])
    with np.errstate(invalid="ignore", divide="ignore"):
        x_cross = (x2 - x1)[None, :] * (y[:, None] - y1[None, :]) / (y2 - y1)[None, :] + x1[None, :]
    crossings = cond & (x[:, None] < x_cross)
    inside = crossings.sum(axis=1) % 2 == 1

    # Boundary points count as inside (conservative for occupancy).
    on_edge = segment_distances(points, poly, np.roll(poly, -1, axis=0)).min(axis=1) <= 1e-9
    return inside | on_edge


def distance_to_geometry(p: CartesianLocation, g: Geometry) -> float:
    """Euclidean distance from ``p`` to the nearest point of ``g``.

    Zero for points on the geometry or strictly inside a polygon.
    """
    pt = np.array([[p.east, p.north]])
    if g.kind == "polygon" and bool(points_in_polygon(pt, g.vertices)[0]):
        return 0.0
    a, b = g.segments()
    return float(segment_distances(pt, a, b).min())


def covers(p: CartesianLocation, g: Geometry, line_width: float) -> bool:
    """Occupancy test: polygon containment, or proximity for lines/points."""
    if line_width <= 0:
        raise GeoError("line_width must be positive")
    pt = np.array([[p.east, p.north]])
    if g.kind == "polygon":
        return bool(points_in_polygon(pt, g.vertices)[0])
    a, b = g.segments()
    return float(segment_distances(pt, a, b).min()) <= line_width / 2.0
