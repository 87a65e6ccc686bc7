"""Map feature ingestion: GeoJSON fixtures and an Overpass client.

Features are classified by an externalized key=value mapping config and
projected into the mission origin's local frame.  All committed
scenarios load from GeoJSON so the test suite never touches the
network; the Overpass client exists for fetching fresh extracts and is
exercised only against recorded transcripts.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import requests

from . import geo
from .geo import Geometry, PolarLocation, TypedFeatureSet

log = logging.getLogger(__name__)


class IngestError(ValueError):
    """Malformed input document, mapping config, or upstream failure."""


@dataclass(frozen=True)
class MappingEntry:
    """One source tag pattern and the feature type it produces."""

    match: str  # "key=value"
    type_tag: str
    line_width: float = 5.0

    def __post_init__(self) -> None:
        if "=" not in self.match:
            raise IngestError(f"mapping match must be key=value: {self.match!r}")
        if not self.type_tag:
            raise IngestError("mapping type must be non-empty")
        if self.line_width <= 0:
            raise IngestError(f"line width must be positive: {self.line_width}")

    @property
    def key(self) -> str:
        return self.match.split("=", 1)[0]

    @property
    def value(self) -> str:
        return self.match.split("=", 1)[1]


@dataclass(frozen=True)
class FeatureTypeMapping:
    entries: tuple[MappingEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        tags = [e.type_tag for e in self.entries]
        if len(set(tags)) != len(tags):
            raise IngestError(f"duplicate type tags in mapping: {tags}")

    @property
    def type_tags(self) -> tuple[str, ...]:
        return tuple(e.type_tag for e in self.entries)

    def classify(self, properties: dict) -> MappingEntry | None:
        """Match a feature's properties: an explicit `type` naming one of
        the configured tags wins, then key=value pairs in entry order."""
        declared = properties.get("type")
        for entry in self.entries:
            if declared == entry.type_tag:
                return entry
        for entry in self.entries:
            if str(properties.get(entry.key)) == entry.value:
                return entry
        return None

    @staticmethod
    def from_json(doc: list) -> "FeatureTypeMapping":
        entries = []
        for item in doc:
            entries.append(
                MappingEntry(
                    match=item["match"],
                    type_tag=item["type"],
                    line_width=float(item.get("line_width_m", 5.0)),
                )
            )
        return FeatureTypeMapping(tuple(entries))

    @staticmethod
    def load(path: str) -> "FeatureTypeMapping":
        with open(path, encoding="utf-8") as handle:
            return FeatureTypeMapping.from_json(json.load(handle))


@dataclass(frozen=True)
class MapBundle:
    """Typed, origin-projected features plus where they came from."""

    origin: PolarLocation
    feature_sets: tuple[TypedFeatureSet, ...]
    provenance: dict = field(default_factory=dict)

    def feature_set(self, type_tag: str) -> TypedFeatureSet:
        for fs in self.feature_sets:
            if fs.type_tag == type_tag:
                return fs
        raise KeyError(type_tag)


def _project_ring(coords: list, origin: PolarLocation):
    return [
        _project_pair(lon, lat, origin)
        for lon, lat in (pair[:2] for pair in coords)
    ]


def _project_pair(lon: float, lat: float, origin: PolarLocation):
    spot = geo.project(PolarLocation(lat, lon), origin)
    return [spot.east, spot.north]


def _to_geometry(geometry: dict, origin: PolarLocation) -> Geometry | None:
    kind = geometry.get("type")
    coords = geometry.get("coordinates")
    if kind == "Point":
        east, north = _project_pair(coords[0], coords[1], origin)
        return Geometry.point(east, north)
    if kind == "LineString":
        return Geometry.line(_project_ring(coords, origin))
    if kind == "Polygon":
        # Outer ring only; interior rings are out of scope.
        return Geometry.polygon(_project_ring(coords[0], origin))
    return None


def load_geojson(
    document: dict, mapping: FeatureTypeMapping, origin: PolarLocation
) -> MapBundle:
    """Classify and project a GeoJSON FeatureCollection.

    Every mapping tag yields a feature set, possibly empty.  Features
    that match no mapping entry or use unsupported geometry kinds are
    dropped; the drop count is recorded in provenance["warnings"].
    """
    if not isinstance(document, dict) or document.get("type") != "FeatureCollection":
        raise IngestError("expected a GeoJSON FeatureCollection")
    buckets: dict[str, list[Geometry]] = {tag: [] for tag in mapping.type_tags}
    warnings = 0
    for feature in document.get("features", []):
        entry = mapping.classify(feature.get("properties") or {})
        if entry is None:
            warnings += 1
            continue
        shape = _to_geometry(feature.get("geometry") or {}, origin)
        if shape is None:
            log.warning("skipping unsupported geometry in %r feature", entry.type_tag)
            warnings += 1
            continue
        buckets[entry.type_tag].append(shape)
    feature_sets = tuple(
        TypedFeatureSet(entry.type_tag, tuple(buckets[entry.type_tag]), entry.line_width)
        for entry in mapping.entries
    )
    return MapBundle(
        origin=origin,
        feature_sets=feature_sets,
        provenance={
            "source": "fixture",
            "fetched_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "warnings": warnings,
        },
    )


def load_geojson_file(
    path: str, mapping: FeatureTypeMapping, origin: PolarLocation
) -> MapBundle:
    with open(path, encoding="utf-8") as handle:
        return load_geojson(json.load(handle), mapping, origin)


# --------------------------------------------------------------------------
# Overpass client


# Closed ways with any of these tag keys are treated as areas.
_AREA_KEYS = ("area", "building", "landuse", "leisure", "natural", "amenity")


def build_overpass_query(bbox: tuple, mapping: FeatureTypeMapping) -> str:
    """Overpass QL with one way clause per mapping entry.

    ``bbox`` is (south, west, north, east) in degrees.
    """
    south, west, north, east = bbox
    if not (south < north and west < east):
        raise IngestError(f"invalid bbox: {bbox}")
    if not mapping.entries:
        raise IngestError("mapping has no entries; nothing to query")
    box = f"({south},{west},{north},{east})"
    clauses = "".join(
        f'    way["{e.key}"="{e.value}"]{box};\n' for e in mapping.entries
    )
    return f"[out:json][timeout:25];\n(\n{clauses});\nout body; >; out skel qt;\n"


def _elements_to_geojson(elements: list) -> dict:
    nodes = {
        el["id"]: (el["lon"], el["lat"]) for el in elements if el.get("type") == "node"
    }
    features = []
    for el in elements:
        if el.get("type") == "node" and el.get("tags"):
            features.append(
                {
                    "type": "Feature",
                    "properties": dict(el["tags"]),
                    "geometry": {"type": "Point", "coordinates": list(nodes[el["id"]])},
                }
            )
        elif el.get("type") == "way":
            refs = el.get("nodes", [])
            coords = [list(nodes[ref]) for ref in refs if ref in nodes]
            if len(coords) < 2:
                continue
            tags = el.get("tags", {})
            closed = len(refs) > 3 and refs[0] == refs[-1]
            if closed and any(k in tags for k in _AREA_KEYS):
                shape = {"type": "Polygon", "coordinates": [coords]}
            else:
                shape = {"type": "LineString", "coordinates": coords}
            features.append(
                {"type": "Feature", "properties": dict(tags), "geometry": shape}
            )
    return {"type": "FeatureCollection", "features": features}


def fetch_overpass(
    endpoint: str,
    bbox: tuple,
    mapping: FeatureTypeMapping,
    session=None,
    timeout: float = 30.0,
    backoff: float = 1.0,
) -> dict:
    """POST an Overpass QL query and convert the reply to GeoJSON.

    Rate-limit responses (HTTP 429) are retried up to three attempts
    with exponential backoff; other failures raise immediately with the
    query attached for debugging.
    """
    query = build_overpass_query(bbox, mapping)
    client = session if session is not None else requests
    last_status = None
    for attempt in range(3):
        if attempt:
            time.sleep(backoff * 2 ** (attempt - 1))
        try:
            response = client.post(endpoint, data={"data": query}, timeout=timeout)
        except requests.RequestException as exc:
            raise IngestError(f"overpass request failed: {exc}\nquery:\n{query}") from exc
        last_status = response.status_code
        if response.status_code == 429:
            log.warning("overpass rate limited (attempt %d)", attempt + 1)
            continue
        if response.status_code != 200:
            raise IngestError(
                f"overpass returned HTTP {response.status_code}\nquery:\n{query}"
            )
        return _elements_to_geojson(response.json().get("elements", []))
    raise IngestError(f"overpass rate limited after 3 attempts (HTTP {last_status})")
