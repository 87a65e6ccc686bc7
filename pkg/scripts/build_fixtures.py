"""Regenerate the bundled scenario fixtures.

Feature geometry is authored in local Cartesian meters around each
scenario origin and converted to GeoJSON lon/lat with the same tangent
plane projection the loader applies on the way back in, so the
round trip reproduces the intended coordinates to within float noise.

Run from the repository root:

    python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from flightscape.geo import CartesianLocation, PolarLocation, unproject

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "flightscape" / "fixtures"


def lonlat(origin: PolarLocation, east: float, north: float) -> list[float]:
    p = unproject(CartesianLocation(east, north), origin)
    return [p.longitude, p.latitude]


def ring(origin: PolarLocation, corners: list[tuple[float, float]]) -> list[list[float]]:
    pts = [lonlat(origin, e, n) for e, n in corners]
    pts.append(pts[0])
    return pts


def rect(origin, e0, n0, e1, n1):
    return ring(origin, [(e0, n0), (e1, n0), (e1, n1), (e0, n1)])


def feature(geometry: dict, properties: dict) -> dict:
    return {"type": "Feature", "geometry": geometry, "properties": properties}


def polygon(origin, corners, props):
    return feature({"type": "Polygon", "coordinates": [ring(origin, corners)]}, props)


def box(origin, e0, n0, e1, n1, props):
    return feature({"type": "Polygon", "coordinates": [rect(origin, e0, n0, e1, n1)]}, props)


def line(origin, pts, props):
    coords = [lonlat(origin, e, n) for e, n in pts]
    return feature({"type": "LineString", "coordinates": coords}, props)


def point(origin, e, n, props):
    return feature({"type": "Point", "coordinates": lonlat(origin, e, n)}, props)


def collection(features: list[dict]) -> dict:
    return {"type": "FeatureCollection", "features": features}


def dump(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(doc, str):
        path.write_text(doc)
    else:
        path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")


TRANSLATION_ONLY = {
    "default": {
        "translation_mean": [0.0, 0.0],
        "translation_cov": [[10.0, 0.0], [0.0, 10.0]],
        "rotation_sigma": 0.0,
        "scale_sigma": 0.0,
        "shear_sigma": 0.0,
    }
}


def scenario_meta(name, lat, lon, width, height, **extra):
    meta = {
        "name": name,
        "origin_lat": lat,
        "origin_lon": lon,
        "width_m": width,
        "height_m": height,
        "rows": 50,
        "cols": 50,
        "n_ensemble": 50,
        "n_inf": 2500,
        "seed": 7,
        "tiling_s": 0,
    }
    meta.update(extra)
    return meta


def build_park() -> None:
    root = FIXTURES / "park"
    origin = PolarLocation(49.0, 8.0)

    feats = [
        box(origin, -70, -30, -10, 60, {"leisure": "park", "name": "stadtpark"}),
        line(origin, [(30, -80), (30, -30)], {"highway": "primary"}),
        line(origin, [(30, -30), (30, 25)], {"highway": "primary"}),
        line(origin, [(30, 25), (30, 80)], {"highway": "primary"}),
        box(origin, 51, -64, 59, -56, {"building": "yes"}),
        box(origin, 66, -24, 74, -16, {"building": "yes"}),
        box(origin, 58, 6, 66, 14, {"building": "yes"}),
        box(origin, 68, 36, 76, 44, {"building": "yes"}),
        box(origin, 62, 61, 70, 69, {"building": "yes"}),
        point(origin, 0, 0, {"operator": "yes"}),
    ]
    dump(root / "map.geojson", collection(feats))

    dump(root / "mapping.json", [
        {"match": "leisure=park", "type": "park"},
        {"match": "highway=primary", "type": "primary", "line_width_m": 12.0},
        {"match": "highway=secondary", "type": "secondary", "line_width_m": 8.0},
        {"match": "highway=tertiary", "type": "tertiary", "line_width_m": 6.0},
        {"match": "building=yes", "type": "building"},
        {"match": "operator=yes", "type": "operator"},
    ])

    dump(root / "errors.json", TRANSLATION_ONLY)

    dump(root / "rules.pl", """\
% Urban park mission: fly over the park or near a road, keep the
% operator in sight, and retain enough charge to return home.

registered.
initial_charge ~ normal(90, 5).
discharge ~ normal(-0.1, 0.0025).
weight ~ normal(2.0, 0.1).

1/10::fog; 9/10::clear.

vlos(R, C) :-
    fog, distance(R, C, operator) < 250;
    clear, distance(R, C, operator) < 500.

open(R, C) :- registered, vlos(R, C), weight < 25.

can_return(R, C) :-
    B is initial_charge, O is discharge,
    D is distance(R, C, operator),
    0 < B + (2 * O * D).

permit(R, C) :-
    over(R, C, park);
    distance(R, C, primary) < 15;
    distance(R, C, secondary) < 10;
    distance(R, C, tertiary) < 5.

landscape(R, C) :- permit(R, C), open(R, C), can_return(R, C).

query(landscape(R, C)).
""")

    dump(root / "manifest.json", [
        {"region": {"r0": 9, "c0": 6, "r1": 30, "c1": 18}, "stat": "mean", "op": ">", "value": 0.9},
        {"region": {"r0": 9, "c0": 6, "r1": 30, "c1": 18}, "stat": "min", "op": ">", "value": 0.7},
        {"region": {"r0": 2, "c0": 33, "r1": 47, "c1": 35}, "stat": "mean", "op": ">", "value": 0.9},
        {"region": {"r0": 0, "c0": 44, "r1": 49, "c1": 49}, "stat": "mean", "op": "<", "value": 0.05},
    ])

    dump(root / "scenario.json", scenario_meta("park", 49.0, 8.0, 160.0, 160.0))


def build_bay() -> None:
    root = FIXTURES / "bay"
    origin = PolarLocation(37.8, -122.3)

    feats = [
        box(origin, 20, -150, 150, 150, {"natural": "water", "name": "inner bay"}),
        point(origin, -100, 0, {"operator": "yes"}),
    ]
    dump(root / "map.geojson", collection(feats))

    dump(root / "mapping.json", [
        {"match": "natural=water", "type": "water"},
        {"match": "operator=yes", "type": "operator"},
    ])

    dump(root / "errors.json", TRANSLATION_ONLY)

    dump(root / "rules.pl", """\
% Over-water survey: beyond close range the drone may only fly where
% it is actually over the bay, and only in clear weather.

registered.
initial_charge ~ normal(90, 5).
discharge ~ normal(-0.05, 0.0004).

3/10::fog; 7/10::clear.

vlos(R, C) :-
    distance(R, C, operator) < 100;
    clear, over(R, C, water), distance(R, C, operator) < 400.

open(R, C) :- registered, vlos(R, C).

can_return(R, C) :-
    B is initial_charge, O is discharge,
    D is distance(R, C, operator),
    0 < B + (2 * O * D).

landscape(R, C) :- open(R, C), can_return(R, C).

query(landscape(R, C)).
""")

    dump(root / "manifest.json", [
        {"region": {"r0": 21, "c0": 3, "r1": 28, "c1": 12}, "stat": "mean", "op": ">", "value": 0.9},
        {"region": {"r0": 5, "c0": 38, "r1": 44, "c1": 47}, "stat": "mean", "op": ">", "value": 0.6},
        {"region": {"r0": 5, "c0": 38, "r1": 44, "c1": 47}, "stat": "mean", "op": "<", "value": 0.8},
        {"region": {"r0": 0, "c0": 1, "r1": 3, "c1": 20}, "stat": "mean", "op": "<", "value": 0.05},
    ])

    dump(root / "scenario.json", scenario_meta("bay", 37.8, -122.3, 300.0, 300.0))


def build_crossing() -> None:
    root = FIXTURES / "crossing"
    origin = PolarLocation(52.5, 13.4)

    feats = [
        line(origin, [(0, -150), (0, 150)], {"highway": "primary", "name": "north axis"}),
        line(origin, [(-150, 0), (150, 0)], {"highway": "primary", "name": "east axis"}),
        box(origin, -15, -15, 15, 15, {"crossing": "yes"}),
        point(origin, -60, 60, {"operator": "yes"}),
    ]
    dump(root / "map.geojson", collection(feats))

    dump(root / "mapping.json", [
        {"match": "highway=primary", "type": "primary", "line_width_m": 10.0},
        {"match": "crossing=yes", "type": "crossing"},
        {"match": "operator=yes", "type": "operator"},
    ])

    dump(root / "errors.json", TRANSLATION_ONLY)

    dump(root / "rules.pl", """\
% Road crossing: stay well away from traffic, except directly above
% the signalled crossing while the signal holds traffic back.

1.0::green_signal.

clear_of_traffic(R, C) :- distance(R, C, primary) > 10.
clear_of_traffic(R, C) :- over(R, C, crossing), green_signal.

vlos(R, C) :- distance(R, C, operator) < 400.

landscape(R, C) :- clear_of_traffic(R, C), vlos(R, C).

query(landscape(R, C)).
""")

    dump(root / "manifest.json", [
        {"region": {"r0": 24, "c0": 24, "r1": 25, "c1": 25}, "stat": "mean", "op": ">", "value": 0.9},
        {"region": {"r0": 4, "c0": 24, "r1": 14, "c1": 25}, "stat": "mean", "op": "<", "value": 0.05},
        {"region": {"r0": 4, "c0": 33, "r1": 16, "c1": 45}, "stat": "mean", "op": ">", "value": 0.9},
    ])

    dump(root / "scenario.json", scenario_meta("crossing", 52.5, 13.4, 300.0, 300.0))


def build_rails() -> None:
    root = FIXTURES / "rails"
    origin = PolarLocation(50.1, 8.7)

    feats = [
        line(origin, [(0, -200), (0, 200)], {"railway": "rail", "name": "main line"}),
        line(origin, [(0, 40), (200, 40)], {"railway": "rail", "name": "branch"}),
        point(origin, 0, 0, {"base": "yes"}),
    ]
    dump(root / "map.geojson", collection(feats))

    dump(root / "mapping.json", [
        {"match": "railway=rail", "type": "rails", "line_width_m": 6.0},
        {"match": "base=yes", "type": "base"},
    ])

    dump(root / "errors.json", TRANSLATION_ONLY)

    dump(root / "rules.pl", """\
% Track inspection: hug the rail corridor while staying in control
% range of the trackside base station.

near_rails(R, C) :- distance(R, C, rails) < 20.
in_range(R, C) :- distance(R, C, base) < 150.

landscape(R, C) :- near_rails(R, C), in_range(R, C).

query(landscape(R, C)).
""")

    dump(root / "manifest.json", [
        {"region": {"r0": 18, "c0": 24, "r1": 31, "c1": 25}, "stat": "mean", "op": ">", "value": 0.9},
        {"region": {"r0": 35, "c0": 5, "r1": 45, "c1": 15}, "stat": "mean", "op": "<", "value": 0.05},
        {"region": {"r0": 0, "c0": 24, "r1": 2, "c1": 25}, "stat": "mean", "op": "<", "value": 0.05},
    ])

    dump(root / "scenario.json", scenario_meta("rails", 50.1, 8.7, 400.0, 400.0))


def build_corpus() -> None:
    root = FIXTURES / "corpus"

    dump(root / "drone_operation.pl", """\
0.9::operates_drone(X) :- person(X), owns_drone(X).

0.2::owns_drone(X) :- friend(X, Y), owns_drone(Y).

person(justus).
person(jonas).
owns_drone(justus).
friend(jonas, justus).

query(operates_drone(jonas)).
""")

    dump(root / "distance_facts.pl", """\
distance(r0, c0, building) ~ normal(20, 0.5).
distance(r1, c0, building) ~ normal(19, 0.4).

0.9::over(r0, c0, primary).
0.8::over(r1, c0, primary).
""")

    dump(root / "mission_landscape.pl", """\
registered.
initial_charge ~ normal(90, 5).
discharge ~ normal(-0.2, 0.1).
weight ~ normal(2.0, 0.1).

1/10::fog; 9/10::clear.

vlos(R, C) :-
    fog, distance(R, C, operator) < 250;
    clear, distance(R, C, operator) < 500.

open(R, C) :- registered, vlos(R, C), weight < 25.

can_return(R, C) :-
    B is initial_charge, O is discharge,
    D is distance(R, C, operator),
    0 < B + (2 * O * D).

permit(R, C) :-
    over(R, C, park);
    distance(R, C, primary) < 15;
    distance(R, C, secondary) < 10;
    distance(R, C, tertiary) < 5.

landscape(R, C) :- permit(R, C), open(R, C), can_return(R, C).

query(landscape(R, C)).
""")


def main() -> None:
    build_park()
    build_bay()
    build_crossing()
    build_rails()
    build_corpus()


if __name__ == "__main__":
    main()
