"""Command-line interface.

Subcommands:
  compute      full pipeline from map + rules to a landscape file
  parse        syntax-check a rule file and list its queries
  bench-tiling time the tiling factors on a bundled scenario
  interp-error interpolation error study against a fine reference
  fetch        pull map features from an Overpass endpoint
  serve        start the HTTP service
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .hplp import parse_diagnostics, parse_program
from .pipeline import DEFAULT_OVERPASS, MissionConfig, StageError, run_mission


def _floats(text: str, n: int, label: str) -> tuple[float, ...]:
    # Called from command handlers, after argparse: report problems as
    # stage errors so main() turns them into a clean exit.
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise StageError("args", f"{label} expects {n} comma-separated values")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise StageError("args", f"bad {label}: {exc}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_compute(sub) -> None:
    p = sub.add_parser("compute", help="compute a mission landscape")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", dest="map_path", type=Path, help="GeoJSON feature file")
    src.add_argument("--bbox", help="south,west,north,east: fetch features live instead")
    p.add_argument("--mapping", required=True, type=Path, help="tag-to-type mapping JSON")
    p.add_argument("--errors", type=Path, help="error-model JSON (default: exact features)")
    p.add_argument("--rules", required=True, type=Path, help="rule program file")
    p.add_argument("--origin", required=True, help="lat,lon of the grid center")
    p.add_argument("--extent", required=True, help="width,height of the grid in meters")
    p.add_argument("--resolution", required=True, help="rows,cols of the grid")
    p.add_argument("--ensemble", type=int, default=50, help="map samples per feature type")
    p.add_argument("--samples", type=int, default=2500, help="inference samples per cell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tiling", type=int, default=0, metavar="S", help="quad-split factor")
    p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--cache-dir", type=Path, help="clause-database cache directory")
    p.add_argument("--endpoint", default=DEFAULT_OVERPASS, help="Overpass endpoint for --bbox")
    p.add_argument("--out", required=True, type=Path, help="landscape JSON output path")
    p.add_argument("--png", type=Path, help="also write a heatmap PNG")
    p.add_argument("--csv", type=Path, help="also write a per-cell CSV")


def _cmd_compute(args) -> int:
    origin = _floats(args.origin, 2, "--origin")
    extent = _floats(args.extent, 2, "--extent")
    rows, cols = (int(v) for v in _floats(args.resolution, 2, "--resolution"))
    bbox = _floats(args.bbox, 4, "--bbox") if args.bbox else None
    config = MissionConfig(
        map_path=args.map_path,
        bbox=bbox,
        overpass_endpoint=args.endpoint,
        mapping_path=args.mapping,
        errors_path=args.errors,
        rules_path=args.rules,
        origin_lat=origin[0],
        origin_lon=origin[1],
        width_m=extent[0],
        height_m=extent[1],
        rows=rows,
        cols=cols,
        n_ensemble=args.ensemble,
        n_inf=args.samples,
        seed=args.seed,
        tiling_s=args.tiling,
        workers=args.workers,
        cache_dir=args.cache_dir,
        out_path=args.out,
        png_path=args.png,
        csv_path=args.csv,
    )
    landscape = run_mission(config)
    v = landscape.values
    print(f"wrote {args.out} ({v.shape[0]}x{v.shape[1]} cells, "
          f"probability mean {v.mean():.4f}, max {v.max():.4f})")
    return 0


def _cmd_parse(args) -> int:
    text = Path(args.rules).read_text()
    diagnostics = parse_diagnostics(text)
    if diagnostics:
        for d in diagnostics:
            print(f"line {d['line']}, column {d['column']}: {d['message']}", file=sys.stderr)
        return 1
    program = parse_program(text)
    queries = [q for q in program.queries]
    print(f"ok: {len(program.statements)} statements, {len(queries)} queries")
    from .hplp.ast import render_atom

    for q in queries:
        print(f"query: {render_atom(q.atom)}")
    return 0


def _cmd_bench_tiling(args) -> int:
    from .landscape import benchmark_tiling, write_timing_csv
    from .pcm import build_clause_db
    from .pipeline import build_ensembles, load_error_model, parse_rules
    from .scenarios import load_scenario, mission_config
    import flightscape.ingest as ingest

    fixture = load_scenario(args.fixture)
    rows, cols = (int(v) for v in _floats(args.resolution, 2, "--resolution"))
    config = mission_config(fixture, rows=rows, cols=cols)
    if args.samples is not None:
        config.n_inf = args.samples
    grid = config.grid()
    mapping = ingest.FeatureTypeMapping.load(config.mapping_path)
    bundle = ingest.load_geojson(json.loads(config.map_path.read_text()), mapping, grid.origin)
    model = load_error_model(config.errors_path)
    db = build_clause_db(build_ensembles(bundle, model, config.n_ensemble, config.seed), grid)
    program = parse_rules(config.rules_path.read_text())

    report = benchmark_tiling(program, db, config.inference_params(),
                              s_values=args.s, workers=args.workers)
    for row in report:
        print(f"s={row['s']} tiles={row['tiles']} seconds={row['seconds']:.3f}")
    base = next(row["seconds"] for row in report if row["s"] == min(r["s"] for r in report))
    best = min(row["seconds"] for row in report)
    print(f"best/base ratio: {best / base:.3f}")
    if args.out:
        write_timing_csv(report, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_interp_error(args) -> int:
    from .scenarios import load_scenario, run_interp_study, write_interp_csv

    fixture = load_scenario(args.fixture)
    rows = run_interp_study(fixture, args.resolutions, args.reference,
                            workers=args.workers, n_inf=args.samples)
    for row in rows:
        print(f"resolution={row['resolution']} mse={row['mse']:.3e}")
    if args.out:
        write_interp_csv(rows, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_fetch(args) -> int:
    from . import ingest

    mapping = ingest.FeatureTypeMapping.load(args.mapping)
    bbox = _floats(args.bbox, 4, "--bbox")
    document = ingest.fetch_overpass(args.endpoint, bbox, mapping)
    text = json.dumps(document, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out} ({len(document['features'])} features)")
    else:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(cache_dir=args.cache_dir, workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flightscape",
                                     description="probabilistic mission landscapes")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_compute(sub)

    p = sub.add_parser("parse", help="syntax-check a rule program")
    p.add_argument("--rules", required=True, type=Path)

    p = sub.add_parser("bench-tiling", help="time tiling factors on a bundled scenario")
    p.add_argument("--s", type=_int_list, default=[0, 1, 2, 3], help="comma list of factors")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--fixture", default="park")
    p.add_argument("--resolution", default="100,100")
    p.add_argument("--samples", type=int, default=500, help="inference samples per cell")
    p.add_argument("--out", type=Path, help="timing CSV path")

    p = sub.add_parser("interp-error", help="interpolation error study")
    p.add_argument("--resolutions", type=_int_list, default=[25, 50, 100, 150])
    p.add_argument("--reference", type=int, default=200)
    p.add_argument("--fixture", default="park")
    p.add_argument("--samples", type=int, default=None, help="override fixture sample count")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, help="result CSV path")

    p = sub.add_parser("fetch", help="fetch features from an Overpass endpoint")
    p.add_argument("--bbox", required=True, help="south,west,north,east")
    p.add_argument("--mapping", required=True, type=Path)
    p.add_argument("--endpoint", default=DEFAULT_OVERPASS)
    p.add_argument("--out", type=Path, help="GeoJSON output path (default: stdout)")

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--workers", type=int, default=None)

    return parser


_COMMANDS = {
    "compute": _cmd_compute,
    "parse": _cmd_parse,
    "bench-tiling": _cmd_bench_tiling,
    "interp-error": _cmd_interp_error,
    "fetch": _cmd_fetch,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
