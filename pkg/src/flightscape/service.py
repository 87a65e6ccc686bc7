"""HTTP surface over the mission pipeline.

Endpoints:
  GET  /api/health        liveness probe
  POST /api/parse         syntax-check a rule program
  POST /api/pml           compute a landscape (sync for desk-scale grids)
  GET  /api/pml/{job}     poll a queued landscape job
  DELETE /api/pml/{job}   cancel a queued job

Desk-scale requests (up to 200x200 cells) are answered synchronously;
anything larger is queued on a single-worker executor and polled by
job id, so at most one large inference runs at a time.

Malformed request bodies come back as 400, rule syntax errors as 422
with {line, column, message}; both leave the service running.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import ingest
from .hplp import ParseError, parse_program
from .hplp.ast import render_atom
from .landscape import compute_pml, split
from .pcm import GridSpec, build_clause_db
from .pipeline import (
    StageError,
    build_ensembles,
    cached_clause_db,
    clause_db_cache_key,
)
from .uncertainty import AffineErrorModel

SYNC_CELL_LIMIT = 200 * 200


class BadRequest(Exception):
    pass


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True).encode()


def _compact_atom(atom) -> str:
    return render_atom(atom).replace(", ", ",")


def _require(payload: dict, key: str, kind, label: str):
    value = payload.get(key)
    if not isinstance(value, kind):
        raise BadRequest(f"{key!r} must be {label}")
    return value


def _resolve_inputs(payload: dict):
    """Normalize a /api/pml payload into in-memory pipeline inputs.

    Returns (document, raw_mapping, error_dict_or_None, defaults) where
    defaults carries grid/params fallbacks for fixture-backed requests.
    """
    has_ref = "map_ref" in payload
    has_doc = "geojson" in payload
    if has_ref == has_doc:
        raise BadRequest("exactly one of 'map_ref' or 'geojson' is required")

    defaults: dict = {}
    if has_ref:
        from .scenarios import load_scenario

        ref = _require(payload, "map_ref", str, "a scenario name")
        try:
            fixture = load_scenario(ref)
        except StageError as exc:
            raise BadRequest(exc.message)
        document = json.loads(fixture.map_path.read_text())
        raw_mapping = payload.get("mapping")
        if raw_mapping is None:
            raw_mapping = json.loads(fixture.mapping_path.read_text())
        if "error_model" in payload:
            error_dict = payload["error_model"]
        else:
            error_dict = json.loads(fixture.errors_path.read_text())
        defaults = dict(fixture.settings)
    else:
        document = _require(payload, "geojson", dict, "a GeoJSON FeatureCollection")
        raw_mapping = _require(payload, "mapping", list, "a list of mapping entries")
        error_dict = payload.get("error_model")

    if not isinstance(raw_mapping, list):
        raise BadRequest("'mapping' must be a list of mapping entries")
    if error_dict is not None and not isinstance(error_dict, dict):
        raise BadRequest("'error_model' must be an object or null")
    return document, raw_mapping, error_dict, defaults


def _resolve_grid(payload: dict, defaults: dict) -> GridSpec:
    grid_dict = payload.get("grid")
    if grid_dict is None:
        if not defaults:
            raise BadRequest("'grid' is required with inline geojson")
        grid_dict = {
            "origin_lat": defaults["origin_lat"],
            "origin_lon": defaults["origin_lon"],
            "width_m": defaults["width_m"],
            "height_m": defaults["height_m"],
            "rows": defaults["rows"],
            "cols": defaults["cols"],
        }
    if not isinstance(grid_dict, dict):
        raise BadRequest("'grid' must be an object")
    try:
        return GridSpec.from_dict(grid_dict)
    except Exception as exc:
        raise BadRequest(f"bad grid: {exc}")


def _resolve_params(payload: dict, defaults: dict) -> dict:
    params = payload.get("params") or {}
    if not isinstance(params, dict):
        raise BadRequest("'params' must be an object")
    merged = {
        "n_ensemble": defaults.get("n_ensemble", 50),
        "n_inf": defaults.get("n_inf", 2500),
        "seed": defaults.get("seed", 0),
        "tiling_s": defaults.get("tiling_s", 0),
    }
    for key in merged:
        if key in params:
            if not isinstance(params[key], int) or isinstance(params[key], bool):
                raise BadRequest(f"params.{key} must be an integer")
            merged[key] = params[key]
    if merged["n_ensemble"] < 1 or merged["n_inf"] < 1:
        raise BadRequest("ensemble and sample counts must be at least 1")
    if merged["tiling_s"] < 0:
        raise BadRequest("tiling factor must be non-negative")
    return merged


def create_app(cache_dir: Optional[Path] = None,
               workers: Optional[int] = None) -> FastAPI:
    executor = ThreadPoolExecutor(max_workers=1)
    jobs: dict[str, Future] = {}
    jobs_lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="flightscape", docs_url=None, redoc_url=None,
                  lifespan=lifespan)

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    def compute_landscape(payload: dict) -> dict:
        document, raw_mapping, error_dict, defaults = _resolve_inputs(payload)
        grid = _resolve_grid(payload, defaults)
        params = _resolve_params(payload, defaults)
        rules = _require(payload, "rules", str, "the rule program text")
        program = parse_program(rules)  # ParseError handled by callers

        try:
            mapping = ingest.FeatureTypeMapping.from_json(raw_mapping)
            bundle = ingest.load_geojson(document, mapping, grid.origin)
            model = AffineErrorModel.zero() if error_dict is None \
                else AffineErrorModel.from_dict(error_dict)
            ensembles = build_ensembles(bundle, model, params["n_ensemble"], params["seed"])
            key = clause_db_cache_key(
                _canonical(document), _canonical(raw_mapping),
                _canonical(error_dict) if error_dict is not None else b"",
                grid, params["n_ensemble"], params["seed"])
            db = cached_clause_db(cache_dir, key, lambda: build_clause_db(ensembles, grid))
            from .hplp.semantics import InferenceParams

            landscape = compute_pml(
                program, db,
                InferenceParams(sample_count=params["n_inf"], seed=params["seed"]),
                plan=split(grid, params["tiling_s"]),
                workers=workers,
                n_ensemble=params["n_ensemble"])
        except (ingest.IngestError, StageError, ValueError, KeyError) as exc:
            raise BadRequest(str(exc))
        return landscape.to_dict()

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.post("/api/parse")
    async def parse(payload: dict):
        rules = payload.get("rules")
        if not isinstance(rules, str):
            return JSONResponse(status_code=400,
                                content={"error": "'rules' must be the program text"})
        try:
            program = parse_program(rules)
        except ParseError as exc:
            return JSONResponse(status_code=422, content={
                "ok": False, "line": exc.line, "column": exc.column,
                "message": exc.message,
            })
        return {"ok": True,
                "queries": [_compact_atom(q.atom) for q in program.queries]}

    @app.post("/api/pml")
    async def pml(payload: dict):
        try:
            # Validate shape and rules up front so queued jobs can only
            # fail on compute, never on request problems.
            _, _, _, defaults = _resolve_inputs(payload)
            grid = _resolve_grid(payload, defaults)
            _resolve_params(payload, defaults)
            rules = _require(payload, "rules", str, "the rule program text")
            parse_program(rules)
        except BadRequest as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except ParseError as exc:
            return JSONResponse(status_code=422, content={
                "ok": False, "line": exc.line, "column": exc.column,
                "message": exc.message,
            })

        if grid.rows * grid.cols <= SYNC_CELL_LIMIT:
            try:
                return compute_landscape(payload)
            except BadRequest as exc:
                return JSONResponse(status_code=400, content={"error": str(exc)})

        job = uuid.uuid4().hex
        future = executor.submit(compute_landscape, payload)
        with jobs_lock:
            jobs[job] = future
        return JSONResponse(status_code=202, content={"job": job, "status": "queued"})

    @app.get("/api/pml/{job}")
    async def poll(job: str):
        with jobs_lock:
            future = jobs.get(job)
        if future is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})
        if future.cancelled():
            return {"job": job, "status": "cancelled"}
        if not future.done():
            status = "running" if future.running() else "queued"
            return {"job": job, "status": status}
        exc = future.exception()
        if exc is not None:
            return {"job": job, "status": "failed", "error": str(exc)}
        return {"job": job, "status": "done", "result": future.result()}

    @app.delete("/api/pml/{job}")
    async def cancel(job: str):
        with jobs_lock:
            future = jobs.get(job)
        if future is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})
        if future.cancel():
            return {"job": job, "status": "cancelled"}
        return JSONResponse(status_code=409,
                            content={"error": "job already running or finished"})

    return app


app = create_app()
