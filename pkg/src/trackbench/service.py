"""Persistence and HTTP API: scenario/run storage on disk plus a sqlite
index, exposing the orchestrator operations the UI and CLI consume.

Single-tenant: an optional static bearer token (TRACKBENCH_TOKEN) guards
mutating endpoints. Replays execute asynchronously on a bounded worker
pool; no endpoint blocks on a running replay.
"""

from __future__ import annotations

import io
import json
import os
import secrets
import shutil
import sqlite3
import threading
import time
import zipfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from fastapi import (
    Depends,
    FastAPI,
    File,
    Header,
    HTTPException,
    Query,
    Response,
    UploadFile,
)
from pydantic import BaseModel

from . import schema as schema_module
from .ingest import IngestError, load_scenario
from .model import TimeAlignment
from .persist import write_run_dir
from .plugins import PipelineConfig, PluginError, default_registry
from .replay import run_replay


def new_id() -> str:
    """Time-sortable unique id (ULID-style: ms timestamp + random suffix)."""
    return f"{int(time.time() * 1000):013d}-{secrets.token_hex(5)}"


class Store:
    """Disk layout: <data_dir>/scenarios/<id>/ bundle, <data_dir>/runs/<id>/.
    The sqlite index serializes writes behind a lock."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        (self.data_dir / "scenarios").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "runs").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._db = sqlite3.connect(self.data_dir / "index.db", check_same_thread=False)
        self._db.execute(
            "CREATE TABLE IF NOT EXISTS scenarios ("
            "id TEXT PRIMARY KEY, created_at REAL, name TEXT, path TEXT)"
        )
        self._db.execute(
            "CREATE TABLE IF NOT EXISTS runs ("
            "id TEXT PRIMARY KEY, created_at REAL, scenario_id TEXT, "
            "status TEXT, error_message TEXT, path TEXT, "
            "pipeline TEXT, seed INTEGER, alignment TEXT)"
        )
        self._db.commit()

    def scenario_dir(self, scenario_id: str) -> Path:
        return self.data_dir / "scenarios" / scenario_id

    def run_dir(self, run_id: str) -> Path:
        return self.data_dir / "runs" / run_id

    def add_scenario(self, scenario_id: str, name: str) -> None:
        with self._lock:
            self._db.execute(
                "INSERT INTO scenarios VALUES (?, ?, ?, ?)",
                (scenario_id, time.time(), name, str(self.scenario_dir(scenario_id))),
            )
            self._db.commit()

    def list_scenarios(self) -> list[dict]:
        rows = self._db.execute(
            "SELECT id, created_at, name FROM scenarios ORDER BY id"
        ).fetchall()
        return [{"id": r[0], "created_at": r[1], "name": r[2]} for r in rows]

    def get_scenario(self, scenario_id: str) -> Optional[dict]:
        row = self._db.execute(
            "SELECT id, created_at, name FROM scenarios WHERE id = ?", (scenario_id,)
        ).fetchone()
        if row is None:
            return None
        return {"id": row[0], "created_at": row[1], "name": row[2]}

    def add_run(self, run_id: str, scenario_id: str, pipeline: dict, seed: int, alignment: str) -> None:
        with self._lock:
            self._db.execute(
                "INSERT INTO runs VALUES (?, ?, ?, 'pending', NULL, ?, ?, ?, ?)",
                (
                    run_id,
                    time.time(),
                    scenario_id,
                    str(self.run_dir(run_id)),
                    json.dumps(pipeline),
                    seed,
                    alignment,
                ),
            )
            self._db.commit()

    def set_run_status(self, run_id: str, status: str, error_message: str | None = None) -> None:
        with self._lock:
            self._db.execute(
                "UPDATE runs SET status = ?, error_message = ? WHERE id = ?",
                (status, error_message, run_id),
            )
            self._db.commit()

    def get_run(self, run_id: str) -> Optional[dict]:
        row = self._db.execute(
            "SELECT id, created_at, scenario_id, status, error_message, pipeline, seed, alignment "
            "FROM runs WHERE id = ?",
            (run_id,),
        ).fetchone()
        if row is None:
            return None
        return {
            "id": row[0],
            "created_at": row[1],
            "scenario_id": row[2],
            "status": row[3],
            "error_message": row[4],
            "pipeline": json.loads(row[5]),
            "seed": row[6],
            "alignment": row[7],
        }

    def list_runs(self) -> list[dict]:
        rows = self._db.execute(
            "SELECT id, scenario_id, status FROM runs ORDER BY id"
        ).fetchall()
        return [{"id": r[0], "scenario_id": r[1], "status": r[2]} for r in rows]


class PipelineSpec(BaseModel):
    filtering: Optional[str] = None
    positioning: str
    collaborative: Optional[str] = None
    filtering_params: dict = {}
    positioning_params: dict = {}
    collaborative_params: dict = {}


class RunRequest(BaseModel):
    scenario_id: str
    pipeline: PipelineSpec
    seed: int = 0
    alignment: Optional[str] = None


class ParamsUpdate(BaseModel):
    devices: dict[str, dict] = {}
    beacons: list[dict] | None = None


def create_app(
    data_dir: str | Path | None = None,
    token: str | None = None,
    workers: int | None = None,
) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("TRACKBENCH_DATA_DIR", "trackbench-data"))
    token = token if token is not None else os.environ.get("TRACKBENCH_TOKEN")
    workers = workers or int(os.environ.get("TRACKBENCH_WORKERS", "2"))

    store = Store(data_dir)
    registry = default_registry()
    executor = ThreadPoolExecutor(max_workers=workers)
    app = FastAPI(title="trackbench", version="0.1.0")
    app.state.store = store

    def require_token(authorization: str | None = Header(default=None)) -> None:
        if token is None:
            return
        if authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="invalid or missing token")

    @app.get("/plugins")
    def list_plugins() -> list[dict]:
        return [
            {
                "name": m.name,
                "slug": m.slug,
                "display_name": m.display_name,
                "category": m.category.value,
            }
            for m in registry.list()
        ]

    @app.get("/schema")
    def get_schema() -> dict:
        return schema_module.ALL_SCHEMAS

    @app.post("/scenarios", status_code=201)
    def upload_scenario(
        bundle: UploadFile = File(...), _: None = Depends(require_token)
    ) -> dict:
        scenario_id = new_id()
        target = store.scenario_dir(scenario_id)
        try:
            payload = bundle.file.read()
            with zipfile.ZipFile(io.BytesIO(payload)) as zf:
                target.mkdir(parents=True)
                zf.extractall(target)
            entries = list(target.iterdir())
            if len(entries) == 1 and entries[0].is_dir():
                inner = entries[0]
                for child in inner.iterdir():
                    shutil.move(str(child), target / child.name)
                inner.rmdir()
            scenario = load_scenario(target)
        except (IngestError, zipfile.BadZipFile, ValueError) as exc:
            shutil.rmtree(target, ignore_errors=True)
            raise HTTPException(status_code=422, detail=str(exc)) from None
        store.add_scenario(scenario_id, scenario.name)
        return {"id": scenario_id, "name": scenario.name}

    @app.get("/scenarios")
    def list_scenarios() -> list[dict]:
        return store.list_scenarios()

    def _load(scenario_id: str):
        meta = store.get_scenario(scenario_id)
        if meta is None:
            raise HTTPException(status_code=404, detail="unknown scenario")
        try:
            return meta, load_scenario(store.scenario_dir(scenario_id))
        except IngestError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from None

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str) -> dict:
        meta, scenario = _load(scenario_id)
        floorplan = json.loads(
            (store.scenario_dir(scenario_id) / "floorplan.geojson").read_text()
        )
        doc = json.loads((store.scenario_dir(scenario_id) / "scenario.json").read_text())
        return {
            **meta,
            "time_alignment": scenario.time_alignment.value,
            "floorplan": floorplan,
            "beacons": doc.get("beacons", []),
            "devices": [
                {
                    "device_id": d["device_id"],
                    "groundtruth": d["groundtruth"],
                    "checkpoints": d["checkpoints"],
                    "params": d.get("params", {}),
                }
                for d in doc.get("devices", [])
            ],
        }

    @app.put("/scenarios/{scenario_id}/params")
    def update_params(
        scenario_id: str, update: ParamsUpdate, _: None = Depends(require_token)
    ) -> dict:
        meta, _scenario = _load(scenario_id)
        path = store.scenario_dir(scenario_id) / "scenario.json"
        doc = json.loads(path.read_text())
        for device_id, params in update.devices.items():
            matched = [d for d in doc.get("devices", []) if d["device_id"] == device_id]
            if not matched:
                raise HTTPException(
                    status_code=422, detail=f"devices.{device_id}: unknown device"
                )
            matched[0].setdefault("params", {}).update(params)
        if update.beacons is not None:
            doc["beacons"] = update.beacons
        backup = path.read_text()
        path.write_text(json.dumps(doc, indent=2) + "\n")
        try:
            load_scenario(store.scenario_dir(scenario_id))
        except IngestError as exc:
            path.write_text(backup)  # roll back the invalid edit
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return {"id": scenario_id, "updated": True}

    def _execute_run(run_id: str, scenario_id: str, pipeline: PipelineConfig, seed: int, alignment: str | None):
        try:
            scenario = load_scenario(store.scenario_dir(scenario_id))
            if alignment:
                scenario.time_alignment = TimeAlignment(alignment)
            store.set_run_status(run_id, "running")
            result = run_replay(scenario, pipeline, registry, seed=seed)
            write_run_dir(result, scenario, store.run_dir(run_id))
            store.set_run_status(run_id, "done")
        except Exception as exc:  # noqa: BLE001 - surfaced via run status
            store.set_run_status(run_id, "failed", str(exc))

    @app.post("/runs", status_code=202)
    def create_run(req: RunRequest, _: None = Depends(require_token)) -> dict:
        if store.get_scenario(req.scenario_id) is None:
            raise HTTPException(status_code=404, detail="unknown scenario")
        pipeline = PipelineConfig(
            positioning=req.pipeline.positioning,
            filtering=req.pipeline.filtering,
            collaborative=req.pipeline.collaborative,
            filtering_params=req.pipeline.filtering_params,
            positioning_params=req.pipeline.positioning_params,
            collaborative_params=req.pipeline.collaborative_params,
        )
        try:
            pipeline.validate(default_registry())
        except PluginError as exc:
            raise HTTPException(status_code=422, detail=f"unknown plugin or bad pipeline: {exc}") from None
        if req.alignment is not None:
            try:
                TimeAlignment(req.alignment)
            except ValueError:
                raise HTTPException(status_code=422, detail=f"unknown alignment {req.alignment!r}") from None
        run_id = new_id()
        store.add_run(run_id, req.scenario_id, req.pipeline.model_dump(), req.seed, req.alignment or "")
        executor.submit(_execute_run, run_id, req.scenario_id, pipeline, req.seed, req.alignment)
        return {"id": run_id, "status": "pending"}

    @app.get("/runs")
    def list_runs() -> list[dict]:
        return store.list_runs()

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        run = store.get_run(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail="unknown run")
        return run

    def _done_run(run_id: str) -> dict:
        run = store.get_run(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail="unknown run")
        if run["status"] != "done":
            raise HTTPException(status_code=409, detail=f"run is {run['status']}, not done")
        return run

    @app.get("/runs/{run_id}/result")
    def get_result(run_id: str) -> Response:
        _done_run(run_id)
        return Response(
            (store.run_dir(run_id) / "result.json").read_bytes(),
            media_type="application/json",
        )

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str) -> Response:
        _done_run(run_id)
        return Response(
            (store.run_dir(run_id) / "metrics.json").read_bytes(),
            media_type="application/json",
        )

    @app.get("/runs/{run_id}/cdf")
    def get_cdf(run_id: str) -> Response:
        _done_run(run_id)
        return Response(
            (store.run_dir(run_id) / "cdf.csv").read_bytes(), media_type="text/csv"
        )

    @app.get("/runs/{run_id}/ticks")
    def get_ticks(
        run_id: str,
        from_: int = Query(default=0, alias="from"),
        to: int | None = Query(default=None, alias="to"),
    ) -> dict:
        _done_run(run_id)
        ticks = []
        with open(store.run_dir(run_id) / "ticks.jsonl") as fh:
            for line in fh:
                tick = json.loads(line)
                if tick["timestamp"] < from_:
                    continue
                if to is not None and tick["timestamp"] > to:
                    break
                ticks.append(tick)
        return {"ticks": ticks}

    return app
