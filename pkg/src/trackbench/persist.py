"""Run-directory persistence shared by the CLI and the HTTP service.

A run directory contains result.json (trajectories as GeoJSON LineString
features), encounters.jsonl, ticks.jsonl, metrics.json, and cdf.csv. The
directory is written to a temp sibling and renamed into place so a run is
either fully present or absent.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .metrics import MetricReport, build_report, export_cdf
from .model import RunResult, Trajectory


def _dumps(obj) -> str:
    # sorted keys + fixed separators keep equal runs byte-identical
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def trajectory_feature(t: Trajectory) -> dict:
    return {
        "type": "Feature",
        "geometry": {
            "type": "LineString",
            "coordinates": [[p.location.lon, p.location.lat] for p in t.points],
        },
        "properties": {
            "kind": t.kind.value,
            "device_id": t.device_id,
            "timestamps": [p.timestamp for p in t.points],
        },
    }


def result_document(result: RunResult) -> dict:
    features = []
    counts = {}
    for device_id in sorted(result.devices):
        dres = result.devices[device_id]
        features.append(trajectory_feature(dres.groundtruth))
        features.append(trajectory_feature(dres.estimated))
        features.append(trajectory_feature(dres.corrected))
        counts[device_id] = {
            "collaboration_count": dres.collaboration_count,
            "beacon_correction_count": dres.beacon_correction_count,
        }
    return {
        "scenario_id": result.scenario_id,
        "pipeline": result.pipeline,
        "seed": result.seed,
        "counts": counts,
        "trajectories": {"type": "FeatureCollection", "features": features},
    }


def _encounter_line(e) -> str:
    return _dumps(
        {
            "timestamp": e.timestamp,
            "kind": e.kind,
            "device_id": e.device_id,
            "other_id": e.other_id,
            "distance_m": e.distance,
        }
    )


def _tick_line(tick) -> str:
    return _dumps(
        {
            "timestamp": tick.timestamp,
            "devices": {
                d: {
                    "groundtruth": [s["groundtruth"].lat, s["groundtruth"].lon],
                    "corrected": [s["corrected"].lat, s["corrected"].lon],
                    "errors": s["errors"],
                }
                for d, s in tick.devices.items()
            },
        }
    )


def metrics_document(reports: dict[str, MetricReport], aggregate: dict) -> dict:
    return {
        "devices": {d: r.to_dict() for d, r in sorted(reports.items())},
        "aggregate": aggregate,
    }


def write_run_dir(result: RunResult, scenario, out_dir: str | Path) -> Path:
    """Atomically materialize a complete run directory."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    reports, aggregate = build_report(result, scenario)
    tmp = Path(
        tempfile.mkdtemp(prefix=f".{out_dir.name}-", dir=out_dir.parent)
    )
    try:
        (tmp / "result.json").write_text(_dumps(result_document(result)) + "\n")
        with open(tmp / "encounters.jsonl", "w") as fh:
            for e in result.encounters:
                fh.write(_encounter_line(e) + "\n")
        with open(tmp / "ticks.jsonl", "w") as fh:
            for tick in result.ticks:
                fh.write(_tick_line(tick) + "\n")
        (tmp / "metrics.json").write_text(_dumps(metrics_document(reports, aggregate)) + "\n")
        (tmp / "cdf.csv").write_text(export_cdf(reports))
        os.rename(tmp, out_dir)
    except BaseException:
        import shutil

        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir
