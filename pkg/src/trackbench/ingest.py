"""Raw-measurement CSV parsing and scenario bundle loading.

CSV schema (normative for this artifact): header
``timestamp,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,azimuth,pitch,roll``
followed by zero or more ``rssi_<slug>`` columns. A single ``gyro`` column
is tolerated and mapped to ``gyro_z``.

Bundle layout: ``scenario.json``, ``floorplan.geojson``, ``raw/<device_id>.csv``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import tempfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Union

from .geo import GeoPoint
from .model import (
    Beacon,
    BeaconKind,
    DeviceParams,
    DeviceRun,
    Floorplan,
    FloorplanFeature,
    Scenario,
    TimeAlignment,
)

log = logging.getLogger(__name__)

MANDATORY_COLUMNS = (
    "timestamp",
    "acc_x",
    "acc_y",
    "acc_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "azimuth",
    "pitch",
    "roll",
)

RSSI_OUT_OF_RANGE = -100.0  # sentinel: beacon not within detection range

FLOORPLAN_KINDS = {"room", "wall", "corridor", "door", "pointOfInterest", "beacon"}


class IngestError(ValueError):
    """Raised on malformed CSV logs or scenario bundles."""


@dataclass(frozen=True)
class RawMeasurementRecord:
    timestamp: int  # ms
    acc_x: float
    acc_y: float
    acc_z: float
    gyro_x: float
    gyro_y: float
    gyro_z: float
    azimuth: float  # degrees to magnetic north
    pitch: float  # degrees
    roll: float  # degrees
    rssi: dict[str, float] = field(default_factory=dict)  # beacon slug -> dBm


@dataclass(frozen=True)
class RawLog:
    device_id: str
    records: tuple[RawMeasurementRecord, ...]

    @property
    def sampling_rate_hz(self) -> float:
        if len(self.records) < 2:
            raise IngestError("sampling rate undefined for logs with fewer than 2 records")
        span_ms = self.records[-1].timestamp - self.records[0].timestamp
        if span_ms <= 0:
            raise IngestError("sampling rate undefined: zero time span")
        return (len(self.records) - 1) * 1000.0 / span_ms


def _parse_float(value: str, line: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise IngestError(f"parse error at line {line}: column {column!r} value {value!r}") from None


def parse_raw_csv(stream: Union[IO[bytes], IO[str]], device_id: str = "") -> RawLog:
    """Parse a raw-measurement CSV stream into a RawLog.

    Missing rssi cells default to -100 dBm (out of detection range).
    """
    if hasattr(stream, "read") and isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8")
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty log") from None
    header = [h.strip() for h in header]

    columns = {name: i for i, name in enumerate(header)}
    # tolerate a single-axis gyro column: map it to the yaw axis
    single_gyro = "gyro" in columns and "gyro_z" not in columns
    for name in MANDATORY_COLUMNS:
        if name not in columns:
            if single_gyro and name.startswith("gyro_"):
                continue
            raise IngestError(f"schema error: {name}")
    rssi_columns = {
        name[len("rssi_"):]: i for name, i in columns.items() if name.startswith("rssi_")
    }

    def cell(row: list[str], name: str, line: int, default: float | None = None) -> float:
        idx = columns.get(name)
        if idx is None or idx >= len(row) or row[idx].strip() == "":
            if default is not None:
                return default
            if single_gyro and name in ("gyro_x", "gyro_y"):
                return 0.0
            if single_gyro and name == "gyro_z":
                return _parse_float(row[columns["gyro"]], line, "gyro")
            raise IngestError(f"parse error at line {line}: missing {name!r}")
        return _parse_float(row[idx], line, name)

    records: list[RawMeasurementRecord] = []
    prev_ts: int | None = None
    for line_no, row in enumerate(reader, start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        ts = int(cell(row, "timestamp", line_no))
        if ts < 0:
            raise IngestError(f"parse error at line {line_no}: negative timestamp")
        if prev_ts is not None and ts < prev_ts:
            raise IngestError(f"non-monotonic timestamps at line {line_no}")
        prev_ts = ts
        rssi: dict[str, float] = {}
        for slug, idx in rssi_columns.items():
            raw = row[idx].strip() if idx < len(row) else ""
            value = RSSI_OUT_OF_RANGE if raw == "" else _parse_float(raw, line_no, f"rssi_{slug}")
            if not -100.0 <= value <= 0.0:
                raise IngestError(
                    f"parse error at line {line_no}: rssi_{slug} out of [-100, 0]: {value}"
                )
            rssi[slug] = value
        records.append(
            RawMeasurementRecord(
                timestamp=ts,
                acc_x=cell(row, "acc_x", line_no),
                acc_y=cell(row, "acc_y", line_no),
                acc_z=cell(row, "acc_z", line_no),
                gyro_x=cell(row, "gyro_x", line_no),
                gyro_y=cell(row, "gyro_y", line_no),
                gyro_z=cell(row, "gyro_z", line_no),
                azimuth=cell(row, "azimuth", line_no),
                pitch=cell(row, "pitch", line_no),
                roll=cell(row, "roll", line_no),
                rssi=rssi,
            )
        )
    if not records:
        raise IngestError("empty log")
    return RawLog(device_id=device_id, records=tuple(records))


def serialize_raw_csv(raw: RawLog) -> str:
    """Inverse of parse_raw_csv; round-trips to an identical RawLog."""
    slugs = sorted({slug for r in raw.records for slug in r.rssi})
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(MANDATORY_COLUMNS) + [f"rssi_{s}" for s in slugs])
    for r in raw.records:
        writer.writerow(
            [r.timestamp, r.acc_x, r.acc_y, r.acc_z, r.gyro_x, r.gyro_y, r.gyro_z,
             r.azimuth, r.pitch, r.roll]
            + [r.rssi.get(s, RSSI_OUT_OF_RANGE) for s in slugs]
        )
    return out.getvalue()


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise IngestError(f"validation error at {path}: missing {key!r}")
    return obj[key]


def _parse_geopoint(obj, path: str) -> GeoPoint:
    try:
        if isinstance(obj, dict):
            return GeoPoint(float(obj["lat"]), float(obj["lon"]))
        lat, lon = obj
        return GeoPoint(float(lat), float(lon))
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"validation error at {path}: {exc}") from None


def _parse_beacon(obj: dict, path: str) -> Beacon:
    kind = obj.get("kind", "virtual")
    try:
        kind = BeaconKind(kind)
    except ValueError:
        raise IngestError(f"validation error at {path}.kind: unknown beacon kind {kind!r}") from None
    return Beacon(
        id=str(_require(obj, "id", path)),
        slug=str(_require(obj, "slug", path)),
        location=_parse_geopoint(_require(obj, "location", path), f"{path}.location"),
        kind=kind,
        tx_power_dbm=float(obj.get("tx_power_dbm", -59.0)),
        path_loss_exponent=float(obj.get("path_loss_exponent", 2.0)),
        noise_sigma_db=float(obj.get("noise_sigma_db", 0.0)),
    )


def _parse_params(obj: dict, path: str) -> DeviceParams:
    try:
        return DeviceParams(
            step_length=float(obj.get("step_length_m", 0.7)),
            initial_heading=float(obj.get("initial_heading_rad", 0.0)),
            lower_threshold=float(obj.get("lower_threshold", 10.0)),
            collaboration_range=float(obj.get("collaboration_range_m", 4.0)),
            beacon_correction_range=float(obj.get("beacon_correction_range_m", 2.0)),
            error_rate_per_step=float(obj.get("error_rate_per_step", 1.0)),
        )
    except ValueError as exc:
        raise IngestError(f"validation error at {path}: {exc}") from None


def parse_floorplan(doc: dict) -> tuple[Floorplan, list[Beacon]]:
    """Parse a GeoJSON FeatureCollection; beacon Point features are split out."""
    if doc.get("type") != "FeatureCollection":
        raise IngestError("validation error at floorplan: expected a GeoJSON FeatureCollection")
    features: list[FloorplanFeature] = []
    beacons: list[Beacon] = []
    for i, feat in enumerate(doc.get("features", [])):
        path = f"floorplan.features[{i}]"
        props = feat.get("properties") or {}
        kind = props.get("kind")
        if kind is None:
            raise IngestError(f"validation error at {path}.properties: missing 'kind'")
        if kind not in FLOORPLAN_KINDS:
            raise IngestError(f"validation error at {path}.properties.kind: unknown kind {kind!r}")
        geometry = feat.get("geometry")
        if not isinstance(geometry, dict) or "type" not in geometry:
            raise IngestError(f"validation error at {path}.geometry: malformed geometry")
        if kind == "beacon":
            if geometry.get("type") != "Point":
                raise IngestError(f"validation error at {path}: beacon features must be Points")
            lon, lat = geometry["coordinates"][:2]
            beacons.append(
                Beacon(
                    id=str(props.get("id", props.get("slug", f"beacon-{i}"))),
                    slug=str(_require(props, "slug", f"{path}.properties")),
                    location=GeoPoint(float(lat), float(lon)),
                    kind=BeaconKind(props.get("beacon_kind", "virtual")),
                    tx_power_dbm=float(props.get("tx_power_dbm", -59.0)),
                    path_loss_exponent=float(props.get("path_loss_exponent", 2.0)),
                    noise_sigma_db=float(props.get("noise_sigma_db", 0.0)),
                )
            )
        features.append(FloorplanFeature(kind=kind, geometry=geometry, properties=props))
    return Floorplan(features=tuple(features)), beacons


def load_scenario(bundle: Union[str, Path]) -> Scenario:
    """Load and fully validate a scenario bundle (directory or .zip archive)."""
    bundle = Path(bundle)
    if bundle.is_file() and bundle.suffix == ".zip":
        tmp = Path(tempfile.mkdtemp(prefix="trackbench-bundle-"))
        with zipfile.ZipFile(bundle) as zf:
            zf.extractall(tmp)
        # tolerate archives with a single top-level directory
        entries = list(tmp.iterdir())
        root = entries[0] if len(entries) == 1 and entries[0].is_dir() else tmp
        return load_scenario(root)
    if not bundle.is_dir():
        raise IngestError(f"bundle incomplete: {bundle} is not a directory")

    scenario_path = bundle / "scenario.json"
    floorplan_path = bundle / "floorplan.geojson"
    for p in (scenario_path, floorplan_path):
        if not p.exists():
            raise IngestError(f"bundle incomplete: {p.name}")

    try:
        doc = json.loads(scenario_path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestError(f"validation error at scenario.json: {exc}") from None
    floorplan, embedded_beacons = parse_floorplan(json.loads(floorplan_path.read_text()))

    beacons = [
        _parse_beacon(b, f"beacons[{i}]") for i, b in enumerate(doc.get("beacons", []))
    ]
    declared_slugs = {b.slug for b in beacons}
    beacons += [b for b in embedded_beacons if b.slug not in declared_slugs]

    device_runs: list[DeviceRun] = []
    for i, dev in enumerate(doc.get("devices", [])):
        path = f"devices[{i}]"
        device_id = str(_require(dev, "device_id", path))
        raw_rel = dev.get("raw_log", f"raw/{device_id}.csv")
        raw_path = bundle / raw_rel
        if not raw_path.exists():
            raise IngestError(f"bundle incomplete: {raw_rel}")
        with open(raw_path, "rb") as fh:
            raw = parse_raw_csv(fh, device_id=device_id)
        known = {b.slug for b in beacons}
        for slug in {s for r in raw.records for s in r.rssi}:
            if slug not in known:
                log.warning("device %s logs rssi for unknown beacon %r", device_id, slug)
        gt = tuple(
            _parse_geopoint(p, f"{path}.groundtruth[{j}]")
            for j, p in enumerate(_require(dev, "groundtruth", path))
        )
        checkpoints = tuple(
            (int(v), int(t)) for v, t in _require(dev, "checkpoints", path)
        )
        try:
            run = DeviceRun(
                device_id=device_id,
                groundtruth_path=gt,
                checkpoint_events=checkpoints,
                raw_log=raw,
                params=_parse_params(dev.get("params", {}), f"{path}.params"),
            )
        except ValueError as exc:
            raise IngestError(f"validation error at {path}: {exc}") from None
        device_runs.append(run)

    alignment = doc.get("time_alignment", "common_start")
    try:
        alignment = TimeAlignment(alignment)
    except ValueError:
        raise IngestError(
            f"validation error at time_alignment: unknown value {alignment!r}"
        ) from None

    try:
        return Scenario(
            id=str(doc.get("id", bundle.name)),
            name=str(doc.get("name", bundle.name)),
            floorplan=floorplan,
            beacons=beacons,
            device_runs=device_runs,
            time_alignment=alignment,
        )
    except ValueError as exc:
        raise IngestError(f"validation error: {exc}") from None
