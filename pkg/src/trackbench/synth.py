"""Synthetic scenario bundles for desk-scale experiments.

The square-drift preset walks K devices around the same square loop,
staggered in time so neighbours stay within collaboration range, with a
per-step heading bias injected into the gyro so the PDR reproduces a known
drifted path. One virtual beacon sits at the shared start corner.

Raw logs are fabricated by inverse-simulation: acceleration pulses planted
at step times and a gyro signal whose trapezoidal integral reproduces the
desired (biased) heading exactly at every sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geo import GeoPoint, destination_point

SAMPLE_RATE_HZ = 50
STEP_PERIOD_MS = 500  # 2 steps per second
PULSE_AMPLITUDE = 6.0  # m/s^2 on top of gravity
PULSE_HALF_WIDTH = 6  # samples on each side of the apex
GRAVITY = 9.81


@dataclass(frozen=True)
class SquareDriftPreset:
    devices: int = 4
    steps_per_side: int = 4
    loops: int = 2
    step_length_m: float = 0.75
    heading_bias_rad_per_step: float = 0.05
    stagger_ms: int = 500  # start offset between consecutive devices
    lower_threshold: float = 10.0
    accel_noise_sigma: float = 0.05
    origin_lat: float = 46.52
    origin_lon: float = 6.58


def _square_corners(origin: GeoPoint, side_m: float) -> list[GeoPoint]:
    headings = [0.0, math.pi / 2.0, math.pi, 3.0 * math.pi / 2.0]  # N, E, S, W
    corners = [origin]
    for h in headings[:-1]:
        corners.append(destination_point(corners[-1], h, side_m))
    return corners


def _gyro_from_heading(theta: np.ndarray, dt_s: float) -> np.ndarray:
    """Gyro samples whose trapezoidal integral reproduces `theta` exactly."""
    g = np.zeros_like(theta)
    for j in range(1, len(theta)):
        g[j] = 2.0 * (theta[j] - theta[j - 1]) / dt_s - g[j - 1]
    return g


def _device_log(
    preset: SquareDriftPreset,
    start_ms: int,
    end_ms: int,
    rng: np.random.Generator,
) -> tuple[list[dict], list[int]]:
    """Raw samples and planted step apex timestamps for one device."""
    dt_ms = 1000 // SAMPLE_RATE_HZ
    dt_s = dt_ms / 1000.0
    timestamps = np.arange(0, end_ms + dt_ms, dt_ms, dtype=int)
    n = len(timestamps)
    total_steps = 4 * preset.steps_per_side * preset.loops

    step_ts = [start_ms + (i + 1) * STEP_PERIOD_MS for i in range(total_steps)]

    # desired heading staircase: side heading + accumulated per-step bias
    headings = [0.0, math.pi / 2.0, math.pi, 3.0 * math.pi / 2.0]
    theta = np.zeros(n)
    for j, t in enumerate(timestamps):
        if t <= start_ms:
            step_idx = 0
        else:
            step_idx = min(total_steps, (int(t) - start_ms + STEP_PERIOD_MS - 1) // STEP_PERIOD_MS)
        if step_idx == 0:
            theta[j] = 0.0
        else:
            side = ((step_idx - 1) // preset.steps_per_side) % 4
            theta[j] = headings[side] + preset.heading_bias_rad_per_step * step_idx
    gyro_z = _gyro_from_heading(theta, dt_s)

    acc_z = np.full(n, GRAVITY)
    if preset.accel_noise_sigma > 0:
        acc_z = acc_z + rng.normal(0.0, preset.accel_noise_sigma, n)
    for t in step_ts:
        apex = int(t) // dt_ms
        for k in range(-PULSE_HALF_WIDTH, PULSE_HALF_WIDTH + 1):
            j = apex + k
            if 0 <= j < n:
                acc_z[j] += PULSE_AMPLITUDE * (1.0 - abs(k) / (PULSE_HALF_WIDTH + 1))

    rows = [
        {
            "timestamp": int(timestamps[j]),
            "acc_x": 0.0,
            "acc_y": 0.0,
            "acc_z": round(float(acc_z[j]), 6),
            "gyro_x": 0.0,
            "gyro_y": 0.0,
            "gyro_z": round(float(gyro_z[j]), 9),
            "azimuth": round(math.degrees(theta[j]) % 360.0, 6),
            "pitch": 0.0,
            "roll": 0.0,
        }
        for j in range(n)
    ]
    return rows, step_ts


def generate_square_drift(out_dir: str | Path, preset: SquareDriftPreset, seed: int = 0) -> Path:
    """Write a square-drift scenario bundle and return its path."""
    out_dir = Path(out_dir)
    (out_dir / "raw").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    side_m = preset.steps_per_side * preset.step_length_m
    origin = GeoPoint(preset.origin_lat, preset.origin_lon)
    corners = _square_corners(origin, side_m)

    # groundtruth polyline: the loop corners repeated, closing at the origin
    vertices = []
    for _ in range(preset.loops):
        vertices.extend(corners)
    vertices.append(origin)

    total_steps = 4 * preset.steps_per_side * preset.loops
    walk_ms = total_steps * STEP_PERIOD_MS
    last_start = (preset.devices - 1) * preset.stagger_ms
    end_ms = last_start + walk_ms + 1000

    devices = []
    for k in range(preset.devices):
        device_id = f"dev{k}"
        start_ms = k * preset.stagger_ms
        rows, _ = _device_log(preset, start_ms, end_ms, rng)
        header = list(rows[0].keys())
        lines = [",".join(header)]
        lines += [",".join(str(r[c]) for c in header) for r in rows]
        (out_dir / "raw" / f"{device_id}.csv").write_text("\n".join(lines) + "\n")

        side_ms = preset.steps_per_side * STEP_PERIOD_MS
        checkpoints = [[v, start_ms + v * side_ms] for v in range(len(vertices))]
        devices.append(
            {
                "device_id": device_id,
                "raw_log": f"raw/{device_id}.csv",
                "groundtruth": [[p.lat, p.lon] for p in vertices],
                "checkpoints": checkpoints,
                "params": {
                    "step_length_m": preset.step_length_m,
                    "initial_heading_rad": 0.0,
                    "lower_threshold": preset.lower_threshold,
                },
            }
        )

    scenario = {
        "id": "square-drift",
        "name": "square-drift",
        "time_alignment": "as_recorded",
        "beacons": [
            {
                "id": "b-corner",
                "slug": "corner",
                "location": {"lat": origin.lat, "lon": origin.lon},
                "kind": "virtual",
                "tx_power_dbm": -59.0,
                "path_loss_exponent": 2.0,
                "noise_sigma_db": 0.0,
            }
        ],
        "devices": devices,
    }
    (out_dir / "scenario.json").write_text(json.dumps(scenario, indent=2) + "\n")

    pad = destination_point(
        destination_point(origin, math.pi, 5.0), 3.0 * math.pi / 2.0, 5.0
    )
    far = destination_point(destination_point(origin, 0.0, side_m + 5.0), math.pi / 2.0, side_m + 5.0)
    room = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"kind": "room", "name": "synthetic hall"},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [
                        [
                            [pad.lon, pad.lat],
                            [far.lon, pad.lat],
                            [far.lon, far.lat],
                            [pad.lon, far.lat],
                            [pad.lon, pad.lat],
                        ]
                    ],
                },
            }
        ],
    }
    (out_dir / "floorplan.geojson").write_text(json.dumps(room, indent=2) + "\n")
    return out_dir
