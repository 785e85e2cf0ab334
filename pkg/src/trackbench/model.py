"""Core domain types: trajectories, devices, beacons, floorplans, scenarios."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .geo import GeoPoint, haversine_distance, intermediate_point


class TrajectoryKind(str, Enum):
    GROUNDTRUTH = "groundtruth"
    ESTIMATED = "estimated"
    CORRECTED = "corrected"


class BeaconKind(str, Enum):
    PHYSICAL = "physical"
    VIRTUAL = "virtual"


class TimeAlignment(str, Enum):
    AS_RECORDED = "as_recorded"
    COMMON_START = "common_start"


@dataclass(frozen=True)
class TrajectoryPoint:
    location: GeoPoint
    timestamp: int  # ms since run epoch

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    kind: TrajectoryKind
    points: tuple[TrajectoryPoint, ...]
    device_id: str

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("trajectory must have at least one point")
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.timestamp <= prev.timestamp:
                raise ValueError("trajectory timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Beacon:
    id: str
    slug: str
    location: GeoPoint
    kind: BeaconKind
    tx_power_dbm: float = -59.0  # dBm at 1 m reference
    path_loss_exponent: float = 2.0
    noise_sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive")
        if self.noise_sigma_db < 0:
            raise ValueError("noise_sigma_db must be >= 0")


@dataclass(frozen=True)
class DeviceParams:
    step_length: float = 0.7  # meters per step
    initial_heading: float = 0.0  # radians clockwise from north
    lower_threshold: float = 10.0  # error count above which collaboration kicks in
    collaboration_range: float = 4.0  # meters, peer proximity
    beacon_correction_range: float = 2.0  # meters, beacon proximity
    error_rate_per_step: float = 1.0

    def __post_init__(self) -> None:
        if self.step_length <= 0:
            raise ValueError("step_length must be positive")
        if self.lower_threshold < 0:
            raise ValueError("lower_threshold must be >= 0")
        if self.collaboration_range <= 0 or self.beacon_correction_range <= 0:
            raise ValueError("ranges must be positive")


@dataclass
class DeviceRun:
    """One device's recorded run: groundtruth polyline plus its raw log.

    `checkpoint_events` pairs a polyline vertex index with the timestamp at
    which the participant signalled reaching it. `error_counter` is the
    evolving drift estimate, mutated only by the replay engine.
    """

    device_id: str
    groundtruth_path: tuple[GeoPoint, ...]
    checkpoint_events: tuple[tuple[int, int], ...]  # (vertex index, ms)
    raw_log: object = None  # RawLog, set at scenario load
    params: DeviceParams = field(default_factory=DeviceParams)
    error_counter: float = 0.0

    def __post_init__(self) -> None:
        if not self.groundtruth_path:
            raise ValueError("groundtruth_path must be non-empty")
        if not self.checkpoint_events:
            raise ValueError("checkpoint_events must be non-empty")
        if self.checkpoint_events[0][0] != 0:
            raise ValueError("first checkpoint must be at vertex 0")
        ts = [t for _, t in self.checkpoint_events]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("checkpoint timestamps must be strictly increasing")
        for idx, _ in self.checkpoint_events:
            if not 0 <= idx < len(self.groundtruth_path):
                raise ValueError(f"checkpoint vertex index {idx} out of range")
        if self.error_counter < 0:
            raise ValueError("error_counter must be >= 0")


@dataclass(frozen=True)
class FloorplanFeature:
    kind: str  # room | wall | corridor | door | pointOfInterest | beacon
    geometry: dict  # GeoJSON geometry object
    properties: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Floorplan:
    features: tuple[FloorplanFeature, ...] = ()


@dataclass
class Scenario:
    id: str
    name: str
    floorplan: Floorplan
    beacons: list[Beacon]
    device_runs: list[DeviceRun]
    time_alignment: TimeAlignment = TimeAlignment.COMMON_START

    def __post_init__(self) -> None:
        ids = [r.device_id for r in self.device_runs]
        if len(ids) != len(set(ids)):
            raise ValueError("device ids must be unique within a scenario")
        slugs = [b.slug for b in self.beacons]
        if len(slugs) != len(set(slugs)):
            raise ValueError("beacon slugs must be unique within a scenario")

    def beacon_by_slug(self, slug: str) -> Optional[Beacon]:
        for b in self.beacons:
            if b.slug == slug:
                return b
        return None


@dataclass
class DeviceResult:
    groundtruth: Trajectory
    estimated: Trajectory
    corrected: Trajectory
    collaboration_count: int = 0
    beacon_correction_count: int = 0


@dataclass
class RunResult:
    scenario_id: str
    pipeline: list[str]  # ordered plugin slugs
    seed: int
    devices: dict[str, DeviceResult]
    encounters: list = field(default_factory=list)
    ticks: list = field(default_factory=list)


def _checkpoint_arclengths(run: DeviceRun) -> tuple[list[float], list[float]]:
    """Cumulative polyline arc lengths and the arc length at each checkpoint."""
    cum = [0.0]
    for a, b in zip(run.groundtruth_path, run.groundtruth_path[1:]):
        cum.append(cum[-1] + haversine_distance(a, b))
    cp_arc = [cum[idx] for idx, _ in run.checkpoint_events]
    return cum, cp_arc


def _point_at_arclength(run: DeviceRun, cum: list[float], s: float) -> GeoPoint:
    """Point on the groundtruth polyline at arc length `s` from its start."""
    if s <= 0:
        return run.groundtruth_path[0]
    if s >= cum[-1]:
        return run.groundtruth_path[-1]
    i = bisect.bisect_right(cum, s) - 1
    i = min(i, len(run.groundtruth_path) - 2)
    seg = cum[i + 1] - cum[i]
    frac = 0.0 if seg == 0 else (s - cum[i]) / seg
    return intermediate_point(run.groundtruth_path[i], run.groundtruth_path[i + 1], frac)


def groundtruth_position_at(run: DeviceRun, t: int, clamp: bool = False) -> GeoPoint:
    """Groundtruth position at time `t`, walking the polyline at constant
    speed between consecutive checkpoints."""
    cp_ts = [ts for _, ts in run.checkpoint_events]
    if t < cp_ts[0] or t > cp_ts[-1]:
        if not clamp:
            raise ValueError(f"timestamp out of groundtruth range: {t}")
        t = max(cp_ts[0], min(cp_ts[-1], t))
    cum, cp_arc = _checkpoint_arclengths(run)
    k = bisect.bisect_right(cp_ts, t) - 1
    if k >= len(cp_ts) - 1:  # exactly at the last checkpoint
        return run.groundtruth_path[run.checkpoint_events[-1][0]]
    t0, t1 = cp_ts[k], cp_ts[k + 1]
    frac = (t - t0) / (t1 - t0)
    s = cp_arc[k] + frac * (cp_arc[k + 1] - cp_arc[k])
    return _point_at_arclength(run, cum, s)


def interpolate_groundtruth(run: DeviceRun, query_timestamps: list[int]) -> Trajectory:
    """Groundtruth trajectory sampled at the given timestamps.

    Raises if any timestamp falls outside the checkpoint span.
    """
    points = tuple(
        TrajectoryPoint(groundtruth_position_at(run, t), t) for t in query_timestamps
    )
    return Trajectory(TrajectoryKind.GROUNDTRUTH, points, run.device_id)


def trajectory_length(t: Trajectory) -> float:
    """Cumulative haversine length of a trajectory in meters."""
    return sum(
        haversine_distance(a.location, b.location) for a, b in zip(t.points, t.points[1:])
    )


def polyline_length(path: tuple[GeoPoint, ...]) -> float:
    return sum(haversine_distance(a, b) for a, b in zip(path, path[1:]))
