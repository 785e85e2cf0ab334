"""Built-in tracking algorithms: low-pass filtering of the acceleration
magnitude, peak-detection step counting, PDR positioning, log-distance
beacon ranging, and collaborative drift correction.

Conventions: heading 0 rad is north, clockwise positive; a step advances
the position by ``destination_point(prev, bearing=heading, distance=L)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .geo import GeoPoint, destination_point, haversine_distance, intermediate_point
from .ingest import RawLog
from .model import Trajectory, TrajectoryKind, TrajectoryPoint, DeviceParams
from .plugins import (
    BasePlugin,
    CollaborationUpdate,
    DeviceView,
    PluginCategory,
    PluginError,
    PluginMetadata,
)

TWO_PI = 2.0 * math.pi

# Displacement below which a device counts as stationary between ticks;
# exact float equality is meaningless after geodesic arithmetic.
STATIONARY_EPS_M = 0.01

DEFAULT_CUTOFF_HZ = 3.0
DEFAULT_MIN_PEAK_HEIGHT = 10.8  # gravity + 1 m/s^2 margin
DEFAULT_MIN_STEP_INTERVAL_MS = 300


@dataclass(frozen=True)
class FilteredSeries:
    """Smoothed acceleration magnitude plus per-sample heading."""

    timestamps: np.ndarray  # ms, strictly increasing
    magnitude: np.ndarray  # m/s^2
    heading: np.ndarray  # radians in [0, 2*pi)

    def __post_init__(self) -> None:
        if not (len(self.timestamps) == len(self.magnitude) == len(self.heading)):
            raise ValueError("series arrays must have equal lengths")
        if len(self.timestamps) == 0:
            raise ValueError("series must be non-empty")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("series timestamps must be strictly increasing")


@dataclass(frozen=True)
class StepEvent:
    timestamp: int  # ms
    heading_at_step: float  # radians


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss: RSSI(d) = rssi_at_1m - 10*n*log10(d)."""

    rssi_at_1m: float = -59.0  # dBm at the 1 m reference distance
    exponent: float = 2.0
    noise_sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if self.exponent <= 0:
            raise ValueError("path loss exponent must be positive")
        if self.noise_sigma_db < 0:
            raise ValueError("noise sigma must be >= 0")


OUT_OF_RANGE = float("inf")  # distance sentinel for the -100 dBm RSSI default


def magnitude(acc_x: float, acc_y: float, acc_z: float) -> float:
    """Euclidean magnitude of a 3-axis acceleration sample."""
    return math.sqrt(acc_x * acc_x + acc_y * acc_y + acc_z * acc_z)


def lowpass_filter(values: np.ndarray, cutoff_hz: float, sample_rate_hz: float) -> np.ndarray:
    """Zero-phase second-order Butterworth low-pass.

    Forward-backward filtering preserves peak timestamps for the step
    detector downstream.
    """
    nyquist = sample_rate_hz / 2.0
    if cutoff_hz <= 0 or cutoff_hz >= nyquist:
        raise ValueError(f"cutoff {cutoff_hz} Hz must be in (0, {nyquist}) Hz")
    b, a = signal.butter(2, cutoff_hz / nyquist)
    values = np.asarray(values, dtype=float)
    padlen = min(3 * max(len(a), len(b)), len(values) - 1)
    return signal.filtfilt(b, a, values, padlen=padlen)


def detect_steps(
    series: FilteredSeries,
    min_peak_height: float = DEFAULT_MIN_PEAK_HEIGHT,
    min_step_interval_ms: int = DEFAULT_MIN_STEP_INTERVAL_MS,
) -> list[StepEvent]:
    """Steps as peaks in the smoothed acceleration magnitude.

    A candidate is a local maximum strictly above both neighbours and at
    least `min_peak_height`. Candidates closer than `min_step_interval_ms`
    are thinned greedily, keeping higher peaks first.
    """
    mag = np.asarray(series.magnitude, dtype=float)
    ts = np.asarray(series.timestamps)
    candidates = [
        i
        for i in range(1, len(mag) - 1)
        if mag[i] > mag[i - 1] and mag[i] > mag[i + 1] and mag[i] >= min_peak_height
    ]
    # highest first; ties broken by earlier timestamp for determinism
    kept: list[int] = []
    for i in sorted(candidates, key=lambda i: (-mag[i], ts[i])):
        if all(abs(int(ts[i]) - int(ts[j])) >= min_step_interval_ms for j in kept):
            kept.append(i)
    kept.sort()
    return [StepEvent(int(ts[i]), float(series.heading[i])) for i in kept]


def heading_series(
    raw: RawLog,
    initial_heading: float = 0.0,
    mode: str = "gyro_integration",
) -> np.ndarray:
    """Per-sample heading in radians, normalized to [0, 2*pi).

    gyro_integration: trapezoidal integral of the yaw-axis rate on top of
    the initial heading. azimuth: the logged azimuth converted to radians.
    """
    if not raw.records:
        raise ValueError("raw log must be non-empty")
    if mode == "gyro_integration":
        t = np.array([r.timestamp for r in raw.records], dtype=float) / 1000.0
        gz = np.array([r.gyro_z for r in raw.records], dtype=float)
        theta = np.empty_like(gz)
        theta[0] = initial_heading
        if len(gz) > 1:
            increments = 0.5 * (gz[1:] + gz[:-1]) * np.diff(t)
            theta[1:] = initial_heading + np.cumsum(increments)
    elif mode == "azimuth":
        theta = np.unwrap(np.radians([r.azimuth for r in raw.records]))
    else:
        raise ValueError(f"unknown heading mode: {mode!r}")
    return np.mod(theta, TWO_PI)


def pdr_step(prev: GeoPoint, step_length: float, heading: float) -> GeoPoint:
    """Advance one step of length L along the heading (local east-north frame
    mapped to a geodesic bearing)."""
    if step_length <= 0:
        raise ValueError("step length must be positive")
    return destination_point(prev, heading, step_length)


def pdr_positioning(
    initial: GeoPoint,
    first_timestamp: int,
    steps: list[StepEvent],
    step_length: float,
    device_id: str = "",
) -> Trajectory:
    """Fold step events into an estimated trajectory starting at `initial`."""
    points = [TrajectoryPoint(initial, first_timestamp)]
    pos = initial
    for step in steps:
        pos = pdr_step(pos, step_length, step.heading_at_step)
        points.append(TrajectoryPoint(pos, step.timestamp))
    return Trajectory(TrajectoryKind.ESTIMATED, tuple(points), device_id)


def rssi_to_distance(rssi: float, model: PathLossModel) -> float:
    """Invert the log-distance model; -100 dBm maps to the out-of-range
    sentinel (+inf)."""
    if rssi > 0:
        raise ValueError(f"implausible rssi: {rssi} dBm")
    if rssi <= -100.0:
        return OUT_OF_RANGE
    return 10.0 ** ((model.rssi_at_1m - rssi) / (10.0 * model.exponent))


def distance_to_rssi(d: float, model: PathLossModel, rng: np.random.Generator | None = None) -> float:
    """Synthesize an RSSI for a virtual beacon at distance `d` meters.

    Gaussian noise (if configured) requires a seeded generator so runs stay
    deterministic. The result is clamped to [-100, 0] dBm.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    rssi = model.rssi_at_1m - 10.0 * model.exponent * math.log10(d)
    if model.noise_sigma_db > 0:
        if rng is None:
            raise ValueError("noise requires a seeded rng")
        rssi += rng.normal(0.0, model.noise_sigma_db)
    return max(-100.0, min(0.0, rssi))


def error_accrual(errors: float, steps: float, rate: float = 1.0) -> float:
    """Linear error growth: one rate unit per detected step."""
    return errors + rate * steps


def drift_correction(
    a: DeviceView,
    b: DeviceView,
    lower_threshold: float,
    stationary_eps_m: float = STATIONARY_EPS_M,
) -> CollaborationUpdate | None:
    """Correct device A against peer or beacon B.

    Peer case: A moves to the point at fraction errors_A/(errors_A+errors_B)
    of the segment from A to B, so diverged devices barely pull well-placed
    ones; if A was stationary since the previous tick its error decrements
    by one (floored at zero). Beacon case: A snaps to the beacon and its
    error resets to zero. Guard failures yield no update.
    """
    if a.kind != "mobile":
        return None
    if b.kind == "mobile":
        if a.errors <= lower_threshold:
            return None
        sum_errors = a.errors + b.errors
        if sum_errors == 0:
            return None
        ratio = a.errors / sum_errors
        new_location = intermediate_point(a.location, b.location, ratio)
        new_errors = a.errors
        if (
            a.prev_location is not None
            and haversine_distance(a.prev_location, a.location) < stationary_eps_m
        ):
            new_errors = max(0.0, a.errors - 1.0)
        return CollaborationUpdate(
            device_id=a.id,
            new_location=new_location,
            new_errors=new_errors,
            source_kind="mobile",
        )
    if b.kind == "beacon":
        if a.errors <= lower_threshold:
            return None
        return CollaborationUpdate(
            device_id=a.id,
            new_location=b.location,
            new_errors=0.0,
            source_kind="beacon",
        )
    return None


def _series_from_raw(raw: RawLog, params: dict) -> FilteredSeries:
    ts = np.array([r.timestamp for r in raw.records])
    mag = np.array([magnitude(r.acc_x, r.acc_y, r.acc_z) for r in raw.records])
    heading = heading_series(
        raw,
        initial_heading=float(params.get("initial_heading_rad", 0.0)),
        mode=str(params.get("heading_mode", "gyro_integration")),
    )
    return FilteredSeries(timestamps=ts, magnitude=mag, heading=heading)


class LowPassFilterPlugin(BasePlugin):
    """Smooths the acceleration magnitude with a zero-phase low-pass."""

    metadata = PluginMetadata(
        name="lowpass-magnitude-filter",
        slug="lowpass",
        display_name="Low-pass filter",
        category=PluginCategory.FILTERING,
    )

    def validate_params(self, params: dict) -> None:
        cutoff = float(params.get("cutoff_hz", DEFAULT_CUTOFF_HZ))
        if cutoff <= 0:
            raise PluginError(f"cutoff_hz must be positive, got {cutoff}")

    def get_filtered_data(self, raw: RawLog, params: dict) -> FilteredSeries:
        if not raw.records:
            raise PluginError("empty log")
        series = _series_from_raw(raw, params)
        if len(raw.records) < 2:
            return series
        cutoff = float(params.get("cutoff_hz", DEFAULT_CUTOFF_HZ))
        try:
            smoothed = lowpass_filter(series.magnitude, cutoff, raw.sampling_rate_hz)
        except ValueError as exc:
            raise PluginError(str(exc)) from None
        return FilteredSeries(
            timestamps=series.timestamps, magnitude=smoothed, heading=series.heading
        )


class PdrPositioningPlugin(BasePlugin):
    """Step-detection PDR: one new location per detected step."""

    metadata = PluginMetadata(
        name="pedestrian-dead-reckoning",
        slug="pdr",
        display_name="Pedestrian Dead Reckoning",
        category=PluginCategory.POSITIONING,
    )

    def validate_params(self, params: dict) -> None:
        if float(params.get("step_length_m", 0.7)) <= 0:
            raise PluginError("step_length_m must be positive")
        if float(params.get("min_step_interval_ms", DEFAULT_MIN_STEP_INTERVAL_MS)) < 0:
            raise PluginError("min_step_interval_ms must be >= 0")

    def get_positioning_data(
        self,
        initial: GeoPoint,
        data: FilteredSeries | RawLog,
        device_params: DeviceParams,
        params: dict,
    ) -> Trajectory:
        if isinstance(data, RawLog):
            merged = dict(params)
            merged.setdefault("initial_heading_rad", device_params.initial_heading)
            data = _series_from_raw(data, merged)
        steps = detect_steps(
            data,
            min_peak_height=float(params.get("min_peak_height", DEFAULT_MIN_PEAK_HEIGHT)),
            min_step_interval_ms=int(params.get("min_step_interval_ms", DEFAULT_MIN_STEP_INTERVAL_MS)),
        )
        step_length = float(params.get("step_length_m", device_params.step_length))
        return pdr_positioning(
            initial,
            int(data.timestamps[0]),
            steps,
            step_length,
            device_id="",
        )


class DriftCorrectionPlugin(BasePlugin):
    """Peer/beacon drift correction driven by exchanged error counters."""

    metadata = PluginMetadata(
        name="collaborative-drift-correction",
        slug="drift-correction",
        display_name="Drift correction",
        category=PluginCategory.COLLABORATIVE,
    )

    def handle_matches(
        self,
        devices: list[DeviceView],
        timestamp: int,
        lower_threshold: float,
        secondary_threshold: float = 0.0,
    ) -> list[CollaborationUpdate]:
        """Updates for the first (correcting) device against every other
        participant. `secondary_threshold` is accepted for interface
        compatibility and unused by this algorithm."""
        if len(devices) < 2:
            return []
        a = devices[0]
        updates = []
        for b in devices[1:]:
            update = drift_correction(a, b, lower_threshold)
            if update is not None:
                updates.append(update)
        return updates
