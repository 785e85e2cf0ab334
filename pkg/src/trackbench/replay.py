"""Execution-replay engine.

Merges every device run onto one timeline, advances a discrete event loop,
detects peer-proximity and beacon-encounter events, and applies
collaborative updates deterministically. A run is a pure function of
(scenario, pipeline, seed).
"""

from __future__ import annotations

import bisect
import dataclasses
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .algorithms import PathLossModel, distance_to_rssi, error_accrual, rssi_to_distance
from .geo import GeoPoint, haversine_distance
from .ingest import RawLog, RawMeasurementRecord
from .model import (
    Beacon,
    BeaconKind,
    DeviceResult,
    DeviceRun,
    RunResult,
    Scenario,
    TimeAlignment,
    Trajectory,
    TrajectoryKind,
    TrajectoryPoint,
    groundtruth_position_at,
    interpolate_groundtruth,
)
from .plugins import DeviceView, PipelineConfig, PluginRegistry

DEFAULT_HEARTBEAT_MS = 500


class ReplayError(ValueError):
    pass


@dataclass(frozen=True)
class EncounterEvent:
    timestamp: int
    kind: str  # "peer_peer" | "device_beacon"
    device_id: str  # the correcting device
    other_id: str  # peer device id or beacon slug
    distance: float  # groundtruth meters (peer) / estimated meters (beacon)


@dataclass
class ReplayTick:
    timestamp: int
    devices: dict[str, dict]  # device_id -> {groundtruth, corrected, errors}


def align_run(run: DeviceRun, alignment: TimeAlignment) -> DeviceRun:
    """Shift a run so its first raw-log timestamp is zero (CommonStart)."""
    if alignment is TimeAlignment.AS_RECORDED:
        return run
    raw: RawLog = run.raw_log
    if raw is None or not raw.records:
        raise ReplayError(f"device {run.device_id} has no raw log")
    shift = raw.records[0].timestamp
    if shift == 0:
        return run
    shifted_records = tuple(
        dataclasses.replace(r, timestamp=r.timestamp - shift) for r in raw.records
    )
    shifted_checkpoints = tuple((v, t - shift) for v, t in run.checkpoint_events)
    if any(t < 0 for _, t in shifted_checkpoints):
        raise ReplayError(
            f"device {run.device_id}: checkpoint precedes first raw sample"
        )
    return replace(
        run,
        raw_log=RawLog(device_id=raw.device_id, records=shifted_records),
        checkpoint_events=shifted_checkpoints,
    )


def build_timeline(
    scenario: Scenario,
    step_timestamps: dict[str, list[int]],
    heartbeat_ms: int = DEFAULT_HEARTBEAT_MS,
) -> list[int]:
    """Union of all step-event timestamps and a fixed heartbeat grid."""
    if not scenario.device_runs:
        raise ReplayError("scenario has no device runs")
    starts, ends = [], []
    for run in scenario.device_runs:
        raw: RawLog = run.raw_log
        if raw is None or not raw.records:
            raise ReplayError(f"device {run.device_id} has no raw log")
        starts.append(raw.records[0].timestamp)
        ends.append(raw.records[-1].timestamp)
    t0 = min(starts)
    t1 = max(ends)
    grid_start = (t0 // heartbeat_ms) * heartbeat_ms
    ticks = set(range(grid_start, t1 + 1, heartbeat_ms))
    for steps in step_timestamps.values():
        ticks.update(steps)
    return sorted(ticks)


@dataclass
class _DeviceState:
    run: DeviceRun
    estimated: Trajectory
    step_ts: list[int]
    est_ts: list[int]
    offset: tuple[float, float] = (0.0, 0.0)  # (dlat, dlon) degrees
    offset_history: list[tuple[int, tuple[float, float]]] = field(default_factory=list)
    errors: float = 0.0
    prev_corrected: Optional[GeoPoint] = None
    prev_tick: Optional[int] = None
    collaboration_count: int = 0
    beacon_correction_count: int = 0

    def active(self, t: int) -> bool:
        cp = self.run.checkpoint_events
        return cp[0][1] <= t <= cp[-1][1]

    def estimated_at(self, t: int) -> GeoPoint:
        i = bisect.bisect_right(self.est_ts, t) - 1
        return self.estimated.points[max(0, i)].location

    def corrected_at(self, t: int) -> GeoPoint:
        est = self.estimated_at(t)
        return GeoPoint(est.lat + self.offset[0], est.lon + self.offset[1])

    def apply_location(self, t: int, new_location: GeoPoint) -> None:
        est = self.estimated_at(t)
        self.offset = (new_location.lat - est.lat, new_location.lon - est.lon)
        if self.offset_history and self.offset_history[-1][0] == t:
            self.offset_history[-1] = (t, self.offset)
        else:
            self.offset_history.append((t, self.offset))


def _logged_rssi(raw: RawLog, slug: str, t: int, record_ts: list[int]) -> float:
    i = bisect.bisect_right(record_ts, t) - 1
    if i < 0:
        return -100.0
    record: RawMeasurementRecord = raw.records[i]
    return record.rssi.get(slug, -100.0)


def detect_encounters(
    t: int,
    active: list[str],
    pre: dict[str, dict],
    states: dict[str, "_DeviceState"],
    beacons: list[Beacon],
    rng: np.random.Generator,
    raw_ts_cache: dict[str, list[int]],
) -> list[EncounterEvent]:
    """Peer and beacon encounters at one tick, in canonical order.

    Peer proximity is tested on groundtruth positions (the replay knows the
    real positions; the exchanged payloads are estimates). Beacon proximity
    uses the estimated distance from the beacon's generated (virtual) or
    logged (physical) RSSI. Both ranges are strict "below".
    """
    events: list[EncounterEvent] = []
    for a in active:
        for b in active:
            if a == b:
                continue
            d_gt = haversine_distance(pre[a]["groundtruth"], pre[b]["groundtruth"])
            if d_gt < states[a].run.params.collaboration_range:
                events.append(EncounterEvent(t, "peer_peer", a, b, d_gt))
    for a in active:
        st = states[a]
        for beacon in beacons:
            model = PathLossModel(
                rssi_at_1m=beacon.tx_power_dbm,
                exponent=beacon.path_loss_exponent,
                noise_sigma_db=beacon.noise_sigma_db,
            )
            if beacon.kind is BeaconKind.VIRTUAL:
                d_true = haversine_distance(pre[a]["groundtruth"], beacon.location)
                if d_true <= 0:
                    d_true = 1e-6
                rssi = distance_to_rssi(d_true, model, rng)
            else:
                rssi = _logged_rssi(st.run.raw_log, beacon.slug, t, raw_ts_cache[a])
            d_est = rssi_to_distance(rssi, model)
            if d_est < st.run.params.beacon_correction_range:
                events.append(EncounterEvent(t, "device_beacon", a, beacon.slug, d_est))
    # canonical order: peers before beacons, then lexicographic participants
    events.sort(key=lambda e: (e.kind != "peer_peer", e.device_id, e.other_id))
    return events


def run_replay(
    scenario: Scenario,
    pipeline: PipelineConfig,
    registry: PluginRegistry,
    seed: int = 0,
    heartbeat_ms: int = DEFAULT_HEARTBEAT_MS,
) -> RunResult:
    """Execute the full pipeline over the replay timeline."""
    pipeline.validate(registry)
    rng = np.random.default_rng(seed)

    runs = [align_run(run, scenario.time_alignment) for run in scenario.device_runs]

    filter_plugin = registry.get(pipeline.filtering) if pipeline.filtering else None
    positioning_plugin = registry.get(pipeline.positioning)
    collab_plugin = registry.get(pipeline.collaborative) if pipeline.collaborative else None

    states: dict[str, _DeviceState] = {}
    for run in runs:
        raw: RawLog = run.raw_log
        stage_params = dict(pipeline.filtering_params)
        stage_params.setdefault("initial_heading_rad", run.params.initial_heading)
        data = raw
        if filter_plugin is not None:
            data = filter_plugin.get_filtered_data(raw, stage_params)
        pos_params = dict(pipeline.positioning_params)
        pos_params.setdefault("step_length_m", run.params.step_length)
        pos_params.setdefault("initial_heading_rad", run.params.initial_heading)
        initial = run.groundtruth_path[0]
        estimated = positioning_plugin.get_positioning_data(
            initial, data, run.params, pos_params
        )
        estimated = replace(estimated, device_id=run.device_id)
        step_ts = [p.timestamp for p in estimated.points[1:]]
        states[run.device_id] = _DeviceState(
            run=run,
            estimated=estimated,
            step_ts=step_ts,
            est_ts=[p.timestamp for p in estimated.points],
        )

    ticks = build_timeline(
        replace(scenario, device_runs=runs),
        {d: s.step_ts for d, s in states.items()},
        heartbeat_ms=heartbeat_ms,
    )

    device_ids = sorted(states)
    beacons = sorted(scenario.beacons, key=lambda b: b.slug)
    raw_ts_cache = {
        d: [r.timestamp for r in states[d].run.raw_log.records] for d in device_ids
    }

    encounters: list[EncounterEvent] = []
    tick_log: list[ReplayTick] = []

    for t in ticks:
        active = [d for d in device_ids if states[d].active(t)]

        # 1-2: advance positions and accrue errors for devices that stepped
        pre: dict[str, dict] = {}
        for d in active:
            st = states[d]
            lo = bisect.bisect_right(st.step_ts, st.prev_tick) if st.prev_tick is not None else 0
            hi = bisect.bisect_right(st.step_ts, t)
            if hi > lo:
                st.errors = error_accrual(
                    st.errors, hi - lo, st.run.params.error_rate_per_step
                )
            pre[d] = {
                "groundtruth": groundtruth_position_at(st.run, t, clamp=True),
                "corrected": st.corrected_at(t),
                "errors": st.errors,
            }

        # 3: detect encounters against pre-tick state
        tick_events: list[EncounterEvent] = []
        if collab_plugin is not None:
            tick_events = detect_encounters(
                t, active, pre, states, beacons, rng, raw_ts_cache
            )

        # 4: compute updates from pre-tick state, apply in canonical order
        for event in tick_events:
            st = states[event.device_id]
            a_view = DeviceView(
                id=event.device_id,
                kind="mobile",
                location=pre[event.device_id]["corrected"],
                errors=pre[event.device_id]["errors"],
                prev_location=st.prev_corrected,
            )
            if event.kind == "peer_peer":
                b_view = DeviceView(
                    id=event.other_id,
                    kind="mobile",
                    location=pre[event.other_id]["corrected"],
                    errors=pre[event.other_id]["errors"],
                    prev_location=states[event.other_id].prev_corrected,
                )
            else:
                beacon = scenario.beacon_by_slug(event.other_id)
                b_view = DeviceView(
                    id=event.other_id, kind="beacon", location=beacon.location, errors=0.0
                )
            updates = collab_plugin.handle_matches(
                [a_view, b_view],
                t,
                st.run.params.lower_threshold,
                float(pipeline.collaborative_params.get("secondary_threshold", 0.0)),
            )
            applied = False
            for update in updates:
                target = states[update.device_id]
                if update.new_location is not None:
                    target.apply_location(t, update.new_location)
                if update.new_errors is not None:
                    target.errors = max(0.0, update.new_errors)
                applied = True
            if applied:
                encounters.append(event)
                if event.kind == "peer_peer":
                    st.collaboration_count += 1
                else:
                    st.beacon_correction_count += 1

        # 5: record the tick
        post = {
            d: {
                "groundtruth": pre[d]["groundtruth"],
                "corrected": states[d].corrected_at(t),
                "errors": states[d].errors,
            }
            for d in active
        }
        tick_log.append(ReplayTick(timestamp=t, devices=post))
        for d in active:
            states[d].prev_corrected = post[d]["corrected"]
            states[d].prev_tick = t

    devices: dict[str, DeviceResult] = {}
    for d in device_ids:
        st = states[d]
        corrected = _corrected_trajectory(st)
        gt = interpolate_groundtruth(
            st.run, _clamped_query_ts(st.run, [p.timestamp for p in st.estimated.points])
        )
        devices[d] = DeviceResult(
            groundtruth=gt,
            estimated=st.estimated,
            corrected=corrected,
            collaboration_count=st.collaboration_count,
            beacon_correction_count=st.beacon_correction_count,
        )

    return RunResult(
        scenario_id=scenario.id,
        pipeline=pipeline.slugs(),
        seed=seed,
        devices=devices,
        encounters=encounters,
        ticks=tick_log,
    )


def _clamped_query_ts(run: DeviceRun, ts: list[int]) -> list[int]:
    lo = run.checkpoint_events[0][1]
    hi = run.checkpoint_events[-1][1]
    clamped = [min(hi, max(lo, t)) for t in ts]
    # keep strictly increasing after clamping
    out = []
    for t in clamped:
        if out and t <= out[-1]:
            continue
        out.append(t)
    return out or [lo]


def _corrected_trajectory(st: _DeviceState) -> Trajectory:
    """Estimated points shifted by the offset in effect at their timestamp,
    merged with the correction points themselves."""
    history = st.offset_history
    h_ts = [h[0] for h in history]

    def offset_at(t: int) -> tuple[float, float]:
        i = bisect.bisect_right(h_ts, t) - 1
        return history[i][1] if i >= 0 else (0.0, 0.0)

    points: dict[int, GeoPoint] = {}
    for p in st.estimated.points:
        dlat, dlon = offset_at(p.timestamp)
        points[p.timestamp] = GeoPoint(p.location.lat + dlat, p.location.lon + dlon)
    for t, (dlat, dlon) in history:
        est = st.estimated_at(t)
        points[t] = GeoPoint(est.lat + dlat, est.lon + dlon)
    ordered = tuple(
        TrajectoryPoint(points[t], t) for t in sorted(points)
    )
    return Trajectory(TrajectoryKind.CORRECTED, ordered, st.run.device_id)
