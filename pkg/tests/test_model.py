import math

import pytest

from trackbench.geo import GeoPoint, destination_point, haversine_distance
from trackbench.model import (
    DeviceParams,
    DeviceRun,
    Scenario,
    Trajectory,
    TrajectoryKind,
    TrajectoryPoint,
    Floorplan,
    groundtruth_position_at,
    interpolate_groundtruth,
    polyline_length,
    trajectory_length,
)

ORIGIN = GeoPoint(46.52, 6.58)


def _run(path, checkpoints, **kwargs):
    return DeviceRun(
        device_id="dev",
        groundtruth_path=tuple(path),
        checkpoint_events=tuple(checkpoints),
        **kwargs,
    )


def test_trajectory_point_rejects_negative_timestamp():
    with pytest.raises(ValueError):
        TrajectoryPoint(ORIGIN, -1)


def test_trajectory_requires_strictly_increasing_timestamps():
    pts = (TrajectoryPoint(ORIGIN, 0), TrajectoryPoint(ORIGIN, 0))
    with pytest.raises(ValueError):
        Trajectory(TrajectoryKind.ESTIMATED, pts, "dev")


def test_device_params_validation():
    with pytest.raises(ValueError):
        DeviceParams(step_length=0.0)
    with pytest.raises(ValueError):
        DeviceParams(lower_threshold=-1.0)
    with pytest.raises(ValueError):
        DeviceParams(collaboration_range=0.0)


def test_device_run_first_checkpoint_must_be_vertex_zero():
    with pytest.raises(ValueError):
        _run([ORIGIN, destination_point(ORIGIN, 0, 10)], [(1, 0)])


def test_device_run_checkpoint_timestamps_strictly_increasing():
    path = [ORIGIN, destination_point(ORIGIN, 0, 10)]
    with pytest.raises(ValueError):
        _run(path, [(0, 0), (1, 0)])


def test_scenario_rejects_duplicate_device_ids():
    path = (ORIGIN, destination_point(ORIGIN, 0, 10))
    runs = [_run(path, [(0, 0), (1, 1000)]) for _ in range(2)]
    with pytest.raises(ValueError, match="unique"):
        Scenario(id="s", name="s", floorplan=Floorplan(), beacons=[], device_runs=runs)


def test_groundtruth_interpolation_constant_speed_single_segment():
    end = destination_point(ORIGIN, 0.0, 100.0)
    run = _run([ORIGIN, end], [(0, 0), (1, 10_000)])
    half = groundtruth_position_at(run, 5_000)
    assert haversine_distance(ORIGIN, half) == pytest.approx(50.0, abs=1e-6)
    quarter = groundtruth_position_at(run, 2_500)
    assert haversine_distance(ORIGIN, quarter) == pytest.approx(25.0, abs=1e-6)


def test_groundtruth_interpolation_walks_across_vertices():
    # two 10 m legs covered by a single checkpoint pair: constant speed must
    # carry the walker around the corner, not restart per segment
    mid = destination_point(ORIGIN, 0.0, 10.0)
    end = destination_point(mid, math.pi / 2.0, 10.0)
    run = _run([ORIGIN, mid, end], [(0, 0), (2, 20_000)])
    p = groundtruth_position_at(run, 15_000)  # 15 m along: 5 m past the corner
    assert haversine_distance(mid, p) == pytest.approx(5.0, abs=1e-3)


def test_groundtruth_position_at_endpoints_and_clamping():
    end = destination_point(ORIGIN, 0.0, 100.0)
    run = _run([ORIGIN, end], [(0, 1000), (1, 2000)])
    assert groundtruth_position_at(run, 1000) == ORIGIN
    assert groundtruth_position_at(run, 2000) == end
    with pytest.raises(ValueError, match="out of groundtruth range"):
        groundtruth_position_at(run, 999)
    assert groundtruth_position_at(run, 0, clamp=True) == ORIGIN
    assert groundtruth_position_at(run, 99_999, clamp=True) == end


def test_interpolate_groundtruth_returns_groundtruth_trajectory():
    end = destination_point(ORIGIN, 0.0, 100.0)
    run = _run([ORIGIN, end], [(0, 0), (1, 10_000)])
    traj = interpolate_groundtruth(run, [0, 5_000, 10_000])
    assert traj.kind is TrajectoryKind.GROUNDTRUTH
    assert len(traj) == 3
    assert traj.points[-1].location == end


def test_lengths_agree_with_haversine_sum():
    a = ORIGIN
    b = destination_point(a, 0.0, 30.0)
    c = destination_point(b, math.pi / 2.0, 40.0)
    assert polyline_length((a, b, c)) == pytest.approx(70.0, abs=1e-6)
    traj = Trajectory(
        TrajectoryKind.ESTIMATED,
        (TrajectoryPoint(a, 0), TrajectoryPoint(b, 1), TrajectoryPoint(c, 2)),
        "dev",
    )
    assert trajectory_length(traj) == pytest.approx(70.0, abs=1e-6)
