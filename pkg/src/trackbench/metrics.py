"""Evaluation metrics: Discrete Frechet Distance, third quartile of
localization errors, and CDF report export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .geo import haversine_distance
from .model import DeviceRun, RunResult, Trajectory


@dataclass
class MetricReport:
    device_id: str
    dfd_estimated: float
    dfd_corrected: float
    q3_estimated: float
    q3_corrected: float
    mean_error_estimated: float
    mean_error_corrected: float
    improvement: float  # (q3_est - q3_corr) / q3_est
    error_samples_estimated: list[float] = field(default_factory=list)  # sorted
    error_samples_corrected: list[float] = field(default_factory=list)  # sorted

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "dfd_estimated": self.dfd_estimated,
            "dfd_corrected": self.dfd_corrected,
            "q3_estimated": self.q3_estimated,
            "q3_corrected": self.q3_corrected,
            "mean_error_estimated": self.mean_error_estimated,
            "mean_error_corrected": self.mean_error_corrected,
            "improvement": self.improvement,
            "error_samples_estimated": self.error_samples_estimated,
            "error_samples_corrected": self.error_samples_corrected,
        }


def discrete_frechet(p: Trajectory, q: Trajectory) -> float:
    """Discrete Frechet distance between two trajectories in meters.

    Dynamic programming over dfd(i,j) = max(d(p_i,q_j),
    min(dfd(i-1,j), dfd(i,j-1), dfd(i-1,j-1))) with haversine ground
    distance; O(m*n) time, O(min(m,n)) memory.
    """
    if len(p.points) == 0 or len(q.points) == 0:
        raise ValueError("trajectories must be non-empty")
    a, b = p.points, q.points
    if len(b) > len(a):
        a, b = b, a  # row buffer sized on the shorter trajectory
    n = len(b)
    row = [0.0] * n
    for i in range(len(a)):
        prev_diag = row[0]
        d = haversine_distance(a[i].location, b[0].location)
        row[0] = d if i == 0 else max(d, row[0])
        for j in range(1, n):
            d = haversine_distance(a[i].location, b[j].location)
            if i == 0:
                best = row[j - 1]
            else:
                best = min(prev_diag, row[j], row[j - 1])
            prev_diag = row[j]
            row[j] = max(d, best)
    return row[n - 1]


def localization_errors(reference: DeviceRun, subject: Trajectory) -> list[float]:
    """Pointwise ground distances from each subject point to the groundtruth
    position interpolated at the same timestamp.

    Timestamps outside the groundtruth span are clamped to the nearest
    endpoint.
    """
    from .model import groundtruth_position_at

    if not subject.points:
        raise ValueError("subject trajectory must be non-empty")
    return [
        haversine_distance(
            groundtruth_position_at(reference, p.timestamp, clamp=True), p.location
        )
        for p in subject.points
    ]


def quantile(samples: list[float], q: float) -> float:
    """Linear-interpolation (inclusive) quantile of a sample list."""
    if not samples:
        raise ValueError("empty sample list")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile fraction out of range: {q}")
    return float(np.quantile(np.asarray(samples, dtype=float), q, method="linear"))


def device_report(device_id: str, run: DeviceRun, estimated: Trajectory, corrected: Trajectory) -> MetricReport:
    gt_est = _groundtruth_like(run, estimated)
    gt_corr = _groundtruth_like(run, corrected)
    err_est = sorted(localization_errors(run, estimated))
    err_corr = sorted(localization_errors(run, corrected))
    q3_est = quantile(err_est, 0.75)
    q3_corr = quantile(err_corr, 0.75)
    return MetricReport(
        device_id=device_id,
        dfd_estimated=discrete_frechet(gt_est, estimated),
        dfd_corrected=discrete_frechet(gt_corr, corrected),
        q3_estimated=q3_est,
        q3_corrected=q3_corr,
        mean_error_estimated=float(np.mean(err_est)),
        mean_error_corrected=float(np.mean(err_corr)),
        improvement=0.0 if q3_est == 0 else (q3_est - q3_corr) / q3_est,
        error_samples_estimated=err_est,
        error_samples_corrected=err_corr,
    )


def _groundtruth_like(run: DeviceRun, subject: Trajectory) -> Trajectory:
    """Groundtruth sampled at the subject's (clamped) timestamps."""
    from .replay import _clamped_query_ts
    from .model import interpolate_groundtruth

    return interpolate_groundtruth(
        run, _clamped_query_ts(run, [p.timestamp for p in subject.points])
    )


def build_report(result: RunResult, scenario) -> tuple[dict[str, MetricReport], dict]:
    """Per-device metric reports plus the aggregate summary."""
    runs = {r.device_id: r for r in scenario.device_runs}
    reports: dict[str, MetricReport] = {}
    for device_id, dres in sorted(result.devices.items()):
        reports[device_id] = device_report(
            device_id, runs[device_id], dres.estimated, dres.corrected
        )
    q3_est = [r.q3_estimated for r in reports.values()]
    q3_corr = [r.q3_corrected for r in reports.values()]
    mean_q3_est = float(np.mean(q3_est))
    mean_q3_corr = float(np.mean(q3_corr))
    aggregate = {
        "mean_q3_estimated": mean_q3_est,
        "mean_q3_corrected": mean_q3_corr,
        "improvement": 0.0 if mean_q3_est == 0 else (mean_q3_est - mean_q3_corr) / mean_q3_est,
        "devices_improved": sum(1 for r in reports.values() if r.q3_corrected < r.q3_estimated),
        "device_count": len(reports),
    }
    return reports, aggregate


def export_cdf(reports: dict[str, MetricReport]) -> str:
    """CSV with the estimated/corrected error CDFs on a shared sorted grid.

    Metadata rows (prefixed '#') carry the q3 markers.
    """
    est = sorted(e for r in reports.values() for e in r.error_samples_estimated)
    corr = sorted(e for r in reports.values() for e in r.error_samples_corrected)
    if not est or not corr:
        raise ValueError("no error samples to export")
    grid = sorted(set(est) | set(corr))
    est_arr = np.asarray(est)
    corr_arr = np.asarray(corr)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"# q3_estimated={quantile(est, 0.75)!r}"])
    writer.writerow([f"# q3_corrected={quantile(corr, 0.75)!r}"])
    writer.writerow(["error_m", "cdf_estimated", "cdf_corrected"])
    for x in grid:
        writer.writerow(
            [
                repr(float(x)),
                repr(float(np.searchsorted(est_arr, x, side="right") / len(est_arr))),
                repr(float(np.searchsorted(corr_arr, x, side="right") / len(corr_arr))),
            ]
        )
    return out.getvalue()


def parse_cdf(text: str) -> dict[str, list[float]]:
    """Inverse of export_cdf (metadata rows skipped)."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    header, data = rows[0], rows[1:]
    cols: dict[str, list[float]] = {name: [] for name in header}
    for row in data:
        for name, value in zip(header, row):
            cols[name].append(float(value))
    return cols
