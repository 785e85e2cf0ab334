"""Command-line front door: validate bundles, run replays, score results,
serve the API, and generate synthetic bundles.

Exit codes: 0 success, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .ingest import IngestError, load_scenario
from .model import TimeAlignment, polyline_length
from .persist import write_run_dir
from .plugins import PipelineConfig, PluginError, default_registry
from .replay import ReplayError, run_replay

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


@click.group()
def main() -> None:
    """Indoor-tracking algorithm workbench."""


@main.command()
@click.argument("bundle", type=click.Path(exists=True))
def validate(bundle: str) -> None:
    """Validate a scenario bundle and print a summary."""
    try:
        scenario = load_scenario(bundle)
    except IngestError as exc:
        click.echo(f"invalid bundle: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    total_m = sum(polyline_length(r.groundtruth_path) for r in scenario.device_runs)
    click.echo(f"scenario: {scenario.name}")
    click.echo(f"devices: {len(scenario.device_runs)}")
    click.echo(f"beacons: {len(scenario.beacons)}")
    click.echo(f"total groundtruth length: {total_m:.1f} m")


def _parse_pipeline(spec: str) -> PipelineConfig:
    """filter,positioning,collab triple; '-' or empty skips an optional stage."""
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) == 1:
        parts = ["", parts[0], ""]
    if len(parts) == 2:
        parts = [parts[0], parts[1], ""]
    if len(parts) != 3:
        raise click.BadParameter("expected <filtering,positioning,collaborative>")
    filtering, positioning, collaborative = (p if p and p != "-" else None for p in parts)
    if positioning is None:
        raise click.BadParameter("positioning stage is mandatory")
    return PipelineConfig(
        positioning=positioning, filtering=filtering, collaborative=collaborative
    )


@main.command()
@click.argument("bundle", type=click.Path(exists=True))
@click.option("--pipeline", "pipeline_spec", default="lowpass,pdr,drift-correction",
              show_default=True, help="filtering,positioning,collaborative slugs")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--align", type=click.Choice(["common", "recorded"]), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def replay(bundle: str, pipeline_spec: str, seed: int, align: str | None, out_dir: str) -> None:
    """Run a replay over a bundle and write the run directory."""
    try:
        scenario = load_scenario(bundle)
    except IngestError as exc:
        click.echo(f"invalid bundle: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    if align is not None:
        scenario.time_alignment = (
            TimeAlignment.COMMON_START if align == "common" else TimeAlignment.AS_RECORDED
        )
    pipeline = _parse_pipeline(pipeline_spec)
    registry = default_registry()
    try:
        pipeline.validate(registry)
    except PluginError as exc:
        click.echo(f"invalid pipeline: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        result = run_replay(scenario, pipeline, registry, seed=seed)
        write_run_dir(result, scenario, out_dir)
    except (ReplayError, OSError) as exc:
        click.echo(f"replay failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"run written to {out_dir}")


@main.command()
@click.argument("run_dir", type=click.Path(exists=True))
def score(run_dir: str) -> None:
    """Print the per-device q3/DFD table and aggregate improvement."""
    metrics_path = Path(run_dir) / "metrics.json"
    if not metrics_path.exists():
        click.echo("no metrics.json in run directory", err=True)
        sys.exit(EXIT_VALIDATION)
    doc = json.loads(metrics_path.read_text())
    header = f"{'device':<12}{'q3 est':>10}{'q3 corr':>10}{'dfd est':>10}{'dfd corr':>10}{'impr %':>8}"
    click.echo(header)
    for device_id, r in sorted(doc["devices"].items()):
        click.echo(
            f"{device_id:<12}{r['q3_estimated']:>10.2f}{r['q3_corrected']:>10.2f}"
            f"{r['dfd_estimated']:>10.2f}{r['dfd_corrected']:>10.2f}"
            f"{100 * r['improvement']:>8.1f}"
        )
    agg = doc["aggregate"]
    click.echo(
        f"aggregate: mean q3 {agg['mean_q3_estimated']:.2f} -> {agg['mean_q3_corrected']:.2f} m "
        f"({100 * agg['improvement']:.1f}% improvement, "
        f"{agg['devices_improved']}/{agg['device_count']} devices improved)"
    )


@main.command()
@click.option("--data-dir", envvar="TRACKBENCH_DATA_DIR", default="trackbench-data",
              show_default=True, type=click.Path())
@click.option("--bind", envvar="TRACKBENCH_BIND_ADDR", default="127.0.0.1:8000",
              show_default=True)
def serve(data_dir: str, bind: str) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    host, _, port = bind.partition(":")
    app = create_app(data_dir=data_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


@main.command()
@click.option("--preset", type=click.Choice(["square-drift"]), default="square-drift",
              show_default=True)
@click.option("--devices", default=4, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--heading-bias", default=0.05, show_default=True, type=float,
              help="injected heading bias in rad per step")
@click.option("--noise-sigma", default=0.05, show_default=True, type=float,
              help="accelerometer noise sigma in m/s^2")
def synth(preset: str, devices: int, seed: int, out_dir: str, heading_bias: float,
          noise_sigma: float) -> None:
    """Generate a synthetic scenario bundle."""
    from .synth import SquareDriftPreset, generate_square_drift

    cfg = SquareDriftPreset(
        devices=devices,
        heading_bias_rad_per_step=heading_bias,
        accel_noise_sigma=noise_sigma,
    )
    generate_square_drift(out_dir, cfg, seed=seed)
    click.echo(f"bundle written to {out_dir}")


if __name__ == "__main__":
    main()
