import json

import pytest
from click.testing import CliRunner

from trackbench.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_synth_validate_replay_score_flow(runner, tmp_path):
    bundle = tmp_path / "bundle"
    run_dir = tmp_path / "run"

    result = runner.invoke(main, ["synth", "--out", str(bundle), "--seed", "0"])
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, ["validate", str(bundle)])
    assert result.exit_code == 0, result.output
    assert "devices: 4" in result.output
    assert "beacons: 1" in result.output

    result = runner.invoke(main, ["replay", str(bundle), "--out", str(run_dir)])
    assert result.exit_code == 0, result.output
    assert (run_dir / "metrics.json").exists()

    result = runner.invoke(main, ["score", str(run_dir)])
    assert result.exit_code == 0, result.output
    assert "aggregate:" in result.output
    assert "dev0" in result.output


def test_validate_rejects_broken_bundle(runner, tmp_path):
    (tmp_path / "empty").mkdir()
    result = runner.invoke(main, ["validate", str(tmp_path / "empty")])
    assert result.exit_code == 2
    assert "invalid bundle" in result.output


def test_replay_rejects_unknown_pipeline(runner, tmp_path):
    bundle = tmp_path / "bundle"
    assert runner.invoke(main, ["synth", "--out", str(bundle)]).exit_code == 0
    result = runner.invoke(
        main,
        ["replay", str(bundle), "--pipeline", "lowpass,warp-drive", "--out", str(tmp_path / "r")],
    )
    assert result.exit_code == 2
    assert "invalid pipeline" in result.output


def test_replay_pipeline_spec_accepts_skipped_stages(runner, tmp_path):
    bundle = tmp_path / "bundle"
    assert runner.invoke(main, ["synth", "--out", str(bundle)]).exit_code == 0
    result = runner.invoke(
        main, ["replay", str(bundle), "--pipeline", "-,pdr,-", "--out", str(tmp_path / "r")]
    )
    assert result.exit_code == 0, result.output
    doc = json.loads((tmp_path / "r" / "result.json").read_text())
    assert doc["pipeline"] == ["pdr"]


def test_score_requires_metrics_file(runner, tmp_path):
    result = runner.invoke(main, ["score", str(tmp_path)])
    assert result.exit_code == 2


def test_synth_custom_device_count_and_bias(runner, tmp_path):
    bundle = tmp_path / "bundle"
    result = runner.invoke(
        main, ["synth", "--out", str(bundle), "--devices", "2", "--heading-bias", "0.0"]
    )
    assert result.exit_code == 0
    doc = json.loads((bundle / "scenario.json").read_text())
    assert len(doc["devices"]) == 2
