"""Shared fixtures: a synthetic square-loop bundle plus a completed replay."""

from __future__ import annotations

import pytest

from trackbench.ingest import load_scenario
from trackbench.plugins import PipelineConfig, default_registry
from trackbench.replay import run_replay
from trackbench.synth import SquareDriftPreset, generate_square_drift


@pytest.fixture(scope="session")
def square_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundles") / "square-drift"
    generate_square_drift(out, SquareDriftPreset(), seed=0)
    return out


@pytest.fixture(scope="session")
def square_scenario(square_bundle):
    return load_scenario(square_bundle)


@pytest.fixture(scope="session")
def full_pipeline():
    return PipelineConfig(
        positioning="pdr", filtering="lowpass", collaborative="drift-correction"
    )


@pytest.fixture(scope="session")
def square_result(square_scenario, full_pipeline):
    return run_replay(square_scenario, full_pipeline, default_registry(), seed=0)
