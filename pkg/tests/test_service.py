import io
import json
import shutil
import time
import zipfile

import pytest
from fastapi.testclient import TestClient

from trackbench.service import create_app, new_id

PIPELINE = {
    "filtering": "lowpass",
    "positioning": "pdr",
    "collaborative": "drift-correction",
}


@pytest.fixture(scope="module")
def bundle_zip(square_bundle, tmp_path_factory):
    archive = shutil.make_archive(
        str(tmp_path_factory.mktemp("zips") / "bundle"), "zip", square_bundle
    )
    return open(archive, "rb").read()


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "data")
    with TestClient(app) as c:
        yield c


def _upload(client, payload) -> str:
    resp = client.post(
        "/scenarios", files={"bundle": ("bundle.zip", io.BytesIO(payload), "application/zip")}
    )
    assert resp.status_code == 201, resp.text
    return resp.json()["id"]


def _run_to_completion(client, scenario_id, pipeline=PIPELINE, seed=0, timeout_s=30.0) -> str:
    resp = client.post("/runs", json={"scenario_id": scenario_id, "pipeline": pipeline, "seed": seed})
    assert resp.status_code == 202, resp.text
    run_id = resp.json()["id"]
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        run = client.get(f"/runs/{run_id}").json()
        if run["status"] in ("done", "failed"):
            assert run["status"] == "done", run["error_message"]
            return run_id
        time.sleep(0.05)
    pytest.fail("run did not finish in time")


def test_new_id_is_unique_and_time_sortable():
    ids = [new_id() for _ in range(50)]
    assert len(set(ids)) == 50


def test_plugins_endpoint_lists_builtins(client):
    slugs = [p["slug"] for p in client.get("/plugins").json()]
    assert slugs == ["lowpass", "pdr", "drift-correction"]


def test_schema_endpoint_publishes_formats(client):
    schemas = client.get("/schema").json()
    assert "scenario" in schemas and "pipeline" in schemas
    assert schemas["raw_csv_columns"][0] == "timestamp"


def test_scenario_upload_and_detail(client, bundle_zip):
    scenario_id = _upload(client, bundle_zip)
    listing = client.get("/scenarios").json()
    assert [s["id"] for s in listing] == [scenario_id]
    detail = client.get(f"/scenarios/{scenario_id}").json()
    assert detail["name"] == "square-drift"
    assert len(detail["devices"]) == 4
    assert detail["floorplan"]["type"] == "FeatureCollection"
    assert detail["beacons"][0]["slug"] == "corner"


def test_scenario_upload_rejects_garbage(client):
    resp = client.post(
        "/scenarios", files={"bundle": ("x.zip", io.BytesIO(b"not a zip"), "application/zip")}
    )
    assert resp.status_code == 422


def test_scenario_upload_rejects_incomplete_bundle(client):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("scenario.json", "{}")
    resp = client.post("/scenarios", files={"bundle": ("x.zip", buf.getvalue(), "application/zip")})
    assert resp.status_code == 422
    assert "bundle incomplete" in resp.json()["detail"]


def test_unknown_scenario_is_404(client):
    assert client.get("/scenarios/nope").status_code == 404


def test_params_update_and_rollback(client, bundle_zip):
    scenario_id = _upload(client, bundle_zip)
    resp = client.put(
        f"/scenarios/{scenario_id}/params",
        json={"devices": {"dev0": {"step_length_m": 0.9}}},
    )
    assert resp.status_code == 200
    detail = client.get(f"/scenarios/{scenario_id}").json()
    dev0 = next(d for d in detail["devices"] if d["device_id"] == "dev0")
    assert dev0["params"]["step_length_m"] == 0.9

    # invalid edits roll back and leave the stored bundle loadable
    resp = client.put(
        f"/scenarios/{scenario_id}/params",
        json={"devices": {"dev0": {"step_length_m": -1}}},
    )
    assert resp.status_code == 422
    detail = client.get(f"/scenarios/{scenario_id}").json()
    dev0 = next(d for d in detail["devices"] if d["device_id"] == "dev0")
    assert dev0["params"]["step_length_m"] == 0.9

    resp = client.put(
        f"/scenarios/{scenario_id}/params", json={"devices": {"ghost": {}}}
    )
    assert resp.status_code == 422


def test_run_lifecycle_and_artifacts(client, bundle_zip):
    scenario_id = _upload(client, bundle_zip)
    run_id = _run_to_completion(client, scenario_id)

    listing = client.get("/runs").json()
    assert [r["id"] for r in listing] == [run_id]

    result = client.get(f"/runs/{run_id}/result").json()
    assert result["pipeline"] == ["lowpass", "pdr", "drift-correction"]
    metrics = client.get(f"/runs/{run_id}/metrics").json()
    assert set(metrics["devices"]) == {"dev0", "dev1", "dev2", "dev3"}
    cdf = client.get(f"/runs/{run_id}/cdf")
    assert cdf.headers["content-type"].startswith("text/csv")
    assert cdf.text.startswith("# q3_estimated=")


def test_run_rejects_unknown_scenario_and_bad_pipeline(client, bundle_zip):
    resp = client.post("/runs", json={"scenario_id": "nope", "pipeline": PIPELINE})
    assert resp.status_code == 404
    scenario_id = _upload(client, bundle_zip)
    resp = client.post(
        "/runs", json={"scenario_id": scenario_id, "pipeline": {"positioning": "nope"}}
    )
    assert resp.status_code == 422
    assert "unknown plugin" in resp.json()["detail"]


def test_run_artifacts_unavailable_until_done(client):
    assert client.get("/runs/nope/result").status_code == 404
    assert client.get("/runs/nope").status_code == 404


def test_ticks_endpoint_filters_by_time_window(client, bundle_zip):
    scenario_id = _upload(client, bundle_zip)
    run_id = _run_to_completion(client, scenario_id)
    everything = client.get(f"/runs/{run_id}/ticks").json()["ticks"]
    assert everything
    window = client.get(f"/runs/{run_id}/ticks", params={"from": 1000, "to": 3000}).json()["ticks"]
    assert window
    assert all(1000 <= t["timestamp"] <= 3000 for t in window)
    assert len(window) < len(everything)


def test_bearer_token_guards_mutations(tmp_path, bundle_zip):
    app = create_app(data_dir=tmp_path / "data", token="hunter2")
    with TestClient(app) as client:
        resp = client.post(
            "/scenarios",
            files={"bundle": ("b.zip", io.BytesIO(bundle_zip), "application/zip")},
        )
        assert resp.status_code == 401
        # reads stay open
        assert client.get("/scenarios").status_code == 200
        resp = client.post(
            "/scenarios",
            files={"bundle": ("b.zip", io.BytesIO(bundle_zip), "application/zip")},
            headers={"Authorization": "Bearer hunter2"},
        )
        assert resp.status_code == 201
