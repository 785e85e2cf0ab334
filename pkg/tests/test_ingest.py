import io
import shutil
import zipfile

import pytest
from hypothesis import given, strategies as st

from trackbench.ingest import (
    IngestError,
    RawLog,
    RawMeasurementRecord,
    load_scenario,
    parse_floorplan,
    parse_raw_csv,
    serialize_raw_csv,
)

HEADER = "timestamp,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,azimuth,pitch,roll"


def _parse(text: str) -> RawLog:
    return parse_raw_csv(io.StringIO(text), device_id="dev")


def test_parse_minimal_log():
    raw = _parse(f"{HEADER}\n0,0,0,9.81,0,0,0.1,90,0,0\n20,0,0,9.9,0,0,0.1,90,0,0\n")
    assert len(raw.records) == 2
    assert raw.records[0].timestamp == 0
    assert raw.records[1].acc_z == 9.9
    assert raw.records[0].azimuth == 90.0


def test_parse_accepts_bytes_stream():
    payload = f"{HEADER}\n0,0,0,9.81,0,0,0,0,0,0\n".encode()
    raw = parse_raw_csv(io.BytesIO(payload))
    assert len(raw.records) == 1


def test_single_gyro_column_maps_to_yaw_axis():
    text = "timestamp,acc_x,acc_y,acc_z,gyro,azimuth,pitch,roll\n0,0,0,9.81,0.42,0,0,0\n"
    raw = _parse(text)
    assert raw.records[0].gyro_z == 0.42
    assert raw.records[0].gyro_x == 0.0


def test_missing_mandatory_column_is_schema_error():
    text = HEADER.replace("acc_y,", "") + "\n0,0,9.81,0,0,0,0,0,0\n"
    with pytest.raises(IngestError, match="schema error: acc_y"):
        _parse(text)


def test_empty_stream_and_header_only_are_empty_log():
    with pytest.raises(IngestError, match="empty log"):
        _parse("")
    with pytest.raises(IngestError, match="empty log"):
        _parse(HEADER + "\n")


def test_unparsable_cell_reports_line_number():
    text = f"{HEADER}\n0,0,0,9.81,0,0,0,0,0,0\n20,0,0,oops,0,0,0,0,0,0\n"
    with pytest.raises(IngestError, match="parse error at line 3"):
        _parse(text)


def test_non_monotonic_timestamps_rejected():
    text = f"{HEADER}\n100,0,0,9.81,0,0,0,0,0,0\n50,0,0,9.81,0,0,0,0,0,0\n"
    with pytest.raises(IngestError, match="non-monotonic timestamps at line 3"):
        _parse(text)


def test_missing_rssi_cell_defaults_to_out_of_range():
    text = f"{HEADER},rssi_b1\n0,0,0,9.81,0,0,0,0,0,0,-70\n20,0,0,9.81,0,0,0,0,0,0,\n"
    raw = _parse(text)
    assert raw.records[0].rssi == {"b1": -70.0}
    assert raw.records[1].rssi == {"b1": -100.0}


def test_rssi_outside_valid_band_rejected():
    text = f"{HEADER},rssi_b1\n0,0,0,9.81,0,0,0,0,0,0,5\n"
    with pytest.raises(IngestError, match=r"rssi_b1 out of \[-100, 0\]"):
        _parse(text)


def test_sampling_rate_from_span():
    rows = "\n".join(f"{t},0,0,9.81,0,0,0,0,0,0" for t in range(0, 200, 20))
    raw = _parse(f"{HEADER}\n{rows}\n")
    assert raw.sampling_rate_hz == pytest.approx(50.0)


def test_sampling_rate_undefined_for_single_record():
    raw = _parse(f"{HEADER}\n0,0,0,9.81,0,0,0,0,0,0\n")
    with pytest.raises(IngestError):
        raw.sampling_rate_hz


finite = st.floats(-50, 50, allow_nan=False).map(lambda x: round(x, 6))


@given(
    st.lists(
        st.tuples(finite, finite, finite, finite, st.floats(-100, 0).map(lambda x: round(x, 3))),
        min_size=1,
        max_size=20,
    )
)
def test_serialize_parse_round_trip(rows):
    records = tuple(
        RawMeasurementRecord(
            timestamp=i * 20,
            acc_x=ax, acc_y=ay, acc_z=az,
            gyro_x=0.0, gyro_y=0.0, gyro_z=gz,
            azimuth=0.0, pitch=0.0, roll=0.0,
            rssi={"b1": rssi},
        )
        for i, (ax, ay, az, gz, rssi) in enumerate(rows)
    )
    raw = RawLog(device_id="dev", records=records)
    assert parse_raw_csv(io.StringIO(serialize_raw_csv(raw)), device_id="dev") == raw


def test_parse_floorplan_splits_out_beacon_points():
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"kind": "room"},
                "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 0]]]},
            },
            {
                "type": "Feature",
                "properties": {"kind": "beacon", "slug": "door-b"},
                "geometry": {"type": "Point", "coordinates": [6.58, 46.52]},
            },
        ],
    }
    floorplan, beacons = parse_floorplan(doc)
    assert len(floorplan.features) == 2
    assert [b.slug for b in beacons] == ["door-b"]
    assert beacons[0].location.lat == 46.52


def test_parse_floorplan_rejects_unknown_kind():
    doc = {
        "type": "FeatureCollection",
        "features": [{"properties": {"kind": "swimming-pool"}, "geometry": {"type": "Point"}}],
    }
    with pytest.raises(IngestError, match="unknown kind"):
        parse_floorplan(doc)


def test_parse_floorplan_requires_feature_collection():
    with pytest.raises(IngestError, match="FeatureCollection"):
        parse_floorplan({"type": "Feature"})


def test_load_scenario_from_directory(square_bundle):
    scenario = load_scenario(square_bundle)
    assert scenario.name == "square-drift"
    assert len(scenario.device_runs) == 4
    assert [b.slug for b in scenario.beacons] == ["corner"]
    for run in scenario.device_runs:
        assert run.raw_log is not None
        assert run.params.step_length == 0.75


def test_load_scenario_from_zip(square_bundle, tmp_path):
    archive = shutil.make_archive(str(tmp_path / "bundle"), "zip", square_bundle)
    scenario = load_scenario(archive)
    assert len(scenario.device_runs) == 4


def test_load_scenario_zip_with_top_level_directory(square_bundle, tmp_path):
    archive = tmp_path / "nested.zip"
    with zipfile.ZipFile(archive, "w") as zf:
        for p in square_bundle.rglob("*"):
            if p.is_file():
                zf.write(p, f"inner/{p.relative_to(square_bundle)}")
    scenario = load_scenario(archive)
    assert len(scenario.device_runs) == 4


def test_load_scenario_missing_file_names_it(square_bundle, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(square_bundle, broken)
    (broken / "floorplan.geojson").unlink()
    with pytest.raises(IngestError, match="bundle incomplete: floorplan.geojson"):
        load_scenario(broken)
    (broken / "raw" / "dev2.csv").rename(broken / "raw" / "gone.csv")
    with pytest.raises(IngestError, match="bundle incomplete"):
        load_scenario(broken)


def test_load_scenario_validation_error_names_field(square_bundle, tmp_path):
    import json

    broken = tmp_path / "badfield"
    shutil.copytree(square_bundle, broken)
    doc = json.loads((broken / "scenario.json").read_text())
    doc["devices"][0]["params"]["step_length_m"] = -1
    (broken / "scenario.json").write_text(json.dumps(doc))
    with pytest.raises(IngestError, match=r"devices\[0\]\.params"):
        load_scenario(broken)
