"""Published JSON schemas for the external file formats and API payloads."""

GEOPOINT_SCHEMA = {
    "type": "object",
    "properties": {
        "lat": {"type": "number", "minimum": -90, "maximum": 90},
        "lon": {"type": "number", "minimum": -180, "maximum": 180},
    },
    "required": ["lat", "lon"],
}

BEACON_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string"},
        "slug": {"type": "string", "pattern": "^[a-z0-9][a-z0-9\\-_]*$"},
        "location": GEOPOINT_SCHEMA,
        "kind": {"enum": ["physical", "virtual"]},
        "tx_power_dbm": {"type": "number"},
        "path_loss_exponent": {"type": "number", "exclusiveMinimum": 0},
        "noise_sigma_db": {"type": "number", "minimum": 0},
    },
    "required": ["id", "slug", "location"],
}

DEVICE_PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "step_length_m": {"type": "number", "exclusiveMinimum": 0},
        "initial_heading_rad": {"type": "number"},
        "lower_threshold": {"type": "number", "minimum": 0},
        "collaboration_range_m": {"type": "number", "exclusiveMinimum": 0},
        "beacon_correction_range_m": {"type": "number", "exclusiveMinimum": 0},
        "error_rate_per_step": {"type": "number", "minimum": 0},
    },
}

DEVICE_SCHEMA = {
    "type": "object",
    "properties": {
        "device_id": {"type": "string"},
        "raw_log": {"type": "string"},
        "groundtruth": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "checkpoints": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "items": {"type": "integer"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "params": DEVICE_PARAMS_SCHEMA,
    },
    "required": ["device_id", "groundtruth", "checkpoints"],
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string"},
        "name": {"type": "string"},
        "time_alignment": {"enum": ["as_recorded", "common_start"]},
        "beacons": {"type": "array", "items": BEACON_SCHEMA},
        "devices": {"type": "array", "minItems": 1, "items": DEVICE_SCHEMA},
    },
    "required": ["name", "devices"],
}

RAW_CSV_COLUMNS = [
    "timestamp",
    "acc_x",
    "acc_y",
    "acc_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "azimuth",
    "pitch",
    "roll",
]

PIPELINE_SCHEMA = {
    "type": "object",
    "properties": {
        "filtering": {"type": ["string", "null"]},
        "positioning": {"type": "string"},
        "collaborative": {"type": ["string", "null"]},
        "filtering_params": {"type": "object"},
        "positioning_params": {"type": "object"},
        "collaborative_params": {"type": "object"},
    },
    "required": ["positioning"],
}

METRIC_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "device_id": {"type": "string"},
        "dfd_estimated": {"type": "number", "minimum": 0},
        "dfd_corrected": {"type": "number", "minimum": 0},
        "q3_estimated": {"type": "number", "minimum": 0},
        "q3_corrected": {"type": "number", "minimum": 0},
        "mean_error_estimated": {"type": "number", "minimum": 0},
        "mean_error_corrected": {"type": "number", "minimum": 0},
        "improvement": {"type": "number"},
        "error_samples_estimated": {"type": "array", "items": {"type": "number"}},
        "error_samples_corrected": {"type": "array", "items": {"type": "number"}},
    },
}

ALL_SCHEMAS = {
    "scenario": SCENARIO_SCHEMA,
    "beacon": BEACON_SCHEMA,
    "device": DEVICE_SCHEMA,
    "device_params": DEVICE_PARAMS_SCHEMA,
    "pipeline": PIPELINE_SCHEMA,
    "metric_report": METRIC_REPORT_SCHEMA,
    "raw_csv_columns": RAW_CSV_COLUMNS,
}
