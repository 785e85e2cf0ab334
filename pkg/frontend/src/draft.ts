/**
 * Editable scenario draft backing the editor UI.
 *
 * Client-side validation mirrors the server's bundle validation — same
 * bounds, same slug rule, same checkpoint ordering — so anything the
 * editor lets you save is accepted by the server. Edits flip a dirty flag
 * the UI surfaces as "unsaved changes".
 */

import { strToU8, zipSync } from "fflate";

export interface LatLon {
  lat: number;
  lon: number;
}

export interface DeviceDraft {
  device_id: string;
  /** groundtruth polyline vertices */
  groundtruth: LatLon[];
  /** [vertex index, timestamp ms] pairs */
  checkpoints: [number, number][];
  params: Record<string, number>;
}

export interface BeaconDraft {
  id: string;
  slug: string;
  location: LatLon;
  kind: "physical" | "virtual";
  tx_power_dbm: number;
  path_loss_exponent: number;
  noise_sigma_db: number;
}

export interface FieldError {
  path: string;
  message: string;
}

const SLUG_RE = /^[a-z0-9][a-z0-9\-_]*$/;

const RAW_HEADER =
  "timestamp,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,azimuth,pitch,roll";

export class ScenarioDraft {
  name = "untitled";
  timeAlignment: "as_recorded" | "common_start" = "common_start";
  devices: DeviceDraft[] = [];
  beacons: BeaconDraft[] = [];
  floorplanFeatures: unknown[] = [];
  /** device_id -> raw CSV; drawn devices get a placeholder log */
  rawLogs = new Map<string, string>();
  dirty = false;

  addDevice(device_id: string): DeviceDraft {
    const device: DeviceDraft = {
      device_id,
      groundtruth: [],
      checkpoints: [],
      params: {},
    };
    this.devices.push(device);
    this.dirty = true;
    return device;
  }

  addVertex(device_id: string, point: LatLon, timestampMs?: number): void {
    const device = this.mustDevice(device_id);
    device.groundtruth.push(point);
    if (timestampMs !== undefined) {
      device.checkpoints.push([device.groundtruth.length - 1, timestampMs]);
    }
    this.dirty = true;
  }

  addBeacon(slug: string, location: LatLon, kind: "physical" | "virtual" = "virtual"): BeaconDraft {
    const beacon: BeaconDraft = {
      id: `b-${slug}`,
      slug,
      location,
      kind,
      tx_power_dbm: -59,
      path_loss_exponent: 2,
      noise_sigma_db: 0,
    };
    this.beacons.push(beacon);
    this.dirty = true;
    return beacon;
  }

  moveBeacon(slug: string, location: LatLon): void {
    const beacon = this.beacons.find((b) => b.slug === slug);
    if (!beacon) throw new Error(`unknown beacon: ${slug}`);
    beacon.location = location;
    this.dirty = true;
  }

  setParam(device_id: string, key: string, value: number): void {
    this.mustDevice(device_id).params[key] = value;
    this.dirty = true;
  }

  markSaved(): void {
    this.dirty = false;
  }

  private mustDevice(device_id: string): DeviceDraft {
    const device = this.devices.find((d) => d.device_id === device_id);
    if (!device) throw new Error(`unknown device: ${device_id}`);
    return device;
  }

  /** Mirror of the server-side bundle validation; empty list means savable. */
  validate(): FieldError[] {
    const errors: FieldError[] = [];
    if (this.devices.length === 0) {
      errors.push({ path: "devices", message: "at least one device required" });
    }
    const seenIds = new Set<string>();
    this.devices.forEach((device, i) => {
      const path = `devices[${i}]`;
      if (seenIds.has(device.device_id)) {
        errors.push({ path, message: `duplicate device id ${device.device_id}` });
      }
      seenIds.add(device.device_id);
      if (device.groundtruth.length === 0) {
        errors.push({ path: `${path}.groundtruth`, message: "polyline is empty" });
      }
      device.groundtruth.forEach((p, j) => {
        if (Math.abs(p.lat) > 90 || Math.abs(p.lon) > 180) {
          errors.push({ path: `${path}.groundtruth[${j}]`, message: "coordinate out of range" });
        }
      });
      if (device.checkpoints.length === 0) {
        errors.push({ path: `${path}.checkpoints`, message: "at least one checkpoint required" });
      } else {
        if (device.checkpoints[0]![0] !== 0) {
          errors.push({ path: `${path}.checkpoints`, message: "first checkpoint must mark vertex 0" });
        }
        for (let j = 1; j < device.checkpoints.length; j++) {
          if (device.checkpoints[j]![1] <= device.checkpoints[j - 1]![1]) {
            errors.push({
              path: `${path}.checkpoints[${j}]`,
              message: "timestamps must be strictly increasing",
            });
          }
        }
        for (const [v] of device.checkpoints) {
          if (v < 0 || v >= device.groundtruth.length) {
            errors.push({ path: `${path}.checkpoints`, message: `vertex index ${v} out of range` });
          }
        }
      }
      errors.push(...validateParams(device.params, `${path}.params`));
    });
    const seenSlugs = new Set<string>();
    this.beacons.forEach((beacon, i) => {
      const path = `beacons[${i}]`;
      if (!SLUG_RE.test(beacon.slug)) {
        errors.push({ path: `${path}.slug`, message: `invalid slug ${beacon.slug}` });
      }
      if (seenSlugs.has(beacon.slug)) {
        errors.push({ path: `${path}.slug`, message: `duplicate slug ${beacon.slug}` });
      }
      seenSlugs.add(beacon.slug);
      if (beacon.path_loss_exponent <= 0) {
        errors.push({ path: `${path}.path_loss_exponent`, message: "must be positive" });
      }
      if (beacon.noise_sigma_db < 0) {
        errors.push({ path: `${path}.noise_sigma_db`, message: "must be >= 0" });
      }
    });
    return errors;
  }

  toScenarioJson(): string {
    return JSON.stringify(
      {
        name: this.name,
        time_alignment: this.timeAlignment,
        beacons: this.beacons.map((b) => ({
          id: b.id,
          slug: b.slug,
          location: { lat: b.location.lat, lon: b.location.lon },
          kind: b.kind,
          tx_power_dbm: b.tx_power_dbm,
          path_loss_exponent: b.path_loss_exponent,
          noise_sigma_db: b.noise_sigma_db,
        })),
        devices: this.devices.map((d) => ({
          device_id: d.device_id,
          raw_log: `raw/${d.device_id}.csv`,
          groundtruth: d.groundtruth.map((p) => [p.lat, p.lon]),
          checkpoints: d.checkpoints,
          params: d.params,
        })),
      },
      null,
      2,
    );
  }

  toFloorplanGeojson(): string {
    return JSON.stringify(
      { type: "FeatureCollection", features: this.floorplanFeatures },
      null,
      2,
    );
  }

  /** Placeholder sensor log spanning the device's checkpoint window. */
  placeholderRawCsv(device: DeviceDraft): string {
    const timestamps = device.checkpoints.map(([, t]) => t);
    const start = timestamps.length ? Math.min(...timestamps) : 0;
    const end = timestamps.length ? Math.max(...timestamps) : 1000;
    const rows = [RAW_HEADER];
    for (let t = start; t <= Math.max(end, start + 20); t += 20) {
      rows.push(`${t},0,0,9.81,0,0,0,0,0,0`);
    }
    return rows.join("\n") + "\n";
  }

  /** Pack the draft as the zip bundle the upload endpoint expects. */
  toBundleZip(): Uint8Array {
    const files: Record<string, Uint8Array> = {
      "scenario.json": strToU8(this.toScenarioJson()),
      "floorplan.geojson": strToU8(this.toFloorplanGeojson()),
    };
    for (const device of this.devices) {
      const csv = this.rawLogs.get(device.device_id) ?? this.placeholderRawCsv(device);
      files[`raw/${device.device_id}.csv`] = strToU8(csv);
    }
    return zipSync(files);
  }
}

export function validateParams(params: Record<string, number>, path = "params"): FieldError[] {
  const errors: FieldError[] = [];
  const positive = ["step_length_m", "collaboration_range_m", "beacon_correction_range_m"];
  for (const key of positive) {
    const value = params[key];
    if (value !== undefined && value <= 0) {
      errors.push({ path: `${path}.${key}`, message: "must be positive" });
    }
  }
  for (const key of ["lower_threshold", "error_rate_per_step"]) {
    const value = params[key];
    if (value !== undefined && value < 0) {
      errors.push({ path: `${path}.${key}`, message: "must be >= 0" });
    }
  }
  return errors;
}
