/**
 * Replay viewer model: trajectory layers, encounter markers, and
 * collaboration-range circles, all derived from service responses.
 */

import type { Tick } from "./api.js";
import type { LatLon } from "./geometry.js";

export interface TrajectoryFeature {
  type: "Feature";
  geometry: { type: "LineString"; coordinates: [number, number][] };
  properties: {
    kind: "groundtruth" | "estimated" | "corrected";
    device_id: string;
    timestamps: number[];
  };
}

export interface ResultDocument {
  scenario_id: string;
  pipeline: string[];
  seed: number;
  counts: Record<string, { collaboration_count: number; beacon_correction_count: number }>;
  trajectories: { type: "FeatureCollection"; features: TrajectoryFeature[] };
}

export interface LayerStyle {
  color: string;
  dashArray: string | null;
  width: number;
  opacity: number;
}

export interface TrajectoryLayer {
  deviceId: string;
  kind: "groundtruth" | "estimated" | "corrected";
  points: LatLon[];
  timestamps: number[];
  style: LayerStyle;
}

const DEVICE_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

function styleFor(kind: TrajectoryLayer["kind"], deviceIndex: number): LayerStyle {
  const color = DEVICE_PALETTE[deviceIndex % DEVICE_PALETTE.length]!;
  switch (kind) {
    case "groundtruth":
      return { color: "#888888", dashArray: null, width: 1.5, opacity: 0.8 };
    case "estimated":
      return { color, dashArray: "4 3", width: 1.5, opacity: 0.7 };
    case "corrected":
      return { color, dashArray: null, width: 2.5, opacity: 1.0 };
  }
}

/**
 * One layer per (device, trajectory kind) — exactly three per device,
 * ordered groundtruth, estimated, corrected within each device.
 */
export function buildTrajectoryLayers(result: ResultDocument): TrajectoryLayer[] {
  const order = { groundtruth: 0, estimated: 1, corrected: 2 } as const;
  const deviceIds = Object.keys(result.counts).sort();
  const layers: TrajectoryLayer[] = [];
  for (const feature of result.trajectories.features) {
    const { kind, device_id, timestamps } = feature.properties;
    layers.push({
      deviceId: device_id,
      kind,
      points: feature.geometry.coordinates.map(([lon, lat]) => ({ lat, lon })),
      timestamps,
      style: styleFor(kind, deviceIds.indexOf(device_id)),
    });
  }
  layers.sort((a, b) =>
    a.deviceId === b.deviceId
      ? order[a.kind] - order[b.kind]
      : a.deviceId < b.deviceId
        ? -1
        : 1,
  );
  return layers;
}

export interface EncounterMarker {
  timestamp: number;
  deviceId: string;
  location: LatLon;
  /** error counter reset to zero reads as a beacon snap */
  kind: "beacon_reset" | "peer_decrement";
}

/**
 * Encounter flash markers inferred from the tick log: a correction is the
 * only thing that makes a device's error counter drop between ticks
 * (beacon resets to zero, stationary peer exchanges decrement). The tick
 * log is the finest-grained record the API exposes.
 */
export function encounterMarkers(ticks: Tick[]): EncounterMarker[] {
  const markers: EncounterMarker[] = [];
  const previous = new Map<string, number>();
  for (const tick of [...ticks].sort((a, b) => a.timestamp - b.timestamp)) {
    for (const [deviceId, state] of Object.entries(tick.devices)) {
      const before = previous.get(deviceId);
      if (before !== undefined && state.errors < before) {
        markers.push({
          timestamp: tick.timestamp,
          deviceId,
          location: { lat: state.corrected[0], lon: state.corrected[1] },
          kind: state.errors === 0 ? "beacon_reset" : "peer_decrement",
        });
      }
      previous.set(deviceId, state.errors);
    }
  }
  return markers;
}

export interface RangeCircle {
  deviceId: string;
  center: LatLon;
  radiusM: number;
}

/** Collaboration-range circles around each device's position at one tick. */
export function rangeCircles(
  tick: Tick,
  collaborationRangeM: Record<string, number>,
  defaultRangeM = 4,
): RangeCircle[] {
  return Object.entries(tick.devices).map(([deviceId, state]) => ({
    deviceId,
    center: { lat: state.corrected[0], lon: state.corrected[1] },
    radiusM: collaborationRangeM[deviceId] ?? defaultRangeM,
  }));
}
