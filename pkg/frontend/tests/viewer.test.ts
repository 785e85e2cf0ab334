import { describe, expect, it } from "vitest";

import type { Tick } from "../src/api.js";
import {
  buildTrajectoryLayers,
  encounterMarkers,
  rangeCircles,
  type ResultDocument,
} from "../src/viewer.js";

function makeResult(deviceIds: string[]): ResultDocument {
  const kinds = ["groundtruth", "estimated", "corrected"] as const;
  return {
    scenario_id: "s",
    pipeline: ["lowpass", "pdr", "drift-correction"],
    seed: 0,
    counts: Object.fromEntries(
      deviceIds.map((d) => [d, { collaboration_count: 0, beacon_correction_count: 0 }]),
    ),
    trajectories: {
      type: "FeatureCollection",
      features: deviceIds.flatMap((device_id) =>
        kinds.map((kind) => ({
          type: "Feature" as const,
          geometry: {
            type: "LineString" as const,
            coordinates: [
              [6.58, 46.52],
              [6.581, 46.521],
            ] as [number, number][],
          },
          properties: { kind, device_id, timestamps: [0, 1000] },
        })),
      ),
    },
  };
}

describe("buildTrajectoryLayers", () => {
  it("produces exactly three layers per device, in kind order", () => {
    const layers = buildTrajectoryLayers(makeResult(["dev0", "dev1"]));
    expect(layers).toHaveLength(6);
    const perDevice = new Map<string, string[]>();
    for (const layer of layers) {
      perDevice.set(layer.deviceId, [...(perDevice.get(layer.deviceId) ?? []), layer.kind]);
    }
    for (const kinds of perDevice.values()) {
      expect(kinds).toEqual(["groundtruth", "estimated", "corrected"]);
    }
  });

  it("converts GeoJSON lon/lat pairs into lat/lon points", () => {
    const layers = buildTrajectoryLayers(makeResult(["dev0"]));
    expect(layers[0]!.points[0]).toEqual({ lat: 46.52, lon: 6.58 });
  });

  it("styles kinds distinctly and devices with distinct colors", () => {
    const layers = buildTrajectoryLayers(makeResult(["dev0", "dev1"]));
    const dev0 = layers.filter((l) => l.deviceId === "dev0");
    const styles = new Set(dev0.map((l) => JSON.stringify(l.style)));
    expect(styles.size).toBe(3);
    const corrected = layers.filter((l) => l.kind === "corrected");
    expect(corrected[0]!.style.color).not.toBe(corrected[1]!.style.color);
  });
});

function tick(timestamp: number, errors: Record<string, number>): Tick {
  return {
    timestamp,
    devices: Object.fromEntries(
      Object.entries(errors).map(([d, e]) => [
        d,
        { groundtruth: [0, 0] as [number, number], corrected: [1, 2] as [number, number], errors: e },
      ]),
    ),
  };
}

describe("encounterMarkers", () => {
  it("emits nothing when counters only grow", () => {
    const markers = encounterMarkers([
      tick(0, { dev0: 0 }),
      tick(500, { dev0: 2 }),
      tick(1000, { dev0: 4 }),
    ]);
    expect(markers).toEqual([]);
  });

  it("classifies resets as beacon snaps and drops as peer decrements", () => {
    const markers = encounterMarkers([
      tick(0, { dev0: 12, dev1: 3 }),
      tick(500, { dev0: 0, dev1: 2 }),
    ]);
    expect(markers).toHaveLength(2);
    const byDevice = Object.fromEntries(markers.map((m) => [m.deviceId, m.kind]));
    expect(byDevice["dev0"]).toBe("beacon_reset");
    expect(byDevice["dev1"]).toBe("peer_decrement");
    expect(markers[0]!.location).toEqual({ lat: 1, lon: 2 });
  });

  it("tolerates unsorted input", () => {
    const markers = encounterMarkers([tick(500, { dev0: 0 }), tick(0, { dev0: 5 })]);
    expect(markers).toHaveLength(1);
    expect(markers[0]!.timestamp).toBe(500);
  });
});

describe("rangeCircles", () => {
  it("uses per-device ranges with a default fallback", () => {
    const circles = rangeCircles(tick(0, { dev0: 1, dev1: 1 }), { dev0: 6 });
    const byDevice = Object.fromEntries(circles.map((c) => [c.deviceId, c.radiusM]));
    expect(byDevice["dev0"]).toBe(6);
    expect(byDevice["dev1"]).toBe(4);
  });
});
