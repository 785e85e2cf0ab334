import { describe, expect, it } from "vitest";

import {
  boundingBox,
  centerOf,
  lerpLatLon,
  makeProjector,
  svgPath,
  viewBoxFor,
} from "../src/geometry.js";

const ORIGIN = { lat: 46.52, lon: 6.58 };

describe("projection", () => {
  it("round-trips latlon through local coordinates", () => {
    const projector = makeProjector(ORIGIN);
    const p = { lat: 46.5203, lon: 6.5806 };
    const back = projector.toLatLon(projector.toLocal(p));
    expect(back.lat).toBeCloseTo(p.lat, 12);
    expect(back.lon).toBeCloseTo(p.lon, 12);
  });

  it("maps one degree of latitude to ~111 km north", () => {
    const projector = makeProjector(ORIGIN);
    const { x, y } = projector.toLocal({ lat: 47.52, lon: 6.58 });
    expect(x).toBeCloseTo(0, 6);
    expect(y / 1000).toBeCloseTo(111.195, 1);
  });

  it("scales east-west by the latitude cosine", () => {
    const projector = makeProjector(ORIGIN);
    const { x } = projector.toLocal({ lat: 46.52, lon: 6.5801 });
    const expected = 111_195 * 1e-4 * Math.cos((46.52 * Math.PI) / 180);
    expect(x).toBeCloseTo(expected, 3);
  });
});

describe("bounding box and center", () => {
  it("covers all points", () => {
    const points = [
      { lat: 1, lon: 5 },
      { lat: -2, lon: 7 },
      { lat: 0.5, lon: 6 },
    ];
    const { min, max } = boundingBox(points);
    expect(min).toEqual({ lat: -2, lon: 5 });
    expect(max).toEqual({ lat: 1, lon: 7 });
    expect(centerOf(points)).toEqual({ lat: -0.5, lon: 6 });
  });

  it("rejects an empty list", () => {
    expect(() => boundingBox([])).toThrow();
  });
});

describe("svg helpers", () => {
  it("renders a north-up path with y flipped", () => {
    const projector = makeProjector(ORIGIN);
    const north = projector.toLatLon({ x: 0, y: 10 });
    const path = svgPath([ORIGIN, north], projector);
    expect(path).toBe("M0,0 L0,-10");
  });

  it("viewBox includes the margin", () => {
    const projector = makeProjector(ORIGIN);
    const box = viewBoxFor([ORIGIN], projector, 3);
    expect(box).toBe("-3 -3 6 6");
  });
});

describe("lerpLatLon", () => {
  it("interpolates linearly with exact endpoints", () => {
    const a = { lat: 10, lon: 20 };
    const b = { lat: 12, lon: 24 };
    expect(lerpLatLon(a, b, 0)).toEqual(a);
    expect(lerpLatLon(a, b, 1)).toEqual(b);
    expect(lerpLatLon(a, b, 0.25)).toEqual({ lat: 10.5, lon: 21 });
  });
});
