/**
 * Planar projection helpers for rendering WGS84 floorplans as SVG.
 *
 * Indoor scenes span tens of meters, so an equirectangular projection
 * around the scene center is visually exact; no basemap tiles involved.
 */

export interface LatLon {
  lat: number;
  lon: number;
}

export interface XY {
  x: number;
  y: number;
}

const EARTH_RADIUS_M = 6_371_000;
const DEG = Math.PI / 180;

export interface Projector {
  /** meters east/north of the origin; y grows northward */
  toLocal(p: LatLon): XY;
  toLatLon(p: XY): LatLon;
  origin: LatLon;
}

export function makeProjector(origin: LatLon): Projector {
  const kx = EARTH_RADIUS_M * Math.cos(origin.lat * DEG) * DEG;
  const ky = EARTH_RADIUS_M * DEG;
  return {
    origin,
    toLocal: (p) => ({ x: (p.lon - origin.lon) * kx, y: (p.lat - origin.lat) * ky }),
    toLatLon: (p) => ({ lat: origin.lat + p.y / ky, lon: origin.lon + p.x / kx }),
  };
}

export function boundingBox(points: LatLon[]): { min: LatLon; max: LatLon } {
  if (points.length === 0) throw new Error("bounding box of no points");
  let minLat = Infinity,
    minLon = Infinity,
    maxLat = -Infinity,
    maxLon = -Infinity;
  for (const p of points) {
    minLat = Math.min(minLat, p.lat);
    minLon = Math.min(minLon, p.lon);
    maxLat = Math.max(maxLat, p.lat);
    maxLon = Math.max(maxLon, p.lon);
  }
  return { min: { lat: minLat, lon: minLon }, max: { lat: maxLat, lon: maxLon } };
}

export function centerOf(points: LatLon[]): LatLon {
  const { min, max } = boundingBox(points);
  return { lat: (min.lat + max.lat) / 2, lon: (min.lon + max.lon) / 2 };
}

/** SVG path string in local meters; y flipped so north is up on screen. */
export function svgPath(points: LatLon[], projector: Projector): string {
  return points
    .map((p, i) => {
      const { x, y } = projector.toLocal(p);
      return `${i === 0 ? "M" : "L"}${round3(x)},${round3(-y)}`;
    })
    .join(" ");
}

/** viewBox covering the points with a margin, in local meters. */
export function viewBoxFor(points: LatLon[], projector: Projector, marginM = 3): string {
  const locals = points.map((p) => projector.toLocal(p));
  const xs = locals.map((p) => p.x);
  const ys = locals.map((p) => -p.y);
  const minX = Math.min(...xs) - marginM;
  const minY = Math.min(...ys) - marginM;
  const w = Math.max(...xs) - minX + marginM;
  const h = Math.max(...ys) - minY + marginM;
  return `${round3(minX)} ${round3(minY)} ${round3(w)} ${round3(h)}`;
}

/** Linear position interpolation used by the tick animation. */
export function lerpLatLon(a: LatLon, b: LatLon, t: number): LatLon {
  return { lat: a.lat + (b.lat - a.lat) * t, lon: a.lon + (b.lon - a.lon) * t };
}

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}
