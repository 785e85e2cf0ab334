/**
 * Paged tick log cache driving the replay animation.
 *
 * Ticks are fetched in fixed pages keyed by page index, so scrubbing the
 * time slider back and forth never requests an overlapping range twice.
 * Positions are authoritative at tick timestamps; between ticks the
 * animation interpolates linearly.
 */

import type { Tick } from "./api.js";
import { lerpLatLon, type LatLon } from "./geometry.js";

export type TickFetcher = (fromMs: number, toMs: number) => Promise<Tick[]>;

export class TickCache {
  private readonly pages = new Map<number, Promise<Tick[]>>();
  private readonly byTime = new Map<number, Tick>();
  private sortedTimes: number[] = [];
  private stale = false;

  constructor(
    private readonly fetch: TickFetcher,
    readonly pageMs = 10_000,
  ) {}

  /** Number of fetches issued so far (distinct pages). */
  get requestCount(): number {
    return this.pages.size;
  }

  async ensureRange(fromMs: number, toMs: number): Promise<void> {
    if (toMs < fromMs) throw new Error("empty range");
    const first = Math.floor(fromMs / this.pageMs);
    const last = Math.floor(toMs / this.pageMs);
    const loads: Promise<Tick[]>[] = [];
    for (let page = first; page <= last; page++) {
      let load = this.pages.get(page);
      if (!load) {
        // page end is exclusive: the next page starts at (page+1)*pageMs
        load = this.fetch(page * this.pageMs, (page + 1) * this.pageMs - 1);
        this.pages.set(page, load);
      }
      loads.push(load);
    }
    for (const ticks of await Promise.all(loads)) {
      for (const tick of ticks) {
        if (!this.byTime.has(tick.timestamp)) {
          this.byTime.set(tick.timestamp, tick);
          this.stale = true;
        }
      }
    }
  }

  ticksIn(fromMs: number, toMs: number): Tick[] {
    this.reindex();
    return this.sortedTimes
      .filter((t) => t >= fromMs && t <= toMs)
      .map((t) => this.byTime.get(t)!);
  }

  /**
   * Corrected position of a device at time t, interpolated between the
   * surrounding cached ticks. Returns undefined outside the cached span or
   * when the device is inactive at both neighbours.
   */
  positionAt(deviceId: string, t: number): LatLon | undefined {
    this.reindex();
    const times = this.sortedTimes;
    if (times.length === 0) return undefined;
    let lo = 0;
    let hi = times.length - 1;
    while (lo < hi) {
      const mid = (lo + hi + 1) >> 1;
      if (times[mid]! <= t) lo = mid;
      else hi = mid - 1;
    }
    if (times[lo]! > t) return undefined;
    const before = this.byTime.get(times[lo]!)!;
    const a = before.devices[deviceId];
    if (!a) return undefined;
    const aPos: LatLon = { lat: a.corrected[0], lon: a.corrected[1] };
    const nextTime = times[lo + 1];
    if (nextTime === undefined || before.timestamp === t) return aPos;
    const after = this.byTime.get(nextTime)!;
    const b = after.devices[deviceId];
    if (!b) return aPos;
    const frac = (t - before.timestamp) / (after.timestamp - before.timestamp);
    return lerpLatLon(aPos, { lat: b.corrected[0], lon: b.corrected[1] }, frac);
  }

  private reindex(): void {
    if (!this.stale) return;
    this.sortedTimes = [...this.byTime.keys()].sort((a, b) => a - b);
    this.stale = false;
  }
}
