/**
 * Typed client for the trackbench HTTP API. Every number shown in the UI
 * comes through this client — the frontend never computes metrics itself.
 */

export interface PluginInfo {
  name: string;
  slug: string;
  display_name: string;
  category: "filtering" | "positioning" | "collaborative";
}

export interface ScenarioSummary {
  id: string;
  created_at: number;
  name: string;
}

export interface DeviceDetail {
  device_id: string;
  groundtruth: [number, number][];
  checkpoints: [number, number][];
  params: Record<string, number>;
}

export interface BeaconDetail {
  id: string;
  slug: string;
  location: { lat: number; lon: number };
  kind?: string;
  tx_power_dbm?: number;
  path_loss_exponent?: number;
  noise_sigma_db?: number;
}

export interface ScenarioDetail extends ScenarioSummary {
  time_alignment: string;
  floorplan: { type: "FeatureCollection"; features: unknown[] };
  beacons: BeaconDetail[];
  devices: DeviceDetail[];
}

export interface PipelineSpec {
  filtering?: string | null;
  positioning: string;
  collaborative?: string | null;
  filtering_params?: Record<string, unknown>;
  positioning_params?: Record<string, unknown>;
  collaborative_params?: Record<string, unknown>;
}

export interface RunInfo {
  id: string;
  scenario_id: string;
  status: "pending" | "running" | "done" | "failed";
  error_message?: string | null;
  pipeline?: PipelineSpec;
  seed?: number;
}

export interface TickDeviceState {
  groundtruth: [number, number];
  corrected: [number, number];
  errors: number;
}

export interface Tick {
  timestamp: number;
  devices: Record<string, TickDeviceState>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function raise(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path, { headers: this.headers() });
    if (!resp.ok) await raise(resp);
    return resp.json() as Promise<T>;
  }

  private async getText(path: string): Promise<string> {
    const resp = await fetch(this.baseUrl + path, { headers: this.headers() });
    if (!resp.ok) await raise(resp);
    return resp.text();
  }

  listPlugins(): Promise<PluginInfo[]> {
    return this.getJson("/plugins");
  }

  getSchema(): Promise<Record<string, unknown>> {
    return this.getJson("/schema");
  }

  async uploadScenario(zipBytes: Uint8Array): Promise<{ id: string; name: string }> {
    const form = new FormData();
    // copy into a plain ArrayBuffer so the Blob ctor accepts any backing buffer
    const buf = new ArrayBuffer(zipBytes.byteLength);
    new Uint8Array(buf).set(zipBytes);
    form.append("bundle", new Blob([buf], { type: "application/zip" }), "bundle.zip");
    const resp = await fetch(`${this.baseUrl}/scenarios`, {
      method: "POST",
      headers: this.headers(),
      body: form,
    });
    if (!resp.ok) await raise(resp);
    return resp.json();
  }

  listScenarios(): Promise<ScenarioSummary[]> {
    return this.getJson("/scenarios");
  }

  getScenario(id: string): Promise<ScenarioDetail> {
    return this.getJson(`/scenarios/${id}`);
  }

  async updateParams(
    id: string,
    update: { devices?: Record<string, Record<string, number>>; beacons?: BeaconDetail[] },
  ): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/scenarios/${id}/params`, {
      method: "PUT",
      headers: this.headers(true),
      body: JSON.stringify(update),
    });
    if (!resp.ok) await raise(resp);
  }

  async createRun(req: {
    scenario_id: string;
    pipeline: PipelineSpec;
    seed?: number;
    alignment?: string;
  }): Promise<{ id: string; status: string }> {
    const resp = await fetch(`${this.baseUrl}/runs`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(req),
    });
    if (!resp.ok) await raise(resp);
    return resp.json();
  }

  listRuns(): Promise<RunInfo[]> {
    return this.getJson("/runs");
  }

  getRun(id: string): Promise<RunInfo> {
    return this.getJson(`/runs/${id}`);
  }

  /** Poll until the run leaves the queue; resolves with the final status. */
  async waitForRun(id: string, timeoutMs = 60_000, pollMs = 100): Promise<RunInfo> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const run = await this.getRun(id);
      if (run.status === "done" || run.status === "failed") return run;
      if (Date.now() > deadline) throw new Error(`run ${id} still ${run.status} after ${timeoutMs} ms`);
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  /** Raw text so callers can show the server's literal bytes. */
  getResultText(id: string): Promise<string> {
    return this.getText(`/runs/${id}/result`);
  }

  getMetricsText(id: string): Promise<string> {
    return this.getText(`/runs/${id}/metrics`);
  }

  getCdfText(id: string): Promise<string> {
    return this.getText(`/runs/${id}/cdf`);
  }

  async getTicks(id: string, from?: number, to?: number): Promise<Tick[]> {
    const params = new URLSearchParams();
    if (from !== undefined) params.set("from", String(from));
    if (to !== undefined) params.set("to", String(to));
    const qs = params.size ? `?${params}` : "";
    const body = await this.getJson<{ ticks: Tick[] }>(`/runs/${id}/ticks${qs}`);
    return body.ticks;
  }
}
