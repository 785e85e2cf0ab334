/**
 * Single-page wiring: scenario list, editor map, run launcher, replay
 * viewer. All state lives in the modules; this file only touches the DOM.
 */

import { ApiClient, type ScenarioDetail, type RunInfo } from "./api.js";
import { ScenarioDraft } from "./draft.js";
import { centerOf, makeProjector, svgPath, viewBoxFor, type LatLon, type Projector } from "./geometry.js";
import { metricsDisplay, parseCdfCsv } from "./metrics.js";
import { TickCache } from "./ticks.js";
import {
  buildTrajectoryLayers,
  encounterMarkers,
  type ResultDocument,
  type TrajectoryLayer,
} from "./viewer.js";

const api = new ApiClient(localStorage.getItem("trackbench-api") ?? "");

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const SVG_NS = "http://www.w3.org/2000/svg";

// ---------------------------------------------------------------- scenarios

async function refreshScenarios(): Promise<void> {
  const list = $("scenario-list");
  list.replaceChildren();
  for (const s of await api.listScenarios()) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.textContent = `${s.name} (${s.id})`;
    link.href = "#";
    link.onclick = (e) => {
      e.preventDefault();
      void openScenario(s.id);
    };
    item.append(link);
    list.append(item);
  }
}

let current: ScenarioDetail | null = null;
let draft: ScenarioDraft | null = null;

async function openScenario(id: string): Promise<void> {
  current = await api.getScenario(id);
  draft = new ScenarioDraft();
  draft.name = current.name;
  draft.floorplanFeatures = current.floorplan.features;
  for (const b of current.beacons) {
    const beacon = draft.addBeacon(b.slug, b.location, (b.kind as "virtual" | "physical") ?? "virtual");
    beacon.id = b.id;
  }
  for (const d of current.devices) {
    const device = draft.addDevice(d.device_id);
    device.groundtruth = d.groundtruth.map(([lat, lon]) => ({ lat, lon }));
    device.checkpoints = d.checkpoints;
    device.params = { ...d.params };
  }
  draft.markSaved();
  renderEditor();
  renderParamsForm();
  $("scenario-title").textContent = `${current.name} — ${id}`;
}

function editorProjector(): Projector {
  const points: LatLon[] = [];
  for (const d of draft?.devices ?? []) points.push(...d.groundtruth);
  for (const b of draft?.beacons ?? []) points.push(b.location);
  if (points.length === 0) points.push({ lat: 0, lon: 0 });
  return makeProjector(centerOf(points));
}

function renderEditor(): void {
  if (!draft) return;
  const svg = $("editor-map") as unknown as SVGSVGElement;
  svg.replaceChildren();
  const projector = editorProjector();
  const all = draft.devices.flatMap((d) => d.groundtruth).concat(draft.beacons.map((b) => b.location));
  if (all.length > 0) svg.setAttribute("viewBox", viewBoxFor(all, projector));
  for (const device of draft.devices) {
    if (device.groundtruth.length < 2) continue;
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", svgPath(device.groundtruth, projector));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", "#555");
    path.setAttribute("stroke-width", "0.3");
    svg.append(path);
  }
  for (const beacon of draft.beacons) {
    const { x, y } = projector.toLocal(beacon.location);
    const marker = document.createElementNS(SVG_NS, "circle");
    marker.setAttribute("cx", String(x));
    marker.setAttribute("cy", String(-y));
    marker.setAttribute("r", "0.8");
    marker.setAttribute("fill", "#e6a817");
    marker.setAttribute("data-slug", beacon.slug);
    marker.style.cursor = "grab";
    attachBeaconDrag(marker, beacon.slug, projector, svg);
    svg.append(marker);
  }
  $("dirty-flag").hidden = !draft.dirty;
}

function attachBeaconDrag(
  marker: SVGCircleElement,
  slug: string,
  projector: Projector,
  svg: SVGSVGElement,
): void {
  marker.addEventListener("pointerdown", (down) => {
    down.preventDefault();
    const move = (ev: PointerEvent) => {
      const pt = clientToLocal(svg, ev);
      draft?.moveBeacon(slug, projector.toLatLon({ x: pt.x, y: -pt.y }));
      marker.setAttribute("cx", String(pt.x));
      marker.setAttribute("cy", String(pt.y));
      $("dirty-flag").hidden = false;
    };
    const up = () => {
      window.removeEventListener("pointermove", move);
      window.removeEventListener("pointerup", up);
    };
    window.addEventListener("pointermove", move);
    window.addEventListener("pointerup", up);
  });
}

function clientToLocal(svg: SVGSVGElement, ev: PointerEvent): DOMPoint {
  const pt = new DOMPoint(ev.clientX, ev.clientY);
  return pt.matrixTransform(svg.getScreenCTM()!.inverse());
}

function renderParamsForm(): void {
  if (!draft) return;
  const form = $("params-form");
  form.replaceChildren();
  for (const device of draft.devices) {
    const fieldset = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = device.device_id;
    fieldset.append(legend);
    for (const key of ["step_length_m", "lower_threshold", "collaboration_range_m"]) {
      const label = document.createElement("label");
      label.textContent = key;
      const input = document.createElement("input");
      input.type = "number";
      input.step = "any";
      input.value = String(device.params[key] ?? "");
      input.oninput = () => {
        draft?.setParam(device.device_id, key, Number(input.value));
        const errors = draft?.validate() ?? [];
        const mine = errors.find((e) => e.path.includes(key));
        input.setCustomValidity(mine ? mine.message : "");
        input.reportValidity();
        $("dirty-flag").hidden = false;
        ($("save-params") as HTMLButtonElement).disabled = errors.length > 0;
      };
      label.append(input);
      fieldset.append(label);
    }
    form.append(fieldset);
  }
}

$("save-params").onclick = async () => {
  if (!draft || !current) return;
  const errors = draft.validate();
  if (errors.length > 0) return; // save stays blocked while invalid
  const devices: Record<string, Record<string, number>> = {};
  for (const d of draft.devices) devices[d.device_id] = d.params;
  try {
    await api.updateParams(current.id, {
      devices,
      beacons: draft.beacons.map((b) => ({
        id: b.id,
        slug: b.slug,
        location: b.location,
        kind: b.kind,
        tx_power_dbm: b.tx_power_dbm,
        path_loss_exponent: b.path_loss_exponent,
        noise_sigma_db: b.noise_sigma_db,
      })),
    });
    draft.markSaved();
    $("dirty-flag").hidden = true;
    $("save-status").textContent = "saved";
  } catch (err) {
    $("save-status").textContent = String(err); // server 422 surfaced inline
  }
};

// --------------------------------------------------------------------- runs

$("launch-run").onclick = async () => {
  if (!current) return;
  const { id } = await api.createRun({
    scenario_id: current.id,
    pipeline: {
      filtering: "lowpass",
      positioning: "pdr",
      collaborative: "drift-correction",
    },
    seed: Number(($("run-seed") as HTMLInputElement).value || "0"),
  });
  // no optimistic UI: reflect the server's status until it settles
  $("run-status").textContent = "pending";
  const run = await api.waitForRun(id);
  $("run-status").textContent = run.status;
  if (run.status === "done") await openRun(run);
};

async function openRun(run: RunInfo): Promise<void> {
  const [resultText, metricsText, cdfText] = await Promise.all([
    api.getResultText(run.id),
    api.getMetricsText(run.id),
    api.getCdfText(run.id),
  ]);
  const result = JSON.parse(resultText) as ResultDocument;
  const layers = buildTrajectoryLayers(result);
  renderViewer(layers);
  renderMetricsPanel(metricsText);
  renderCdf(cdfText);
  await setupAnimation(run.id, layers);
}

function renderViewer(layers: TrajectoryLayer[]): void {
  const svg = $("viewer-map") as unknown as SVGSVGElement;
  svg.replaceChildren();
  const all = layers.flatMap((l) => l.points);
  const projector = makeProjector(centerOf(all));
  svg.setAttribute("viewBox", viewBoxFor(all, projector));
  for (const layer of layers) {
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", svgPath(layer.points, projector));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", layer.style.color);
    path.setAttribute("stroke-width", String(layer.style.width * 0.2));
    path.setAttribute("opacity", String(layer.style.opacity));
    if (layer.style.dashArray) path.setAttribute("stroke-dasharray", layer.style.dashArray);
    path.setAttribute("data-device", layer.deviceId);
    path.setAttribute("data-kind", layer.kind);
    svg.append(path);
  }
}

function renderMetricsPanel(metricsText: string): void {
  const display = metricsDisplay(metricsText);
  const table = $("metrics-table");
  table.replaceChildren();
  const header = document.createElement("tr");
  for (const title of ["device", "q3 est (m)", "q3 corr (m)", "DFD est (m)", "DFD corr (m)", "improvement"]) {
    const th = document.createElement("th");
    th.textContent = title;
    header.append(th);
  }
  table.append(header);
  for (const [deviceId, m] of display.devices) {
    const row = document.createElement("tr");
    for (const text of [deviceId, m.q3_estimated, m.q3_corrected, m.dfd_estimated, m.dfd_corrected, m.improvementPercent]) {
      const td = document.createElement("td");
      td.textContent = text;
      row.append(td);
    }
    table.append(row);
  }
  $("aggregate-line").textContent = [...display.aggregate.entries()]
    .map(([k, v]) => `${k}=${v}`)
    .join("  ");
}

function renderCdf(cdfText: string): void {
  const cdf = parseCdfCsv(cdfText);
  const svg = $("cdf-chart") as unknown as SVGSVGElement;
  svg.replaceChildren();
  const maxError = Math.max(...cdf.errorM, 1e-9);
  const toPath = (values: number[]) =>
    cdf.errorM
      .map((x, i) => `${i === 0 ? "M" : "L"}${(100 * x) / maxError},${100 - 100 * values[i]!}`)
      .join(" ");
  svg.setAttribute("viewBox", "0 0 100 100");
  for (const [values, color] of [
    [cdf.cdfEstimated, "#d62728"],
    [cdf.cdfCorrected, "#2ca02c"],
  ] as const) {
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", toPath(values));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", color);
    path.setAttribute("stroke-width", "1");
    svg.append(path);
  }
}

async function setupAnimation(runId: string, layers: TrajectoryLayer[]): Promise<void> {
  const cache = new TickCache((from, to) => api.getTicks(runId, from, to));
  const timestamps = layers.flatMap((l) => l.timestamps);
  const start = Math.min(...timestamps);
  const end = Math.max(...timestamps);
  const slider = $("time-slider") as HTMLInputElement;
  slider.min = String(start);
  slider.max = String(end);
  slider.value = String(start);
  const all = layers.flatMap((l) => l.points);
  const projector = makeProjector(centerOf(all));
  const svg = $("viewer-map") as unknown as SVGSVGElement;
  const cursorLayer = document.createElementNS(SVG_NS, "g");
  svg.append(cursorLayer);

  slider.oninput = async () => {
    const t = Number(slider.value);
    await cache.ensureRange(Math.max(start, t - cache.pageMs), t);
    cursorLayer.replaceChildren();
    const deviceIds = [...new Set(layers.map((l) => l.deviceId))];
    for (const deviceId of deviceIds) {
      const pos = cache.positionAt(deviceId, t);
      if (!pos) continue;
      const { x, y } = projector.toLocal(pos);
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(x));
      dot.setAttribute("cy", String(-y));
      dot.setAttribute("r", "0.5");
      dot.setAttribute("fill", "#000");
      cursorLayer.append(dot);
    }
    for (const marker of encounterMarkers(cache.ticksIn(t - 1000, t))) {
      const { x, y } = projector.toLocal(marker.location);
      const flash = document.createElementNS(SVG_NS, "circle");
      flash.setAttribute("cx", String(x));
      flash.setAttribute("cy", String(-y));
      flash.setAttribute("r", "1.2");
      flash.setAttribute("fill", "none");
      flash.setAttribute("stroke", marker.kind === "beacon_reset" ? "#e6a817" : "#1f77b4");
      flash.setAttribute("stroke-width", "0.3");
      cursorLayer.append(flash);
    }
  };
}

void refreshScenarios();
