/**
 * Metric panel data sourced from the server's literal bytes.
 *
 * The panel must show exactly what metrics.json says, so instead of
 * round-tripping numbers through the JS float formatter (which can change
 * e.g. exponent spelling), a tiny JSON scanner records the raw source
 * slice of every number and the panel displays those slices verbatim.
 */

export type JsonWithSpans =
  | { kind: "number"; value: number; raw: string }
  | { kind: "string"; value: string }
  | { kind: "bool"; value: boolean }
  | { kind: "null" }
  | { kind: "array"; items: JsonWithSpans[] }
  | { kind: "object"; entries: Map<string, JsonWithSpans> };

export function parseWithSpans(text: string): JsonWithSpans {
  let i = 0;

  const ws = () => {
    while (i < text.length && " \t\n\r".includes(text[i]!)) i++;
  };

  const expect = (ch: string) => {
    if (text[i] !== ch) throw new SyntaxError(`expected '${ch}' at offset ${i}`);
    i++;
  };

  const parseString = (): string => {
    expect('"');
    let out = "";
    while (text[i] !== '"') {
      if (i >= text.length) throw new SyntaxError("unterminated string");
      if (text[i] === "\\") {
        const esc = text[i + 1]!;
        i += 2;
        if (esc === "u") {
          out += String.fromCharCode(parseInt(text.slice(i, i + 4), 16));
          i += 4;
        } else {
          out += { '"': '"', "\\": "\\", "/": "/", b: "\b", f: "\f", n: "\n", r: "\r", t: "\t" }[esc] ?? esc;
        }
      } else {
        out += text[i];
        i++;
      }
    }
    i++;
    return out;
  };

  const parseValue = (): JsonWithSpans => {
    ws();
    const ch = text[i];
    if (ch === '"') return { kind: "string", value: parseString() };
    if (ch === "{") {
      i++;
      const entries = new Map<string, JsonWithSpans>();
      ws();
      if (text[i] === "}") {
        i++;
        return { kind: "object", entries };
      }
      for (;;) {
        ws();
        const key = parseString();
        ws();
        expect(":");
        entries.set(key, parseValue());
        ws();
        if (text[i] === ",") {
          i++;
          continue;
        }
        expect("}");
        return { kind: "object", entries };
      }
    }
    if (ch === "[") {
      i++;
      const items: JsonWithSpans[] = [];
      ws();
      if (text[i] === "]") {
        i++;
        return { kind: "array", items };
      }
      for (;;) {
        items.push(parseValue());
        ws();
        if (text[i] === ",") {
          i++;
          continue;
        }
        expect("]");
        return { kind: "array", items };
      }
    }
    if (text.startsWith("true", i)) {
      i += 4;
      return { kind: "bool", value: true };
    }
    if (text.startsWith("false", i)) {
      i += 5;
      return { kind: "bool", value: false };
    }
    if (text.startsWith("null", i)) {
      i += 4;
      return { kind: "null" };
    }
    const start = i;
    while (i < text.length && /[-+0-9.eE]/.test(text[i]!)) i++;
    const raw = text.slice(start, i);
    const value = Number(raw);
    if (raw === "" || Number.isNaN(value)) {
      throw new SyntaxError(`invalid JSON value at offset ${start}`);
    }
    return { kind: "number", value, raw };
  };

  const root = parseValue();
  ws();
  if (i !== text.length) throw new SyntaxError(`trailing content at offset ${i}`);
  return root;
}

export interface DeviceMetricsDisplay {
  /** literal source slices, shown verbatim in the panel */
  q3_estimated: string;
  q3_corrected: string;
  dfd_estimated: string;
  dfd_corrected: string;
  improvement: string;
  /** improvement as a percentage string for the headline row */
  improvementPercent: string;
}

export interface MetricsDisplay {
  devices: Map<string, DeviceMetricsDisplay>;
  aggregate: Map<string, string>;
}

function objectOf(node: JsonWithSpans | undefined, what: string): Map<string, JsonWithSpans> {
  if (!node || node.kind !== "object") throw new Error(`malformed metrics: ${what}`);
  return node.entries;
}

function rawOf(entries: Map<string, JsonWithSpans>, key: string): string {
  const node = entries.get(key);
  if (!node || node.kind !== "number") throw new Error(`malformed metrics: ${key}`);
  return node.raw;
}

function valueOf(entries: Map<string, JsonWithSpans>, key: string): number {
  const node = entries.get(key);
  if (!node || node.kind !== "number") throw new Error(`malformed metrics: ${key}`);
  return node.value;
}

/** Build the metric panel model from the raw metrics.json text. */
export function metricsDisplay(rawJson: string): MetricsDisplay {
  const root = objectOf(parseWithSpans(rawJson), "root");
  const devices = new Map<string, DeviceMetricsDisplay>();
  for (const [deviceId, node] of objectOf(root.get("devices"), "devices")) {
    const entries = objectOf(node, deviceId);
    devices.set(deviceId, {
      q3_estimated: rawOf(entries, "q3_estimated"),
      q3_corrected: rawOf(entries, "q3_corrected"),
      dfd_estimated: rawOf(entries, "dfd_estimated"),
      dfd_corrected: rawOf(entries, "dfd_corrected"),
      improvement: rawOf(entries, "improvement"),
      improvementPercent: `${(valueOf(entries, "improvement") * 100).toFixed(1)}%`,
    });
  }
  const aggregate = new Map<string, string>();
  for (const [key, node] of objectOf(root.get("aggregate"), "aggregate")) {
    aggregate.set(key, node.kind === "number" ? node.raw : JSON.stringify(node));
  }
  return { devices, aggregate };
}

export interface CdfData {
  q3Estimated: number;
  q3Corrected: number;
  errorM: number[];
  cdfEstimated: number[];
  cdfCorrected: number[];
}

/** Parse the cdf.csv export: '#' metadata rows carry the q3 markers. */
export function parseCdfCsv(text: string): CdfData {
  const lines = text.split("\n").filter((l) => l.trim() !== "");
  const meta = new Map<string, number>();
  const rows: string[][] = [];
  for (const line of lines) {
    if (line.startsWith("#")) {
      const m = line.match(/^#\s*(\w+)=(.+)$/);
      if (m) meta.set(m[1]!, Number(m[2]));
      continue;
    }
    rows.push(line.split(","));
  }
  const header = rows.shift();
  if (!header || header[0] !== "error_m") throw new Error("malformed cdf.csv");
  const col = (name: string) => {
    const idx = header.indexOf(name);
    if (idx < 0) throw new Error(`cdf.csv missing column ${name}`);
    return rows.map((r) => Number(r[idx]));
  };
  return {
    q3Estimated: meta.get("q3_estimated") ?? NaN,
    q3Corrected: meta.get("q3_corrected") ?? NaN,
    errorM: col("error_m"),
    cdfEstimated: col("cdf_estimated"),
    cdfCorrected: col("cdf_corrected"),
  };
}
