/** History/forecast CSV interchange with the route-planning package.
 *
 * history.csv: `vertex_id,t_s,count` raw observations.
 * forecast.csv: `vertex_id,bin_index,count` plus a JSON sidecar declaring
 * bin_width and n_bins; UTF-8, LF, shortest-round-trip decimal floats.
 */
import * as fs from "node:fs";
import * as path from "node:path";

export interface HistoryRecord {
  vertexId: string;
  tS: number;
  count: number;
}

export function readHistory(file: string): HistoryRecord[] {
  const text = fs.readFileSync(file, "utf-8");
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines[0].trim() !== "vertex_id,t_s,count") {
    throw new Error(`bad history header in ${file}: ${lines[0]}`);
  }
  return lines.slice(1).map((ln) => {
    const [vid, t, c] = ln.split(",");
    const rec = { vertexId: vid, tS: Number(t), count: Number(c) };
    if (!Number.isFinite(rec.tS) || !Number.isFinite(rec.count)) {
      throw new Error(`bad history row: ${ln}`);
    }
    if (rec.tS < 0 || rec.count < 0) {
      throw new Error(`negative time or count: ${ln}`);
    }
    return rec;
  });
}

/** Per-vertex series of mean counts per time bin, NaN where unobserved. */
export function binHistory(
  records: HistoryRecord[],
  binWidth: number,
  nBins?: number,
): Map<string, number[]> {
  const maxBin = records.reduce((m, r) => Math.max(m, Math.floor(r.tS / binWidth)), 0);
  const bins = nBins ?? maxBin + 1;
  const sums = new Map<string, { sum: number[]; cnt: number[] }>();
  for (const r of records) {
    let acc = sums.get(r.vertexId);
    if (!acc) {
      acc = { sum: new Array(bins).fill(0), cnt: new Array(bins).fill(0) };
      sums.set(r.vertexId, acc);
    }
    const b = Math.min(Math.floor(r.tS / binWidth), bins - 1);
    acc.sum[b] += r.count;
    acc.cnt[b] += 1;
  }
  const out = new Map<string, number[]>();
  for (const [vid, acc] of [...sums.entries()].sort((a, b) => a[0].localeCompare(b[0]))) {
    out.set(
      vid,
      acc.sum.map((s, i) => (acc.cnt[i] > 0 ? s / acc.cnt[i] : NaN)),
    );
  }
  return out;
}

/** Synthesize history records from an existing forecast CSV (bin means
 * replayed at bin midpoints); lets a scenario bundle double as training data. */
export function historyFromForecastCsv(forecastCsv: string, binWidth: number): HistoryRecord[] {
  const text = fs.readFileSync(forecastCsv, "utf-8");
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines[0].trim() !== "vertex_id,bin_index,count") {
    throw new Error(`bad forecast header in ${forecastCsv}: ${lines[0]}`);
  }
  return lines.slice(1).map((ln) => {
    const [vid, b, c] = ln.split(",");
    return { vertexId: vid, tS: (Number(b) + 0.5) * binWidth, count: Number(c) };
  });
}

function fmt(x: number): string {
  // JS default stringification is shortest-round-trip, matching the
  // planner's reader; keep integral values with a decimal point.
  if (Number.isInteger(x)) return `${x}.0`;
  return String(x);
}

export function writeForecast(
  outCsv: string,
  outSidecar: string,
  series: Map<string, number[]>,
  binWidth: number,
): void {
  const lines = ["vertex_id,bin_index,count"];
  let nBins = 0;
  for (const [vid, values] of [...series.entries()].sort((a, b) => a[0].localeCompare(b[0]))) {
    nBins = Math.max(nBins, values.length);
    values.forEach((v, b) => {
      const clamped = Math.max(0, v);
      lines.push(`${vid},${b},${fmt(clamped)}`);
    });
  }
  fs.mkdirSync(path.dirname(outCsv), { recursive: true });
  fs.writeFileSync(outCsv, lines.join("\n") + "\n", "utf-8");
  fs.writeFileSync(
    outSidecar,
    JSON.stringify({ bin_width: binWidth, n_bins: nBins }, Object.keys({ bin_width: 0, n_bins: 0 }).sort(), 2) + "\n",
    "utf-8",
  );
}
