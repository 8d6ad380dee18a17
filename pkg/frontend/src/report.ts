/** Train/evaluate all three edge-feature variants and lay the four metrics
 * out side by side. */
import { binHistory, HistoryRecord } from "./csv.js";
import { dtw, mae, rmse, wddtw } from "./metrics.js";
import { Forecaster, ForecasterConfig } from "./model.js";
import { buildRsuGraph, RoadGraph, Variant } from "./roadgraph.js";

export const VARIANTS: Variant[] = ["minlen", "mintime", "hop"];
export const VARIANT_LABEL: Record<Variant, string> = {
  minlen: "MinLen",
  mintime: "MinTime",
  hop: "Hop",
};

export interface VariantScores {
  DTW: number;
  WDDTW: number;
  MAE: number;
  RMSE: number;
}

export function evaluateHoldout(
  model: Forecaster,
  series: Map<string, number[]>,
): VariantScores {
  const T = series.get(model.rsu.rsuIds[0])!.length;
  const cfg = model.cfg;
  const testFrom = Math.floor(T * (cfg.trainFrac + cfg.valFrac));
  const preds = model.predictRange(series, testFrom, T);
  const flatPred: number[] = [];
  const flatTruth: number[] = [];
  let dtwSum = 0;
  let wddtwSum = 0;
  for (const vid of model.rsu.rsuIds) {
    const p = preds.get(vid)!;
    if (p.length === 0) throw new Error("empty test slice; not enough history");
    const start = Math.max(testFrom, cfg.window);
    const truth = series.get(vid)!.slice(start, start + p.length);
    flatPred.push(...p);
    flatTruth.push(...truth);
    dtwSum += dtw(p, truth);
    wddtwSum += wddtw(p, truth);
  }
  return {
    DTW: dtwSum,
    WDDTW: wddtwSum,
    MAE: mae(flatPred, flatTruth),
    RMSE: rmse(flatPred, flatTruth),
  };
}

export function runVariantReport(
  road: RoadGraph,
  records: HistoryRecord[],
  binWidth: number,
  cfg: Partial<ForecasterConfig>,
): Record<Variant, VariantScores> {
  const out = {} as Record<Variant, VariantScores>;
  for (const variant of VARIANTS) {
    const rsu = buildRsuGraph(road, variant);
    const series = binHistory(records, binWidth);
    const model = new Forecaster(rsu, cfg);
    model.train(series, { quiet: true });
    out[variant] = evaluateHoldout(model, series);
  }
  return out;
}

function sci(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  if (x !== 0 && (Math.abs(x) >= 1e3 || Math.abs(x) < 1e-2)) return x.toExponential(2);
  return x.toFixed(2);
}

export function formatReport(scores: Record<Variant, VariantScores>): string {
  const rows: (keyof VariantScores)[] = ["DTW", "WDDTW", "MAE", "RMSE"];
  const header = ["Scores", ...VARIANTS.map((v) => VARIANT_LABEL[v])];
  const lines = [header.map((h) => h.padStart(10)).join("  ")];
  for (const metric of rows) {
    const cells = VARIANTS.map((v) => sci(scores[v][metric]).padStart(10));
    lines.push([metric.padStart(10), ...cells].join("  "));
  }
  return lines.join("\n");
}
