/** Forecast quality metrics: pointwise errors plus elastic alignments. */

function sameLength(a: number[], b: number[]): void {
  if (a.length !== b.length) throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  if (a.length === 0) throw new Error("empty series");
}

export function mae(pred: number[], truth: number[]): number {
  sameLength(pred, truth);
  return pred.reduce((s, p, i) => s + Math.abs(p - truth[i]), 0) / pred.length;
}

export function rmse(pred: number[], truth: number[]): number {
  sameLength(pred, truth);
  return Math.sqrt(pred.reduce((s, p, i) => s + (p - truth[i]) ** 2, 0) / pred.length);
}

export function euclidean(a: number[], b: number[]): number {
  sameLength(a, b);
  return Math.sqrt(a.reduce((s, x, i) => s + (x - b[i]) ** 2, 0));
}

/** Dynamic time warping with |x - y| local cost over the full DP table. */
export function dtw(a: number[], b: number[], weight?: (lag: number) => number): number {
  if (a.length === 0 || b.length === 0) throw new Error("empty series");
  const n = a.length;
  const m = b.length;
  const w = weight ?? (() => 1);
  const cost = (i: number, j: number) => w(Math.abs(i - j)) * Math.abs(a[i] - b[j]);
  const D: number[][] = Array.from({ length: n }, () => new Array(m).fill(Infinity));
  D[0][0] = cost(0, 0);
  for (let i = 1; i < n; i++) D[i][0] = D[i - 1][0] + cost(i, 0);
  for (let j = 1; j < m; j++) D[0][j] = D[0][j - 1] + cost(0, j);
  for (let i = 1; i < n; i++) {
    for (let j = 1; j < m; j++) {
      D[i][j] = cost(i, j) + Math.min(D[i - 1][j], D[i][j - 1], D[i - 1][j - 1]);
    }
  }
  return D[n - 1][m - 1];
}

/** First-difference-style derivative; constant offsets vanish here. */
export function derivative(x: number[]): number[] {
  if (x.length < 3) {
    // too short for the centered form; fall back to simple differences
    return x.slice(1).map((v, i) => v - x[i]);
  }
  const d: number[] = [];
  for (let i = 1; i < x.length - 1; i++) {
    d.push(((x[i] - x[i - 1]) + (x[i + 1] - x[i - 1]) / 2) / 2);
  }
  return [d[0], ...d, d[d.length - 1]];
}

export interface WddtwOptions {
  wMax?: number; // weight ceiling of the logistic curve
  g?: number; // logistic steepness over the alignment lag
}

/** Weighted derivative DTW: DTW over derivative series with a logistic
 * penalty that grows with the warping lag. */
export function wddtw(a: number[], b: number[], opts: WddtwOptions = {}): number {
  const wMax = opts.wMax ?? 1.0;
  const g = opts.g ?? 0.05;
  const da = derivative(a);
  const db = derivative(b);
  const mc = Math.max(da.length, db.length) / 2;
  const weight = (lag: number) => wMax / (1 + Math.exp(-g * (lag - mc)));
  return dtw(da, db, weight);
}
