/** Message-passing traffic forecaster over the fully connected RSU graph.
 *
 * Three sub-networks (node, edge, global), each Linear -> batch norm ->
 * ReLU -> Linear, with hidden widths 64 (node, global) and 128 (edge).
 * Each node performs univariate forecasting: a window of its own past
 * counts goes in, the next bin's count comes out, with edge messages and a
 * pooled global state mixed in between. Counts are standardized per node;
 * training minimizes mean absolute error with Adam and early stopping on a
 * chronological validation slice.
 */
import * as tf from "@tensorflow/tfjs";
import * as fs from "node:fs";
import * as path from "node:path";

import { gaussian, mulberry32, Rng } from "./rng.js";
import { RsuGraph, Variant } from "./roadgraph.js";

export interface ForecasterConfig {
  window: number;
  nodeHidden: number;
  edgeHidden: number;
  globalHidden: number;
  lr: number;
  epochs: number;
  patience: number;
  seed: number;
  trainFrac: number;
  valFrac: number;
}

export const DEFAULT_CONFIG: ForecasterConfig = {
  window: 8,
  nodeHidden: 64,
  edgeHidden: 128,
  globalHidden: 64,
  lr: 1e-3,
  epochs: 200,
  patience: 25,
  seed: 7,
  trainFrac: 0.7,
  valFrac: 0.15,
};

interface Mlp {
  w1: tf.Variable;
  b1: tf.Variable;
  gamma: tf.Variable;
  beta: tf.Variable;
  w2: tf.Variable;
  b2: tf.Variable;
  // batch-norm running statistics (inference path), updated with momentum
  rMean: Float32Array;
  rVar: Float32Array;
}

const BN_EPS = 1e-5;
const BN_MOMENTUM = 0.9;

function makeMlp(rng: Rng, din: number, hidden: number, dout: number): Mlp {
  const init = (rows: number, cols: number) => {
    const scale = Math.sqrt(2.0 / (rows + cols));
    const data = new Float32Array(rows * cols);
    for (let i = 0; i < data.length; i++) data[i] = scale * gaussian(rng);
    return tf.variable(tf.tensor2d(data, [rows, cols]));
  };
  return {
    w1: init(din, hidden),
    b1: tf.variable(tf.zeros([hidden])),
    gamma: tf.variable(tf.ones([hidden])),
    beta: tf.variable(tf.zeros([hidden])),
    w2: init(hidden, dout),
    b2: tf.variable(tf.zeros([dout])),
    rMean: new Float32Array(hidden),
    rVar: new Float32Array(hidden).fill(1),
  };
}

function applyMlp(m: Mlp, x: tf.Tensor2D, training: boolean): tf.Tensor2D {
  const pre = x.matMul(m.w1 as tf.Tensor2D).add(m.b1);
  let norm: tf.Tensor;
  if (training) {
    const { mean, variance } = tf.moments(pre, 0);
    const bm = mean.dataSync();
    const bv = variance.dataSync();
    for (let i = 0; i < m.rMean.length; i++) {
      m.rMean[i] = BN_MOMENTUM * m.rMean[i] + (1 - BN_MOMENTUM) * bm[i];
      m.rVar[i] = BN_MOMENTUM * m.rVar[i] + (1 - BN_MOMENTUM) * bv[i];
    }
    norm = pre.sub(mean).div(variance.add(BN_EPS).sqrt());
  } else {
    const mean = tf.tensor1d(m.rMean);
    const variance = tf.tensor1d(m.rVar);
    norm = pre.sub(mean).div(variance.add(BN_EPS).sqrt());
  }
  const act = norm.mul(m.gamma).add(m.beta).relu();
  return act.matMul(m.w2 as tf.Tensor2D).add(m.b2) as tf.Tensor2D;
}

function mlpVars(m: Mlp): tf.Variable[] {
  return [m.w1, m.b1, m.gamma, m.beta, m.w2, m.b2];
}

export interface NodeStats {
  mean: number;
  std: number;
}

export interface EvalReport {
  mae: number;
  rmse: number;
  dtw: number;
  wddtw: number;
}

export class Forecaster {
  readonly cfg: ForecasterConfig;
  readonly rsu: RsuGraph;
  stats: Map<string, NodeStats> = new Map();
  private node: Mlp;
  private edge: Mlp;
  private global: Mlp;
  private headW: tf.Variable;
  private headB: tf.Variable;
  private agg: tf.Tensor2D; // [N, E] incoming-mean aggregation matrix
  private feat: tf.Tensor3D; // [1, E, 1] edge features
  /** last standardized window per node, for autoregressive forecasting */
  private lastWindow: number[][] = [];

  constructor(rsu: RsuGraph, cfg: Partial<ForecasterConfig> = {}) {
    this.cfg = { ...DEFAULT_CONFIG, ...cfg };
    this.rsu = rsu;
    const rng = mulberry32(this.cfg.seed);
    const N = rsu.rsuIds.length;
    const E = rsu.edges.length;
    this.node = makeMlp(rng, this.cfg.window, this.cfg.nodeHidden, this.cfg.nodeHidden);
    this.edge = makeMlp(rng, 2 * this.cfg.nodeHidden + 1, this.cfg.edgeHidden, this.cfg.edgeHidden);
    this.global = makeMlp(rng, this.cfg.nodeHidden, this.cfg.globalHidden, this.cfg.globalHidden);
    const headIn = this.cfg.nodeHidden + this.cfg.edgeHidden + this.cfg.globalHidden;
    const scale = Math.sqrt(2.0 / (headIn + 1));
    const headData = new Float32Array(headIn);
    for (let i = 0; i < headIn; i++) headData[i] = scale * gaussian(rng);
    this.headW = tf.variable(tf.tensor2d(headData, [headIn, 1]));
    this.headB = tf.variable(tf.zeros([1]));

    const aggData = new Float32Array(N * E);
    for (let e = 0; e < E; e++) {
      aggData[rsu.edges[e].dstIndex * E + e] = 1 / (N - 1);
    }
    this.agg = tf.tensor2d(aggData, [N, E]);
    this.feat = tf.tensor3d(
      Float32Array.from(rsu.edges.map((e) => e.feature)),
      [1, E, 1],
    );
  }

  private mlps(): Mlp[] {
    return [this.node, this.edge, this.global];
  }

  private variables(): tf.Variable[] {
    return [
      ...mlpVars(this.node),
      ...mlpVars(this.edge),
      ...mlpVars(this.global),
      this.headW,
      this.headB,
    ];
  }

  /** Forward pass: windows [S, N, W] -> standardized predictions [S, N]. */
  private forward(x: tf.Tensor3D, training: boolean): tf.Tensor2D {
    const [S, N, W] = x.shape;
    const E = this.rsu.edges.length;
    const h = applyMlp(this.node, x.reshape([S * N, W]) as tf.Tensor2D, training).reshape([
      S,
      N,
      this.cfg.nodeHidden,
    ]) as tf.Tensor3D;
    const srcIdx = tf.tensor1d(this.rsu.edges.map((e) => e.srcIndex), "int32");
    const dstIdx = tf.tensor1d(this.rsu.edges.map((e) => e.dstIndex), "int32");
    const hSrc = tf.gather(h, srcIdx, 1); // [S, E, H]
    const hDst = tf.gather(h, dstIdx, 1);
    const featT = this.feat.tile([S, 1, 1]);
    const edgeIn = tf.concat([hSrc, hDst, featT], 2).reshape([S * E, 2 * this.cfg.nodeHidden + 1]);
    const msgs = applyMlp(this.edge, edgeIn as tf.Tensor2D, training).reshape([
      S,
      E,
      this.cfg.edgeHidden,
    ]) as tf.Tensor3D;
    // incoming-mean per node: [N,E] x [E, S*C] -> [N, S*C] -> [S, N, C]
    const aggregated = this.agg
      .matMul(msgs.transpose([1, 0, 2]).reshape([E, S * this.cfg.edgeHidden]) as tf.Tensor2D)
      .reshape([N, S, this.cfg.edgeHidden])
      .transpose([1, 0, 2]) as tf.Tensor3D;
    const pooled = h.mean(1); // [S, H]
    const gOut = applyMlp(this.global, pooled as tf.Tensor2D, training); // [S, Hg]
    const gTiled = gOut.expandDims(1).tile([1, N, 1]) as tf.Tensor3D;
    const headIn = tf
      .concat([h, aggregated, gTiled], 2)
      .reshape([S * N, this.cfg.nodeHidden + this.cfg.edgeHidden + this.cfg.globalHidden]);
    return headIn.matMul(this.headW as tf.Tensor2D).add(this.headB).reshape([S, N]) as tf.Tensor2D;
  }

  /** Standardize per node; constant series get unit std so they map to 0. */
  private standardize(series: Map<string, number[]>): number[][] {
    const rows: number[][] = [];
    this.stats = new Map();
    for (const vid of this.rsu.rsuIds) {
      const raw = series.get(vid);
      if (!raw) throw new Error(`no history for RSU ${vid}`);
      const clean = raw.map((v) => (Number.isFinite(v) ? v : 0));
      const mean = clean.reduce((a, b) => a + b, 0) / clean.length;
      const sd = Math.sqrt(clean.reduce((a, b) => a + (b - mean) ** 2, 0) / clean.length);
      const std = sd > 1e-9 ? sd : 1.0;
      this.stats.set(vid, { mean, std });
      rows.push(clean.map((v) => (v - mean) / std));
    }
    return rows;
  }

  /** Sliding windows over a bin range: X [S, N, W], Y [S, N]. */
  private samples(z: number[][], from: number, to: number): { x: number[][][]; y: number[][] } {
    const W = this.cfg.window;
    const x: number[][][] = [];
    const y: number[][] = [];
    for (let t = Math.max(from, W); t < to; t++) {
      x.push(z.map((row) => row.slice(t - W, t)));
      y.push(z.map((row) => row[t]));
    }
    return { x, y };
  }

  train(series: Map<string, number[]>, opts: { quiet?: boolean } = {}): { valMae: number; epochs: number } {
    const z = this.standardize(series);
    const T = z[0].length;
    if (T < this.cfg.window + 3) {
      throw new Error(`history too short: ${T} bins for window ${this.cfg.window}`);
    }
    const trainEnd = Math.max(this.cfg.window + 1, Math.floor(T * this.cfg.trainFrac));
    const valEnd = Math.max(trainEnd + 1, Math.floor(T * (this.cfg.trainFrac + this.cfg.valFrac)));
    const tr = this.samples(z, 0, trainEnd);
    const va = this.samples(z, trainEnd, Math.min(valEnd, T));
    const xTr = tf.tensor3d(tr.x);
    const yTr = tf.tensor2d(tr.y);
    const xVa = va.x.length ? tf.tensor3d(va.x) : xTr;
    const yVa = va.y.length ? tf.tensor2d(va.y) : yTr;

    const opt = tf.train.adam(this.cfg.lr);
    let best = Infinity;
    let bestWeights: Float32Array[] | null = null;
    let bestRunning: Float32Array[] | null = null;
    let sinceBest = 0;
    let epochs = 0;
    for (let epoch = 0; epoch < this.cfg.epochs; epoch++) {
      epochs = epoch + 1;
      const lossVal = tf.tidy(() => {
        const l = opt.minimize(
          () => this.forward(xTr as tf.Tensor3D, true).sub(yTr).abs().mean() as tf.Scalar,
          true,
          this.variables(),
        )!;
        return l.dataSync()[0];
      });
      if (!Number.isFinite(lossVal)) {
        throw new Error(
          `training diverged: loss=${lossVal} at epoch ${epoch} (lr=${this.cfg.lr}, window=${this.cfg.window})`,
        );
      }
      const valMae = tf.tidy(
        () => this.forward(xVa as tf.Tensor3D, false).sub(yVa).abs().mean().dataSync()[0],
      );
      if (valMae < best - 1e-6) {
        best = valMae;
        bestWeights = this.variables().map((v) => v.dataSync().slice() as Float32Array);
        bestRunning = this.mlps().flatMap((m) => [m.rMean.slice(), m.rVar.slice()]);
        sinceBest = 0;
      } else {
        sinceBest += 1;
        if (sinceBest >= this.cfg.patience) break;
      }
      if (!opts.quiet && epoch % 25 === 0) {
        console.error(`epoch ${epoch}: train MAE ${lossVal.toFixed(4)}, val MAE ${valMae.toFixed(4)}`);
      }
    }
    if (bestWeights) {
      this.variables().forEach((v, i) => v.assign(tf.tensor(bestWeights![i], v.shape)));
      this.mlps().forEach((m, i) => {
        m.rMean = bestRunning![2 * i];
        m.rVar = bestRunning![2 * i + 1];
      });
    }
    this.lastWindow = z.map((row) => row.slice(T - this.cfg.window));
    xTr.dispose();
    yTr.dispose();
    if (xVa !== xTr) xVa.dispose();
    if (yVa !== yTr) yVa.dispose();
    return { valMae: best, epochs };
  }

  /** One-step-ahead predictions (original units) over a held-out bin range. */
  predictRange(series: Map<string, number[]>, from: number, to: number): Map<string, number[]> {
    const z = this.rsu.rsuIds.map((vid) => {
      const raw = series.get(vid)!;
      const st = this.stats.get(vid)!;
      return raw.map((v) => ((Number.isFinite(v) ? v : 0) - st.mean) / st.std);
    });
    const { x } = this.samples(z, from, to);
    if (x.length === 0) return new Map(this.rsu.rsuIds.map((vid) => [vid, []]));
    const xs = tf.tensor3d(x);
    const preds = tf.tidy(() => this.forward(xs as tf.Tensor3D, false).arraySync() as number[][]);
    xs.dispose();
    const out = new Map<string, number[]>();
    this.rsu.rsuIds.forEach((vid, n) => {
      const st = this.stats.get(vid)!;
      out.set(
        vid,
        preds.map((row) => st.mean + st.std * row[n]),
      );
    });
    return out;
  }

  /** Autoregressive forecast for the next ``horizon`` bins, original units. */
  forecast(horizon: number): Map<string, number[]> {
    if (this.lastWindow.length === 0) throw new Error("model has not been trained");
    const window = this.lastWindow.map((r) => r.slice());
    const N = this.rsu.rsuIds.length;
    const rows: number[][] = this.rsu.rsuIds.map(() => []);
    for (let h = 0; h < horizon; h++) {
      const xs = tf.tensor3d([window.map((r) => r.slice())]);
      const pred = tf.tidy(() => this.forward(xs as tf.Tensor3D, false).arraySync() as number[][]);
      xs.dispose();
      for (let n = 0; n < N; n++) {
        rows[n].push(pred[0][n]);
        window[n].shift();
        window[n].push(pred[0][n]);
      }
    }
    const out = new Map<string, number[]>();
    this.rsu.rsuIds.forEach((vid, n) => {
      const st = this.stats.get(vid)!;
      out.set(
        vid,
        rows[n].map((zv) => st.mean + st.std * zv),
      );
    });
    return out;
  }

  save(file: string): void {
    const doc = {
      config: this.cfg,
      variant: this.rsu.variant,
      rsuIds: this.rsu.rsuIds,
      edges: this.rsu.edges,
      stats: Object.fromEntries(this.stats),
      lastWindow: this.lastWindow,
      weights: this.variables().map((v) => ({
        shape: v.shape,
        data: Array.from(v.dataSync()),
      })),
      running: this.mlps().map((m) => ({ mean: Array.from(m.rMean), variance: Array.from(m.rVar) })),
    };
    fs.mkdirSync(path.dirname(file), { recursive: true });
    fs.writeFileSync(file, JSON.stringify(doc) + "\n", "utf-8");
  }

  static load(file: string): Forecaster {
    const doc = JSON.parse(fs.readFileSync(file, "utf-8"));
    const rsu: RsuGraph = { variant: doc.variant as Variant, rsuIds: doc.rsuIds, edges: doc.edges };
    const model = new Forecaster(rsu, doc.config);
    model.stats = new Map(Object.entries(doc.stats as Record<string, NodeStats>));
    model.lastWindow = doc.lastWindow;
    model.variables().forEach((v, i) => {
      const w = doc.weights[i];
      v.assign(tf.tensor(w.data, w.shape));
    });
    model.mlps().forEach((m, i) => {
      m.rMean = Float32Array.from(doc.running[i].mean);
      m.rVar = Float32Array.from(doc.running[i].variance);
    });
    return model;
  }
}
