import { describe, expect, it } from "vitest";

import { derivative, dtw, euclidean, mae, rmse, wddtw } from "../src/metrics.js";
import { mulberry32 } from "../src/rng.js";

/** Exhaustive DTW: enumerate every monotone warping path. */
function bruteForceDtw(a: number[], b: number[]): number {
  let best = Infinity;
  const walk = (i: number, j: number, acc: number) => {
    const c = acc + Math.abs(a[i] - b[j]);
    if (c >= best) return;
    if (i === a.length - 1 && j === b.length - 1) {
      best = c;
      return;
    }
    if (i + 1 < a.length) walk(i + 1, j, c);
    if (j + 1 < b.length) walk(i, j + 1, c);
    if (i + 1 < a.length && j + 1 < b.length) walk(i + 1, j + 1, c);
  };
  walk(0, 0, 0);
  return best;
}

describe("pointwise metrics", () => {
  it("are zero on self-comparison", () => {
    const x = [1, 4, 2, 8, 5.5];
    expect(mae(x, x)).toBe(0);
    expect(rmse(x, x)).toBe(0);
    expect(dtw(x, x)).toBe(0);
  });

  it("unit offset gives MAE 1 and RMSE 1", () => {
    const x = [1, 2, 3, 4];
    const y = x.map((v) => v + 1);
    expect(mae(y, x)).toBeCloseTo(1, 12);
    expect(rmse(y, x)).toBeCloseTo(1, 12);
  });

  it("reject mismatched or empty input", () => {
    expect(() => mae([1], [1, 2])).toThrow();
    expect(() => rmse([], [])).toThrow();
    expect(() => dtw([], [1])).toThrow();
  });
});

describe("dtw", () => {
  it("matches the exhaustive dynamic program on short series", () => {
    const rng = mulberry32(42);
    for (let trial = 0; trial < 60; trial++) {
      const n = 2 + Math.floor(rng() * 7); // up to 8
      const m = 2 + Math.floor(rng() * 7);
      const a = Array.from({ length: n }, () => Math.round(rng() * 10));
      const b = Array.from({ length: m }, () => Math.round(rng() * 10));
      expect(dtw(a, b)).toBe(bruteForceDtw(a, b));
    }
  });

  it("is symmetric and zero on identity for random series", () => {
    const rng = mulberry32(7);
    for (let trial = 0; trial < 30; trial++) {
      const n = 3 + Math.floor(rng() * 10);
      const a = Array.from({ length: n }, () => rng() * 5);
      const b = Array.from({ length: n }, () => rng() * 5);
      expect(dtw(a, b)).toBeCloseTo(dtw(b, a), 10);
      expect(dtw(a, a)).toBe(0);
    }
  });

  it("beats the euclidean distance on a pure time shift", () => {
    const base = [0, 0, 1, 5, 9, 5, 1, 0, 0];
    const shifted = [0, 1, 5, 9, 5, 1, 0, 0, 0];
    expect(dtw(base, shifted)).toBeLessThan(euclidean(base, shifted));
  });
});

describe("wddtw", () => {
  it("kills constant offsets", () => {
    const rng = mulberry32(3);
    for (let trial = 0; trial < 20; trial++) {
      const n = 5 + Math.floor(rng() * 8);
      const a = Array.from({ length: n }, () => rng() * 10);
      const shiftedUp = a.map((v) => v + 3.7);
      expect(wddtw(a, shiftedUp)).toBeCloseTo(0, 9);
    }
  });

  it("is positive when shapes differ", () => {
    expect(wddtw([0, 1, 2, 3, 4, 5], [0, 1, 4, 9, 16, 25])).toBeGreaterThan(0);
  });

  it("derivative of a line is constant", () => {
    const line = [2, 4, 6, 8, 10];
    for (const d of derivative(line)) expect(d).toBeCloseTo(2, 12);
  });
});
