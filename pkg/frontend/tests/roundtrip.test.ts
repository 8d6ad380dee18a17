/** The exported forecast must ingest into the route planner unchanged: the
 * planner CLI generates a scenario, the pipeline retrains on its history and
 * replaces the forecast, and planning must then validate and succeed. */
import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { formatReport, runVariantReport, VARIANTS } from "../src/report.js";
import { historyFromForecastCsv } from "../src/csv.js";
import { loadRoadGraph } from "../src/roadgraph.js";

function run(cmd: string, args: string[]): string {
  return execFileSync(cmd, args, { encoding: "utf-8" });
}

describe("round trip into the planner", () => {
  it("exported forecast passes planner validation and planning", () => {
    const root = fs.mkdtempSync(path.join(os.tmpdir(), "rt-"));
    const demo = path.join(root, "demo");
    run("potmo", ["gen", "--rows", "4", "--cols", "4", "--seed", "3",
      "--fleet", "3", "--horizon", "1200", "--out", demo]);
    const exported = path.join(root, "exported");
    const rc = main(["pipeline", "--scenario", demo, "--out", exported,
      "--epochs", "12", "--window", "4", "--variant", "minlen"]);
    expect(rc).toBe(0);
    fs.copyFileSync(path.join(exported, "forecast.csv"), path.join(demo, "forecast.csv"));
    fs.copyFileSync(path.join(exported, "forecast.json"), path.join(demo, "forecast.json"));
    const planOut = path.join(root, "plan.json");
    const out = run("potmo", ["plan", "--scenario", demo, "--algo", "potmo", "--out", planOut]);
    expect(fs.existsSync(planOut)).toBe(true);
    const doc = JSON.parse(fs.readFileSync(planOut, "utf-8"));
    expect(doc.cost.length).toBe(5);
    expect(doc.path.length).toBeGreaterThan(0);
  }, 300_000);
});

describe("three-variant report", () => {
  it("produces the four-metric table for minlen/mintime/hop", () => {
    const root = fs.mkdtempSync(path.join(os.tmpdir(), "rep-"));
    const demo = path.join(root, "demo");
    run("potmo", ["gen", "--rows", "3", "--cols", "3", "--seed", "5",
      "--fleet", "2", "--horizon", "2400", "--out", demo]);
    const road = loadRoadGraph(path.join(demo, "graph.json"));
    const records = historyFromForecastCsv(path.join(demo, "forecast.csv"), 60);
    const scores = runVariantReport(road, records, 60, {
      window: 4, epochs: 10, seed: 2,
      nodeHidden: 16, edgeHidden: 32, globalHidden: 16,
    } as any);
    for (const v of VARIANTS) {
      for (const metric of ["DTW", "WDDTW", "MAE", "RMSE"] as const) {
        expect(Number.isFinite(scores[v][metric])).toBe(true);
        expect(scores[v][metric]).toBeGreaterThanOrEqual(0);
      }
    }
    const table = formatReport(scores);
    const lines = table.split("\n");
    expect(lines.length).toBe(5); // header + DTW/WDDTW/MAE/RMSE
    expect(lines[0]).toMatch(/MinLen/);
    expect(lines[0]).toMatch(/MinTime/);
    expect(lines[0]).toMatch(/Hop/);
    expect(lines[1]).toMatch(/^\s*DTW/);
    expect(lines[4]).toMatch(/^\s*RMSE/);
  }, 300_000);
});
