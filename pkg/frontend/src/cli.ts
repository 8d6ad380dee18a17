#!/usr/bin/env node
/** gnnpred: train/evaluate/export the RSU traffic forecaster.
 *
 *   gnnpred train  --graph g.json --history h.csv --variant minlen --model m.json
 *   gnnpred eval   --graph g.json --history h.csv --model m.json
 *   gnnpred export --model m.json --horizon 120 --out dir/
 *   gnnpred report --graph g.json --history h.csv
 *   gnnpred pipeline --scenario dir/ --out dir/   (train on a scenario's own
 *       forecast replayed as history, then export a fresh forecast)
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { binHistory, historyFromForecastCsv, readHistory, writeForecast } from "./csv.js";
import { DEFAULT_CONFIG, Forecaster } from "./model.js";
import { buildRsuGraph, loadRoadGraph, Variant } from "./roadgraph.js";
import { evaluateHoldout, formatReport, runVariantReport } from "./report.js";

interface Args {
  command: string;
  flags: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) throw new Error("usage: gnnpred <train|eval|export|report|pipeline> [--flag value ...]");
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) throw new Error(`bad flag ${key}`);
    flags.set(key.slice(2), argv[i + 1]);
  }
  return { command: argv[0], flags };
}

function need(args: Args, key: string): string {
  const v = args.flags.get(key);
  if (v === undefined) throw new Error(`missing --${key}`);
  return v;
}

function numFlag(args: Args, key: string, dflt: number): number {
  const v = args.flags.get(key);
  return v === undefined ? dflt : Number(v);
}

function variantFlag(args: Args): Variant {
  const v = (args.flags.get("variant") ?? "minlen").toLowerCase();
  if (v !== "minlen" && v !== "mintime" && v !== "hop") {
    throw new Error(`unknown variant ${v}; pick minlen|mintime|hop`);
  }
  return v;
}

function configFrom(args: Args) {
  return {
    window: numFlag(args, "window", DEFAULT_CONFIG.window),
    epochs: numFlag(args, "epochs", DEFAULT_CONFIG.epochs),
    lr: numFlag(args, "lr", DEFAULT_CONFIG.lr),
    seed: numFlag(args, "seed", DEFAULT_CONFIG.seed),
  };
}

function cmdTrain(args: Args): number {
  const road = loadRoadGraph(need(args, "graph"));
  const records = readHistory(need(args, "history"));
  const binWidth = numFlag(args, "bin-width", 60);
  const rsu = buildRsuGraph(road, variantFlag(args));
  const series = binHistory(records, binWidth);
  const model = new Forecaster(rsu, configFrom(args));
  const { valMae, epochs } = model.train(series);
  model.save(need(args, "model"));
  console.log(`trained ${rsu.variant} on ${rsu.rsuIds.length} RSUs: val MAE ${valMae.toFixed(4)} after ${epochs} epochs`);
  return 0;
}

function cmdEval(args: Args): number {
  const model = Forecaster.load(need(args, "model"));
  const records = readHistory(need(args, "history"));
  const binWidth = numFlag(args, "bin-width", 60);
  const series = binHistory(records, binWidth);
  const scores = evaluateHoldout(model, series);
  console.log(JSON.stringify({ variant: model.rsu.variant, ...scores }, null, 2));
  return 0;
}

function cmdExport(args: Args): number {
  const model = Forecaster.load(need(args, "model"));
  const horizon = numFlag(args, "horizon", 120);
  const binWidth = numFlag(args, "bin-width", 60);
  const outDir = need(args, "out");
  const series = model.forecast(horizon);
  writeForecast(path.join(outDir, "forecast.csv"), path.join(outDir, "forecast.json"), series, binWidth);
  console.log(`exported ${horizon} bins for ${model.rsu.rsuIds.length} RSUs to ${outDir}`);
  return 0;
}

function cmdReport(args: Args): number {
  const road = loadRoadGraph(need(args, "graph"));
  const records = readHistory(need(args, "history"));
  const binWidth = numFlag(args, "bin-width", 60);
  const scores = runVariantReport(road, records, binWidth, configFrom(args));
  console.log(formatReport(scores));
  const out = args.flags.get("out");
  if (out) fs.writeFileSync(out, JSON.stringify(scores, null, 2) + "\n", "utf-8");
  return 0;
}

function cmdPipeline(args: Args): number {
  const scenario = need(args, "scenario");
  const outDir = need(args, "out");
  const sidecar = JSON.parse(fs.readFileSync(path.join(scenario, "forecast.json"), "utf-8"));
  const binWidth = Number(sidecar.bin_width);
  const horizon = numFlag(args, "horizon", Number(sidecar.n_bins ?? 120));
  const road = loadRoadGraph(path.join(scenario, "graph.json"));
  const records = historyFromForecastCsv(path.join(scenario, "forecast.csv"), binWidth);
  const rsu = buildRsuGraph(road, variantFlag(args));
  const series = binHistory(records, binWidth);
  const model = new Forecaster(rsu, configFrom(args));
  const { valMae, epochs } = model.train(series, { quiet: true });
  const forecast = model.forecast(horizon);
  writeForecast(path.join(outDir, "forecast.csv"), path.join(outDir, "forecast.json"), forecast, binWidth);
  const modelOut = args.flags.get("model");
  if (modelOut) model.save(modelOut);
  console.log(
    `pipeline ${rsu.variant}: ${rsu.rsuIds.length} RSUs, val MAE ${valMae.toFixed(4)} (${epochs} epochs), ` +
      `${horizon} bins exported to ${outDir}`,
  );
  return 0;
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  const handlers: Record<string, (a: Args) => number> = {
    train: cmdTrain,
    eval: cmdEval,
    export: cmdExport,
    report: cmdReport,
    pipeline: cmdPipeline,
  };
  const handler = handlers[args.command];
  if (!handler) throw new Error(`unknown command ${args.command}`);
  return handler(args);
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("gnnpred")) {
  try {
    process.exitCode = main(process.argv.slice(2));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exitCode = 1;
  }
}
