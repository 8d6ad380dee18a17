/** Road graph loading and the fully connected RSU graph construction.
 *
 * Every RSU pair becomes a directed edge whose scalar feature is
 * exp(standardized f), with f one of: shortest road distance (minlen),
 * free-flow shortest time (mintime), or hop count of that path (hop).
 * Raw values are standardized before the exponential so meter-scale
 * distances cannot overflow.
 */
import * as fs from "node:fs";

export type Variant = "minlen" | "mintime" | "hop";

export interface RoadVertex {
  id: string;
  x: number;
  y: number;
  rsu: boolean;
}

export interface RoadEdge {
  src: string;
  dst: string;
  lengthM: number;
  vmaxMs: number;
}

export interface RoadGraph {
  vertices: Map<string, RoadVertex>;
  out: Map<string, RoadEdge[]>;
}

export function loadRoadGraph(file: string): RoadGraph {
  const doc = JSON.parse(fs.readFileSync(file, "utf-8"));
  const vertices = new Map<string, RoadVertex>();
  for (const v of doc.vertices) {
    vertices.set(String(v.id), {
      id: String(v.id),
      x: Number(v.x),
      y: Number(v.y),
      rsu: Boolean(v.rsu ?? false),
    });
  }
  const out = new Map<string, RoadEdge[]>();
  for (const vid of vertices.keys()) out.set(vid, []);
  for (const e of doc.edges) {
    const edge = {
      src: String(e.src),
      dst: String(e.dst),
      lengthM: Number(e.length_m),
      vmaxMs: Number(e.vmax_ms),
    };
    if (!vertices.has(edge.src) || !vertices.has(edge.dst)) {
      throw new Error(`edge ${e.id} references unknown vertex`);
    }
    out.get(edge.src)!.push(edge);
  }
  return { vertices, out };
}

function dijkstra(g: RoadGraph, source: string, weight: (e: RoadEdge) => number): Map<string, number> {
  const dist = new Map<string, number>();
  // array-scan priority queue; RSU graphs here are far too small to need a heap
  const todo = new Map<string, number>([[source, 0]]);
  while (todo.size > 0) {
    let bestId = "";
    let bestD = Infinity;
    for (const [vid, d] of todo) {
      if (d < bestD || (d === bestD && vid < bestId)) {
        bestD = d;
        bestId = vid;
      }
    }
    todo.delete(bestId);
    dist.set(bestId, bestD);
    for (const e of g.out.get(bestId) ?? []) {
      if (dist.has(e.dst)) continue;
      const nd = bestD + weight(e);
      const cur = todo.get(e.dst);
      if (cur === undefined || nd < cur) todo.set(e.dst, nd);
    }
  }
  return dist;
}

export interface RsuEdge {
  srcIndex: number;
  dstIndex: number;
  raw: number;
  feature: number; // exp(standardized raw)
}

export interface RsuGraph {
  variant: Variant;
  rsuIds: string[];
  edges: RsuEdge[];
}

const WEIGHTS: Record<Variant, (e: RoadEdge) => number> = {
  minlen: (e) => e.lengthM,
  mintime: (e) => e.lengthM / e.vmaxMs,
  hop: () => 1,
};

export function pairwiseStat(g: RoadGraph, rsuIds: string[], variant: Variant): number[][] {
  const w = WEIGHTS[variant];
  const rows: number[][] = [];
  for (const src of rsuIds) {
    const dist = dijkstra(g, src, w);
    rows.push(
      rsuIds.map((dst) => {
        const d = dist.get(dst);
        if (d === undefined) throw new Error(`RSUs disconnected: no road path ${src} -> ${dst}`);
        return d;
      }),
    );
  }
  return rows;
}

export function buildRsuGraph(g: RoadGraph, variant: Variant): RsuGraph {
  const rsuIds = [...g.vertices.values()]
    .filter((v) => v.rsu)
    .map((v) => v.id)
    .sort();
  if (rsuIds.length < 2) throw new Error(`need at least 2 RSUs, found ${rsuIds.length}`);
  const stat = pairwiseStat(g, rsuIds, variant);
  const raws: number[] = [];
  for (let i = 0; i < rsuIds.length; i++) {
    for (let j = 0; j < rsuIds.length; j++) {
      if (i !== j) raws.push(stat[i][j]);
    }
  }
  const mean = raws.reduce((a, b) => a + b, 0) / raws.length;
  const sd = Math.sqrt(raws.reduce((a, b) => a + (b - mean) ** 2, 0) / raws.length) || 1;
  const edges: RsuEdge[] = [];
  for (let i = 0; i < rsuIds.length; i++) {
    for (let j = 0; j < rsuIds.length; j++) {
      if (i === j) continue;
      const raw = stat[i][j];
      edges.push({ srcIndex: i, dstIndex: j, raw, feature: Math.exp((raw - mean) / sd) });
    }
  }
  return { variant, rsuIds, edges };
}
