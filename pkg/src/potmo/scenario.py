"""Scenario bundles: load/validate/save every file format, plus generators
for synthetic road networks, forecasts, and test graphs.

A scenario is a directory with a ``scenario.json`` manifest referencing a
graph JSON, a desirability JSON, and a forecast CSV with its JSON sidecar.
Writers are canonical (sorted keys, LF, repr floats) so save(load(x)) == x
byte-wise for files produced here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .costs import DesirabilityMap, VehicleTwin, build_cost_vector
from .forecast import ForecastTable, ingest_observations, smooth_spatial
from .graph import Edge, TemporalGraph, Vertex
from .sim import BackgroundVehicle, Mel, ScenarioResult, SimConfig

MAX_GRID_CELLS = 400


class ScenarioError(ValueError):
    """Validation failed; ``failures`` lists every (file, field, message)."""

    def __init__(self, failures: list[str]):
        super().__init__("scenario validation failed:\n  " + "\n  ".join(failures))
        self.failures = failures


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Graph files
# ---------------------------------------------------------------------------

def graph_to_dict(g: TemporalGraph) -> dict:
    vertices = []
    for vid in sorted(g.vertices):
        v = g.vertices[vid]
        rec = {"id": v.id, "x": v.x, "y": v.y, "z": v.z}
        if v.rsu:
            rec["rsu"] = True
        vertices.append(rec)
    edges = []
    for e in sorted(g.edges, key=lambda e: e.id):
        rec = {
            "id": e.id,
            "src": e.src,
            "dst": e.dst,
            "length_m": e.length_m,
            "vmax_ms": e.vmax_ms,
            "slope_rad": e.slope_rad,
        }
        if e.bins is not None:
            rec["cost_bins"] = [[float(x) for x in row] for row in e.bins]
        edges.append(rec)
    return {
        "bin_width": g.bin_width,
        "d": g.d,
        "d_t": g.d_t,
        "vertices": vertices,
        "edges": edges,
    }


def graph_from_dict(data: dict) -> TemporalGraph:
    vertices = [
        Vertex(str(v["id"]), float(v["x"]), float(v["y"]), float(v.get("z", 0.0)), bool(v.get("rsu", False)))
        for v in data["vertices"]
    ]
    edges = []
    for e in data["edges"]:
        bins = e.get("cost_bins")
        edges.append(
            Edge(
                str(e["id"]),
                str(e["src"]),
                str(e["dst"]),
                float(e["length_m"]),
                float(e["vmax_ms"]),
                float(e.get("slope_rad", 0.0)),
                np.array(bins, dtype=np.float64) if bins is not None else None,
            )
        )
    return TemporalGraph(
        vertices,
        edges,
        bin_width=float(data.get("bin_width", 60.0)),
        d=int(data.get("d", 5)),
        d_t=int(data.get("d_t", 3)),
    )


def save_graph(g: TemporalGraph, path) -> None:
    write_text(path, canonical_json(graph_to_dict(g)))


def load_graph(path) -> TemporalGraph:
    return graph_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_desirability(dmap: DesirabilityMap, path) -> None:
    write_text(path, canonical_json(dmap.to_dict()))


def load_desirability(path) -> DesirabilityMap:
    return DesirabilityMap(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Scenario manifest
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    root: Path
    graph: TemporalGraph
    dmap: DesirabilityMap
    table: ForecastTable
    twin: VehicleTwin
    manifest: dict

    def sim_config(self, planner: str, *, seed: int, fleet_size: Optional[int] = None, literal_priority: bool = False) -> SimConfig:
        sim = self.manifest["sim"]
        mels = tuple(
            Mel(str(m["id"]), float(m["x"]), float(m["y"]), float(m["rate_ips"]), float(m["instructions_per_packet"]))
            for m in sim["mels"]
        )
        background = tuple(
            BackgroundVehicle(str(b["id"]), float(b["depart_s"]), tuple(b["route"]))
            for b in sim.get("background", [])
        )
        return SimConfig(
            graph=self.graph,
            dmap=self.dmap,
            twin=self.twin,
            planner=planner,
            source=str(sim["source"]),
            target=str(sim["target"]),
            mels=mels,
            background=background,
            forecast=self.table,
            fleet_size=int(sim.get("fleet_size", 35)) if fleet_size is None else fleet_size,
            injection_interval_s=float(sim.get("injection_interval_s", 100.0)),
            packet_interval_s=float(sim.get("packet_interval_s", 60.0)),
            tick_s=float(sim.get("tick_s", 1.0)),
            horizon_s=float(sim.get("horizon_s", 7200.0)),
            congestion_beta=float(sim.get("congestion_beta", 0.5)),
            seed=seed,
            literal_priority=literal_priority,
        )


def load_scenario(path) -> Scenario:
    """Load and cross-validate a scenario bundle; raises ScenarioError with
    every failure found (file and field named)."""
    root = Path(path)
    manifest_path = root / "scenario.json" if root.is_dir() else root
    root = manifest_path.parent
    failures: list[str] = []
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError([f"{manifest_path}: unreadable manifest ({exc})"]) from exc

    def ref(key: str) -> Optional[Path]:
        rel = manifest.get(key)
        if rel is None:
            failures.append(f"scenario.json: missing field {key!r}")
            return None
        p = root / rel
        if not p.exists():
            failures.append(f"scenario.json: {key} -> {rel} does not exist")
            return None
        return p

    graph_path = ref("graph")
    desir_path = ref("desirability")
    forecast_path = ref("forecast")
    sidecar_path = ref("forecast_sidecar")
    sim = manifest.get("sim")
    if sim is None:
        failures.append("scenario.json: missing field 'sim'")
    if failures:
        raise ScenarioError(failures)

    g = dmap = table = None
    try:
        g = load_graph(graph_path)
    except (ValueError, KeyError) as exc:
        failures.append(f"{graph_path.name}: invalid graph ({exc})")
    try:
        dmap = load_desirability(desir_path)
    except (ValueError, json.JSONDecodeError) as exc:
        failures.append(f"{desir_path.name}: invalid desirability map ({exc})")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        failures.append(f"{sidecar_path.name}: invalid sidecar ({exc})")
        sidecar = None

    if g is not None and sidecar is not None:
        if abs(float(sidecar.get("bin_width", -1)) - g.bin_width) > 1e-9:
            failures.append(
                f"{sidecar_path.name}: bin_width {sidecar.get('bin_width')} "
                f"!= graph bin_width {g.bin_width} ({graph_path.name})"
            )
    if g is not None:
        try:
            table = ForecastTable.from_csv(forecast_path, sidecar_path, vertex_ids=tuple(g.vertices))
        except ValueError as exc:
            failures.append(f"{forecast_path.name}: {exc}")
    if g is not None and dmap is not None:
        missing = set(g.vertices) - dmap.vertex_ids()
        if missing:
            failures.append(
                f"{desir_path.name}: no score for vertices {sorted(missing)[:5]}"
            )
        dangling = dmap.vertex_ids() - set(g.vertices)
        if dangling:
            failures.append(
                f"{desir_path.name}: scores for unknown vertices {sorted(dangling)[:5]}"
            )
    if g is not None and sim is not None:
        for key in ("source", "target"):
            vid = sim.get(key)
            if vid is None or not g.has_vertex(str(vid)):
                failures.append(f"scenario.json: sim.{key} {vid!r} is not a graph vertex")
        if not sim.get("mels"):
            failures.append("scenario.json: sim.mels must be nonempty")
        for b in sim.get("background", []):
            for eid in b.get("route", []):
                try:
                    g.edge(str(eid))
                except ValueError:
                    failures.append(
                        f"scenario.json: background {b.get('id')} uses unknown edge {eid}"
                    )
                    break
    if failures:
        raise ScenarioError(failures)

    twin = VehicleTwin.from_dict(manifest.get("twin", {})) if manifest.get("twin") else VehicleTwin()
    table = smooth_spatial(table, g)
    base_table = table

    def cost_fn(edge: Edge, t: float) -> np.ndarray:
        return build_cost_vector(edge, t, base_table, dmap, twin)

    g_with_costs = TemporalGraph(
        g.vertices.values(),
        [Edge(e.id, e.src, e.dst, e.length_m, e.vmax_ms, e.slope_rad, e.bins) for e in g.edges],
        bin_width=g.bin_width,
        d=g.d,
        d_t=g.d_t,
        cost_fn=cost_fn,
    )
    return Scenario(root, g_with_costs, dmap, table, twin, manifest)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_grid(
    rows: int,
    cols: int,
    seed: int,
    *,
    horizon_s: float = 7200.0,
    bin_width: float = 60.0,
    fleet_size: int = 35,
    spacing_m: float = 500.0,
) -> tuple[TemporalGraph, DesirabilityMap, ForecastTable, dict]:
    """Synthetic city grid with a fast uphill central corridor, center-weighted
    desirability, per-RSU forecasts, and a corridor background-traffic schedule.

    Returns (graph, desirability, forecast, manifest). Deterministic per seed.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2x2 vertices")
    if rows * cols > MAX_GRID_CELLS:
        raise ValueError(f"grid too large (limit {MAX_GRID_CELLS} vertices)")
    rng = np.random.default_rng(seed)
    corridor_row = rows // 2
    n_bins = max(1, int(math.ceil(horizon_s / bin_width)))

    def vid(i: int, j: int) -> str:
        return f"v{i}_{j}"

    vertices = []
    coords: dict[str, tuple[float, float]] = {}
    for i in range(rows):
        for j in range(cols):
            x = j * spacing_m + float(rng.uniform(-0.08, 0.08) * spacing_m)
            y = i * spacing_m + float(rng.uniform(-0.08, 0.08) * spacing_m)
            coords[vid(i, j)] = (x, y)
            vertices.append(Vertex(vid(i, j), x, y, 0.0, rsu=(i + j) % 2 == 0))

    def euclid(a: str, b: str) -> float:
        (ax, ay), (bx, by) = coords[a], coords[b]
        return math.hypot(ax - bx, ay - by)

    edges = []

    def add_pair(a: str, b: str, corridor: bool) -> None:
        base = euclid(a, b)
        if corridor:
            stretch = float(rng.uniform(1.0, 1.05))
            vmax = 13.89
            slope = float(rng.uniform(0.022, 0.035))
        else:
            stretch = float(rng.uniform(1.12, 1.3))
            vmax = float(rng.uniform(8.0, 12.0))
            slope = float(rng.uniform(0.0, 0.008))
        for src, dst in ((a, b), (b, a)):
            edges.append(Edge(f"e_{src}__{dst}", src, dst, base * stretch, vmax, slope))

    for i in range(rows):
        for j in range(cols):
            if j + 1 < cols:
                add_pair(vid(i, j), vid(i, j + 1), corridor=(i == corridor_row))
            if i + 1 < rows:
                add_pair(vid(i, j), vid(i + 1, j), corridor=False)

    g = TemporalGraph(vertices, edges, bin_width=bin_width, d=5, d_t=3)

    center = vid(corridor_row, cols // 2)
    cx, cy = coords[center]
    extent = max(rows, cols) * spacing_m
    sigma = 0.35 * extent
    scores = {}
    for v in vertices:
        dd = math.hypot(v.x - cx, v.y - cy)
        scores[v.id] = math.exp(-(dd * dd) / (2 * sigma * sigma))
    dmap = DesirabilityMap(scores)

    # forecast: heavy counts near the corridor, light elsewhere, mild wave
    records = []
    for v in vertices:
        if not v.rsu:
            continue
        i = int(v.id[1:].split("_")[0])
        near_corridor = abs(i - corridor_row) <= 0
        base_count = 8.0 if near_corridor else 0.5
        phase = float(rng.uniform(0, 2 * math.pi))
        for b in range(n_bins):
            wave = 1.0 + 0.25 * math.sin(2 * math.pi * b / 24.0 + phase)
            records.append((v.id, b * bin_width, max(0.0, base_count * wave)))
    table = ingest_observations(
        records, bin_width=bin_width, n_bins=n_bins, vertex_ids=tuple(g.vertices)
    )

    # background traffic shuttling along the corridor in both directions
    west = [f"e_{vid(corridor_row, j)}__{vid(corridor_row, j + 1)}" for j in range(cols - 1)]
    east = [f"e_{vid(corridor_row, j + 1)}__{vid(corridor_row, j)}" for j in range(cols - 2, -1, -1)]
    background = []
    depart = 0.0
    k = 0
    while depart < horizon_s - 300.0:
        route = west if k % 2 == 0 else east
        background.append({"id": f"bg{k:04d}", "depart_s": round(depart, 3), "route": list(route)})
        depart += 18.0
        k += 1

    qx = [0.25, 0.75]
    mels = []
    m = 0
    for fx in qx:
        for fy in qx:
            mels.append(
                {
                    "id": f"mel{m}",
                    "x": round(fx * (cols - 1) * spacing_m, 3),
                    "y": round(fy * (rows - 1) * spacing_m, 3),
                    "rate_ips": 1.0e6,
                    "instructions_per_packet": 2.5e5,
                }
            )
            m += 1

    manifest = {
        "graph": "graph.json",
        "desirability": "desirability.json",
        "forecast": "forecast.csv",
        "forecast_sidecar": "forecast.json",
        "twin": VehicleTwin().to_dict(),
        "sim": {
            "source": vid(0, 0),
            "target": center,
            "fleet_size": fleet_size,
            "injection_interval_s": 100.0,
            "packet_interval_s": 60.0,
            "tick_s": 1.0,
            "horizon_s": horizon_s,
            "congestion_beta": 0.5,
            "mels": mels,
            "background": background,
        },
        "seed": seed,
    }
    return g, dmap, table, manifest


def save_bundle(outdir, g: TemporalGraph, dmap: DesirabilityMap, table: ForecastTable, manifest: dict) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(g, out / "graph.json")
    save_desirability(dmap, out / "desirability.json")
    table.to_csv(out / "forecast.csv", out / "forecast.json")
    write_text(out / "scenario.json", canonical_json(manifest))
    return out


def random_graph(
    seed: int,
    *,
    n_vertices: int = 8,
    d: int = 5,
    d_t: Optional[int] = None,
    n_bins: int = 1,
    edge_prob: float = 0.45,
    bin_width: float = 60.0,
    fifo: bool = True,
) -> TemporalGraph:
    """Random connected digraph with explicit cost bins for planner tests.

    ``n_bins == 1`` gives static costs. With more bins the time dimension is
    clamped so that departing one bin later never arrives earlier than the
    bin-start departure before it (discretized non-overtaking).
    """
    if d_t is None:
        d_t = {1: 0, 3: 1, 5: 3}.get(d, d - 1)
    rng = np.random.default_rng(seed)
    ids = [f"n{i}" for i in range(n_vertices)]
    vertices = [
        Vertex(i, float(rng.uniform(0, 2000)), float(rng.uniform(0, 2000)), rsu=bool(rng.random() < 0.5))
        for i in ids
    ]
    edges = []
    k = 0

    def make_bins() -> np.ndarray:
        bins = rng.uniform(0.5, 10.0, size=(n_bins, d))
        if fifo and n_bins > 1:
            for b in range(1, n_bins):
                lo = bins[b - 1, d_t] - bin_width
                if bins[b, d_t] < max(lo, 0.5):
                    bins[b, d_t] = max(lo, 0.5)
        return bins

    # random ring first so the graph is strongly connected
    order = list(rng.permutation(n_vertices))
    for a, b in zip(order, order[1:] + order[:1]):
        edges.append(Edge(f"e{k}", ids[a], ids[b], 100.0, 10.0, 0.0, make_bins()))
        k += 1
    for i in range(n_vertices):
        for j in range(n_vertices):
            if i == j:
                continue
            if rng.random() < edge_prob:
                edges.append(Edge(f"e{k}", ids[i], ids[j], 100.0, 10.0, 0.0, make_bins()))
                k += 1
    return TemporalGraph(vertices, edges, bin_width=bin_width, d=d, d_t=d_t)


def complete_graph(n: int, d: int = 1) -> TemporalGraph:
    """K_n with unit static costs; for path-count checks."""
    ids = [f"n{i}" for i in range(n)]
    vertices = [Vertex(i, float(k), 0.0) for k, i in enumerate(ids)]
    edges = []
    k = 0
    bins = np.ones((1, d))
    for a in ids:
        for b in ids:
            if a != b:
                edges.append(Edge(f"e{k}", a, b, 100.0, 10.0, 0.0, bins.copy()))
                k += 1
    return TemporalGraph(vertices, edges, d=d, d_t=d - 1 if d > 1 else 0)


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def write_result_files(outdir, result: ScenarioResult, *, pmd_vals=None, fractions=None) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "ard": int(result.ard),
        "tec_wh": float(result.tec_wh),
        "fleet_size": int(result.fleet_size),
        "planner": result.planner,
        "seed": int(result.seed),
        "pmd": pmd_vals,
        "fraction_on_front": fractions,
    }
    write_text(out / "result.json", canonical_json(doc))
    lines = ["vehicle_id,start_s,mel_id,transmission_s"]
    for c in sorted(result.comms, key=lambda c: (c.start_s, c.vehicle_id)):
        lines.append(f"{c.vehicle_id},{float(c.start_s)!r},{c.mel_id},{float(c.transmission_s)!r}")
    write_text(out / "comms.csv", "\n".join(lines) + "\n")
    lines = ["tick,mean_tx_ambulance,mean_tx_all"]
    for tk in range(result.series_all.shape[0]):
        lines.append(f"{tk},{float(result.series_amb[tk])!r},{float(result.series_all[tk])!r}")
    write_text(out / "series.csv", "\n".join(lines) + "\n")


def read_series_csv(path) -> tuple[np.ndarray, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if lines[0].strip() != "tick,mean_tx_ambulance,mean_tx_all":
        raise ValueError(f"bad series header in {path}")
    amb, allv = [], []
    for ln in lines[1:]:
        _, a, b = ln.split(",")
        amb.append(float(a))
        allv.append(float(b))
    return np.array(amb), np.array(allv)
