"""Command-line entry point for planning, simulation, and metrics runs.

Exit codes: 0 success, 1 validation/usage failure, 2 no path found.
Log level comes from the POTMO_LOG environment variable.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import scenario as scen
from .planners import (
    NoPathError,
    PlanRequest,
    SizeGuardError,
    brute_force_optimum,
    dijkstra_ssp,
    potmo_astar,
    tdd,
    wsp_plan,
)
from .costs import beeline_heuristic
from .forecast import commit_plan_load
from .sim import (
    PLANNERS,
    fraction_on_front,
    pareto_min_series,
    pmd,
    run_scenario,
)

log = logging.getLogger("potmo")

DIM_NAMES = {"cars": 0, "energy": 1, "desirability": 2, "time": 3, "length": 4}

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NO_PATH = 2


def _setup_logging() -> None:
    level = os.environ.get("POTMO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="potmo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="plan one route and write the result JSON")
    sp.add_argument("--scenario", required=True, help="scenario directory or manifest")
    sp.add_argument("--source", help="override the scenario source vertex")
    sp.add_argument("--target", help="override the scenario target vertex")
    sp.add_argument("--tau0", type=float, default=0.0, help="departure time in seconds")
    sp.add_argument("--algo", choices=PLANNERS, default="potmo")
    sp.add_argument("--dim", choices=sorted(DIM_NAMES), default="length", help="dimension for --algo ssp")
    sp.add_argument("--paper-literal-priority", action="store_true", help="use the originally published queue priority (adds the traversal time onto the time slot again)")
    sp.add_argument("--out", default=None, help="output file (default: stdout)")

    sp = sub.add_parser("fleet", help="plan the whole fleet at its injection times")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--algo", choices=PLANNERS, default="potmo")
    sp.add_argument("--paper-literal-priority", action="store_true")
    sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("simulate", help="run one scenario to the horizon")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--algo", choices=PLANNERS, default="potmo")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--fleet", type=int, default=None, help="override fleet size (0 disables ambulances)")
    sp.add_argument("--paper-literal-priority", action="store_true")
    sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("compare", help="run ssp, wsp, potmo and a no-ambulance baseline")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--paper-literal-priority", action="store_true")
    sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("gen", help="generate a synthetic grid scenario bundle")
    sp.add_argument("--rows", type=int, default=6)
    sp.add_argument("--cols", type=int, default=6)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--fleet", type=int, default=35)
    sp.add_argument("--horizon", type=float, default=7200.0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("metrics", help="floor/pmd/fraction metrics over series files")
    sp.add_argument("--series", nargs="+", required=True, help="series.csv files to compare")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("oracle", help="check the multi-objective planner against exhaustive search")
    sp.add_argument("--graph", required=True, help="graph JSON with cost_bins")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--tau0", type=float, default=0.0)
    return p


def _load_scenario(path: str):
    try:
        return scen.load_scenario(path)
    except scen.ScenarioError as exc:
        for f in exc.failures:
            print(f"validation: {f}", file=sys.stderr)
        return None


def cmd_plan(args) -> int:
    sc = _load_scenario(args.scenario)
    if sc is None:
        return EXIT_VALIDATION
    sim = sc.manifest["sim"]
    source = args.source or str(sim["source"])
    target = args.target or str(sim["target"])
    if not sc.graph.has_vertex(source) or not sc.graph.has_vertex(target):
        print(f"validation: unknown vertex {source!r} or {target!r}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.algo == "ssp":
            res = dijkstra_ssp(sc.graph, source, target, DIM_NAMES[args.dim])
        elif args.algo == "wsp":
            table = sc.table

            def so_feed(t: float):
                b = table.bin_index(t)
                return {e.id: table.value(e.dst, b) for e in sc.graph.edges}

            res = wsp_plan(sc.graph, PlanRequest(source, target, args.tau0), so_feed)
        else:
            h = beeline_heuristic(sc.graph, sc.twin)
            res = potmo_astar(
                sc.graph,
                source,
                args.tau0,
                target,
                heuristic=h,
                literal_priority=args.paper_literal_priority,
            )
    except NoPathError as exc:
        print(f"no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    doc = scen.canonical_json(res.to_json_dict())
    if args.out:
        scen.write_text(args.out, doc)
    else:
        print(doc, end="")
    return EXIT_OK


def cmd_fleet(args) -> int:
    sc = _load_scenario(args.scenario)
    if sc is None:
        return EXIT_VALIDATION
    sim = sc.manifest["sim"]
    source, target = str(sim["source"]), str(sim["target"])
    fleet = int(sim.get("fleet_size", 35))
    interval = float(sim.get("injection_interval_s", 100.0))
    table = sc.table
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = beeline_heuristic(sc.graph, sc.twin)
    summary = []
    for i in range(fleet):
        tau0 = i * interval

        def so_feed(t: float, table=table):
            b = table.bin_index(t)
            return {e.id: table.value(e.dst, b) for e in sc.graph.edges}

        try:
            if args.algo == "ssp":
                res = dijkstra_ssp(sc.graph, source, target, DIM_NAMES["length"])
            elif args.algo == "wsp":
                res = wsp_plan(sc.graph, PlanRequest(source, target, tau0, f"amb{i:03d}"), so_feed)
            else:
                res = potmo_astar(
                    sc.graph, source, tau0, target,
                    heuristic=h, literal_priority=args.paper_literal_priority,
                )
                table = commit_plan_load(table, res, tau0)
        except NoPathError:
            summary.append({"agent": f"amb{i:03d}", "tau0": tau0, "path": None})
            continue
        scen.write_text(out / f"amb{i:03d}.json", scen.canonical_json(res.to_json_dict()))
        summary.append({"agent": f"amb{i:03d}", "tau0": tau0, "path": res.edge_ids(), "cost": [float(c) for c in res.cost]})
    scen.write_text(out / "fleet.json", scen.canonical_json({"algo": args.algo, "plans": summary}))
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load_scenario(args.scenario)
    if sc is None:
        return EXIT_VALIDATION
    cfg = sc.sim_config(
        args.algo, seed=args.seed, fleet_size=args.fleet, literal_priority=args.paper_literal_priority
    )
    result = run_scenario(cfg)
    scen.write_result_files(args.out, result)
    print(f"{args.algo}: ARD={result.ard}/{cfg.fleet_size} TEC={result.tec_wh:.1f} Wh")
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = _load_scenario(args.scenario)
    if sc is None:
        return EXIT_VALIDATION
    out = Path(args.out)
    results = {}
    for name in PLANNERS:
        cfg = sc.sim_config(name, seed=args.seed, literal_priority=args.paper_literal_priority)
        results[name] = run_scenario(cfg)
    cfg0 = sc.sim_config("ssp", seed=args.seed, fleet_size=0)
    results["noambu"] = run_scenario(cfg0)

    floor_all = pareto_min_series([results[n].series_all for n in PLANNERS])
    floor_amb = pareto_min_series([results[n].series_amb for n in PLANNERS])
    table_rows = []
    comparison = {"seed": args.seed, "runs": {}}
    for name in PLANNERS + ("noambu",):
        r = results[name]
        if name in PLANNERS:
            metrics = {
                "pmd": {"all": pmd(r.series_all, floor_all), "ambulance": pmd(r.series_amb, floor_amb)},
                "fraction_on_front": {
                    "all": fraction_on_front(r.series_all, floor_all),
                    "ambulance": fraction_on_front(r.series_amb, floor_amb),
                },
            }
        else:
            metrics = {"pmd": None, "fraction_on_front": None}
        scen.write_result_files(out / name, r, pmd_vals=metrics["pmd"], fractions=metrics["fraction_on_front"])
        comparison["runs"][name] = {
            "ard": int(r.ard),
            "tec_wh": float(r.tec_wh),
            **metrics,
        }
        pm = metrics["pmd"]["all"] if metrics["pmd"] else float("nan")
        fr = metrics["fraction_on_front"]["all"] if metrics["fraction_on_front"] else float("nan")
        table_rows.append((name, r.ard, r.tec_wh, pm, fr))
    scen.write_text(out / "comparison.json", scen.canonical_json(comparison))
    print(f"{'run':>8} {'ARD':>4} {'TEC (Wh)':>12} {'p.m.d. (s)':>11} {'on-front':>9}")
    for name, ard, tec, pm, fr in table_rows:
        print(f"{name:>8} {ard:>4} {tec:>12.1f} {pm:>11.4g} {fr:>9.3f}")
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        g, dmap, table, manifest = scen.generate_grid(
            args.rows, args.cols, args.seed, horizon_s=args.horizon, fleet_size=args.fleet
        )
    except ValueError as exc:
        print(f"validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = scen.save_bundle(args.out, g, dmap, table, manifest)
    print(f"wrote scenario bundle to {out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    series = []
    for path in args.series:
        _, allv = scen.read_series_csv(path)
        series.append((path, allv))
    floor = pareto_min_series([s for _, s in series])
    doc = {"floor_mean": float(np.mean(floor)), "runs": {}}
    for path, s in series:
        doc["runs"][str(path)] = {
            "pmd": pmd(s, floor),
            "fraction_on_front": fraction_on_front(s, floor),
        }
    text = scen.canonical_json(doc)
    if args.out:
        scen.write_text(args.out, text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = scen.load_graph(args.graph)
    try:
        brute = brute_force_optimum(g, args.source, args.tau0, args.target)
        astar = potmo_astar(g, args.source, args.tau0, args.target)
    except SizeGuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoPathError as exc:
        print(f"no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    match = np.array_equal(brute.cost, astar.cost)
    print(f"brute-force chosen cost: {[float(c) for c in brute.cost]}")
    print(f"planner chosen cost:     {[float(c) for c in astar.cost]}")
    if g.d == 1:
        t = tdd(g, args.source, args.tau0, args.target)
        dj = dijkstra_ssp(g, args.source, args.target, 0)
        print(f"tdd arrival cost:        {[float(c) for c in t.cost]}")
        print(f"dijkstra cost:           {[float(c) for c in dj.cost]}")
        match = match and np.array_equal(brute.cost, t.cost)
    print("MATCH" if match else "MISMATCH")
    return EXIT_OK if match else EXIT_VALIDATION


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    handlers = {
        "plan": cmd_plan,
        "fleet": cmd_fleet,
        "simulate": cmd_simulate,
        "compare": cmd_compare,
        "gen": cmd_gen,
        "metrics": cmd_metrics,
        "oracle": cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except scen.ScenarioError as exc:
        for f in exc.failures:
            print(f"validation: {f}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
