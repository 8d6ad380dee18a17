import json

import numpy as np
import pytest

from potmo.cli import main
from potmo.scenario import random_graph, save_graph


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("scen") / "demo"
    rc = main(["gen", "--rows", "4", "--cols", "4", "--seed", "3",
               "--fleet", "4", "--horizon", "900", "--out", str(out)])
    assert rc == 0
    return out


class TestGen:
    def test_bundle_files_exist(self, bundle):
        for name in ("graph.json", "desirability.json", "forecast.csv", "forecast.json", "scenario.json"):
            assert (bundle / name).exists()

    def test_rejects_bad_size(self, tmp_path, capsys):
        rc = main(["gen", "--rows", "1", "--cols", "5", "--seed", "0", "--out", str(tmp_path / "x")])
        assert rc == 1


class TestPlan:
    def test_potmo_plan_writes_five_dim_cost(self, bundle, tmp_path):
        out = tmp_path / "plan.json"
        rc = main(["plan", "--scenario", str(bundle), "--algo", "potmo", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["cost"]) == 5
        assert doc["path"]
        assert doc["front"]

    def test_ssp_plan_on_length_dim(self, bundle, tmp_path):
        out = tmp_path / "plan.json"
        rc = main(["plan", "--scenario", str(bundle), "--algo", "ssp", "--dim", "length", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["path"]

    def test_wsp_plan_runs(self, bundle, tmp_path):
        out = tmp_path / "plan.json"
        rc = main(["plan", "--scenario", str(bundle), "--algo", "wsp", "--out", str(out)])
        assert rc == 0

    def test_unreachable_target_exits_2(self, bundle, tmp_path, capsys):
        # same source and target is fine; an isolated vertex is not possible in
        # the grid, so craft unreachability via a vertex that only has in-edges
        rc = main(["plan", "--scenario", str(bundle), "--source", "v0_0", "--target", "missing"])
        assert rc == 1  # unknown vertex -> validation
        # a dedicated unreachable case: plan towards a vertex on a graph where
        # the scenario's source has no outgoing path is impossible on grids;
        # exercised at the planner level instead (NoPathError -> exit 2)

    def test_invalid_scenario_exits_1(self, tmp_path, capsys):
        rc = main(["plan", "--scenario", str(tmp_path / "nope")])
        assert rc == 1

    def test_literal_priority_flag_accepted(self, bundle, tmp_path):
        out = tmp_path / "plan.json"
        rc = main(["plan", "--scenario", str(bundle), "--algo", "potmo",
                   "--paper-literal-priority", "--out", str(out)])
        assert rc == 0


class TestNoPathExit:
    def test_exit_2(self, tmp_path, capsys, monkeypatch, bundle):
        # force NoPath by pointing source/target at disconnected halves of a
        # custom two-vertex graph spliced into a copy of the bundle
        import shutil

        scen_dir = tmp_path / "broken"
        shutil.copytree(bundle, scen_dir)
        from potmo.graph import Edge, TemporalGraph, Vertex

        g = TemporalGraph(
            [Vertex("a", 0, 0, rsu=True), Vertex("b", 100, 0, rsu=True)],
            [Edge("ba", "b", "a", 100.0, 10.0)],
            d=5,
            d_t=3,
        )
        save_graph(g, scen_dir / "graph.json")
        (scen_dir / "desirability.json").write_text('{"a": 1.0, "b": 1.0}')
        (scen_dir / "forecast.csv").write_text(
            "vertex_id,bin_index,count\na,0,1.0\nb,0,1.0\n"
        )
        (scen_dir / "forecast.json").write_text('{"bin_width": 60.0, "n_bins": 1}')
        manifest = json.loads((scen_dir / "scenario.json").read_text())
        manifest["sim"]["source"] = "a"
        manifest["sim"]["target"] = "b"
        manifest["sim"]["background"] = []
        (scen_dir / "scenario.json").write_text(json.dumps(manifest))
        rc = main(["plan", "--scenario", str(scen_dir), "--algo", "potmo"])
        assert rc == 2


class TestSimulateAndCompare:
    def test_simulate_writes_outputs(self, bundle, tmp_path):
        out = tmp_path / "sim"
        rc = main(["simulate", "--scenario", str(bundle), "--algo", "ssp", "--seed", "5", "--out", str(out)])
        assert rc == 0
        for name in ("result.json", "comms.csv", "series.csv"):
            assert (out / name).exists()
        doc = json.loads((out / "result.json").read_text())
        assert 0 <= doc["ard"] <= 4

    def test_seed_required(self, bundle, tmp_path):
        with pytest.raises(SystemExit):
            main(["simulate", "--scenario", str(bundle), "--out", str(tmp_path / "x")])

    def test_compare_runs_and_is_deterministic(self, bundle, tmp_path):
        out1, out2 = tmp_path / "c1", tmp_path / "c2"
        assert main(["compare", "--scenario", str(bundle), "--seed", "5", "--out", str(out1)]) == 0
        assert main(["compare", "--scenario", str(bundle), "--seed", "5", "--out", str(out2)]) == 0
        names = ["comparison.json"]
        for run in ("ssp", "wsp", "potmo", "noambu"):
            names += [f"{run}/result.json", f"{run}/comms.csv", f"{run}/series.csv"]
        for name in names:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_compare_table_rows(self, bundle, tmp_path, capsys):
        assert main(["compare", "--scenario", str(bundle), "--seed", "7", "--out", str(tmp_path / "c")]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        runs = {l.split()[0] for l in lines[1:]}
        assert {"ssp", "wsp", "potmo", "noambu"} <= runs

    def test_fleet_zero_all_rows_ard_zero(self, bundle, tmp_path):
        out = tmp_path / "z"
        rc = main(["simulate", "--scenario", str(bundle), "--algo", "potmo",
                   "--seed", "1", "--fleet", "0", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "result.json").read_text())
        assert doc["ard"] == 0 and doc["tec_wh"] == 0.0


class TestFleet:
    def test_fleet_potmo_writes_plans(self, bundle, tmp_path):
        out = tmp_path / "fleet"
        rc = main(["fleet", "--scenario", str(bundle), "--algo", "potmo", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "fleet.json").read_text())
        assert len(doc["plans"]) == 4
        assert all(p["path"] for p in doc["plans"])


class TestMetrics:
    def test_metrics_over_series(self, bundle, tmp_path, capsys):
        for algo, sub in (("ssp", "m1"), ("potmo", "m2")):
            main(["simulate", "--scenario", str(bundle), "--algo", algo,
                  "--seed", "2", "--out", str(tmp_path / sub)])
        out = tmp_path / "metrics.json"
        rc = main(["metrics", "--series", str(tmp_path / "m1" / "series.csv"),
                   str(tmp_path / "m2" / "series.csv"), "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["runs"]) == 2
        for rec in doc["runs"].values():
            assert rec["pmd"] >= 0.0
            assert 0.0 <= rec["fraction_on_front"] <= 1.0


class TestOracle:
    def test_match_on_random_graph(self, tmp_path, capsys):
        g = random_graph(4, n_vertices=6, d=3, n_bins=1)
        p = tmp_path / "g.json"
        save_graph(g, p)
        rc = main(["oracle", "--graph", str(p), "--source", "n0", "--target", "n5"])
        assert rc == 0
        assert "MATCH" in capsys.readouterr().out

    def test_d1_also_checks_tdd_and_dijkstra(self, tmp_path, capsys):
        g = random_graph(8, n_vertices=6, d=1, n_bins=1)
        p = tmp_path / "g.json"
        save_graph(g, p)
        rc = main(["oracle", "--graph", str(p), "--source", "n0", "--target", "n5"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "tdd" in out and "dijkstra" in out and "MATCH" in out

    def test_oversized_graph_refused(self, tmp_path, capsys):
        g = random_graph(4, n_vertices=13, d=1, n_bins=1, edge_prob=0.2)
        p = tmp_path / "g.json"
        save_graph(g, p)
        rc = main(["oracle", "--graph", str(p), "--source", "n0", "--target", "n5"])
        assert rc == 1
        assert "refused" in capsys.readouterr().err
