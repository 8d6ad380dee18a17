import json

import numpy as np
import pytest

from potmo.graph import TemporalGraph
from potmo.scenario import (
    ScenarioError,
    generate_grid,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    load_scenario,
    random_graph,
    save_bundle,
    save_graph,
)


class TestGraphRoundTrip:
    def test_save_load_save_byte_identical(self, tmp_path):
        g = random_graph(5, n_vertices=6, d=3, n_bins=3)
        p1, p2 = tmp_path / "g1.json", tmp_path / "g2.json"
        save_graph(g, p1)
        save_graph(load_graph(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_dict_round_trip_preserves_structure(self):
        g = random_graph(6, n_vertices=5, d=5, n_bins=2)
        back = graph_from_dict(graph_to_dict(g))
        assert set(back.vertices) == set(g.vertices)
        assert {e.id for e in back.edges} == {e.id for e in g.edges}
        assert back.bin_width == g.bin_width and back.d == g.d and back.d_t == g.d_t
        for e in g.edges:
            assert np.array_equal(back.edge(e.id).bins, e.bins)

    def test_desirability_round_trip_byte_identical(self, tmp_path):
        from potmo.scenario import load_desirability, save_desirability

        _, dmap, _, _ = generate_grid(3, 3, seed=8, horizon_s=300.0)
        p1, p2 = tmp_path / "d1.json", tmp_path / "d2.json"
        save_desirability(dmap, p1)
        save_desirability(load_desirability(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestGenerateGrid:
    def test_vertex_and_edge_counts(self):
        g, _, _, _ = generate_grid(2, 2, seed=1, horizon_s=300.0)
        assert g.n_vertices == 4
        assert len(g.edges) == 8  # 4 undirected neighbor pairs, both directions

    def test_same_seed_identical_bytes(self, tmp_path):
        for sub in ("a", "b"):
            g, dmap, table, manifest = generate_grid(3, 4, seed=9, horizon_s=600.0)
            save_bundle(tmp_path / sub, g, dmap, table, manifest)
        for name in ("graph.json", "desirability.json", "forecast.csv", "forecast.json", "scenario.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_size_bounds(self):
        with pytest.raises(ValueError):
            generate_grid(1, 5, seed=0)
        with pytest.raises(ValueError):
            generate_grid(40, 40, seed=0)

    def test_edge_lengths_at_least_beeline(self):
        g, _, _, _ = generate_grid(4, 4, seed=3, horizon_s=300.0)
        for e in g.edges:
            assert e.length_m >= g.beeline(e.src, e.dst) - 1e-9

    def test_slopes_nonnegative_and_vmax_capped(self):
        g, _, _, _ = generate_grid(4, 4, seed=3, horizon_s=300.0)
        for e in g.edges:
            assert e.slope_rad >= 0.0
            assert e.vmax_ms <= 13.89 + 1e-9

    def test_desirability_peaks_at_center(self):
        g, dmap, _, _ = generate_grid(5, 5, seed=4, horizon_s=300.0)
        center = "v2_2"
        corner = "v0_0"
        assert dmap.score(center) > dmap.score(corner)

    def test_passes_graph_invariants(self):
        g, _, _, _ = generate_grid(3, 3, seed=5, horizon_s=300.0)
        for e in g.edges:
            assert g.has_vertex(e.src) and g.has_vertex(e.dst)
            assert e.length_m > 0 and e.vmax_ms > 0


class TestRandomGraphFifo:
    def test_fifo_bin_start_check(self):
        # departing at the start of bin k never arrives after a departure at
        # the start of bin k+1
        for seed in range(10):
            g = random_graph(seed, n_vertices=6, d=3, n_bins=5, fifo=True)
            for e in g.edges:
                for k in range(e.bins.shape[0] - 1):
                    t_k = k * g.bin_width
                    t_k1 = (k + 1) * g.bin_width
                    assert t_k + e.bins[k, g.d_t] <= t_k1 + e.bins[k + 1, g.d_t] + 1e-9

    def test_time_dimension_strictly_positive(self):
        g = random_graph(2, n_vertices=5, d=5, n_bins=3)
        for e in g.edges:
            assert np.all(e.bins[:, g.d_t] > 0)


class TestLoadScenario:
    def make_bundle(self, tmp_path, mutate=None):
        g, dmap, table, manifest = generate_grid(3, 3, seed=2, horizon_s=600.0, fleet_size=3)
        out = save_bundle(tmp_path, g, dmap, table, manifest)
        if mutate:
            mutate(out)
        return out

    def test_valid_bundle(self, tmp_path):
        out = self.make_bundle(tmp_path)
        sc = load_scenario(out)
        assert sc.graph.n_vertices == 9
        assert sc.table.n_bins == 10
        # loaded graph carries a total cost function over all edges and times
        e = sc.graph.edges[0]
        assert sc.graph.cost_at(e, 0.0).shape == (5,)
        assert sc.graph.cost_at(e, 1e6).shape == (5,)

    def test_bin_width_mismatch_names_both_files(self, tmp_path):
        def mutate(out):
            sidecar = json.loads((out / "forecast.json").read_text())
            sidecar["bin_width"] = 30.0
            (out / "forecast.json").write_text(json.dumps(sidecar))

        out = self.make_bundle(tmp_path, mutate)
        with pytest.raises(ScenarioError) as err:
            load_scenario(out)
        msg = "\n".join(err.value.failures)
        assert "forecast.json" in msg and "graph.json" in msg and "bin_width" in msg

    def test_dangling_desirability_vertex(self, tmp_path):
        def mutate(out):
            scores = json.loads((out / "desirability.json").read_text())
            scores["ghost"] = 0.5
            (out / "desirability.json").write_text(json.dumps(scores))

        out = self.make_bundle(tmp_path, mutate)
        with pytest.raises(ScenarioError) as err:
            load_scenario(out)
        assert any("ghost" in f for f in err.value.failures)

    def test_missing_desirability_vertex(self, tmp_path):
        def mutate(out):
            scores = json.loads((out / "desirability.json").read_text())
            scores.pop("v0_0")
            (out / "desirability.json").write_text(json.dumps(scores))

        out = self.make_bundle(tmp_path, mutate)
        with pytest.raises(ScenarioError) as err:
            load_scenario(out)
        assert any("v0_0" in f for f in err.value.failures)

    def test_unknown_sim_vertex(self, tmp_path):
        def mutate(out):
            manifest = json.loads((out / "scenario.json").read_text())
            manifest["sim"]["target"] = "nowhere"
            (out / "scenario.json").write_text(json.dumps(manifest))

        out = self.make_bundle(tmp_path, mutate)
        with pytest.raises(ScenarioError) as err:
            load_scenario(out)
        assert any("nowhere" in f for f in err.value.failures)

    def test_multiple_failures_all_reported(self, tmp_path):
        def mutate(out):
            manifest = json.loads((out / "scenario.json").read_text())
            manifest["sim"]["target"] = "nowhere"
            manifest["sim"]["source"] = "lost"
            (out / "scenario.json").write_text(json.dumps(manifest))

        out = self.make_bundle(tmp_path, mutate)
        with pytest.raises(ScenarioError) as err:
            load_scenario(out)
        assert len(err.value.failures) >= 2

    def test_missing_file_reported(self, tmp_path):
        out = self.make_bundle(tmp_path)
        (out / "forecast.csv").unlink()
        with pytest.raises(ScenarioError) as err:
            load_scenario(out)
        assert any("forecast.csv" in f for f in err.value.failures)
