"""Cross-module checks: the planner against the oracle on graphs built by the
full cost pipeline, multigraph handling, and fleet load feedback."""
import numpy as np
import pytest

from potmo.costs import DesirabilityMap, VehicleTwin, beeline_heuristic, build_cost_vector
from potmo.forecast import commit_plan_load, smooth_spatial
from potmo.graph import Edge, TemporalGraph, Vertex
from potmo.planners import NoPathError, brute_force_optimum, potmo_astar
from potmo.scenario import generate_grid, random_graph

TWIN = VehicleTwin()


def pipeline_graph(rows, cols, seed):
    """Small grid run through the real forecast -> cost-vector pipeline."""
    g, dmap, table, _ = generate_grid(rows, cols, seed=seed, horizon_s=600.0)
    table = smooth_spatial(table, g)

    def cost_fn(e, t):
        return build_cost_vector(e, t, table, dmap, TWIN)

    return (
        TemporalGraph(
            g.vertices.values(),
            [Edge(e.id, e.src, e.dst, e.length_m, e.vmax_ms, e.slope_rad) for e in g.edges],
            bin_width=g.bin_width,
            d=5,
            d_t=3,
            cost_fn=cost_fn,
        ),
        table,
        dmap,
    )


class TestBeelineGuidedExactness:
    def test_guided_search_matches_oracle_on_pipeline_graphs(self):
        # the beeline heuristic must not change the chosen cost; checked on
        # 2x4 and 2x3 grids (8 and 6 vertices, within the oracle's guard)
        for rows, cols, seed in ((2, 4, 5), (2, 3, 17), (2, 4, 23), (2, 3, 31)):
            pg, _, _ = pipeline_graph(rows, cols, seed)
            h = beeline_heuristic(pg, TWIN)
            src, dst = "v0_0", f"v{rows-1}_{cols-1}"
            want = brute_force_optimum(pg, src, 0.0, dst)
            got = potmo_astar(pg, src, 0.0, dst, heuristic=h)
            assert np.allclose(got.cost, want.cost, rtol=0, atol=0), (rows, cols, seed)

    def test_guided_search_expands_no_more_than_unguided(self):
        pg, _, _ = pipeline_graph(2, 4, 5)
        h = beeline_heuristic(pg, TWIN)
        guided = potmo_astar(pg, "v0_0", 0.0, "v1_3", heuristic=h)
        unguided = potmo_astar(pg, "v0_0", 0.0, "v1_3")
        assert guided.expanded <= unguided.expanded
        assert np.array_equal(guided.cost, unguided.cost)


class TestParallelEdges:
    def test_oracle_equivalence_with_parallel_edges(self):
        # duplicate every edge of random graphs with an independently priced
        # twin; the planner must treat each parallel edge as its own label path
        for seed in range(15):
            base = random_graph(4000 + seed, n_vertices=6, d=3, n_bins=1)
            rng = np.random.default_rng(seed)
            edges = list(base.edges)
            for e in base.edges[: len(base.edges) // 2]:
                bins = np.asarray(e.bins) * rng.uniform(0.5, 1.5, size=e.bins.shape)
                bins[:, base.d_t] = np.maximum(bins[:, base.d_t], 0.1)
                edges.append(Edge(e.id + "_twin", e.src, e.dst, e.length_m, e.vmax_ms, e.slope_rad, bins))
            g = TemporalGraph(base.vertices.values(), edges, bin_width=base.bin_width, d=base.d, d_t=base.d_t)
            try:
                want = brute_force_optimum(g, "n0", 0.0, "n5")
            except NoPathError:
                continue
            got = potmo_astar(g, "n0", 0.0, "n5")
            assert np.array_equal(got.cost, want.cost), seed


class TestFleetLoadFeedback:
    def test_commit_raises_cars_cost_of_the_committed_route(self):
        pg, table, dmap = pipeline_graph(3, 3, 9)
        src, dst = "v0_0", "v1_1"
        first = potmo_astar(pg, src, 0.0, dst)
        loaded = commit_plan_load(table, first, 0.0)

        def cost_fn(e, t):
            return build_cost_vector(e, t, loaded, dmap, TWIN)

        pg2 = TemporalGraph(
            pg.vertices.values(),
            [Edge(e.id, e.src, e.dst, e.length_m, e.vmax_ms, e.slope_rad) for e in pg.edges],
            bin_width=pg.bin_width,
            d=5,
            d_t=3,
            cost_fn=cost_fn,
        )
        # pricing the same route on the loaded table costs exactly one extra
        # car per edge in the departure bins
        t = 0.0
        extra = 0.0
        for e, arrival in zip(first.path, first.arrivals):
            e2 = pg2.edge(e.id)
            extra += float(pg2.cost_at(e2, t)[0] - pg.cost_at(e, t)[0])
            t = arrival
        assert extra == pytest.approx(len(first.path), rel=1e-12)
        # and the planner on the loaded graph never does better on cars
        second = potmo_astar(pg2, src, 0.0, dst)
        assert second.cost[0] >= first.cost[0] - 1e-12
