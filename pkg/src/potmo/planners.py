"""Route planners: static and time-dependent Dijkstra baselines, weighted
per-agent rerouting, the priority-ordered timed multi-objective A* search,
and an exhaustive simple-path optimizer used as a verification oracle.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .graph import (
    Edge,
    Label,
    LabelSet,
    TemporalGraph,
    label_extend,
    zero_label,
)

ENUMERATION_VERTEX_LIMIT = 12
WSP_EPSILON = 1e-6


class NoPathError(Exception):
    """Target unreachable from the source."""


class SizeGuardError(ValueError):
    """Graph too large for exhaustive enumeration."""


@dataclass(frozen=True)
class PlanRequest:
    source: str
    target: str
    tau0: float = 0.0
    agent: str = ""

    def __post_init__(self):
        if self.tau0 < 0:
            raise ValueError("tau0 must be nonnegative")


@dataclass
class PlanResult:
    path: tuple[Edge, ...]
    cost: np.ndarray
    front: LabelSet
    expanded: int
    arrivals: tuple[float, ...] = ()
    wall_time_ms: float = 0.0

    def edge_ids(self) -> list[str]:
        return [e.id for e in self.path]

    def to_json_dict(self) -> dict:
        return {
            "path": self.edge_ids(),
            "cost": [float(c) for c in self.cost],
            "front": [
                {
                    "cost": [float(c) for c in l.cost],
                    "path": [e.id for e in l.path],
                    "arrival": float(l.arrival),
                }
                for l in self.front
            ],
            "expanded": int(self.expanded),
            "arrivals": [float(a) for a in self.arrivals],
            "wall_time_ms": float(self.wall_time_ms),
        }


def _evaluate_path(g: TemporalGraph, path: Iterable[Edge], tau0: float) -> tuple[np.ndarray, tuple[float, ...]]:
    """Accumulated cost vector and per-edge arrival times along a path."""
    total = np.zeros(g.d)
    t = float(tau0)
    arrivals = []
    for e in path:
        w = g.cost_at(e, t)
        total = total + w
        t += float(w[g.d_t])
        arrivals.append(t)
    return total, tuple(arrivals)


def _singleton_result(
    g: TemporalGraph, path: tuple[Edge, ...], tau0: float, expanded: int, source: str
) -> PlanResult:
    cost, arrivals = _evaluate_path(g, path, tau0)
    blocked = frozenset({source}) | {e.dst for e in path}
    label = Label(tuple(float(c) for c in cost), path, arrivals[-1] if arrivals else float(tau0), blocked)
    return PlanResult(path, cost, LabelSet((label,)), expanded, arrivals)


def choose_final(front: LabelSet) -> Label:
    """Lexicographically minimal label; ties go to the shorter path, then the
    earlier arrival."""
    if len(front) == 0:
        raise ValueError("empty front")
    return min(front, key=Label.sort_key)


# ---------------------------------------------------------------------------
# Static single-objective Dijkstra
# ---------------------------------------------------------------------------

def _dijkstra_weights(
    g: TemporalGraph,
    weights: Mapping[str, float],
    s: str,
    t: str,
) -> tuple[tuple[Edge, ...], int]:
    """Shortest path under explicit per-edge weights; returns (path, pops)."""
    g.vertex(s), g.vertex(t)
    if s == t:
        return (), 0
    dist = {s: 0.0}
    parent: dict[str, Edge] = {}
    heap = [(0.0, 0, s)]
    seq = 1
    done: set[str] = set()
    pops = 0
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        pops += 1
        if u == t:
            path = []
            v = t
            while v != s:
                e = parent[v]
                path.append(e)
                v = e.src
            return tuple(reversed(path)), pops
        for e in g.out_edges(u):
            w = weights[e.id]
            if w < 0:
                raise ValueError(f"negative weight on edge {e.id}")
            nd = d + w
            if nd < dist.get(e.dst, math.inf):
                dist[e.dst] = nd
                parent[e.dst] = e
                heapq.heappush(heap, (nd, seq, e.dst))
                seq += 1
    raise NoPathError(f"{t} unreachable from {s}")


def dijkstra_ssp(g: TemporalGraph, s: str, t: str, dim: int) -> PlanResult:
    """Single-objective shortest path on one dimension, costs frozen at bin 0."""
    if not 0 <= dim < g.d:
        raise ValueError(f"dimension {dim} out of range")
    start = time.perf_counter()
    weights = {e.id: float(g.cost_at(e, 0.0)[dim]) for e in g.edges}
    path, pops = _dijkstra_weights(g, weights, s, t)
    res = _singleton_result(g, path, 0.0, pops, s)
    res.wall_time_ms = (time.perf_counter() - start) * 1000.0
    return res


# ---------------------------------------------------------------------------
# Time-dependent single-objective search (label-correcting, so it stays exact
# even when bins only satisfy the discretized FIFO check at bin starts)
# ---------------------------------------------------------------------------

def tdd(g: TemporalGraph, s: str, tau0: float, t: str) -> PlanResult:
    """Earliest-arrival path when departing ``s`` at ``tau0``; edge departure
    times accumulate along the path."""
    g.vertex(s), g.vertex(t)
    if tau0 < 0:
        raise ValueError("tau0 must be nonnegative")
    start = time.perf_counter()
    if s == t:
        res = _singleton_result(g, (), tau0, 0, s)
        res.wall_time_ms = (time.perf_counter() - start) * 1000.0
        return res
    best = {s: float(tau0)}
    parent: dict[str, Edge] = {}
    heap = [(float(tau0), 0, s)]
    seq = 1
    pops = 0
    while heap:
        arr, _, u = heapq.heappop(heap)
        if arr > best.get(u, math.inf):
            continue
        pops += 1
        for e in g.out_edges(u):
            w = g.cost_at(e, arr)
            na = arr + float(w[g.d_t])
            if na < best.get(e.dst, math.inf):
                best[e.dst] = na
                parent[e.dst] = e
                heapq.heappush(heap, (na, seq, e.dst))
                seq += 1
    if t not in best:
        raise NoPathError(f"{t} unreachable from {s}")
    path = []
    v = t
    while v != s:
        e = parent[v]
        path.append(e)
        v = e.src
    res = _singleton_result(g, tuple(reversed(path)), tau0, pops, s)
    res.wall_time_ms = (time.perf_counter() - start) * 1000.0
    return res


# ---------------------------------------------------------------------------
# Exhaustive enumeration oracle
# ---------------------------------------------------------------------------

def enumerate_simple_paths(g: TemporalGraph, s: str, t: str) -> list[tuple[Edge, ...]]:
    """Every simple path from s to t as an edge sequence, each exactly once."""
    g.vertex(s), g.vertex(t)
    if g.n_vertices > ENUMERATION_VERTEX_LIMIT:
        raise SizeGuardError(
            f"refusing to enumerate paths on {g.n_vertices} vertices "
            f"(limit {ENUMERATION_VERTEX_LIMIT})"
        )
    if s == t:
        return [()]
    out: list[tuple[Edge, ...]] = []
    stack: list[Edge] = []
    visited = {s}

    def dfs(u: str) -> None:
        for e in g.out_edges(u):
            if e.dst in visited:
                continue
            stack.append(e)
            if e.dst == t:
                out.append(tuple(stack))
            else:
                visited.add(e.dst)
                dfs(e.dst)
                visited.discard(e.dst)
            stack.pop()

    dfs(s)
    return out


def brute_force_optimum(g: TemporalGraph, s: str, tau0: float, t: str) -> PlanResult:
    """Evaluate every simple path with accumulated departure times; the front
    is the Pareto set of path costs and the choice its lexicographic minimum."""
    start = time.perf_counter()
    paths = enumerate_simple_paths(g, s, t)
    if not paths:
        raise NoPathError(f"{t} unreachable from {s}")
    labels = []
    for path in paths:
        cost, arrivals = _evaluate_path(g, path, tau0)
        blocked = frozenset({s}) | {e.dst for e in path}
        labels.append(
            Label(tuple(float(c) for c in cost), path, arrivals[-1] if arrivals else float(tau0), blocked)
        )
    front = LabelSet.from_labels(labels)
    chosen = choose_final(front)
    _, arrivals = _evaluate_path(g, chosen.path, tau0)
    return PlanResult(
        chosen.path,
        np.array(chosen.cost),
        front,
        expanded=len(paths),
        arrivals=arrivals,
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
    )


# ---------------------------------------------------------------------------
# Weighted per-agent rerouting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WspAgentState:
    """Live agent snapshot used for reweighting."""

    position_xy: tuple[float, float]
    waited_s: float = 0.0


def wsp_reweight(
    g: TemporalGraph,
    agent: WspAgentState,
    so_info: Mapping[str, float],
    target: str,
) -> dict[str, float]:
    """Per-edge weights for one agent from live connection counts.

    Edges touching an RSU junction get
    (d_e / max(d_a, eps)) * (d_e + waited) * max(#e, 1), where d_e is the
    RSU-side junction's distance to the target; all other edges keep their
    length as weight.
    """
    tv = g.vertex(target)
    ax, ay = agent.position_xy
    da = max(math.hypot(ax - tv.x, ay - tv.y), WSP_EPSILON)
    rsus = g.rsu_vertices
    weights: dict[str, float] = {}
    for e in g.edges:
        if e.dst in rsus:
            anchor = g.vertex(e.dst)
        elif e.src in rsus:
            anchor = g.vertex(e.src)
        else:
            weights[e.id] = e.length_m
            continue
        de = math.hypot(anchor.x - tv.x, anchor.y - tv.y)
        count = max(float(so_info.get(e.id, 0.0)), 1.0)
        weights[e.id] = (de / da) * (de + agent.waited_s) * count
    return weights


def wsp_plan(
    g: TemporalGraph,
    request: PlanRequest,
    so_feed: Callable[[float], Mapping[str, float]],
) -> PlanResult:
    """Replan with live counts at every junction; the realized route is the
    concatenation of first hops."""
    s, t = request.source, request.target
    g.vertex(s), g.vertex(t)
    start = time.perf_counter()
    cur = s
    now = float(request.tau0)
    route: list[Edge] = []
    expanded = 0
    limit = g.n_vertices * g.n_vertices + 1
    while cur != t:
        if len(route) >= limit:
            raise NoPathError(f"agent {request.agent or s} stalled (route loop)")
        pos = g.vertex(cur)
        agent = WspAgentState((pos.x, pos.y), waited_s=0.0)
        weights = wsp_reweight(g, agent, so_feed(now), t)
        try:
            path, pops = _dijkstra_weights(g, weights, cur, t)
        except NoPathError:
            raise NoPathError(f"agent {request.agent or s} stalled at {cur}")
        expanded += pops
        e = path[0]
        w = g.cost_at(e, now)
        now += float(w[g.d_t])
        route.append(e)
        cur = e.dst
    res = _singleton_result(g, tuple(route), request.tau0, expanded, s)
    res.wall_time_ms = (time.perf_counter() - start) * 1000.0
    return res


# ---------------------------------------------------------------------------
# Priority-ordered timed multi-objective A*
# ---------------------------------------------------------------------------

HeuristicFn = Callable[[Edge, float, str], np.ndarray]


def potmo_astar(
    g: TemporalGraph,
    s: str,
    tau0: float,
    t: str,
    *,
    heuristic: Optional[HeuristicFn] = None,
    literal_priority: bool = False,
    check_fronts: bool = False,
    check_heuristic: bool = False,
) -> PlanResult:
    """Best-first search over Pareto label fronts, ordered lexicographically.

    The queue holds (node, expected arrival) entries prioritized by the
    lexicographic minimum of (label cost + heuristic) over the node's front.
    Labels extend with the edge cost at their own arrival time; a node
    re-enters the queue only when its front changes. Scheduled nodes whose
    front improves get their queue key decreased (lazily, via a duplicate
    entry; stale entries are skipped on pop). Returns the front at the
    target as soon as the target is popped.

    ``literal_priority`` additionally adds the traversal time onto the
    priority vector's time slot (the originally published queue key), kept
    selectable for comparison runs. ``check_heuristic`` turns on a debug
    assertion catching gross admissibility violations (negative slots, or a
    nonzero bound where the remaining cost is zero).
    """
    g.vertex(s), g.vertex(t)
    if tau0 < 0:
        raise ValueError("tau0 must be nonnegative")
    start = time.perf_counter()
    d, d_t = g.d, g.d_t

    cost_map: dict[str, LabelSet] = {s: LabelSet((zero_label(s, tau0, d),))}
    open_set: set[str] = {s}
    heap: list[tuple[tuple, int, float, str]] = [((0.0,) * d, 0, float(tau0), s)]
    seq = 1
    expanded = 0
    first = True

    def push(node: str, front: LabelSet, tau_arr: float, h_vec, delta: float) -> None:
        nonlocal seq
        f = front.cost_matrix()
        if h_vec is not None:
            f = f + h_vec
        idx = int(np.lexsort(f.T[::-1])[0])
        prio = list(f[idx])
        if literal_priority:
            prio[d_t] += delta
        heapq.heappush(heap, (tuple(prio), seq, tau_arr, node))
        seq += 1
        open_set.add(node)

    while heap:
        _, _, tau_p, curr = heapq.heappop(heap)
        if curr == t:
            front = cost_map[t]
            chosen = choose_final(front)
            _, arrivals = _evaluate_path(g, chosen.path, tau0)
            return PlanResult(
                chosen.path,
                np.array(chosen.cost),
                front,
                expanded,
                arrivals,
                (time.perf_counter() - start) * 1000.0,
            )
        if curr not in open_set:
            continue  # stale duplicate left behind by a key decrease
        open_set.discard(curr)
        expanded += 1
        old = cost_map[curr]
        for e in g.out_edges(curr):
            nd = e.dst
            if nd == curr:
                continue
            if not first and all(nd in l.blocked for l in old):
                continue
            ext = []
            for l in old:
                if nd in l.blocked:
                    continue
                w = g.cost_at(e, l.arrival)
                ext.append(label_extend(l, w, e, d_t))
            if not ext:
                continue
            delta = float(g.cost_at(e, tau_p)[d_t])
            tau_arr = tau_p + delta
            h_vec = heuristic(e, tau_p, t) if heuristic is not None else None
            if check_heuristic and h_vec is not None:
                if np.any(np.asarray(h_vec) < 0):
                    raise AssertionError(f"heuristic below zero on edge {e.id}")
                if nd == t and np.any(np.abs(np.asarray(h_vec)) > 1e-9):
                    raise AssertionError(
                        f"non-admissible heuristic: nonzero bound {h_vec} at the target"
                    )
            if nd not in cost_map:
                front = LabelSet.from_labels(ext)
                cost_map[nd] = front
                push(nd, front, tau_arr, h_vec, delta)
            else:
                merged, changed = cost_map[nd].merge(ext)
                if not changed:
                    continue
                if check_fronts:
                    _assert_front(merged)
                cost_map[nd] = merged
                push(nd, merged, tau_arr, h_vec, delta)
        first = False
    raise NoPathError(f"{t} unreachable from {s}")


def _assert_front(front: LabelSet) -> None:
    m = front.cost_matrix()
    for i in range(m.shape[0]):
        for j in range(m.shape[0]):
            if i == j:
                continue
            if np.all(m[j] <= m[i]) and np.any(m[j] < m[i]):
                raise AssertionError("dominated label survived a merge")
