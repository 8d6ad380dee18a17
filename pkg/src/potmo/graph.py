"""Temporal multigraph, cost-vector algebra, and Pareto label sets.

Cost vectors are plain 1-D float arrays of fixed arity ``d`` per graph, with
one designated time slot ``d_t``. The default dimension order is
(cars, energy Wh, desirability, time s, length m) with d=5 and d_t=3.
Edge costs are piecewise constant over bins of ``bin_width`` seconds and
clamp to the last bin beyond the horizon. Graphs are immutable after
construction; label sets are owned by a single search.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .kernels import min_lex_row, pareto_mask

DEFAULT_DIMS = 5
DEFAULT_TIME_DIM = 3


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def _as_vec(a) -> np.ndarray:
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("cost vector must be one-dimensional")
    return v


def _check_arity(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"cost vector arity mismatch: {a.shape[0]} vs {b.shape[0]}")


def lex_compare(a, b) -> Ordering:
    """Lexicographic comparison with dimension 0 as highest priority."""
    va, vb = _as_vec(a), _as_vec(b)
    _check_arity(va, vb)
    for x, y in zip(va, vb):
        if x < y:
            return Ordering.LESS
        if x > y:
            return Ordering.GREATER
    return Ordering.EQUAL


def dominates(a, b) -> bool:
    """True iff a <= b component-wise and a != b."""
    va, vb = _as_vec(a), _as_vec(b)
    _check_arity(va, vb)
    return bool(np.all(va <= vb) and np.any(va < vb))


def pareto_front(vecs: Iterable) -> list[np.ndarray]:
    """Non-dominated subset, duplicates collapsed, sorted lexicographically."""
    rows = [_as_vec(v) for v in vecs]
    if not rows:
        raise ValueError("pareto_front of an empty set")
    arity = rows[0].shape[0]
    for r in rows[1:]:
        if r.shape[0] != arity:
            raise ValueError("cost vector arity mismatch in pareto_front input")
    m = np.vstack(rows)
    order = np.lexsort(m.T[::-1])
    m = m[order]
    keep = pareto_mask(m)
    return [m[i].copy() for i in range(m.shape[0]) if keep[i]]


@dataclass(frozen=True)
class Vertex:
    id: str
    x: float
    y: float
    z: float = 0.0
    rsu: bool = False


@dataclass(frozen=True, eq=False)
class Edge:
    """Directed road segment; parallel edges are distinct objects."""

    id: str
    src: str
    dst: str
    length_m: float
    vmax_ms: float
    slope_rad: float = 0.0
    bins: Optional[np.ndarray] = None  # (n_bins, d) piecewise-constant costs


class Label:
    """A path with its accumulated cost vector and arrival time."""

    __slots__ = ("cost", "path", "arrival", "blocked")

    def __init__(self, cost: tuple, path: tuple, arrival: float, blocked: frozenset):
        self.cost = cost
        self.path = path
        self.arrival = arrival
        self.blocked = blocked  # vertices already on the path, incl. the source

    def sort_key(self):
        return (self.cost, len(self.path), self.arrival)

    def __repr__(self):  # pragma: no cover - debugging aid
        ids = [e.id for e in self.path]
        return f"Label(cost={self.cost}, path={ids}, arrival={self.arrival})"


def zero_label(source: str, tau0: float, d: int) -> Label:
    return Label((0.0,) * d, (), float(tau0), frozenset((source,)))


def label_extend(label: Label, w, edge: Edge, d_t: int) -> Label:
    """Extend a label along ``edge`` with cost vector ``w`` (the + operator).

    The destination vertex must not already be on the label's path; callers
    filter first, this raises otherwise.
    """
    wv = _as_vec(w)
    if len(label.cost) != wv.shape[0]:
        raise ValueError("cost vector arity mismatch in label_extend")
    if edge.dst in label.blocked:
        raise ValueError(f"vertex repetition: {edge.dst} already on path")
    cost = tuple(c + x for c, x in zip(label.cost, wv))
    return Label(
        cost,
        label.path + (edge,),
        label.arrival + float(wv[d_t]),
        label.blocked | {edge.dst},
    )


class LabelSet:
    """Pareto front of labels at one vertex.

    Labels are kept sorted by (cost lex, path length, arrival); among labels
    with identical cost vectors only the first (best tie-break) survives, so
    ``labels[0]`` is always the final-choice label.
    """

    __slots__ = ("labels",)

    def __init__(self, labels: Sequence[Label]):
        self.labels = tuple(labels)

    @classmethod
    def from_labels(cls, labels: Iterable[Label]) -> "LabelSet":
        cand = sorted(labels, key=Label.sort_key)
        if not cand:
            raise ValueError("LabelSet needs at least one label")
        m = np.array([l.cost for l in cand], dtype=np.float64)
        keep = pareto_mask(m)
        return cls([l for l, k in zip(cand, keep) if k])

    def merge(self, new_labels: Iterable[Label]) -> tuple["LabelSet", bool]:
        """Merge labels in; returns (front, changed) where changed means the
        set of cost vectors on the front differs from before."""
        merged = LabelSet.from_labels(list(self.labels) + list(new_labels))
        changed = {l.cost for l in merged.labels} != {l.cost for l in self.labels}
        return merged, changed

    def lex_min(self) -> Label:
        return self.labels[0]

    def cost_matrix(self) -> np.ndarray:
        return np.array([l.cost for l in self.labels], dtype=np.float64)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)


class TemporalGraph:
    """Directed multigraph with piecewise-constant time-varying edge costs.

    Costs come either from per-edge ``bins`` arrays or from ``cost_fn(edge, t)``;
    both are total over t >= 0 (clamped to the last bin past the horizon).
    """

    def __init__(
        self,
        vertices: Iterable[Vertex],
        edges: Iterable[Edge],
        *,
        bin_width: float = 60.0,
        d: int = DEFAULT_DIMS,
        d_t: int = DEFAULT_TIME_DIM,
        cost_fn: Optional[Callable[[Edge, float], np.ndarray]] = None,
        heuristic_speed_cap: float = 13.89,
    ):
        if bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if not 0 <= d_t < d:
            raise ValueError("time dimension index out of range")
        self.bin_width = float(bin_width)
        self.d = int(d)
        self.d_t = int(d_t)
        self.cost_fn = cost_fn
        self.heuristic_speed_cap = float(heuristic_speed_cap)

        self._vertices: dict[str, Vertex] = {}
        for v in vertices:
            if v.id in self._vertices:
                raise ValueError(f"duplicate vertex id {v.id}")
            self._vertices[v.id] = v

        self._edges: list[Edge] = []
        self._edge_by_id: dict[str, Edge] = {}
        self._out: dict[str, list[Edge]] = {vid: [] for vid in self._vertices}
        for e in edges:
            if e.id in self._edge_by_id:
                raise ValueError(f"duplicate edge id {e.id}")
            if e.src not in self._vertices or e.dst not in self._vertices:
                raise ValueError(f"edge {e.id} references unknown vertex")
            if e.length_m <= 0 or e.vmax_ms <= 0:
                raise ValueError(f"edge {e.id} needs positive length and vmax")
            if e.bins is not None:
                b = np.asarray(e.bins, dtype=np.float64)
                if b.ndim != 2 or b.shape[1] != self.d or b.shape[0] < 1:
                    raise ValueError(f"edge {e.id}: bins must be (n_bins, {self.d})")
                if np.any(b < 0):
                    raise ValueError(f"edge {e.id}: negative cost bin")
                if np.any(b[:, self.d_t] <= 0):
                    raise ValueError(f"edge {e.id}: traversal time must be positive")
                b.setflags(write=False)
                object.__setattr__(e, "bins", b)
            self._edges.append(e)
            self._edge_by_id[e.id] = e
            self._out[e.src].append(e)

    # -- topology ----------------------------------------------------------

    @property
    def vertices(self) -> Mapping[str, Vertex]:
        return self._vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(self._edges)

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    def vertex(self, vid: str) -> Vertex:
        try:
            return self._vertices[vid]
        except KeyError:
            raise ValueError(f"unknown vertex {vid}") from None

    def has_vertex(self, vid: str) -> bool:
        return vid in self._vertices

    def edge(self, eid: str) -> Edge:
        try:
            return self._edge_by_id[eid]
        except KeyError:
            raise ValueError(f"unknown edge {eid}") from None

    def out_edges(self, vid: str) -> list[Edge]:
        try:
            return self._out[vid]
        except KeyError:
            raise ValueError(f"unknown vertex {vid}") from None

    @property
    def rsu_vertices(self) -> frozenset[str]:
        return frozenset(v.id for v in self._vertices.values() if v.rsu)

    def beeline(self, a: str, b: str) -> float:
        va, vb = self.vertex(a), self.vertex(b)
        return math.hypot(va.x - vb.x, va.y - vb.y)

    def components(self) -> list[frozenset[str]]:
        """Weakly connected components (edge direction ignored)."""
        neigh: dict[str, set[str]] = {vid: set() for vid in self._vertices}
        for e in self._edges:
            neigh[e.src].add(e.dst)
            neigh[e.dst].add(e.src)
        seen: set[str] = set()
        comps = []
        for vid in self._vertices:
            if vid in seen:
                continue
            stack, comp = [vid], set()
            while stack:
                u = stack.pop()
                if u in comp:
                    continue
                comp.add(u)
                stack.extend(neigh[u] - comp)
            seen |= comp
            comps.append(frozenset(comp))
        return comps

    # -- costs ---------------------------------------------------------------

    def bin_index(self, t: float, n_bins: int) -> int:
        idx = int(t // self.bin_width)
        return min(idx, n_bins - 1)

    def cost_at(self, edge: Edge, t: float) -> np.ndarray:
        if self._edge_by_id.get(edge.id) is not edge:
            raise ValueError(f"unknown edge {edge.id}")
        if t < 0:
            raise ValueError("negative time")
        if edge.bins is not None:
            return edge.bins[self.bin_index(t, edge.bins.shape[0])]
        if self.cost_fn is not None:
            w = _as_vec(self.cost_fn(edge, t))
            if w.shape[0] != self.d:
                raise ValueError("cost_fn returned wrong arity")
            return w
        raise ValueError(f"edge {edge.id} has neither bins nor a cost function")

    def max_vmax(self) -> float:
        return max(e.vmax_ms for e in self._edges) if self._edges else 0.0


def edge_cost_at(g: TemporalGraph, edge: Edge, t: float) -> np.ndarray:
    """Cost vector of ``edge`` in the bin containing ``t`` (clamped past horizon)."""
    return g.cost_at(edge, t)


def lex_min_vector(vectors: Sequence[np.ndarray]) -> np.ndarray:
    m = np.asarray(vectors, dtype=np.float64)
    return m[min_lex_row(m)]
