"""Traffic forecast tables: ingestion, spatial gap filling, load feedback.

A ForecastTable is a vertex x time-bin matrix of predicted communicating
vehicle counts. Cells start empty (NaN) and carry a provenance tag once
populated. The CSV interchange format is ``vertex_id,bin_index,count`` with
a JSON sidecar declaring the bin width.
"""
from __future__ import annotations

import heapq
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import TemporalGraph

TAG_EMPTY = 0
TAG_OBSERVED = 1
TAG_PREDICTED = 2
TAG_SMOOTHED = 3
TAG_COMMITTED = 4

DEFAULT_WINDOW = 5
DEFAULT_ORDER = 2


class ForecastTable:
    def __init__(self, vertex_ids: Sequence[str], n_bins: int, bin_width: float):
        if n_bins < 1:
            raise ValueError("need at least one time bin")
        if bin_width <= 0:
            raise ValueError("bin_width must be positive")
        self.vertex_ids = tuple(vertex_ids)
        self._row = {vid: i for i, vid in enumerate(self.vertex_ids)}
        self.bin_width = float(bin_width)
        self.counts = np.full((len(self.vertex_ids), n_bins), np.nan)
        self.tags = np.zeros((len(self.vertex_ids), n_bins), dtype=np.uint8)
        # vertex -> nearest populated vertex, set by smooth_spatial
        self.fallback: dict[str, str] = {}

    @property
    def n_bins(self) -> int:
        return self.counts.shape[1]

    def bin_index(self, t: float) -> int:
        if t < 0:
            raise ValueError("negative time")
        return min(int(t // self.bin_width), self.n_bins - 1)

    def has_vertex(self, vid: str) -> bool:
        return vid in self._row

    def set(self, vid: str, b: int, count: float, tag: int) -> None:
        if count < 0:
            raise ValueError("negative count")
        self.counts[self._row[vid], b] = count
        self.tags[self._row[vid], b] = tag

    def value(self, vid: str, b: int) -> float:
        """Count at (vertex, bin); falls back to the covering vertex, then 0."""
        b = min(max(b, 0), self.n_bins - 1)
        r = self._row.get(vid)
        if r is not None:
            v = self.counts[r, b]
            if not math.isnan(v):
                return float(v)
        fb = self.fallback.get(vid)
        if fb is not None and fb in self._row:
            v = self.counts[self._row[fb], b]
            if not math.isnan(v):
                return float(v)
        return 0.0

    def increment(self, vid: str, b: int, amount: float = 1.0) -> None:
        b = min(max(b, 0), self.n_bins - 1)
        vid = vid if vid in self._row else self.fallback.get(vid, vid)
        if vid not in self._row:
            return
        r = self._row[vid]
        base = self.counts[r, b]
        if math.isnan(base):
            base = 0.0
        self.counts[r, b] = base + amount
        self.tags[r, b] = TAG_COMMITTED

    def observed_vertices(self) -> set[str]:
        mask = (self.tags == TAG_OBSERVED).any(axis=1)
        return {vid for vid, m in zip(self.vertex_ids, mask) if m}

    def populated_vertices(self) -> set[str]:
        mask = ~np.isnan(self.counts).all(axis=1)
        return {vid for vid, m in zip(self.vertex_ids, mask) if m}

    def copy(self) -> "ForecastTable":
        t = ForecastTable(self.vertex_ids, self.n_bins, self.bin_width)
        t.counts = self.counts.copy()
        t.tags = self.tags.copy()
        t.fallback = dict(self.fallback)
        return t

    def with_vertices(self, vertex_ids: Sequence[str]) -> "ForecastTable":
        """Re-index onto a vertex universe, keeping populated cells."""
        t = ForecastTable(vertex_ids, self.n_bins, self.bin_width)
        for vid in self.vertex_ids:
            if vid not in t._row:
                continue
            t.counts[t._row[vid]] = self.counts[self._row[vid]]
            t.tags[t._row[vid]] = self.tags[self._row[vid]]
        t.fallback = {k: v for k, v in self.fallback.items() if k in t._row and v in t._row}
        return t

    # -- interchange ---------------------------------------------------------

    def to_csv(self, path, sidecar_path=None) -> None:
        lines = ["vertex_id,bin_index,count"]
        for vid in self.vertex_ids:
            r = self._row[vid]
            for b in range(self.n_bins):
                v = self.counts[r, b]
                if math.isnan(v):
                    continue
                lines.append(f"{vid},{b},{float(v)!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        if sidecar_path is not None:
            sidecar = {"bin_width": self.bin_width, "n_bins": self.n_bins}
            Path(sidecar_path).write_text(
                json.dumps(sidecar, sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
                newline="\n",
            )

    @classmethod
    def from_csv(cls, path, sidecar_path, vertex_ids=None) -> "ForecastTable":
        sidecar = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        bin_width = float(sidecar["bin_width"])
        rows = []
        text = Path(path).read_text(encoding="utf-8")
        lines = [ln for ln in text.split("\n") if ln.strip()]
        header = lines[0].strip()
        if header != "vertex_id,bin_index,count":
            raise ValueError(f"bad forecast CSV header: {header!r}")
        for ln in lines[1:]:
            vid, b, c = ln.split(",")
            rows.append((vid, int(b), float(c)))
        n_bins = int(sidecar.get("n_bins") or (max((b for _, b, _ in rows), default=0) + 1))
        if vertex_ids is None:
            vertex_ids = sorted({vid for vid, _, _ in rows})
        t = cls(vertex_ids, n_bins, bin_width)
        for vid, b, c in rows:
            if not t.has_vertex(vid):
                raise ValueError(f"forecast references unknown vertex {vid}")
            if b < 0 or b >= n_bins:
                raise ValueError(f"forecast bin {b} out of range for vertex {vid}")
            t.set(vid, b, c, TAG_PREDICTED)
        return t


def ingest_observations(
    records: Iterable[tuple[str, float, float]],
    *,
    bin_width: float,
    n_bins: Optional[int] = None,
    vertex_ids: Optional[Sequence[str]] = None,
) -> ForecastTable:
    """Average raw (vertex, time, count) observations into per-bin cells."""
    recs = list(records)
    for vid, t, c in recs:
        if t < 0:
            raise ValueError(f"observation at negative time for {vid}")
        if c < 0:
            raise ValueError(f"negative count for {vid}")
    if n_bins is None:
        n_bins = max((int(t // bin_width) for _, t, _ in recs), default=0) + 1
    if vertex_ids is None:
        vertex_ids = sorted({vid for vid, _, _ in recs})
    table = ForecastTable(vertex_ids, n_bins, bin_width)
    sums: dict[tuple[str, int], list[float]] = {}
    for vid, t, c in recs:
        b = min(int(t // bin_width), n_bins - 1)
        sums.setdefault((vid, b), []).append(c)
    for (vid, b), vals in sums.items():
        table.set(vid, b, sum(vals) / len(vals), TAG_OBSERVED)
    return table


def savgol_coefficients(window: int, order: int) -> np.ndarray:
    """Least-squares polynomial smoothing coefficients for the window center."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and positive")
    if order < 0 or order >= window:
        raise ValueError("order must satisfy 0 <= order < window")
    half = window // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    a = np.vander(x, N=order + 1, increasing=True)
    return np.linalg.pinv(a)[0]


def savgol_smooth(seq: np.ndarray, window: int = DEFAULT_WINDOW, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Smooth a sequence; polynomial inputs of degree <= order pass unchanged.

    Interior points use the convolution coefficients; points within half a
    window of either end evaluate the local least-squares fit there instead,
    which keeps polynomial reproduction exact at the boundaries.
    """
    y = np.asarray(seq, dtype=np.float64)
    n = y.shape[0]
    if n == 0:
        return y.copy()
    if n < window:
        deg = min(order, n - 1)
        x = np.arange(n, dtype=np.float64)
        coef = np.polynomial.polynomial.polyfit(x, y, deg)
        return np.polynomial.polynomial.polyval(x, coef)
    coeffs = savgol_coefficients(window, order)
    half = window // 2
    out = np.empty_like(y)
    for i in range(half, n - half):
        out[i] = float(np.dot(coeffs, y[i - half : i + half + 1]))
    x_edge = np.arange(window, dtype=np.float64)
    lo = np.polynomial.polynomial.polyfit(x_edge, y[:window], order)
    hi = np.polynomial.polynomial.polyfit(x_edge, y[n - window :], order)
    for i in range(half):
        out[i] = float(np.polynomial.polynomial.polyval(float(i), lo))
    for i in range(n - half, n):
        out[i] = float(np.polynomial.polynomial.polyval(float(i - (n - window)), hi))
    return out


def _distance_order(g: TemporalGraph, sources: set[str]) -> tuple[dict[str, float], dict[str, str]]:
    """Multi-source shortest road distance from ``sources`` plus the nearest
    source per vertex (ties broken by source id, then path order)."""
    dist: dict[str, float] = {}
    origin: dict[str, str] = {}
    heap = [(0.0, vid, vid) for vid in sorted(sources)]
    heapq.heapify(heap)
    while heap:
        d, src, u = heapq.heappop(heap)
        if u in dist:
            continue
        dist[u] = d
        origin[u] = src
        for e in g.out_edges(u):
            if e.dst not in dist:
                heapq.heappush(heap, (d + e.length_m, src, e.dst))
    return dist, origin


def smooth_spatial(
    table: ForecastTable,
    g: TemporalGraph,
    *,
    window: int = DEFAULT_WINDOW,
    order: int = DEFAULT_ORDER,
) -> ForecastTable:
    """Fill empty cells by smoothing counts along road distance from the RSUs.

    Per time bin, vertices are ordered by (shortest-path distance to the
    nearest populated vertex, vertex id); gaps take their covering vertex's
    value, the ordered sequence is smoothed, and only previously-empty cells
    receive the (clamped nonnegative) result. Populated cells never change.
    """
    out = table.with_vertices(tuple(g.vertices))
    populated = out.populated_vertices()
    for comp in g.components():
        if not comp & populated:
            names = ",".join(sorted(comp)[:6])
            raise ValueError(f"component with no observations: {{{names}}}")
    dist, origin = _distance_order(g, populated)
    out.fallback = {vid: origin[vid] for vid in origin if vid not in populated}
    ordered = sorted(g.vertices, key=lambda vid: (dist.get(vid, math.inf), vid))
    rows = np.array([out._row[vid] for vid in ordered])
    for b in range(out.n_bins):
        col = out.counts[rows, b]
        provisional = col.copy()
        for i, vid in enumerate(ordered):
            if math.isnan(provisional[i]):
                provisional[i] = out.value(vid, b)
        smoothed = savgol_smooth(provisional, window, order)
        for i, vid in enumerate(ordered):
            if math.isnan(col[i]):
                out.set(vid, b, max(0.0, float(smoothed[i])), TAG_SMOOTHED)
    return out


def commit_plan_load(table: ForecastTable, plan, tau0: float) -> ForecastTable:
    """Increment predicted counts along a committed plan's edges.

    Each edge adds one vehicle to its destination vertex's cell in the bin of
    the planned traversal (departure) time. Returns a new table.
    """
    out = table.copy()
    t = float(tau0)
    for edge, arrival in zip(plan.path, plan.arrivals):
        out.increment(edge.dst, out.bin_index(t))
        t = arrival
    return out
