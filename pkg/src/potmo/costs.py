"""Edge cost vectors and admissible heuristics from the vehicle twin.

Dimension order (cars, energy Wh, desirability, time s, length m); the
energy slot is clamped at zero in cost vectors so the label algebra stays
nonnegative, while the signed value (regen included) feeds the simulator's
battery accounting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .graph import Edge, TemporalGraph, Vertex
from .kernels import AIR_DENSITY, GRAVITY, J_PER_WH

BEELINE_SPEED_MS = 13.89  # 50 km/h cap assumed for heuristic lower bounds


@dataclass(frozen=True)
class VehicleTwin:
    """Electric vehicle battery/radio model parameters."""

    mass_kg: float = 2500.0
    c_rr: float = 0.01
    cda_m2: float = 3.0
    eta: float = 0.85
    eta_regen: float = 0.6
    capacity_wh: float = 90_000.0
    radio_j_per_packet: float = 0.1

    def __post_init__(self):
        for name in ("mass_kg", "c_rr", "cda_m2", "capacity_wh"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.radio_j_per_packet < 0:
            raise ValueError("radio_j_per_packet must be nonnegative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if not 0 <= self.eta_regen < 1:
            raise ValueError("eta_regen must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "mass_kg": self.mass_kg,
            "c_rr": self.c_rr,
            "cda_m2": self.cda_m2,
            "eta": self.eta,
            "eta_regen": self.eta_regen,
            "capacity_wh": self.capacity_wh,
            "radio_j_per_packet": self.radio_j_per_packet,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "VehicleTwin":
        return cls(**{k: float(v) for k, v in d.items()})


def traction_energy(twin: VehicleTwin, length_m: float, slope_rad: float, speed_ms: float) -> float:
    """Signed traction energy in Wh for one segment; negative is regen."""
    if length_m <= 0:
        raise ValueError("length must be positive")
    if speed_ms <= 0:
        raise ValueError("speed must be positive")
    grade = twin.c_rr * math.cos(slope_rad) + math.sin(slope_rad)
    bracket = twin.mass_kg * GRAVITY * grade * length_m
    bracket += 0.5 * AIR_DENSITY * twin.cda_m2 * speed_ms * speed_ms * length_m
    if bracket > 0:
        return bracket / twin.eta / J_PER_WH
    return bracket * twin.eta_regen / J_PER_WH


class DesirabilityMap:
    """Per-vertex desirability scores clamped to [0, 1]."""

    def __init__(self, scores: Mapping[str, float]):
        self._scores = {vid: min(1.0, max(0.0, float(s))) for vid, s in scores.items()}

    def score(self, vid: str) -> float:
        try:
            return self._scores[vid]
        except KeyError:
            raise ValueError(f"no desirability score for vertex {vid}") from None

    def vertex_ids(self) -> set[str]:
        return set(self._scores)

    def to_dict(self) -> dict:
        return dict(sorted(self._scores.items()))


def desirability_cost(dmap: DesirabilityMap, edge: Edge) -> float:
    """(1 - mean endpoint desirability) * length_km; desirable areas are cheap."""
    mean = 0.5 * (dmap.score(edge.src) + dmap.score(edge.dst))
    return (1.0 - mean) * (edge.length_m / 1000.0)


def build_cost_vector(
    edge: Edge,
    t: float,
    table,
    dmap: DesirabilityMap,
    twin: VehicleTwin,
) -> np.ndarray:
    """Five-slot cost vector for traversing ``edge`` departing at ``t``.

    Slots: predicted communicating cars at the destination in t's bin,
    clamped traction energy at the edge's vmax, desirability cost, free-flow
    haul time, and length.
    """
    cars = table.value(edge.dst, table.bin_index(t)) if table is not None else 0.0
    energy = max(0.0, traction_energy(twin, edge.length_m, edge.slope_rad, edge.vmax_ms))
    return np.array(
        [
            cars,
            energy,
            desirability_cost(dmap, edge),
            edge.length_m / edge.vmax_ms,
            edge.length_m,
        ],
        dtype=np.float64,
    )


def energy_floor_wh_per_m(g: TemporalGraph, twin: VehicleTwin) -> float:
    """Smallest clamped per-meter traction energy over the graph's edges.

    Any path's energy cost is at least this floor times its length, so
    beeline_m * floor is an admissible energy heuristic on this graph.
    """
    floor = math.inf
    for e in g.edges:
        per_m = max(0.0, traction_energy(twin, e.length_m, e.slope_rad, e.vmax_ms)) / e.length_m
        floor = min(floor, per_m)
    if not math.isfinite(floor):
        return rolling_only_wh_per_m(twin)
    return floor


def rolling_only_wh_per_m(twin: VehicleTwin) -> float:
    """Zero-slope, zero-drag per-meter energy; a lower bound when slopes >= 0."""
    return twin.mass_kg * GRAVITY * twin.c_rr / twin.eta / J_PER_WH


def build_heuristic(
    v: Vertex,
    t: float,
    target: Vertex,
    dmap: Optional[DesirabilityMap],
    twin: VehicleTwin,
    *,
    energy_floor: Optional[float] = None,
    speed_cap: float = BEELINE_SPEED_MS,
) -> np.ndarray:
    """Beeline lower bound on the remaining cost from ``v`` to ``target``.

    Cars and desirability floors are zero; time assumes the speed cap; the
    energy slot multiplies the beeline by a per-meter floor (rolling-only by
    default, or the graph-wide minimum when provided).
    """
    beeline = math.hypot(v.x - target.x, v.y - target.y)
    if beeline == 0.0:
        return np.zeros(5, dtype=np.float64)
    per_m = rolling_only_wh_per_m(twin) if energy_floor is None else energy_floor
    return np.array(
        [0.0, beeline * per_m, 0.0, beeline / speed_cap, beeline],
        dtype=np.float64,
    )


def beeline_heuristic(g: TemporalGraph, twin: VehicleTwin):
    """Heuristic callable (edge, t, target_id) -> vector for the planner.

    Evaluated from the edge's destination vertex; cached per (dst, target).
    The per-meter energy floor and the speed cap are derived from the graph
    so the bound stays admissible even off the 50 km/h assumption.
    """
    floor = energy_floor_wh_per_m(g, twin)
    cap = max(BEELINE_SPEED_MS, g.max_vmax())
    cache: dict[tuple[str, str], np.ndarray] = {}

    def h(edge: Edge, t: float, target_id: str) -> np.ndarray:
        key = (edge.dst, target_id)
        vec = cache.get(key)
        if vec is None:
            vec = build_heuristic(
                g.vertex(edge.dst),
                t,
                g.vertex(target_id),
                None,
                twin,
                energy_floor=floor,
                speed_cap=cap,
            )
            cache[key] = vec
        return vec

    return h
