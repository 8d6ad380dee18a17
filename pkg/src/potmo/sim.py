"""Deterministic time-stepped traffic and IoT-communication simulation.

Vehicles move along fixed or replanned routes under a congestion-coupled
speed law, transmit packets on a fixed cadence to the quietest (then
closest) MEL, and ambulances accumulate signed traction plus radio energy.
Everything is a pure function of the configuration, so identical configs
produce byte-identical outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .costs import DesirabilityMap, VehicleTwin, beeline_heuristic, build_cost_vector, traction_energy
from .forecast import ForecastTable, commit_plan_load
from .graph import Edge, TemporalGraph
from .planners import (
    NoPathError,
    WspAgentState,
    _dijkstra_weights,
    dijkstra_ssp,
    potmo_astar,
    wsp_reweight,
)

LENGTH_DIM = 4
PROPAGATION_MS = 2.0e8
JAM_SPEED_FRACTION = 0.25

PLANNER_SSP = "ssp"
PLANNER_WSP = "wsp"
PLANNER_POTMO = "potmo"
PLANNERS = (PLANNER_SSP, PLANNER_WSP, PLANNER_POTMO)


@dataclass(frozen=True)
class Mel:
    """Edge-side execution unit with a FIFO work queue."""

    id: str
    x: float
    y: float
    rate_ips: float  # instructions per second
    instructions_per_packet: float

    def service_s(self) -> float:
        return self.instructions_per_packet / self.rate_ips


@dataclass(frozen=True)
class BackgroundVehicle:
    id: str
    depart_s: float
    route: tuple[str, ...]  # edge ids


@dataclass
class SimConfig:
    graph: TemporalGraph
    dmap: DesirabilityMap
    twin: VehicleTwin
    planner: str
    source: str
    target: str
    mels: tuple[Mel, ...]
    background: tuple[BackgroundVehicle, ...] = ()
    forecast: Optional[ForecastTable] = None
    fleet_size: int = 35
    injection_interval_s: float = 100.0
    packet_interval_s: float = 60.0
    tick_s: float = 1.0
    horizon_s: float = 7200.0
    congestion_beta: float = 0.5
    seed: int = 0
    literal_priority: bool = False

    def __post_init__(self):
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.fleet_size < 0:
            raise ValueError("fleet size must be nonnegative")
        for name in ("injection_interval_s", "packet_interval_s", "tick_s", "horizon_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.mels:
            raise ValueError("at least one MEL is required")


@dataclass
class CommRecord:
    vehicle_id: str
    origin_xy: tuple[float, float]
    start_s: float
    mel_id: str
    transmission_s: float
    is_ambulance: bool
    edge_id: str


@dataclass
class EnergyEvent:
    vehicle_id: str
    edge_id: str
    tick: int
    dist_m: float
    energy_wh: float


@dataclass
class ScenarioResult:
    ard: int
    tec_wh: float
    series_amb: np.ndarray
    series_all: np.ndarray
    comms: list[CommRecord]
    energy_events: list[EnergyEvent]
    arrivals: dict[str, float]
    fleet_size: int
    planner: str
    seed: int


class _Vehicle:
    __slots__ = (
        "id",
        "route",
        "index",
        "pos_m",
        "arrived",
        "arrival_s",
        "next_packet_s",
        "is_ambulance",
        "waited_s",
        "last_speed",
    )

    def __init__(self, vid: str, route: list[Edge], now_s: float, is_ambulance: bool):
        self.id = vid
        self.route = route
        self.index = 0
        self.pos_m = 0.0
        self.arrived = not route
        self.arrival_s = now_s if self.arrived else math.inf
        self.next_packet_s = now_s
        self.is_ambulance = is_ambulance
        self.waited_s = 0.0
        self.last_speed = 0.0

    def edge(self) -> Optional[Edge]:
        if self.arrived or self.index >= len(self.route):
            return None
        return self.route[self.index]

    def position_xy(self, g: TemporalGraph) -> tuple[float, float]:
        e = self.edge()
        if e is None:
            last = self.route[-1].dst if self.route else None
            if last is None:
                return (0.0, 0.0)
            v = g.vertex(last)
            return (v.x, v.y)
        a, b = g.vertex(e.src), g.vertex(e.dst)
        f = min(1.0, self.pos_m / e.length_m)
        return (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)


class SimState:
    """Mutable world state; advance one tick at a time with :func:`step`."""

    def __init__(self, cfg: SimConfig):
        cfg.graph.vertex(cfg.source)
        cfg.graph.vertex(cfg.target)
        self.cfg = cfg
        self.g = cfg.graph
        self.tick = 0
        self.n_ticks = int(round(cfg.horizon_s / cfg.tick_s))
        self.vehicles: list[_Vehicle] = []
        self.comms: list[CommRecord] = []
        self.energy_events: list[EnergyEvent] = []
        self.tec_wh = 0.0
        self.arrivals: dict[str, float] = {}
        self.ard = 0
        self._tx_sum_amb = np.zeros(self.n_ticks)
        self._tx_cnt_amb = np.zeros(self.n_ticks, dtype=np.int64)
        self._tx_sum_all = np.zeros(self.n_ticks)
        self._tx_cnt_all = np.zeros(self.n_ticks, dtype=np.int64)
        self._mel_completions: dict[str, list[float]] = {m.id: [] for m in cfg.mels}
        self._mel_busy_until: dict[str, float] = {m.id: 0.0 for m in cfg.mels}
        self._bg_queue = sorted(cfg.background, key=lambda b: (b.depart_s, b.id))
        self._bg_next = 0
        self._injections = [
            (i * cfg.injection_interval_s, f"amb{i:03d}") for i in range(cfg.fleet_size)
        ]
        self._inj_next = 0
        # planner working state
        self._table: Optional[ForecastTable] = cfg.forecast.copy() if cfg.forecast else None
        self._planning_graph: Optional[TemporalGraph] = None
        self._heuristic = None
        if cfg.planner == PLANNER_POTMO:
            self._planning_graph = self._make_planning_graph()
            self._heuristic = beeline_heuristic(self._planning_graph, cfg.twin)

    # -- planning ------------------------------------------------------------

    def _make_planning_graph(self) -> TemporalGraph:
        cfg = self.cfg
        table = self._table

        def cost_fn(edge: Edge, t: float) -> np.ndarray:
            return build_cost_vector(edge, t, table, cfg.dmap, cfg.twin)

        pg = TemporalGraph(
            cfg.graph.vertices.values(),
            [
                Edge(e.id, e.src, e.dst, e.length_m, e.vmax_ms, e.slope_rad)
                for e in cfg.graph.edges
            ],
            bin_width=cfg.graph.bin_width,
            d=5,
            d_t=3,
            cost_fn=cost_fn,
        )
        return pg

    def _edge_comm_counts(self, now_s: float) -> dict[str, float]:
        """Active communications per road: comms still in flight, attributed
        to the edge their vehicle occupied when transmission started."""
        counts: dict[str, float] = {}
        for c in self.comms:
            if c.start_s <= now_s < c.start_s + c.transmission_s and c.edge_id:
                counts[c.edge_id] = counts.get(c.edge_id, 0.0) + 1.0
        return counts

    def _plan_route(self, amb_id: str, now_s: float) -> list[Edge]:
        cfg = self.cfg
        if cfg.planner == PLANNER_SSP:
            res = dijkstra_ssp(self.g, cfg.source, cfg.target, LENGTH_DIM)
            return list(res.path)
        if cfg.planner == PLANNER_WSP:
            src = self.g.vertex(cfg.source)
            agent = WspAgentState((src.x, src.y), 0.0)
            weights = wsp_reweight(self.g, agent, self._edge_comm_counts(now_s), cfg.target)
            path, _ = _dijkstra_weights(self.g, weights, cfg.source, cfg.target)
            return list(path)
        pg = self._planning_graph
        res = potmo_astar(
            pg,
            cfg.source,
            now_s,
            cfg.target,
            heuristic=lambda e, t, tgt: self._heuristic(e, t, tgt),
            literal_priority=cfg.literal_priority,
        )
        if self._table is not None:
            self._table = commit_plan_load(self._table, res, now_s)
            self._planning_graph = self._make_planning_graph()
        return [self.g.edge(e.id) for e in res.path]

    def _replan_wsp(self, veh: _Vehicle, now_s: float) -> None:
        e = veh.edge()
        if e is None:
            return
        agent = WspAgentState(veh.position_xy(self.g), veh.waited_s)
        weights = wsp_reweight(self.g, agent, self._edge_comm_counts(now_s), self.cfg.target)
        if e.dst == self.cfg.target:
            veh.route = veh.route[: veh.index + 1]
            return
        try:
            path, _ = _dijkstra_weights(self.g, weights, e.dst, self.cfg.target)
        except NoPathError:
            return  # stalled: keep the current route
        veh.route = veh.route[: veh.index + 1] + list(path)

    # -- communication ---------------------------------------------------------

    def _queue_len(self, mel_id: str, now_s: float) -> int:
        comp = self._mel_completions[mel_id]
        while comp and comp[0] <= now_s:
            comp.pop(0)
        return len(comp)

    def _transmit(self, veh: _Vehicle, now_s: float) -> None:
        cfg = self.cfg
        origin = veh.position_xy(self.g)
        queues = [(m, self._queue_len(m.id, now_s)) for m in cfg.mels]
        mel = assign_mel(origin, queues)
        wait, service, prop, new_busy = transmission_time(
            mel, self._mel_busy_until[mel.id], now_s, origin
        )
        self._mel_busy_until[mel.id] = new_busy
        self._mel_completions[mel.id].append(new_busy)
        total = wait + service + prop
        e = veh.edge()
        self.comms.append(
            CommRecord(veh.id, origin, now_s, mel.id, total, veh.is_ambulance, e.id if e else "")
        )
        if veh.is_ambulance:
            self.tec_wh += cfg.twin.radio_j_per_packet / 3600.0
            self._tx_sum_amb[self.tick] += total
            self._tx_cnt_amb[self.tick] += 1
        self._tx_sum_all[self.tick] += total
        self._tx_cnt_all[self.tick] += 1

    # -- movement ---------------------------------------------------------------

    def _advance(self, veh: _Vehicle, occupancy: dict[str, int], now_s: float) -> None:
        cfg = self.cfg
        e = veh.edge()
        if e is None:
            return
        others = max(0, occupancy.get(e.id, 1) - 1)
        speed = min(e.vmax_ms, e.vmax_ms / (1.0 + cfg.congestion_beta * others))
        veh.last_speed = speed
        if speed < JAM_SPEED_FRACTION * e.vmax_ms:
            veh.waited_s += cfg.tick_s
        budget = speed * cfg.tick_s
        while budget > 0 and not veh.arrived:
            e = veh.edge()
            if e is None:
                break
            remain = e.length_m - veh.pos_m
            d = min(budget, remain)
            if d > 0:
                energy = traction_energy(cfg.twin, d, e.slope_rad, speed)
                if veh.is_ambulance:
                    self.tec_wh += energy
                    self.energy_events.append(
                        EnergyEvent(veh.id, e.id, self.tick, d, energy)
                    )
                veh.pos_m += d
                budget -= d
            if veh.pos_m >= e.length_m - 1e-9:
                veh.index += 1
                veh.pos_m = 0.0
                if veh.index >= len(veh.route):
                    veh.arrived = True
                    veh.arrival_s = now_s + cfg.tick_s
                    if veh.is_ambulance:
                        self.arrivals[veh.id] = veh.arrival_s
                        self.ard += 1
            if d <= 0:
                break

    # -- tick --------------------------------------------------------------------

    def step_once(self) -> None:
        cfg = self.cfg
        now_s = self.tick * cfg.tick_s
        # inject background vehicles
        while self._bg_next < len(self._bg_queue) and self._bg_queue[self._bg_next].depart_s <= now_s:
            bg = self._bg_queue[self._bg_next]
            route = [self.g.edge(eid) for eid in bg.route]
            self.vehicles.append(_Vehicle(bg.id, route, now_s, is_ambulance=False))
            self._bg_next += 1
        # inject ambulances
        while self._inj_next < len(self._injections) and self._injections[self._inj_next][0] <= now_s:
            _, amb_id = self._injections[self._inj_next]
            try:
                route = self._plan_route(amb_id, now_s)
            except NoPathError:
                route = []
            veh = _Vehicle(amb_id, route, now_s, is_ambulance=True)
            if veh.arrived and cfg.source == cfg.target:
                self.arrivals[amb_id] = now_s
                self.ard += 1
            self.vehicles.append(veh)
            self._inj_next += 1
        # packets before movement: origin is the position at the cadence time
        for veh in self.vehicles:
            if not veh.arrived and veh.next_packet_s <= now_s:
                self._transmit(veh, now_s)
                veh.next_packet_s += cfg.packet_interval_s
        # WSP agents replan from live counts every tick
        if cfg.planner == PLANNER_WSP:
            for veh in self.vehicles:
                if veh.is_ambulance and not veh.arrived:
                    self._replan_wsp(veh, now_s)
        # congestion-coupled movement
        occupancy: dict[str, int] = {}
        for veh in self.vehicles:
            e = veh.edge()
            if e is not None:
                occupancy[e.id] = occupancy.get(e.id, 0) + 1
        for veh in self.vehicles:
            if not veh.arrived:
                self._advance(veh, occupancy, now_s)
        self.tick += 1

    def result(self) -> ScenarioResult:
        with np.errstate(invalid="ignore"):
            series_amb = np.where(self._tx_cnt_amb > 0, self._tx_sum_amb / np.maximum(self._tx_cnt_amb, 1), 0.0)
            series_all = np.where(self._tx_cnt_all > 0, self._tx_sum_all / np.maximum(self._tx_cnt_all, 1), 0.0)
        return ScenarioResult(
            ard=self.ard,
            tec_wh=self.tec_wh,
            series_amb=series_amb,
            series_all=series_all,
            comms=list(self.comms),
            energy_events=list(self.energy_events),
            arrivals=dict(sorted(self.arrivals.items())),
            fleet_size=self.cfg.fleet_size,
            planner=self.cfg.planner,
            seed=self.cfg.seed,
        )


def step(state: SimState) -> SimState:
    """Advance the simulation one tick; returns the same (mutated) state."""
    state.step_once()
    return state


def assign_mel(origin_xy: tuple[float, float], mels_with_queues) -> Mel:
    """Least-loaded MEL; ties go to the geographically closest, then the id."""
    items = list(mels_with_queues)
    if not items:
        raise ValueError("no MELs available")
    ox, oy = origin_xy

    def key(item):
        mel, qlen = item
        return (qlen, math.hypot(mel.x - ox, mel.y - oy), mel.id)

    return min(items, key=key)[0]


def transmission_time(
    mel: Mel, busy_until: float, now_s: float, origin_xy: tuple[float, float]
) -> tuple[float, float, float, float]:
    """(wait, service, propagation, new_busy_until) for one packet."""
    wait = max(0.0, busy_until - now_s)
    service = mel.service_s()
    prop = math.hypot(mel.x - origin_xy[0], mel.y - origin_xy[1]) / PROPAGATION_MS
    new_busy = max(busy_until, now_s) + service
    return wait, service, prop, new_busy


def run_scenario(cfg: SimConfig) -> ScenarioResult:
    """Run to the horizon; deterministic for a given configuration."""
    state = SimState(cfg)
    for _ in range(state.n_ticks):
        step(state)
    return state.result()


# ---------------------------------------------------------------------------
# Series metrics
# ---------------------------------------------------------------------------

def pareto_min_series(runs) -> np.ndarray:
    """Pointwise minimum across runs of equal length."""
    arrs = [np.asarray(r, dtype=np.float64) for r in runs]
    if not arrs:
        raise ValueError("no series given")
    n = arrs[0].shape[0]
    for a in arrs[1:]:
        if a.shape[0] != n:
            raise ValueError("series length mismatch")
    return np.min(np.vstack(arrs), axis=0)


def pmd(run, floor) -> float:
    """Mean pointwise gap between a run and the floor series."""
    r = np.asarray(run, dtype=np.float64)
    f = np.asarray(floor, dtype=np.float64)
    if r.shape != f.shape:
        raise ValueError("series length mismatch")
    if np.any(r < f - 1e-12):
        raise ValueError("run dips below the floor; floor is not a true minimum")
    return float(np.mean(r - f))


def fraction_on_front(run, floor) -> float:
    """Share of timesteps where the run sits on the floor (1e-9 tolerance)."""
    r = np.asarray(run, dtype=np.float64)
    f = np.asarray(floor, dtype=np.float64)
    if r.shape != f.shape:
        raise ValueError("series length mismatch")
    if np.any(r < f - 1e-12):
        raise ValueError("run dips below the floor; floor is not a true minimum")
    return float(np.mean(np.abs(r - f) <= 1e-9))
