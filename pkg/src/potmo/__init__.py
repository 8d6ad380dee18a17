"""Multi-objective, time-dependent fleet route planning and a deterministic
traffic/IoT microsimulation around it."""

from .costs import DesirabilityMap, VehicleTwin, build_cost_vector, build_heuristic, traction_energy
from .forecast import ForecastTable, commit_plan_load, ingest_observations, savgol_coefficients, smooth_spatial
from .graph import (
    Edge,
    Label,
    LabelSet,
    Ordering,
    TemporalGraph,
    Vertex,
    dominates,
    edge_cost_at,
    label_extend,
    lex_compare,
    pareto_front,
)
from .planners import (
    NoPathError,
    PlanRequest,
    PlanResult,
    SizeGuardError,
    brute_force_optimum,
    choose_final,
    dijkstra_ssp,
    enumerate_simple_paths,
    potmo_astar,
    tdd,
    wsp_plan,
    wsp_reweight,
)
from .sim import (
    ScenarioResult,
    SimConfig,
    assign_mel,
    fraction_on_front,
    pareto_min_series,
    pmd,
    run_scenario,
    step,
    transmission_time,
)

__version__ = "0.1.0"
