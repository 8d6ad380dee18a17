"""Hot array kernels: numba-jitted implementations with numpy fallbacks.

The active path is chosen once at import time. Set POTMO_NUMBA=0 (or
"false"/"off") to force the numpy fallbacks; the default is numba whenever
it imports. ``benchmarks/bench_kernels.py`` times both paths side by side.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("POTMO_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "off",
)

GRAVITY = 9.81
AIR_DENSITY = 1.225
J_PER_WH = 3600.0


def _as_cost_matrix(costs) -> np.ndarray:
    m = np.ascontiguousarray(costs, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a (n, d) cost matrix")
    return m


# ---------------------------------------------------------------------------
# Pareto mask: keep[i] is False when row i is dominated by any row, or when an
# identical row appears earlier (duplicates collapse to the first occurrence).
# ---------------------------------------------------------------------------

def _pareto_mask_np(costs: np.ndarray) -> np.ndarray:
    n = costs.shape[0]
    keep = np.ones(n, dtype=np.bool_)
    for i in range(n):
        c = costs[i]
        le = np.all(costs <= c, axis=1)
        lt = np.any(costs < c, axis=1)
        if np.any(le & lt):
            keep[i] = False
            continue
        eq = np.flatnonzero(le & ~lt)  # identical rows, includes i
        if eq[0] < i:
            keep[i] = False
    return keep


if HAS_NUMBA:

    @njit(cache=True)
    def _pareto_mask_nb(costs):  # pragma: no cover - exercised via dispatch
        n, d = costs.shape
        keep = np.ones(n, dtype=np.bool_)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                le = True
                lt = False
                for k in range(d):
                    cj = costs[j, k]
                    ci = costs[i, k]
                    if cj > ci:
                        le = False
                        break
                    if cj < ci:
                        lt = True
                if le and lt:
                    keep[i] = False
                    break
                if le and not lt and j < i:
                    keep[i] = False
                    break
        return keep


def pareto_mask(costs) -> np.ndarray:
    """Boolean mask of non-dominated rows, first duplicate kept."""
    m = _as_cost_matrix(costs)
    if m.shape[0] == 0:
        return np.zeros(0, dtype=np.bool_)
    if USE_NUMBA:
        return _pareto_mask_nb(m)
    return _pareto_mask_np(m)


# ---------------------------------------------------------------------------
# Lexicographic argmin over rows (dimension 0 has highest priority).
# ---------------------------------------------------------------------------

def _min_lex_row_np(costs: np.ndarray) -> int:
    order = np.lexsort(costs.T[::-1])
    return int(order[0])


if HAS_NUMBA:

    @njit(cache=True)
    def _min_lex_row_nb(costs):  # pragma: no cover - exercised via dispatch
        n, d = costs.shape
        best = 0
        for i in range(1, n):
            for k in range(d):
                if costs[i, k] < costs[best, k]:
                    best = i
                    break
                if costs[i, k] > costs[best, k]:
                    break
        return best


def min_lex_row(costs) -> int:
    """Index of the lexicographically smallest row (ties keep the first)."""
    m = _as_cost_matrix(costs)
    if m.shape[0] == 0:
        raise ValueError("empty cost matrix")
    if USE_NUMBA:
        return int(_min_lex_row_nb(m))
    return _min_lex_row_np(m)


# ---------------------------------------------------------------------------
# Longitudinal EV traction energy over road segments, Wh, signed (negative
# values are regenerated energy). Scalar twin parameters, vector segments.
# ---------------------------------------------------------------------------

def _traction_batch_np(length_m, slope_rad, speed_ms, mass_kg, c_rr, cda_m2, eta, eta_regen):
    grade = c_rr * np.cos(slope_rad) + np.sin(slope_rad)
    bracket = mass_kg * GRAVITY * grade * length_m
    bracket = bracket + 0.5 * AIR_DENSITY * cda_m2 * speed_ms * speed_ms * length_m
    out = np.where(bracket > 0.0, bracket / eta, bracket * eta_regen)
    return out / J_PER_WH


if HAS_NUMBA:

    @njit(cache=True)
    def _traction_batch_nb(length_m, slope_rad, speed_ms, mass_kg, c_rr, cda_m2, eta, eta_regen):  # pragma: no cover
        n = length_m.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            grade = c_rr * np.cos(slope_rad[i]) + np.sin(slope_rad[i])
            bracket = mass_kg * GRAVITY * grade * length_m[i]
            bracket += 0.5 * AIR_DENSITY * cda_m2 * speed_ms[i] * speed_ms[i] * length_m[i]
            if bracket > 0.0:
                out[i] = bracket / eta
            else:
                out[i] = bracket * eta_regen
            out[i] /= J_PER_WH
        return out


def traction_energy_batch(length_m, slope_rad, speed_ms, mass_kg, c_rr, cda_m2, eta, eta_regen) -> np.ndarray:
    """Signed traction energy per segment in Wh."""
    L = np.ascontiguousarray(length_m, dtype=np.float64)
    s = np.ascontiguousarray(slope_rad, dtype=np.float64)
    v = np.ascontiguousarray(speed_ms, dtype=np.float64)
    if USE_NUMBA:
        return _traction_batch_nb(L, s, v, float(mass_kg), float(c_rr), float(cda_m2), float(eta), float(eta_regen))
    return _traction_batch_np(L, s, v, float(mass_kg), float(c_rr), float(cda_m2), float(eta), float(eta_regen))
