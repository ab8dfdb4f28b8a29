"""Equilibrium search, phase studies and parameter sweeps."""

from .grids import GRID_JSON_SCHEMA, SweepGrid, emit_grid, read_grid
from .phases import (
    MaximinResult,
    RepeatedDuelCurve,
    local_maxima,
    maximin_phases,
    phase_landscape,
    repeated_duel_curve,
    second_shot_advantage_surface,
)
from .regions import decoherence_sweep, extract_boundary, strategy_region_map
from .search import EquilibriumReport, StrategySpace, best_response, find_equilibria, is_equilibrium, payoff_table

__all__ = [
    "GRID_JSON_SCHEMA",
    "EquilibriumReport",
    "MaximinResult",
    "RepeatedDuelCurve",
    "StrategySpace",
    "SweepGrid",
    "best_response",
    "decoherence_sweep",
    "emit_grid",
    "extract_boundary",
    "find_equilibria",
    "is_equilibrium",
    "local_maxima",
    "maximin_phases",
    "payoff_table",
    "phase_landscape",
    "read_grid",
    "repeated_duel_curve",
    "second_shot_advantage_surface",
    "strategy_region_map",
]
