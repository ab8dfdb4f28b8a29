"""Simulation and analysis of quantum duels, truels and n-uels."""

from .engine import (
    AIR,
    FireAt,
    FireInAir,
    GameConfig,
    Payoffs,
    PolicyMixture,
    StrategyProfile,
    dynamic_payoffs,
    estimate_payoffs_mc,
    expected_payoffs,
    play,
    play_mixture,
    run_trajectory,
)
from .errors import NuelError
from .operators import Marksmanship, PhaseParams, apply, build_firing_op, fire_in_air
from .qstate import DensityMatrix, StateVector, all_alive, decohere, measure_probabilities

__version__ = "0.1.0"

__all__ = [
    "AIR",
    "DensityMatrix",
    "FireAt",
    "FireInAir",
    "GameConfig",
    "Marksmanship",
    "NuelError",
    "Payoffs",
    "PhaseParams",
    "PolicyMixture",
    "StateVector",
    "StrategyProfile",
    "all_alive",
    "apply",
    "build_firing_op",
    "decohere",
    "dynamic_payoffs",
    "estimate_payoffs_mc",
    "expected_payoffs",
    "fire_in_air",
    "measure_probabilities",
    "play",
    "play_mixture",
    "run_trajectory",
]
