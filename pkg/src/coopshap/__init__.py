"""Shapley-value contribution analysis for cooperative multi-agent simulations.

The package splits into a pure game-theory core (:mod:`coopshap.game`),
two seeded multi-agent simulators (:mod:`coopshap.envs`), scripted
parametric policies (:mod:`coopshap.policies`), the rollout-backed
attribution layer (:mod:`coopshap.attribution`), social outcome metrics
(:mod:`coopshap.metrics`), and a config-driven experiment CLI
(:mod:`coopshap.cli`).
"""

from .game import (
    Coalition,
    CoalitionalGame,
    EstimationMethod,
    FunctionGame,
    ShapleyEstimate,
    enumerate_coalitions,
    exact_shapley,
    mc_shapley,
    shapley_weight,
)

__all__ = [
    "Coalition",
    "CoalitionalGame",
    "EstimationMethod",
    "FunctionGame",
    "ShapleyEstimate",
    "enumerate_coalitions",
    "exact_shapley",
    "mc_shapley",
    "shapley_weight",
]

__version__ = "0.1.0"
