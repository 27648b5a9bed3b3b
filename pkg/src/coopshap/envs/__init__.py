"""Seeded, step-based multi-agent simulators.

Both environments are pure state machines: an episode is fully determined
by (config, seed, action sequence). Instances hold configuration only;
all mutable data lives in the state objects passed through ``step``.
"""

from dataclasses import dataclass, field
from typing import Any

from .maps import (
    CELL_AGENT,
    CELL_APPLE,
    CELL_APPLE_LONE,
    CELL_EMPTY,
    CELL_WALL,
    GridMap,
    default_harvest_map,
    load_map,
    parse_map,
)


@dataclass(frozen=True)
class StepOutcome:
    """Result of one environment step."""

    rewards: tuple[float, ...]
    observations: tuple
    done: bool
    info: dict[str, Any] = field(default_factory=dict)


from .harvest import HarvestConfig, HarvestEnv, HarvestState  # noqa: E402
from .predator_prey import (  # noqa: E402
    Circle,
    PredatorPreyConfig,
    PredatorPreyEnv,
    PredatorPreyState,
    ROLE_PREDATOR,
    ROLE_PREY,
)

__all__ = [
    "CELL_AGENT",
    "CELL_APPLE",
    "CELL_APPLE_LONE",
    "CELL_EMPTY",
    "CELL_WALL",
    "Circle",
    "GridMap",
    "HarvestConfig",
    "HarvestEnv",
    "HarvestState",
    "PredatorPreyConfig",
    "PredatorPreyEnv",
    "PredatorPreyState",
    "ROLE_PREDATOR",
    "ROLE_PREY",
    "StepOutcome",
    "default_harvest_map",
    "load_map",
    "parse_map",
]
