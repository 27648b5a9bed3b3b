"""Scripted parametric agent policies and exclusion substitutes.

Policies stand in for trained agents. Each one draws a single uniform
variate against its ``skill`` and either acts greedily on its observation
or takes a uniformly random action, so skill interpolates between a
random walker (0) and a fully greedy agent (1). ``Lazy`` always returns
noop and consumes no randomness.

The three exclusion substitutes decide how an out-of-coalition agent
behaves during an attribution rollout: freeze it (noop), randomize it, or
let a randomly chosen in-coalition policy of the same kind act on its
observation (re-chosen every step).

Observations are dispatched on their container: pursuit-world
observations are flat tuples (see :mod:`coopshap.envs.predator_prey`),
harvest observations are 7x7 cell-code windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .envs import harvest as _harvest
from .envs import predator_prey as _pp
from .envs.maps import CELL_APPLE, CELL_APPLE_LONE


class PolicyKind(str, Enum):
    PURSUIT = "pursuit"
    EVADER = "evader"
    HARVESTER = "harvester"
    LAZY = "lazy"


class ExclusionMode(str, Enum):
    REPLACE = "replace"
    RANDOM = "random"
    NOOP = "noop"


@dataclass(frozen=True)
class PolicySpec:
    """Parameters of one scripted agent.

    ``speed`` is the movement multiplier used by the pursuit world; it is
    carried here so an experiment roster fully describes its agents.
    """

    kind: PolicyKind
    skill: float = 1.0
    speed: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError(f"skill must be in [0, 1], got {self.skill}")
        if self.speed <= 0:
            raise ValueError(f"speed must be positive, got {self.speed}")


def _parse_particle_obs(obs):
    """Split a pursuit-world observation tuple into (self, others)."""
    if len(obs) < 5:
        raise ValueError("particle observation too short")
    k = int(obs[0])
    body = 5 + 5 * k
    if len(obs) < body or (len(obs) - body) % 3 != 0:
        raise ValueError(f"malformed particle observation of length {len(obs)}")
    others = [tuple(obs[5 + 5 * j : 10 + 5 * j]) for j in range(k)]
    return obs[1:5], others


def _axis_step_particle(dx: float, dy: float) -> int:
    if dx == 0.0 and dy == 0.0:
        return _pp.NOOP
    if abs(dx) >= abs(dy):
        return _pp.RIGHT if dx > 0 else _pp.LEFT
    return _pp.UP if dy > 0 else _pp.DOWN


def _axis_step_grid(dr: int, dc: int) -> int:
    if dr == 0 and dc == 0:
        return _harvest.NOOP
    if abs(dr) >= abs(dc):
        return _harvest.UP if dr < 0 else _harvest.DOWN
    return _harvest.LEFT if dc < 0 else _harvest.RIGHT


def _pursuit_greedy(obs) -> int:
    _, others = _parse_particle_obs(obs)
    target = None
    best = float("inf")
    for rx, ry, _vx, _vy, is_prey in others:
        if is_prey > 0.5:
            d = rx * rx + ry * ry
            if d < best:
                best, target = d, (rx, ry)
    if target is None:
        return _pp.NOOP
    return _axis_step_particle(target[0], target[1])


def _evader_greedy(obs) -> int:
    _, others = _parse_particle_obs(obs)
    threat = None
    best = float("inf")
    for rx, ry, _vx, _vy, is_prey in others:
        if is_prey <= 0.5:
            d = rx * rx + ry * ry
            if d < best:
                best, threat = d, (rx, ry)
    if threat is None:
        return _pp.NOOP
    return _axis_step_particle(-threat[0], -threat[1])


def _harvester_greedy(obs: np.ndarray, skill: float, rng: np.random.Generator) -> int:
    if not isinstance(obs, np.ndarray) or obs.shape != (
        _harvest.WINDOW_SIZE,
        _harvest.WINDOW_SIZE,
    ):
        raise ValueError("harvester expects a 7x7 observation window")
    center = _harvest.WINDOW_RADIUS
    if skill > 0.5:
        # careful harvesting: never take a patch's last apple
        rs, cs = np.nonzero(obs == CELL_APPLE)
        if len(rs) == 0:
            if (obs == CELL_APPLE_LONE).any():
                return _harvest.NOOP
            # nothing visible: wander to find a fresh patch
            return int(rng.integers(_harvest.UP, _harvest.RIGHT + 1))
    else:
        rs, cs = np.nonzero((obs == CELL_APPLE) | (obs == CELL_APPLE_LONE))
        if len(rs) == 0:
            return int(rng.integers(_harvest.UP, _harvest.RIGHT + 1))
    dist = np.abs(rs - center) + np.abs(cs - center)
    k = int(np.argmin(dist))
    return _axis_step_grid(int(rs[k]) - center, int(cs[k]) - center)


def _n_actions_for(obs) -> int:
    if isinstance(obs, np.ndarray):
        return _harvest.N_ACTIONS
    return _pp.N_ACTIONS


def policy_act(spec: PolicySpec, observation, rng: np.random.Generator) -> int:
    """Pick one discrete action for the given observation."""
    if spec.kind is PolicyKind.LAZY:
        return 0
    if rng.random() >= spec.skill:
        return int(rng.integers(_n_actions_for(observation)))
    if spec.kind is PolicyKind.PURSUIT:
        return _pursuit_greedy(observation)
    if spec.kind is PolicyKind.EVADER:
        return _evader_greedy(observation)
    return _harvester_greedy(observation, spec.skill, rng)


def substitute_action(
    mode: ExclusionMode,
    excluded_spec: PolicySpec,
    present_specs,
    observation,
    rng: np.random.Generator,
) -> int:
    """Action taken on behalf of an out-of-coalition agent.

    ``present_specs`` lists the policies still active in the episode.
    Replace picks one of the same kind uniformly (re-sampled every call)
    and lets it act on the excluded agent's observation; with no same-kind
    policy present it degrades to a random action.
    """
    if mode is ExclusionMode.NOOP:
        return 0
    if mode is ExclusionMode.RANDOM:
        return int(rng.integers(_n_actions_for(observation)))
    candidates = [s for s in present_specs if s.kind is excluded_spec.kind]
    if not candidates:
        return int(rng.integers(_n_actions_for(observation)))
    chosen = candidates[int(rng.integers(len(candidates)))]
    return policy_act(chosen, observation, rng)
