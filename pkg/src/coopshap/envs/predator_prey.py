"""Continuous-arena pursuit world.

Agents occupy the square [-1, 1]^2. Each step every agent moves by
``speed * step_scale`` along its chosen axis; moves that would leave the
arena are clamped and penalized, moves into an obstacle are reverted and
penalized. After movement, any prey within ``catch_radius`` of a predator
triggers a catch event: every predator receives the (shared) catch reward
and that prey loses it. Dynamics are deterministic; the only randomness
in an episode is the initial placement.

Observations are flat tuples of floats:

    (k, self_x, self_y, self_vx, self_vy,
     rel_x, rel_y, vx, vy, is_prey,   ... one block per other agent ...
     rel_x, rel_y, radius)            ... one block per obstacle ...

where ``k`` is the number of other agents and blocks follow agent index
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOOP = 0
UP = 1
DOWN = 2
LEFT = 3
RIGHT = 4
N_ACTIONS = 5

# action -> (dx, dy)
_DELTAS = ((0.0, 0.0), (0.0, 1.0), (0.0, -1.0), (-1.0, 0.0), (1.0, 0.0))

ROLE_PREDATOR = 0
ROLE_PREY = 1


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class PredatorPreyConfig:
    roles: tuple[int, ...] = (ROLE_PREDATOR, ROLE_PREDATOR, ROLE_PREDATOR, ROLE_PREY)
    speeds: tuple[float, ...] = (1.0, 1.0, 1.0, 1.3)
    episode_length: int = 100
    step_scale: float = 0.05
    catch_radius: float = 0.1
    catch_reward: float = 10.0
    boundary_penalty: float = 1.0
    obstacle_penalty: float = 1.0
    escape_reward: float = 0.0  # per catch-free step for each prey
    obstacles: tuple[Circle, ...] = ()
    spawn_margin: float = 0.1
    min_start_separation: float = 0.3  # predator-prey distance at reset

    def __post_init__(self) -> None:
        if len(self.roles) < 1:
            raise ValueError("at least one agent required")
        if len(self.speeds) != len(self.roles):
            raise ValueError("speeds and roles must have equal length")
        if any(s <= 0 for s in self.speeds):
            raise ValueError("speeds must be positive")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if not any(r == ROLE_PREDATOR for r in self.roles):
            raise ValueError("at least one predator required")

    @property
    def n_agents(self) -> int:
        return len(self.roles)


@dataclass
class PredatorPreyState:
    positions: tuple[tuple[float, float], ...]
    velocities: tuple[tuple[float, float], ...]
    timestep: int


class PredatorPreyEnv:
    n_actions = N_ACTIONS

    def __init__(self, config: PredatorPreyConfig):
        self.config = config
        self._predators = tuple(
            i for i, r in enumerate(config.roles) if r == ROLE_PREDATOR
        )
        self._prey = tuple(i for i, r in enumerate(config.roles) if r == ROLE_PREY)

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    def reset(self, seed: int):
        return self.reset_from_rng(np.random.default_rng(seed))

    def reset_from_rng(self, rng: np.random.Generator):
        cfg = self.config
        lo, hi = -1.0 + cfg.spawn_margin, 1.0 - cfg.spawn_margin
        min_sep2 = cfg.min_start_separation**2
        positions: list[tuple[float, float]] = []
        for i in range(cfg.n_agents):
            for _ in range(1000):
                x = float(rng.uniform(lo, hi))
                y = float(rng.uniform(lo, hi))
                if any(
                    (x - c.x) ** 2 + (y - c.y) ** 2 <= c.radius**2
                    for c in cfg.obstacles
                ):
                    continue
                clash = False
                for j, (px, py) in enumerate(positions):
                    if cfg.roles[j] != cfg.roles[i]:
                        if (x - px) ** 2 + (y - py) ** 2 < min_sep2:
                            clash = True
                            break
                if not clash:
                    break
            else:
                raise RuntimeError("could not place agents with the required separation")
            positions.append((x, y))
        state = PredatorPreyState(
            positions=tuple(positions),
            velocities=((0.0, 0.0),) * cfg.n_agents,
            timestep=0,
        )
        return state, self.observe_all(state)

    def observe(self, state: PredatorPreyState, agent: int):
        return self._observe_one(state, agent)

    def observe_all(self, state: PredatorPreyState, which=None):
        return tuple(
            self._observe_one(state, i) if which is None or which[i] else None
            for i in range(self.n_agents)
        )

    def _observe_one(self, state: PredatorPreyState, i: int):
        cfg = self.config
        x, y = state.positions[i]
        vx, vy = state.velocities[i]
        obs = [float(self.n_agents - 1), x, y, vx, vy]
        for j in range(self.n_agents):
            if j == i:
                continue
            ox, oy = state.positions[j]
            ovx, ovy = state.velocities[j]
            obs.extend(
                (ox - x, oy - y, ovx, ovy, 1.0 if cfg.roles[j] == ROLE_PREY else 0.0)
            )
        for c in cfg.obstacles:
            obs.extend((c.x - x, c.y - y, c.radius))
        return tuple(obs)

    def advance(self, state: PredatorPreyState, actions, rng: np.random.Generator):
        """Apply one step; returns (state, rewards, info) without observations."""
        cfg = self.config
        n = cfg.n_agents
        if len(actions) != n:
            raise ValueError(f"expected {n} actions, got {len(actions)}")
        rewards = [0.0] * n
        positions = []
        velocities = []
        for i in range(n):
            px, py = state.positions[i]
            a = actions[i]
            if not 0 <= a < N_ACTIONS:
                raise ValueError(f"invalid action {a!r} for agent {i}")
            dx, dy = _DELTAS[a]
            if dx == 0.0 and dy == 0.0:
                positions.append((px, py))
                velocities.append((0.0, 0.0))
                continue
            step = cfg.speeds[i] * cfg.step_scale
            x = px + dx * step
            y = py + dy * step
            hit_boundary = False
            if x < -1.0:
                x, hit_boundary = -1.0, True
            elif x > 1.0:
                x, hit_boundary = 1.0, True
            if y < -1.0:
                y, hit_boundary = -1.0, True
            elif y > 1.0:
                y, hit_boundary = 1.0, True
            if hit_boundary:
                rewards[i] -= cfg.boundary_penalty
            for c in cfg.obstacles:
                if (x - c.x) ** 2 + (y - c.y) ** 2 < c.radius**2:
                    x, y = px, py
                    rewards[i] -= cfg.obstacle_penalty
                    break
            positions.append((x, y))
            velocities.append((x - px, y - py))

        catches = [0] * n
        radius2 = cfg.catch_radius**2
        for p in self._prey:
            px, py = positions[p]
            caught = False
            for j in self._predators:
                jx, jy = positions[j]
                if (jx - px) ** 2 + (jy - py) ** 2 <= radius2:
                    catches[j] += 1
                    caught = True
            if caught:
                for j in self._predators:
                    rewards[j] += cfg.catch_reward
                rewards[p] -= cfg.catch_reward
            elif cfg.escape_reward:
                rewards[p] += cfg.escape_reward

        new_state = PredatorPreyState(
            positions=tuple(positions),
            velocities=tuple(velocities),
            timestep=state.timestep + 1,
        )
        return new_state, tuple(rewards), {"catches": tuple(catches)}

    def step(self, state: PredatorPreyState, actions, rng: np.random.Generator):
        from . import StepOutcome

        new_state, rewards, info = self.advance(state, actions, rng)
        done = new_state.timestep >= self.config.episode_length
        return new_state, StepOutcome(
            rewards=rewards,
            observations=self.observe_all(new_state),
            done=done,
            info=info,
        )
