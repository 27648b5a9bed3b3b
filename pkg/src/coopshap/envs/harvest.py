"""Commons-harvest gridworld.

Agents walk a walled grid collecting apples (+1 each). After every step,
each empty cell regrows an apple with a probability that increases with
the number of apples left in its L2 radius-2 neighborhood and is zero
when that neighborhood is bare, so a fully stripped patch never recovers.
Collisions are resolved by agent-index priority: lower indices move first
and block the cells they land on.

Observations are 7x7 egocentric windows (axis-aligned, centered on the
agent) of cell codes. Other agents show as ``CELL_AGENT``, cells beyond
the map edge as ``CELL_WALL``, and apples with no remaining neighbor in
their regrowth radius as ``CELL_APPLE_LONE`` so policies can recognize a
patch's last apple. Agent orientation is tracked and rotated by the two
rotate actions but does not affect movement or the observation window.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import maps
from .maps import (
    CELL_AGENT,
    CELL_APPLE,
    CELL_APPLE_LONE,
    CELL_EMPTY,
    CELL_WALL,
    GridMap,
)

NOOP = 0
UP = 1
DOWN = 2
LEFT = 3
RIGHT = 4
ROTATE_LEFT = 5
ROTATE_RIGHT = 6
N_ACTIONS = 7

# action -> (d_row, d_col)
_MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

WINDOW_RADIUS = 3
WINDOW_SIZE = 2 * WINDOW_RADIUS + 1

# regrowth probability by apple count in the L2 radius-2 neighborhood,
# indexed by min(count, 5)
DEFAULT_REGROWTH = (0.0, 0.01, 0.01, 0.05, 0.05, 0.1)

# neighborhood offsets with 0 < dr^2 + dc^2 <= 4
_NEIGHBOR_OFFSETS = tuple(
    (dr, dc)
    for dr in range(-2, 3)
    for dc in range(-2, 3)
    if 0 < dr * dr + dc * dc <= 4
)

APPLE_REWARD = 1.0


@lru_cache(maxsize=32)
def _cached_map(map_text: str | None) -> GridMap:
    if map_text is None:
        return maps.default_harvest_map()
    return maps.parse_map(map_text)


@dataclass(frozen=True)
class HarvestConfig:
    n_agents: int = 6
    episode_length: int = 1000
    map_text: str | None = None  # None selects the built-in default map
    regrowth_probabilities: tuple[float, ...] = DEFAULT_REGROWTH

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if len(self.regrowth_probabilities) != 6:
            raise ValueError("regrowth_probabilities must have 6 entries (k=0..5+)")
        if self.regrowth_probabilities[0] != 0.0:
            raise ValueError("regrowth probability at zero neighbors must be 0")


@dataclass
class HarvestState:
    grid: np.ndarray  # int8 cells, agents not included
    positions: tuple[tuple[int, int], ...]
    orientations: tuple[int, ...]  # 0=N 1=E 2=S 3=W
    timestep: int
    # apples in each cell's regrowth neighborhood; derived from grid,
    # cached here because both regrowth and observations need it
    neighbor_counts: np.ndarray | None = None


class HarvestEnv:
    n_actions = N_ACTIONS

    def __init__(self, config: HarvestConfig):
        self.config = config
        self.map = _cached_map(config.map_text)
        if config.n_agents > len(self.map.spawns):
            raise ValueError(
                f"map has {len(self.map.spawns)} spawn points, "
                f"{config.n_agents} agents requested"
            )
        self._prob_table = np.asarray(config.regrowth_probabilities, dtype=float)
        rows, cols = self.map.grid.shape
        self._count_pad = np.zeros((rows + 4, cols + 4), dtype=np.int16)
        self._count_buf = np.zeros((rows, cols), dtype=np.int16)

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    def neighbor_counts(self, grid: np.ndarray) -> np.ndarray:
        """Apples within L2 radius 2 of each cell (cell itself excluded)."""
        rows, cols = grid.shape
        pad = self._count_pad
        pad[:] = 0
        pad[2:-2, 2:-2] = grid == CELL_APPLE
        counts = self._count_buf
        counts[:] = 0
        for dr, dc in _NEIGHBOR_OFFSETS:
            counts += pad[2 + dr : 2 + dr + rows, 2 + dc : 2 + dc + cols]
        return counts

    def reset(self, seed: int):
        return self.reset_from_rng(np.random.default_rng(seed))

    def reset_from_rng(self, rng: np.random.Generator):
        grid = self.map.grid.copy()
        state = HarvestState(
            grid=grid,
            positions=self.map.spawns[: self.config.n_agents],
            orientations=(0,) * self.config.n_agents,
            timestep=0,
            neighbor_counts=self.neighbor_counts(grid).copy(),
        )
        return state, self.observe_all(state)

    def observe(self, state: HarvestState, agent: int) -> np.ndarray:
        return self.observe_all(state, [i == agent for i in range(self.n_agents)])[agent]

    def observe_all(self, state: HarvestState, which=None):
        rows, cols = state.grid.shape
        w = WINDOW_RADIUS
        counts = state.neighbor_counts
        if counts is None:
            counts = self.neighbor_counts(state.grid).copy()
            state.neighbor_counts = counts
        annotated = state.grid.copy()
        annotated[(annotated == CELL_APPLE) & (counts == 0)] = CELL_APPLE_LONE
        padded = np.full((rows + 2 * w, cols + 2 * w), CELL_WALL, dtype=np.int8)
        padded[w : w + rows, w : w + cols] = annotated
        for r, c in state.positions:
            padded[w + r, w + c] = CELL_AGENT
        windows = []
        for i, (r, c) in enumerate(state.positions):
            if which is not None and not which[i]:
                windows.append(None)
                continue
            win = padded[r : r + WINDOW_SIZE, c : c + WINDOW_SIZE].copy()
            win[w, w] = annotated[r, c]  # own cell shows the ground, not the agent
            windows.append(win)
        return tuple(windows)

    def advance(self, state: HarvestState, actions, rng: np.random.Generator):
        """Apply one step; returns (state, rewards, info) without observations."""
        n = self.n_agents
        if len(actions) != n:
            raise ValueError(f"expected {n} actions, got {len(actions)}")
        grid = state.grid.copy()
        rows, cols = grid.shape
        positions = list(state.positions)
        orientations = list(state.orientations)
        rewards = [0.0] * n
        occupied = set(positions)

        for i in range(n):
            a = actions[i]
            if a == NOOP:
                continue
            if a == ROTATE_LEFT:
                orientations[i] = (orientations[i] - 1) % 4
                continue
            if a == ROTATE_RIGHT:
                orientations[i] = (orientations[i] + 1) % 4
                continue
            try:
                dr, dc = _MOVES[a]
            except KeyError:
                raise ValueError(f"invalid action {a!r} for agent {i}") from None
            r, c = positions[i]
            nr, nc = r + dr, c + dc
            if not (0 <= nr < rows and 0 <= nc < cols):
                continue
            if grid[nr, nc] == CELL_WALL or (nr, nc) in occupied:
                continue
            occupied.discard((r, c))
            occupied.add((nr, nc))
            positions[i] = (nr, nc)
            if grid[nr, nc] == CELL_APPLE:
                grid[nr, nc] = CELL_EMPTY
                rewards[i] += APPLE_REWARD

        regrown = self._regrow(grid, occupied, rng)

        # neighbor counts are computed on demand by observe_all; skipping
        # them here keeps fully passive rollouts cheap
        new_state = HarvestState(
            grid=grid,
            positions=tuple(positions),
            orientations=tuple(orientations),
            timestep=state.timestep + 1,
            neighbor_counts=None,
        )
        info = {"regrown": regrown, "apples": int((grid == CELL_APPLE).sum())}
        return new_state, tuple(rewards), info

    def _regrow(self, grid: np.ndarray, occupied, rng: np.random.Generator) -> int:
        counts = self.neighbor_counts(grid)
        candidates = (grid == CELL_EMPTY) & (counts > 0)
        for r, c in occupied:
            candidates[r, c] = False
        rs, cs = np.nonzero(candidates)
        if len(rs) == 0:
            return 0
        probs = self._prob_table[np.minimum(counts[rs, cs], 5)]
        grow = rng.random(len(rs)) < probs
        grid[rs[grow], cs[grow]] = CELL_APPLE
        return int(grow.sum())

    def step(self, state: HarvestState, actions, rng: np.random.Generator):
        from . import StepOutcome

        new_state, rewards, info = self.advance(state, actions, rng)
        done = new_state.timestep >= self.config.episode_length
        return new_state, StepOutcome(
            rewards=rewards,
            observations=self.observe_all(new_state),
            done=done,
            info=info,
        )
