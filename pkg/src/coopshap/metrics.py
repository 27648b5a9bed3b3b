"""Social outcome metrics over per-agent, per-timestep reward traces.

For an episode of T steps with N agents, let R_i be agent i's summed
return. The episode-level metrics are

* efficiency: (sum_i R_i) / T
* equality: 1 - sum_ij |R_i - R_j| / (2 N sum_i R_i), one minus the Gini
  coefficient of the returns
* sustainability: the mean over agents of the average (1-based) timestep
  at which the agent collects positive reward

Collections of episodes are averaged. Episodes where a metric is
undefined (zero total return for equality, no positive reward anywhere
for sustainability) are excluded and counted rather than imputed, and
never-rewarded agents are likewise dropped from sustainability averages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EpisodeTrace:
    """Reward matrix of one episode, shaped (agents, timesteps)."""

    rewards: np.ndarray

    def __post_init__(self) -> None:
        if self.rewards.ndim != 2:
            raise ValueError("rewards must be a 2-D (agents x timesteps) array")
        self.rewards.setflags(write=False)

    @property
    def n_agents(self) -> int:
        return self.rewards.shape[0]

    @property
    def length(self) -> int:
        return self.rewards.shape[1]

    @property
    def returns(self) -> np.ndarray:
        return self.rewards.sum(axis=1)


@dataclass(frozen=True)
class EqualityResult:
    value: float | None
    excluded_episodes: int


@dataclass(frozen=True)
class SustainabilityResult:
    value: float | None
    excluded_episodes: int
    excluded_agent_terms: int


@dataclass(frozen=True)
class PerAgentMetrics:
    """Per-agent metric vectors; sustainability is NaN where undefined."""

    efficiency: np.ndarray
    sustainability: np.ndarray
    equality: np.ndarray
    equality_excluded_episodes: int


def _as_batch(traces) -> np.ndarray:
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one episode trace")
    shape = traces[0].rewards.shape
    for t in traces:
        if t.rewards.shape != shape:
            raise ValueError("episode traces must share agent count and length")
    return np.stack([t.rewards for t in traces])


def efficiency(traces) -> float:
    batch = _as_batch(traces)
    T = batch.shape[2]
    return float(batch.sum(axis=(1, 2)).mean() / T)


def _episode_equality(returns: np.ndarray) -> float:
    n = len(returns)
    spread = np.abs(returns[:, None] - returns[None, :]).sum()
    return float(1.0 - spread / (2.0 * n * returns.sum()))


def equality(traces) -> EqualityResult:
    batch = _as_batch(traces)
    values = []
    excluded = 0
    for ep in batch:
        returns = ep.sum(axis=1)
        if returns.sum() == 0.0:
            excluded += 1
            continue
        values.append(_episode_equality(returns))
    if not values:
        return EqualityResult(None, excluded)
    return EqualityResult(float(np.mean(values)), excluded)


def sustainability(traces) -> SustainabilityResult:
    batch = _as_batch(traces)
    T = batch.shape[2]
    steps = np.arange(1, T + 1, dtype=float)  # 1-based timesteps
    values = []
    excluded_eps = 0
    excluded_agents = 0
    for ep in batch:
        agent_means = []
        for agent_rewards in ep:
            positive = agent_rewards > 0
            if not positive.any():
                excluded_agents += 1
                continue
            agent_means.append(steps[positive].mean())
        if not agent_means:
            excluded_eps += 1
            continue
        values.append(float(np.mean(agent_means)))
    if not values:
        return SustainabilityResult(None, excluded_eps, excluded_agents)
    return SustainabilityResult(float(np.mean(values)), excluded_eps, excluded_agents)


def per_agent_metrics(traces) -> PerAgentMetrics:
    """Per-agent breakdowns; the efficiency vector sums to the global one."""
    batch = _as_batch(traces)
    n_episodes, n_agents, T = batch.shape
    steps = np.arange(1, T + 1, dtype=float)

    eff = batch.sum(axis=2).mean(axis=0) / T

    sus = np.full(n_agents, np.nan)
    for i in range(n_agents):
        positive = batch[:, i, :] > 0
        if positive.any():
            sus[i] = float(np.broadcast_to(steps, positive.shape)[positive].mean())

    eq_terms = np.zeros(n_agents)
    eq_count = 0
    for ep in batch:
        returns = ep.sum(axis=1)
        total = returns.sum()
        if total == 0.0:
            continue
        eq_count += 1
        eq_terms += 1.0 - np.abs(returns[:, None] - returns[None, :]).sum(axis=1) / (
            2.0 * total
        )
    eq = eq_terms / eq_count if eq_count else np.full(n_agents, np.nan)

    return PerAgentMetrics(
        efficiency=eff,
        sustainability=sus,
        equality=eq,
        equality_excluded_episodes=n_episodes - eq_count,
    )
