"""Episode-rollout coalitional games and the attribution drivers.

A :class:`RolloutGame` turns an environment plus a policy roster into a
coalitional game over a chosen subset of agents (the attribution scope).
Evaluating a coalition simulates one full episode in which

* fixed agents (never attributed, e.g. the prey) act via their policy,
* in-coalition scope agents act via their policy,
* out-of-coalition scope agents act via the configured exclusion
  substitute,

and returns the summed reward of all scope agents. Payouts of the empty
coalition are simulated, never assumed zero: an episode of substitutes
can still earn or lose reward.

The drivers wrap the estimators from :mod:`coopshap.game`. All episode
randomness is keyed by (seed, player, draw, side) or (seed, coalition,
sample), so reports are bit-identical for any worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .envs import HarvestConfig, HarvestEnv, PredatorPreyConfig, PredatorPreyEnv
from .errors import CapacityError
from .game import (
    Coalition,
    CoalitionalGame,
    ShapleyEstimate,
    coalition_from_mask,
    coalition_stream_key,
    estimate_from_marginals,
    exact_from_table,
    mc_marginals,
    substream,
)
from .metrics import EpisodeTrace
from .policies import ExclusionMode, PolicyKind, PolicySpec, policy_act, substitute_action

_TAG_ROLLOUT = 201
_TAG_GRAND = 202
_TAG_BASELINE = 203
_TAG_TRACE = 204

DEFAULT_EXACT_SCOPE_LIMIT = 10
DEFAULT_MARGINAL_RETENTION = 1_000_000


def make_env(env_config):
    if isinstance(env_config, PredatorPreyConfig):
        return PredatorPreyEnv(env_config)
    if isinstance(env_config, HarvestConfig):
        return HarvestEnv(env_config)
    raise TypeError(f"unsupported environment config {type(env_config).__name__}")


@dataclass(frozen=True)
class RolloutGame(CoalitionalGame):
    """Coalitional game whose gain function simulates one episode."""

    env_config: object
    roster: tuple[PolicySpec, ...]
    exclusion: ExclusionMode
    scope: tuple[int, ...]
    fixed: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        roster_ids = set(range(len(self.roster)))
        scope_set, fixed_set = set(self.scope), set(self.fixed)
        if scope_set & fixed_set:
            raise ValueError("scope and fixed agent sets must be disjoint")
        if scope_set | fixed_set != roster_ids:
            raise ValueError("scope and fixed sets must cover the roster exactly")
        if not self.scope:
            raise ValueError("attribution scope must not be empty")
        env = make_env(self.env_config)
        if env.n_agents != len(self.roster):
            raise ValueError(
                f"roster size {len(self.roster)} != environment agents {env.n_agents}"
            )

    @property
    def n(self) -> int:  # type: ignore[override]
        return len(self.scope)

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        env = make_env(self.env_config)
        active = set(self.fixed)
        active.update(self.scope[p] for p in coalition.members)
        present_specs = [self.roster[i] for i in sorted(active)]

        # per-agent action plan; None observation requests are skipped
        plans = []
        needs_obs = []
        for i, spec in enumerate(self.roster):
            if i in active:
                if spec.kind is PolicyKind.LAZY:
                    plans.append(None)  # always noop, reads nothing
                    needs_obs.append(False)
                else:
                    plans.append(("policy", spec))
                    needs_obs.append(True)
            elif self.exclusion is ExclusionMode.NOOP:
                plans.append(None)
                needs_obs.append(False)
            else:
                plans.append(("substitute", spec))
                needs_obs.append(True)

        state, _ = env.reset_from_rng(rng)
        scope = self.scope
        total = 0.0
        any_obs = any(needs_obs)
        for _ in range(env.config.episode_length):
            obs = env.observe_all(state, needs_obs) if any_obs else None
            actions = []
            for i, plan in enumerate(plans):
                if plan is None:
                    actions.append(0)
                elif plan[0] == "policy":
                    actions.append(policy_act(plan[1], obs[i], rng))
                else:
                    actions.append(
                        substitute_action(self.exclusion, plan[1], present_specs, obs[i], rng)
                    )
            state, rewards, _ = env.advance(state, actions, rng)
            for s in scope:
                total += rewards[s]
        return total

    def grand_coalition(self) -> Coalition:
        return Coalition(tuple(range(self.n)), self.n)

    def empty_coalition(self) -> Coalition:
        return Coalition((), self.n)


def rollout(game: RolloutGame, coalition: Coalition, seed: int) -> float:
    """Simulate one seeded episode for ``coalition`` and return its payout."""
    return game.gain(coalition, substream(_TAG_ROLLOUT, seed))


@dataclass(frozen=True)
class AttributionReport:
    """Everything one attribution run produced.

    ``marginals`` holds the per-draw marginal contributions (players x
    draws) for Monte Carlo runs; if the run exceeded the retention cap
    they are saved to ``marginals_path`` instead. Exact runs carry the
    per-coalition mean payouts in ``coalition_means`` keyed by bitmask.
    ``rollout_count`` counts attribution episodes only; the grand and
    baseline means are extra reporting episodes on top.
    """

    estimate: ShapleyEstimate
    exclusion: ExclusionMode | None
    scope: tuple[int, ...]
    grand_mean: float
    baseline_mean: float
    grand_mean_episodes: int
    rollout_count: int
    duration_seconds: float
    marginals: np.ndarray | None = None
    marginals_path: str | None = None
    coalition_means: dict[int, float] | None = None


def _gain_task(args):
    game, keyed = args
    out = []
    for slot, members, key in keyed:
        value = game.gain(Coalition(members, game.n), substream(*key))
        out.append((slot, value))
    return out


def _evaluate_keyed(game, jobs, workers: int) -> dict:
    """Evaluate (slot, members, stream-key) jobs, optionally in a pool."""
    results: dict = {}
    if workers <= 1:
        for slot, members, key in jobs:
            results[slot] = game.gain(Coalition(members, game.n), substream(*key))
        return results
    chunk_size = max(1, math.ceil(len(jobs) / (workers * 4)))
    chunks = [jobs[k : k + chunk_size] for k in range(0, len(jobs), chunk_size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk_result in pool.map(_gain_task, [(game, c) for c in chunks]):
            for slot, value in chunk_result:
                results[slot] = value
    return results


def _reference_means(game, seed, episodes, workers):
    """Mean payouts of the grand and empty coalitions over seeded episodes."""
    n = game.n
    full = tuple(range(n))
    jobs = [(("g", k), full, (_TAG_GRAND, seed, k)) for k in range(episodes)]
    jobs += [(("b", k), (), (_TAG_BASELINE, seed, k)) for k in range(episodes)]
    results = _evaluate_keyed(game, jobs, workers)
    grand = float(np.mean([results[("g", k)] for k in range(episodes)]))
    base = float(np.mean([results[("b", k)] for k in range(episodes)]))
    return grand, base


def run_mc_attribution(
    game: CoalitionalGame,
    M: int,
    seed: int = 0,
    workers: int = 1,
    grand_episodes: int = 100,
    marginal_retention: int = DEFAULT_MARGINAL_RETENTION,
    spill_dir: str | Path | None = None,
) -> AttributionReport:
    """Monte Carlo attribution: exactly ``2 * M * n`` episode rollouts."""
    if M < 1:
        raise ValueError(f"sample count M must be >= 1, got {M}")
    start = time.perf_counter()
    marginals = mc_marginals(game, M, seed=seed, workers=workers)
    estimate = estimate_from_marginals(marginals)
    grand, base = _reference_means(game, seed, grand_episodes, workers)
    duration = time.perf_counter() - start

    marginals_path = None
    if marginals.size > marginal_retention:
        directory = Path(spill_dir) if spill_dir is not None else Path.cwd()
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"marginals_seed{seed}_M{M}.npy"
        np.save(path, marginals)
        marginals, marginals_path = None, str(path)

    return AttributionReport(
        estimate=estimate,
        exclusion=getattr(game, "exclusion", None),
        scope=getattr(game, "scope", tuple(range(game.n))),
        grand_mean=grand,
        baseline_mean=base,
        grand_mean_episodes=grand_episodes,
        rollout_count=2 * M * game.n,
        duration_seconds=duration,
        marginals=marginals,
        marginals_path=marginals_path,
    )


def run_exact_attribution(
    game: CoalitionalGame,
    samples_per_coalition: int = 200,
    seed: int = 0,
    workers: int = 1,
    max_scope: int = DEFAULT_EXACT_SCOPE_LIMIT,
) -> AttributionReport:
    """Full-enumeration attribution over ``2**n`` coalitions.

    Every coalition is simulated ``samples_per_coalition`` times and the
    mean payouts feed the exact weighted sum, sharing stream keys and the
    final computation with :func:`coopshap.game.exact_shapley`.
    """
    n = game.n
    if n > max_scope:
        raise CapacityError(
            f"exact attribution over {n} agents exceeds the limit of {max_scope}; "
            "use the Monte Carlo method"
        )
    if samples_per_coalition < 1:
        raise ValueError("samples_per_coalition must be >= 1")

    start = time.perf_counter()
    n_masks = 1 << n
    jobs = []
    for mask in range(n_masks):
        members = coalition_from_mask(mask, n).members
        for k in range(samples_per_coalition):
            jobs.append(((mask, k), members, coalition_stream_key(seed, mask, k)))
    results = _evaluate_keyed(game, jobs, workers)

    means = np.empty(n_masks)
    mean_vars = np.zeros(n_masks)
    for mask in range(n_masks):
        samples = [results[(mask, k)] for k in range(samples_per_coalition)]
        means[mask] = sum(samples) / samples_per_coalition
        if samples_per_coalition > 1:
            mean_vars[mask] = float(np.var(samples, ddof=1)) / samples_per_coalition

    estimate = exact_from_table(n, means, mean_vars, samples_per_coalition)
    duration = time.perf_counter() - start

    return AttributionReport(
        estimate=estimate,
        exclusion=getattr(game, "exclusion", None),
        scope=getattr(game, "scope", tuple(range(game.n))),
        grand_mean=float(means[n_masks - 1]),
        baseline_mean=float(means[0]),
        grand_mean_episodes=samples_per_coalition,
        rollout_count=n_masks * samples_per_coalition,
        duration_seconds=duration,
        coalition_means={mask: float(means[mask]) for mask in range(n_masks)},
    )


def simulate_traces(env_config, roster, n_episodes: int, seed: int = 0):
    """Run plain full-roster episodes and collect reward traces.

    Returns (traces, info) where info carries per-episode aggregates: a
    (episodes, agents) catch-count matrix for the pursuit world.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    env = make_env(env_config)
    n = env.n_agents
    if n != len(roster):
        raise ValueError(f"roster size {len(roster)} != environment agents {n}")
    T = env.config.episode_length
    needs_obs = [spec.kind is not PolicyKind.LAZY for spec in roster]
    any_obs = any(needs_obs)

    traces = []
    catch_rows = []
    for e in range(n_episodes):
        rng = substream(_TAG_TRACE, seed, e)
        state, _ = env.reset_from_rng(rng)
        rewards_matrix = np.zeros((n, T))
        catches = np.zeros(n)
        for t in range(T):
            obs = env.observe_all(state, needs_obs) if any_obs else None
            actions = [
                policy_act(roster[i], obs[i], rng) if needs_obs[i] else 0
                for i in range(n)
            ]
            state, rewards, info = env.advance(state, actions, rng)
            rewards_matrix[:, t] = rewards
            if "catches" in info:
                catches += info["catches"]
        traces.append(EpisodeTrace(rewards_matrix))
        catch_rows.append(catches)

    info = {}
    if isinstance(env_config, PredatorPreyConfig):
        info["catches"] = np.array(catch_rows)
    return traces, info
