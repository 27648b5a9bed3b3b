"""Rollout-game and attribution-driver tests."""

import numpy as np
import pytest

from coopshap.attribution import (
    RolloutGame,
    rollout,
    run_exact_attribution,
    run_mc_attribution,
    simulate_traces,
)
from coopshap.envs import HarvestConfig, PredatorPreyConfig
from coopshap.errors import CapacityError
from coopshap.game import Coalition, exact_shapley, substream
from coopshap.policies import ExclusionMode, PolicyKind, PolicySpec
from coopshap.synthetic import InteractionGame

_TAG_GRAND = 202  # mirrors attribution's internal grand-mean stream tag


def pp_game(mode=ExclusionMode.NOOP, speeds=(1.0, 1.0, 1.0), T=40):
    roster = tuple(PolicySpec(PolicyKind.PURSUIT, speed=s) for s in speeds) + (
        PolicySpec(PolicyKind.EVADER, speed=1.3),
    )
    cfg = PredatorPreyConfig(speeds=tuple(speeds) + (1.3,), episode_length=T)
    return RolloutGame(cfg, roster, mode, scope=(0, 1, 2), fixed=(3,))


def harvest_game(mode=ExclusionMode.NOOP, T=60, n=4):
    roster = tuple(PolicySpec(PolicyKind.HARVESTER) for _ in range(n))
    cfg = HarvestConfig(n_agents=n, episode_length=T)
    return RolloutGame(cfg, roster, mode, scope=tuple(range(n)))


class TestRolloutGame:
    def test_scope_fixed_must_partition_roster(self):
        roster = (
            PolicySpec(PolicyKind.PURSUIT),
            PolicySpec(PolicyKind.EVADER, speed=1.3),
        )
        cfg = PredatorPreyConfig(roles=(0, 1), speeds=(1.0, 1.3))
        with pytest.raises(ValueError, match="cover the roster"):
            RolloutGame(cfg, roster, ExclusionMode.NOOP, scope=(0,), fixed=())
        with pytest.raises(ValueError, match="disjoint"):
            RolloutGame(cfg, roster, ExclusionMode.NOOP, scope=(0, 1), fixed=(1,))

    def test_rollout_deterministic(self):
        game = pp_game()
        c = Coalition((0, 2), 3)
        assert rollout(game, c, seed=7) == rollout(game, c, seed=7)

    def test_empty_coalition_noop_zero_payout(self):
        game = pp_game()
        for seed in range(5):
            assert rollout(game, Coalition((), 3), seed) == 0.0

    def test_full_coalition_noop_equals_plain_episode(self):
        game = pp_game()
        roster = game.roster
        full = Coalition((0, 1, 2), 3)
        rng = substream(99, 0)
        payout = game.gain(full, rng)

        # replay the same stream through a plain full-roster episode
        from coopshap.attribution import make_env
        from coopshap.policies import policy_act

        env = make_env(game.env_config)
        rng = substream(99, 0)
        state, _ = env.reset_from_rng(rng)
        total = 0.0
        for _ in range(env.config.episode_length):
            obs = env.observe_all(state)
            actions = [policy_act(roster[i], obs[i], rng) for i in range(4)]
            state, rewards, _ = env.advance(state, actions, rng)
            total += sum(rewards[:3])
        assert payout == total

    def test_harvest_empty_coalition_noop_zero(self):
        game = harvest_game()
        assert rollout(game, Coalition((), 4), seed=0) == 0.0

    def test_all_lazy_roster_with_noop_substitutes_zero_reward(self):
        # nothing but frozen predators: no catches, no boundary events
        roster = (
            PolicySpec(PolicyKind.LAZY),
            PolicySpec(PolicyKind.LAZY),
            PolicySpec(PolicyKind.LAZY),
            PolicySpec(PolicyKind.EVADER, speed=1.3),
        )
        cfg = PredatorPreyConfig(episode_length=60)
        game = RolloutGame(cfg, roster, ExclusionMode.NOOP, scope=(0, 1, 2), fixed=(3,))
        for seed in range(10):
            for members in ((), (0,), (0, 1, 2)):
                assert rollout(game, Coalition(members, 3), seed) == 0.0


class TestMCAttribution:
    def test_report_shapes_and_counts(self):
        game = pp_game(T=20)
        report = run_mc_attribution(game, M=8, seed=1, grand_episodes=5)
        assert report.estimate.n == 3
        assert report.rollout_count == 2 * 8 * 3
        assert report.marginals.shape == (3, 8)
        assert report.exclusion is ExclusionMode.NOOP
        assert report.duration_seconds > 0

    def test_marginal_mean_reproduces_values(self):
        game = pp_game(T=20)
        report = run_mc_attribution(game, M=10, seed=3, grand_episodes=2)
        np.testing.assert_array_equal(
            report.marginals.mean(axis=1), report.estimate.values
        )

    def test_grand_mean_matches_manual_replay(self):
        game = pp_game(T=20)
        report = run_mc_attribution(game, M=2, seed=5, grand_episodes=4)
        full = Coalition((0, 1, 2), 3)
        manual = np.mean(
            [game.gain(full, substream(_TAG_GRAND, 5, k)) for k in range(4)]
        )
        assert report.grand_mean == pytest.approx(manual)

    def test_worker_counts_agree_bitwise(self):
        game = pp_game(T=20)
        a = run_mc_attribution(game, M=6, seed=2, workers=1, grand_episodes=3)
        b = run_mc_attribution(game, M=6, seed=2, workers=3, grand_episodes=3)
        np.testing.assert_array_equal(a.estimate.values, b.estimate.values)
        np.testing.assert_array_equal(a.marginals, b.marginals)
        assert a.grand_mean == b.grand_mean

    def test_marginal_spill_beyond_retention_cap(self, tmp_path):
        game = pp_game(T=10)
        report = run_mc_attribution(
            game, M=4, seed=0, grand_episodes=2,
            marginal_retention=5, spill_dir=tmp_path,
        )
        assert report.marginals is None
        spilled = np.load(report.marginals_path)
        np.testing.assert_array_equal(
            spilled.mean(axis=1), report.estimate.values
        )

    def test_m_zero_rejected(self):
        with pytest.raises(ValueError, match="M"):
            run_mc_attribution(pp_game(T=10), M=0)


class TestExactAttribution:
    def test_matches_game_core_on_synthetic_game(self):
        game = InteractionGame.random(4, np.random.default_rng(6))
        report = run_exact_attribution(game, samples_per_coalition=1, seed=0)
        core = exact_shapley(game, samples_per_coalition=1, seed=0)
        np.testing.assert_array_equal(report.estimate.values, core.values)

    def test_single_agent_scope(self):
        roster = (
            PolicySpec(PolicyKind.PURSUIT, speed=2.0),
            PolicySpec(PolicyKind.EVADER, speed=1.3),
        )
        cfg = PredatorPreyConfig(roles=(0, 1), speeds=(2.0, 1.3), episode_length=30)
        game = RolloutGame(cfg, roster, ExclusionMode.NOOP, scope=(0,), fixed=(1,))
        report = run_exact_attribution(game, samples_per_coalition=10, seed=4)
        expected = report.coalition_means[1] - report.coalition_means[0]
        assert report.estimate.values[0] == pytest.approx(expected)

    def test_efficiency_identity(self):
        game = pp_game(T=20)
        report = run_exact_attribution(game, samples_per_coalition=5, seed=2)
        assert report.estimate.values.sum() == pytest.approx(
            report.grand_mean - report.baseline_mean, rel=1e-9, abs=1e-9
        )

    def test_capacity_error_directs_to_mc(self):
        game = InteractionGame.random(5, np.random.default_rng(0))
        with pytest.raises(CapacityError, match="Monte Carlo"):
            run_exact_attribution(game, samples_per_coalition=1, max_scope=4)

    def test_worker_counts_agree_bitwise(self):
        game = pp_game(T=15)
        a = run_exact_attribution(game, samples_per_coalition=3, seed=1, workers=1)
        b = run_exact_attribution(game, samples_per_coalition=3, seed=1, workers=3)
        np.testing.assert_array_equal(a.estimate.values, b.estimate.values)
        assert a.coalition_means == b.coalition_means

    def test_rollout_count(self):
        game = pp_game(T=10)
        report = run_exact_attribution(game, samples_per_coalition=4, seed=0)
        assert report.rollout_count == (2**3) * 4

    def test_mc_close_to_exact_on_equal_speed_scenario(self):
        # desk-scale sampling budgets: every agent's Monte Carlo estimate
        # lands within 10% of the enumerated value
        game = pp_game(speeds=(1.0, 1.0, 1.0), T=100)
        exact = run_exact_attribution(game, samples_per_coalition=200, seed=1, workers=2)
        mc = run_mc_attribution(game, M=1000, seed=1, workers=2, grand_episodes=5)
        rel = np.abs(mc.estimate.values - exact.estimate.values) / np.abs(
            exact.estimate.values
        )
        assert rel.mean() <= 0.10


class TestSimulateTraces:
    def test_shapes_and_determinism(self):
        roster = (
            PolicySpec(PolicyKind.PURSUIT),
            PolicySpec(PolicyKind.PURSUIT),
            PolicySpec(PolicyKind.PURSUIT),
            PolicySpec(PolicyKind.EVADER, speed=1.3),
        )
        cfg = PredatorPreyConfig(episode_length=25)
        t1, i1 = simulate_traces(cfg, roster, n_episodes=4, seed=8)
        t2, i2 = simulate_traces(cfg, roster, n_episodes=4, seed=8)
        assert len(t1) == 4
        for a, b in zip(t1, t2):
            np.testing.assert_array_equal(a.rewards, b.rewards)
        np.testing.assert_array_equal(i1["catches"], i2["catches"])
        assert i1["catches"].shape == (4, 4)

    def test_lazy_agents_earn_nothing_in_harvest(self):
        roster = (
            PolicySpec(PolicyKind.HARVESTER),
            PolicySpec(PolicyKind.HARVESTER),
            PolicySpec(PolicyKind.LAZY),
        )
        cfg = HarvestConfig(n_agents=3, episode_length=40)
        traces, info = simulate_traces(cfg, roster, n_episodes=2, seed=0)
        for t in traces:
            assert t.returns[2] == 0.0
        assert "catches" not in info
