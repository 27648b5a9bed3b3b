"""Scripted policy and exclusion-substitute tests."""

import numpy as np
import pytest
from scipy import stats

from coopshap.envs import CELL_APPLE, CELL_APPLE_LONE, CELL_EMPTY
from coopshap.envs import harvest as hv
from coopshap.envs import predator_prey as pp
from coopshap.policies import (
    ExclusionMode,
    PolicyKind,
    PolicySpec,
    policy_act,
    substitute_action,
)


def particle_obs(others, self_state=(0.0, 0.0, 0.0, 0.0), obstacles=()):
    """others: list of (rel_x, rel_y, vx, vy, is_prey) blocks."""
    obs = [float(len(others)), *self_state]
    for block in others:
        obs.extend(block)
    for block in obstacles:
        obs.extend(block)
    return tuple(obs)


def window(apples=(), lone=(), size=7):
    win = np.full((size, size), CELL_EMPTY, dtype=np.int8)
    for r, c in apples:
        win[r, c] = CELL_APPLE
    for r, c in lone:
        win[r, c] = CELL_APPLE_LONE
    return win


def assert_uniform(draws, k, p_floor=0.01):
    counts = np.bincount(draws, minlength=k)
    assert stats.chisquare(counts).pvalue > p_floor


class TestPursuit:
    def test_greedy_toward_prey_north(self):
        obs = particle_obs([(0.0, 0.5, 0.0, 0.0, 1.0)])
        action = policy_act(PolicySpec(PolicyKind.PURSUIT), obs, np.random.default_rng(0))
        assert action == pp.UP

    def test_greedy_prefers_larger_axis(self):
        obs = particle_obs([(-0.6, 0.2, 0.0, 0.0, 1.0)])
        action = policy_act(PolicySpec(PolicyKind.PURSUIT), obs, np.random.default_rng(0))
        assert action == pp.LEFT

    def test_targets_nearest_prey(self):
        obs = particle_obs(
            [(0.9, 0.0, 0.0, 0.0, 1.0), (0.0, -0.2, 0.0, 0.0, 1.0)]
        )
        action = policy_act(PolicySpec(PolicyKind.PURSUIT), obs, np.random.default_rng(0))
        assert action == pp.DOWN

    def test_no_prey_visible_noop(self):
        obs = particle_obs([(0.5, 0.5, 0.0, 0.0, 0.0)])
        action = policy_act(PolicySpec(PolicyKind.PURSUIT), obs, np.random.default_rng(0))
        assert action == pp.NOOP

    def test_zero_skill_uniform_over_actions(self):
        obs = particle_obs([(0.0, 0.5, 0.0, 0.0, 1.0)])
        rng = np.random.default_rng(42)
        spec = PolicySpec(PolicyKind.PURSUIT, skill=0.0)
        draws = [policy_act(spec, obs, rng) for _ in range(10_000)]
        assert_uniform(draws, pp.N_ACTIONS)

    def test_malformed_observation_rejected(self):
        with pytest.raises(ValueError, match="observation"):
            policy_act(PolicySpec(PolicyKind.PURSUIT), (2.0, 0.0, 0.0), np.random.default_rng(0))


class TestEvader:
    def test_flees_nearest_predator(self):
        obs = particle_obs(
            [(0.1, 0.0, 0.0, 0.0, 0.0), (-0.9, 0.0, 0.0, 0.0, 0.0)]
        )
        action = policy_act(PolicySpec(PolicyKind.EVADER), obs, np.random.default_rng(0))
        assert action == pp.LEFT  # away from the close right-side predator


class TestHarvester:
    def test_moves_toward_nearest_apple(self):
        obs = window(apples=[(3, 5), (3, 6)])
        action = policy_act(PolicySpec(PolicyKind.HARVESTER), obs, np.random.default_rng(0))
        assert action == hv.RIGHT

    def test_skilled_avoids_lone_apple(self):
        obs = window(lone=[(3, 4)])
        action = policy_act(
            PolicySpec(PolicyKind.HARVESTER, skill=1.0), obs, np.random.default_rng(0)
        )
        assert action == hv.NOOP

    def test_unskilled_takes_lone_apple(self):
        obs = window(lone=[(3, 4)])
        action = policy_act(
            PolicySpec(PolicyKind.HARVESTER, skill=0.5), obs, np.random.default_rng(1)
        )
        # skill 0.5 gates half the steps to random; force the greedy branch
        for seed in range(10):
            rng = np.random.default_rng(seed)
            if rng.random() < 0.5:
                assert policy_act(
                    PolicySpec(PolicyKind.HARVESTER, skill=0.5),
                    obs,
                    np.random.default_rng(seed),
                ) == hv.RIGHT
                break

    def test_explores_when_no_apples_visible(self):
        obs = window()
        rng = np.random.default_rng(3)
        actions = {policy_act(PolicySpec(PolicyKind.HARVESTER), obs, rng) for _ in range(100)}
        assert actions <= {hv.UP, hv.DOWN, hv.LEFT, hv.RIGHT}
        assert len(actions) > 1

    def test_wrong_observation_type_rejected(self):
        with pytest.raises(ValueError, match="window"):
            policy_act(
                PolicySpec(PolicyKind.HARVESTER),
                particle_obs([]),
                np.random.default_rng(0),
            )


class TestLazy:
    def test_always_noop(self):
        rng = np.random.default_rng(0)
        assert policy_act(PolicySpec(PolicyKind.LAZY), None, rng) == 0
        assert policy_act(PolicySpec(PolicyKind.LAZY), window(), rng) == 0

    def test_consumes_no_randomness(self):
        rng = np.random.default_rng(5)
        before = rng.bit_generator.state
        policy_act(PolicySpec(PolicyKind.LAZY), None, rng)
        assert rng.bit_generator.state == before


class TestDeterminism:
    def test_same_rng_state_same_action(self):
        obs = particle_obs([(0.3, -0.4, 0.0, 0.0, 1.0)])
        spec = PolicySpec(PolicyKind.PURSUIT, skill=0.7)
        a = policy_act(spec, obs, np.random.default_rng(123))
        b = policy_act(spec, obs, np.random.default_rng(123))
        assert a == b


class TestSubstitutes:
    def test_noop_mode(self):
        rng = np.random.default_rng(0)
        action = substitute_action(
            ExclusionMode.NOOP, PolicySpec(PolicyKind.PURSUIT), [], particle_obs([]), rng
        )
        assert action == 0

    def test_random_mode_uniform_particle(self):
        rng = np.random.default_rng(7)
        draws = [
            substitute_action(
                ExclusionMode.RANDOM,
                PolicySpec(PolicyKind.PURSUIT),
                [],
                particle_obs([]),
                rng,
            )
            for _ in range(10_000)
        ]
        assert_uniform(draws, pp.N_ACTIONS)

    def test_random_mode_uniform_harvest(self):
        rng = np.random.default_rng(12)
        draws = [
            substitute_action(
                ExclusionMode.RANDOM,
                PolicySpec(PolicyKind.HARVESTER),
                [],
                window(),
                rng,
            )
            for _ in range(10_000)
        ]
        assert_uniform(draws, hv.N_ACTIONS)

    def test_replace_delegates_to_same_kind(self):
        obs = particle_obs([(0.0, 0.5, 0.0, 0.0, 1.0)])  # prey to the north
        present = [PolicySpec(PolicyKind.EVADER), PolicySpec(PolicyKind.PURSUIT, skill=1.0)]
        action = substitute_action(
            ExclusionMode.REPLACE,
            PolicySpec(PolicyKind.PURSUIT, skill=1.0),
            present,
            obs,
            np.random.default_rng(0),
        )
        assert action == pp.UP

    def test_replace_falls_back_to_random(self):
        obs = particle_obs([(0.0, 0.5, 0.0, 0.0, 1.0)])
        present = [PolicySpec(PolicyKind.EVADER)]
        rng = np.random.default_rng(11)
        draws = [
            substitute_action(
                ExclusionMode.REPLACE,
                PolicySpec(PolicyKind.PURSUIT),
                present,
                obs,
                rng,
            )
            for _ in range(10_000)
        ]
        assert_uniform(draws, pp.N_ACTIONS)

    def test_replace_actions_stay_in_action_set(self):
        obs = window(apples=[(0, 0), (1, 0)])
        present = [PolicySpec(PolicyKind.HARVESTER, skill=0.3)]
        rng = np.random.default_rng(2)
        for _ in range(500):
            a = substitute_action(
                ExclusionMode.REPLACE,
                PolicySpec(PolicyKind.HARVESTER),
                present,
                obs,
                rng,
            )
            assert 0 <= a < hv.N_ACTIONS


class TestPolicySpecValidation:
    def test_skill_bounds(self):
        with pytest.raises(ValueError, match="skill"):
            PolicySpec(PolicyKind.PURSUIT, skill=1.5)

    def test_speed_positive(self):
        with pytest.raises(ValueError, match="speed"):
            PolicySpec(PolicyKind.PURSUIT, speed=0.0)
