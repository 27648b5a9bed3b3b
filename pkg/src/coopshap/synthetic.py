"""Small synthetic coalitional games with known Shapley values.

Handy for validating estimators and for benchmarking convergence without
touching a simulator. All classes are picklable, so they also work with
process-pool evaluation.
"""

from __future__ import annotations

import numpy as np

from .game import Coalition, CoalitionalGame


class AdditiveGame(CoalitionalGame):
    """v(S) = sum of per-player weights; Shapley values equal the weights."""

    def __init__(self, weights):
        self.weights = tuple(float(w) for w in weights)
        self.n = len(self.weights)

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        return sum(self.weights[i] for i in coalition.members)

    def exact_values(self) -> np.ndarray:
        return np.array(self.weights)


class InteractionGame(CoalitionalGame):
    """Additive weights plus pairwise interaction terms.

    v(S) = sum_{i in S} w_i + sum_{i<j in S} q_ij. The Shapley value has
    the closed form w_i + 0.5 * sum_{j != i} q_ij, since each pair term is
    split evenly between its two players.
    """

    def __init__(self, weights, interactions):
        self.weights = tuple(float(w) for w in weights)
        self.n = len(self.weights)
        q = np.asarray(interactions, dtype=float)
        if q.shape != (self.n, self.n):
            raise ValueError(f"interactions must be {self.n}x{self.n}")
        if not np.allclose(q, q.T):
            raise ValueError("interactions must be symmetric")
        self.interactions = 0.5 * (q + q.T)
        np.fill_diagonal(self.interactions, 0.0)
        self.interactions.setflags(write=False)

    @classmethod
    def random(
        cls,
        n: int,
        rng: np.random.Generator,
        weight_range: tuple[float, float] = (1.0, 3.0),
        interaction_scale: float = 0.2,
    ) -> "InteractionGame":
        weights = rng.uniform(*weight_range, size=n)
        q = rng.uniform(-interaction_scale, interaction_scale, size=(n, n))
        q = 0.5 * (q + q.T)
        np.fill_diagonal(q, 0.0)
        return cls(weights, q)

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        members = coalition.members
        total = sum(self.weights[i] for i in members)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                total += self.interactions[members[a], members[b]]
        return total

    def exact_values(self) -> np.ndarray:
        return np.array(self.weights) + 0.5 * self.interactions.sum(axis=1)


class SymmetricCountGame(CoalitionalGame):
    """v(S) = |S|; every player's value is exactly 1."""

    def __init__(self, n: int):
        self.n = n

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        return float(coalition.size)


class GloveGame(CoalitionalGame):
    """Matching game: payout is the number of left/right glove pairs in S."""

    def __init__(self, left_holders, right_holders):
        self.left = frozenset(left_holders)
        self.right = frozenset(right_holders)
        if self.left & self.right:
            raise ValueError("a player cannot hold both glove types")
        self.n = len(self.left) + len(self.right)
        all_players = self.left | self.right
        if all_players != set(range(self.n)):
            raise ValueError("holders must cover players 0..n-1 exactly")

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        members = set(coalition.members)
        return float(min(len(members & self.left), len(members & self.right)))


class ScaledGame(CoalitionalGame):
    """a * v(S) + b * w(S), for linearity and scaling checks."""

    def __init__(self, a: float, v: CoalitionalGame, b: float = 0.0, w: CoalitionalGame | None = None):
        if w is not None and w.n != v.n:
            raise ValueError("component games must share the player count")
        self.a = float(a)
        self.b = float(b)
        self.v = v
        self.w = w
        self.n = v.n

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        total = self.a * self.v.gain(coalition, rng)
        if self.w is not None:
            total += self.b * self.w.gain(coalition, rng)
        return total


class WithDummyGame(CoalitionalGame):
    """Wraps a game with one extra player whose presence never changes v."""

    def __init__(self, base: CoalitionalGame):
        self.base = base
        self.n = base.n + 1
        self.dummy = base.n

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        members = tuple(i for i in coalition.members if i != self.dummy)
        return self.base.gain(Coalition(members, self.base.n), rng)


class NoisyGame(CoalitionalGame):
    """Adds zero-mean Gaussian noise to a base game's payout."""

    def __init__(self, base: CoalitionalGame, noise_std: float):
        self.base = base
        self.noise_std = float(noise_std)
        self.n = base.n

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        return self.base.gain(coalition, rng) + self.noise_std * float(rng.standard_normal())
