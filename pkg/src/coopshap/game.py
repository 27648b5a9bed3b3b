"""Coalitional games and Shapley value estimators.

A coalitional game assigns a payout to every subset (coalition) of its
players. The Shapley value of player ``i`` is the weighted average of the
marginal payout ``v(S + i) - v(S)`` over all coalitions ``S`` that exclude
``i``, with the classic weight ``|S|! (n - |S| - 1)! / n!``.

Two estimators are provided:

* :func:`exact_shapley` enumerates all ``2**n`` coalitions, evaluating each
  one once and reusing the result for every player.
* :func:`mc_shapley` samples, for each player and draw, a uniformly random
  player ordering and uses the players preceding ``i`` as the coalition.
  Under this sampling law the plain mean of marginal contributions is an
  unbiased estimate of the exact value. Each draw simulates the
  with-player and without-player evaluations on independent randomness
  streams, so a full run costs exactly ``2 * M * n`` gain evaluations.

All randomness is derived from ``(seed, tag, player, draw, side)`` keys, so
results are bit-identical regardless of evaluation order or worker count.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .errors import CapacityError

# Hard ceiling for coalition enumeration; beyond this the bitmask walk is
# pointless even as a stream.
MAX_ENUMERATION_PLAYERS = 24

# Randomness-stream domain tags. Persisted results depend on these values.
_TAG_COALITION = 101
_TAG_PERMUTATION = 102
_TAG_GAIN = 103


def substream(*key: int) -> np.random.Generator:
    """Return a Generator keyed by a tuple of non-negative integers.

    Identical keys always produce identical streams, which is what makes
    every estimator in this module independent of scheduling order.
    """
    return np.random.default_rng(np.random.SeedSequence(key))


@dataclass(frozen=True)
class Coalition:
    """A subset of the ``n`` players, stored as a sorted index tuple."""

    members: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"player count must be >= 0, got {self.n}")
        prev = -1
        for m in self.members:
            if not 0 <= m < self.n:
                raise ValueError(f"member {m} outside [0, {self.n})")
            if m <= prev:
                raise ValueError("members must be strictly increasing")
            prev = m

    @classmethod
    def from_iterable(cls, members, n: int) -> "Coalition":
        return cls(tuple(sorted(set(members))), n)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def mask(self) -> int:
        """Bitmask form, usable as a compact dictionary key."""
        m = 0
        for i in self.members:
            m |= 1 << i
        return m

    def __contains__(self, player: int) -> bool:
        return player in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def with_member(self, player: int) -> "Coalition":
        if player in self.members:
            return self
        return Coalition(tuple(sorted(self.members + (player,))), self.n)


class CoalitionalGame(ABC):
    """Evaluation contract mapping a coalition to a payout.

    ``gain`` receives a dedicated randomness stream per evaluation. A
    deterministic game simply ignores it; a stochastic game must draw all
    of its randomness from it so that repeated evaluations with independent
    streams give i.i.d. payout samples. Implementations must be safe to
    call from multiple workers at once.
    """

    n: int

    @abstractmethod
    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        """Return the payout of ``coalition``."""


class FunctionGame(CoalitionalGame):
    """Deterministic game backed by a plain function of the member tuple."""

    def __init__(self, n: int, fn: Callable[[tuple[int, ...]], float]):
        if n < 0:
            raise ValueError("player count must be >= 0")
        self.n = n
        self._fn = fn

    def gain(self, coalition: Coalition, rng: np.random.Generator) -> float:
        return float(self._fn(coalition.members))


class EstimationMethod(Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class ShapleyEstimate:
    """Per-player contribution estimates.

    ``stderr`` is zero wherever sampling noise cannot be estimated (exact
    runs on deterministic games, or a single Monte Carlo draw).
    ``num_draws`` is the Monte Carlo draw count M, 0 for exact runs.
    ``samples_per_player`` counts payout samples behind each player's
    value: M for Monte Carlo, the per-coalition sample count for exact.
    """

    values: np.ndarray
    stderr: np.ndarray
    samples_per_player: np.ndarray
    method: EstimationMethod
    num_draws: int

    def __post_init__(self) -> None:
        n = len(self.values)
        if len(self.stderr) != n or len(self.samples_per_player) != n:
            raise ValueError("estimate vectors must share one length")
        if np.any(self.stderr < 0):
            raise ValueError("stderr must be non-negative")
        for arr in (self.values, self.stderr, self.samples_per_player):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.values)

    def ranking(self) -> list[int]:
        """Player indices sorted by decreasing value."""
        order = np.argsort(-self.values, kind="stable")
        return [int(i) for i in order]


def enumerate_coalitions(n: int, excluding: int | None = None) -> Iterator[Coalition]:
    """Yield every coalition of ``n`` players exactly once, starting with
    the empty one. With ``excluding`` set, the 2**(n-1) coalitions that
    avoid that player are yielded instead.
    """
    if n < 0:
        raise ValueError(f"player count must be >= 0, got {n}")
    if n > MAX_ENUMERATION_PLAYERS:
        raise CapacityError(
            f"enumeration over {n} players exceeds the {MAX_ENUMERATION_PLAYERS}-player bound"
        )
    if excluding is not None and not 0 <= excluding < n:
        raise ValueError(f"excluded player {excluding} outside [0, {n})")
    free = [i for i in range(n) if i != excluding]
    for mask in range(1 << len(free)):
        members = tuple(free[j] for j in range(len(free)) if (mask >> j) & 1)
        yield Coalition(members, n)


def shapley_weight(n: int, s: int) -> Fraction:
    """Exact coalition weight ``s! (n - s - 1)! / n!`` for coalition size s."""
    if n < 1:
        raise ValueError(f"player count must be >= 1, got {n}")
    if not 0 <= s <= n - 1:
        raise ValueError(f"coalition size {s} outside [0, {n - 1}]")
    return Fraction(math.factorial(s) * math.factorial(n - s - 1), math.factorial(n))


def _bit_counts(n_masks: int, n_bits: int) -> np.ndarray:
    counts = np.zeros(n_masks, dtype=np.int64)
    masks = np.arange(n_masks)
    for b in range(n_bits):
        counts += (masks >> b) & 1
    return counts


def exact_shapley(
    game: CoalitionalGame,
    samples_per_coalition: int = 1,
    seed: int = 0,
    max_coalitions: int = 1 << 20,
) -> ShapleyEstimate:
    """Compute Shapley values by full coalition enumeration.

    Every coalition's payout is evaluated ``samples_per_coalition`` times
    on independent streams and averaged; the averages are shared across
    players, so the total cost is ``2**n * samples_per_coalition`` gain
    evaluations. For stochastic games the reported stderr propagates the
    per-coalition sample variance through the weighted sum (coalition
    means are independent by construction); it is 0 when
    ``samples_per_coalition`` is 1, where no variance estimate exists.
    """
    n = game.n
    if n < 1:
        raise ValueError("exact_shapley requires at least one player")
    if samples_per_coalition < 1:
        raise ValueError("samples_per_coalition must be >= 1")
    n_masks = 1 << n
    if n_masks > max_coalitions:
        raise CapacityError(
            f"2**{n} = {n_masks} coalition evaluations exceed the budget of {max_coalitions}"
        )

    means = np.empty(n_masks)
    mean_vars = np.zeros(n_masks)
    for mask in range(n_masks):
        coalition = coalition_from_mask(mask, n)
        samples = [
            game.gain(coalition, coalition_stream(seed, mask, k))
            for k in range(samples_per_coalition)
        ]
        means[mask] = sum(samples) / samples_per_coalition
        if samples_per_coalition > 1:
            sample_var = float(np.var(samples, ddof=1))
            mean_vars[mask] = sample_var / samples_per_coalition

    return exact_from_table(n, means, mean_vars, samples_per_coalition)


def coalition_from_mask(mask: int, n: int) -> Coalition:
    return Coalition(tuple(i for i in range(n) if (mask >> i) & 1), n)


def coalition_stream_key(seed: int, mask: int, sample: int) -> tuple[int, ...]:
    """Stream key for one evaluation of the exact-method coalition table."""
    return (_TAG_COALITION, seed, mask, sample)


def coalition_stream(seed: int, mask: int, sample: int) -> np.random.Generator:
    return substream(*coalition_stream_key(seed, mask, sample))


def exact_from_table(
    n: int,
    means: np.ndarray,
    mean_vars: np.ndarray,
    samples_per_coalition: int,
) -> ShapleyEstimate:
    """Weighted-sum step of the exact method, from a mask-indexed table.

    ``means[mask]`` is the mean payout of the coalition with that bitmask
    and ``mean_vars[mask]`` the variance of that mean (0 for deterministic
    games). Weights are computed as exact rationals and converted to
    float at the final multiply.
    """
    n_masks = 1 << n
    if len(means) != n_masks or len(mean_vars) != n_masks:
        raise ValueError(f"table must have 2**{n} entries")
    sizes = _bit_counts(n_masks, n)
    weights = np.array([float(shapley_weight(n, s)) for s in range(n)])

    values = np.empty(n)
    variances = np.empty(n)
    all_masks = np.arange(n_masks)
    for i in range(n):
        without = all_masks[(all_masks >> i) & 1 == 0]
        w = weights[sizes[without]]
        diffs = means[without | (1 << i)] - means[without]
        values[i] = float(np.dot(w, diffs))
        variances[i] = float(np.dot(w * w, mean_vars[without | (1 << i)] + mean_vars[without]))

    return ShapleyEstimate(
        values=values,
        stderr=np.sqrt(variances),
        samples_per_player=np.full(n, samples_per_coalition, dtype=np.int64),
        method=EstimationMethod.EXACT,
        num_draws=0,
    )


def _mc_pair(game: CoalitionalGame, seed: int, player: int, draw: int) -> float:
    """One marginal-contribution sample for (player, draw); two gain calls."""
    n = game.n
    perm = substream(_TAG_PERMUTATION, seed, player, draw).permutation(n)
    pos = int(np.nonzero(perm == player)[0][0])
    without = Coalition(tuple(sorted(int(p) for p in perm[:pos])), n)
    with_i = without.with_member(player)
    r_plus = game.gain(with_i, substream(_TAG_GAIN, seed, player, draw, 0))
    r_minus = game.gain(without, substream(_TAG_GAIN, seed, player, draw, 1))
    return float(r_plus) - float(r_minus)


def _mc_chunk(args) -> list[tuple[int, int, float]]:
    game, seed, pairs = args
    return [(i, m, _mc_pair(game, seed, i, m)) for i, m in pairs]


def mc_marginals(
    game: CoalitionalGame,
    M: int,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """Sample the full ``(n, M)`` matrix of marginal contributions.

    Entry ``[i, m]`` is ``v(S + i) - v(S)`` for the coalition drawn from
    the permutation keyed by ``(seed, i, m)``. With ``workers > 1`` the
    pairs are evaluated in a process pool (the game must be picklable);
    results land in their keyed slots, so the matrix is identical for any
    worker count.
    """
    n = game.n
    if n < 1:
        raise ValueError("mc_marginals requires at least one player")
    if M < 1:
        raise ValueError(f"sample count M must be >= 1, got {M}")

    marginals = np.empty((n, M))
    if workers <= 1:
        for i in range(n):
            for m in range(M):
                marginals[i, m] = _mc_pair(game, seed, i, m)
        return marginals

    pairs = [(i, m) for i in range(n) for m in range(M)]
    chunk_size = max(1, math.ceil(len(pairs) / (workers * 4)))
    chunks = [pairs[k : k + chunk_size] for k in range(0, len(pairs), chunk_size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(_mc_chunk, [(game, seed, c) for c in chunks]):
            for i, m, value in result:
                marginals[i, m] = value
    return marginals


def estimate_from_marginals(marginals: np.ndarray) -> ShapleyEstimate:
    """Build a Monte Carlo estimate from a marginal-contribution matrix."""
    n, M = marginals.shape
    values = marginals.mean(axis=1)
    if M > 1:
        stderr = marginals.std(axis=1, ddof=1) / math.sqrt(M)
    else:
        stderr = np.zeros(n)
    return ShapleyEstimate(
        values=values,
        stderr=stderr,
        samples_per_player=np.full(n, M, dtype=np.int64),
        method=EstimationMethod.MONTE_CARLO,
        num_draws=M,
    )


def mc_shapley(
    game: CoalitionalGame,
    M: int,
    seed: int = 0,
    workers: int = 1,
) -> ShapleyEstimate:
    """Monte Carlo Shapley estimate from ``M`` draws per player.

    Costs exactly ``2 * M * n`` gain evaluations. ``stderr`` is the sample
    standard deviation of the marginal contributions divided by sqrt(M).
    """
    return estimate_from_marginals(mc_marginals(game, M, seed=seed, workers=workers))
