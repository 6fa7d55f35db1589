"""Adversaries: generators of the (type, outcome row) sequence a trial faces.

An adversary produces rows in blocks: ``draw(rng, start, n)`` returns the
type index of rounds ``start .. start + n - 1`` and, for every arm, the
outcome index that arm would produce in that round. Stochastic adversaries
draw rows i.i.d.; table adversaries replay a fixed table; the lower-bound
constructions perturb one arm's outcome probability round by round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .learning import kl_divergence
from .model import Instance, TypeDistribution
from .rng import inverse_cdf

CASE1_FACTOR = 710

Sampler = Callable[[np.random.Generator, int, int], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class Adversary:
    kind: str  # "stochastic" | "table" | "lower-bound"
    sampler: Sampler
    n_arms: int
    length: int | None = None  # None: unbounded
    volunteer_state: np.ndarray | None = None  # (n_arms, n_public, n_outcomes), for exogenous warm-up
    name: str = ""

    def draw(self, rng: np.random.Generator, start: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n < 0 or start < 0:
            raise ValueError("round range must be nonnegative")
        if self.length is not None and start + n > self.length:
            raise ValueError(f"adversary exhausted: {self.length} rows, asked for rounds up to {start + n}")
        types, outcomes = self.sampler(rng, start, n)
        return np.asarray(types, dtype=np.int64), np.asarray(outcomes, dtype=np.int64)


def _draw_outcomes(rng: np.random.Generator, table: np.ndarray, publics: np.ndarray) -> np.ndarray:
    # table (n_arms, n_public, n_outcomes); one outcome per (round, arm)
    probs = table[:, publics, :].transpose(1, 0, 2)  # (n, n_arms, n_outcomes)
    u = rng.random(probs.shape[:2])
    return inverse_cdf(probs, u)


def stochastic_adversary(instance: Instance, state: int | np.ndarray,
                         type_dist: TypeDistribution | np.ndarray | None = None) -> Adversary:
    """i.i.d. rows: type from ``type_dist``, then each arm's outcome from the state table."""
    table = instance.states[state] if isinstance(state, (int, np.integer)) else np.asarray(state, dtype=float)
    if table.shape != instance.states.shape[1:]:
        raise ValueError("state table does not match the instance")
    td = instance.type_dist if type_dist is None else (
        type_dist.probs if isinstance(type_dist, TypeDistribution) else TypeDistribution(np.asarray(type_dist)).probs)
    n_private = instance.n_private

    def sampler(rng, start, n):
        types = inverse_cdf(np.broadcast_to(td, (n, td.size)), rng.random(n))
        return types, _draw_outcomes(rng, table, types // n_private)

    name = instance.state_names[state] if isinstance(state, (int, np.integer)) else "custom"
    return Adversary("stochastic", sampler, instance.n_arms, volunteer_state=table, name=f"stochastic:{name}")


def sequence_adversary(instance: Instance, state: int, types: Sequence[int] | np.ndarray) -> Adversary:
    """Fixed type sequence chosen in advance; outcomes drawn i.i.d. from ``state``."""
    seq = np.asarray(types, dtype=np.int64)
    table = instance.states[state]

    def sampler(rng, start, n):
        t = seq[start:start + n]
        return t, _draw_outcomes(rng, table, t // instance.n_private)

    return Adversary("stochastic", sampler, instance.n_arms, length=seq.size, volunteer_state=table,
                     name=f"sequence:{instance.state_names[state]}")


def alternating_table(instance: Instance, rounds: int, volunteer_state: int | None = 0) -> Adversary:
    """Deterministic table: arm ``a`` cycles through the outcomes with offset ``a``; types cycle too."""
    t = np.arange(rounds)
    outcomes = (t[:, None] + np.arange(instance.n_arms)[None, :]) % instance.n_outcomes
    types = t % instance.n_types
    vol = None if volunteer_state is None else instance.states[volunteer_state]
    return table_adversary(types, outcomes, vol, name="table:alternating")


def table_adversary(types: Sequence[int] | np.ndarray, outcomes: np.ndarray,
                    volunteer_state: np.ndarray | None = None, name: str = "table") -> Adversary:
    """Replays a fixed table: identical rows in every replication."""
    types = np.asarray(types, dtype=np.int64)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if outcomes.ndim != 2 or outcomes.shape[0] != types.shape[0]:
        raise ValueError("outcome table must have one row per round")

    def sampler(rng, start, n):
        return types[start:start + n], outcomes[start:start + n]

    return Adversary("table", sampler, outcomes.shape[1], length=types.shape[0],
                     volunteer_state=volunteer_state, name=name)


def concat(first: Adversary, n_first: int, second: Adversary, name: str = "") -> Adversary:
    """Rounds ``< n_first`` from ``first``, the rest from ``second`` (re-indexed from 0)."""
    if first.n_arms != second.n_arms:
        raise ValueError("adversaries disagree on the number of arms")

    def sampler(rng, start, n):
        stop = start + n
        parts_t, parts_o = [], []
        if start < n_first:
            t, o = first.draw(rng, start, min(stop, n_first) - start)
            parts_t.append(t)
            parts_o.append(o)
        if stop > n_first:
            s2 = max(start, n_first) - n_first
            t, o = second.draw(rng, s2, stop - n_first - s2)
            parts_t.append(t)
            parts_o.append(o)
        return np.concatenate(parts_t), np.concatenate(parts_o)

    length = None if second.length is None else n_first + second.length
    vol = first.volunteer_state if first.volunteer_state is not None else second.volunteer_state
    return Adversary("lower-bound" if "lower-bound" in (first.kind, second.kind) else first.kind,
                     sampler, first.n_arms, length, vol, name or f"{first.name}+{second.name}")


@dataclass(frozen=True, eq=False)
class LowerBoundPair:
    """Two adversaries that differ only in the target arm's chance of ``omega0``."""

    base: Adversary
    alt: Adversary
    delta: np.ndarray
    probs: np.ndarray
    regime: str  # "case1" | "case2"
    target_arm: int
    omega0: int

    @property
    def tv_proxy(self) -> float:
        """sqrt(2 * sum_t q_t delta_t^2), which the schedule pins to 1/2."""
        return math.sqrt(2 * float(np.sum(self.probs * self.delta ** 2)))

    @property
    def mean_shift(self) -> float:
        return float(self.delta.mean())


def delta_schedule(expected_probs: Sequence[float] | np.ndarray) -> np.ndarray:
    q = np.asarray(expected_probs, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("expected_probs must be a nonempty vector")
    if np.any(q <= 0) or np.any(q > 1):
        raise ValueError("expected sampling probabilities must lie in (0, 1]")
    return 1.0 / (q * math.sqrt(8 * float(np.sum(1.0 / q))))


def _bernoulli_rows(n_arms: int, target: int, omega0: int, omega1: int, p0: np.ndarray, p_other: float) -> Sampler:
    def sampler(rng, start, n):
        u = rng.random((n, n_arms))
        p = np.full((n, n_arms), p_other)
        p[:, target] = p0[start:start + n]
        rows = np.where(u < p, omega0, omega1)
        return np.zeros(n, dtype=np.int64), rows

    return sampler


def lb_adversary_homogeneous(expected_probs: Sequence[float] | np.ndarray, n_arms: int = 2, target_arm: int = 0,
                             omega0: int = 0, omega1: int = 1) -> LowerBoundPair:
    """Binary-outcome adversary pair against a fixed schedule of target-arm probabilities.

    ``base`` gives every arm ``omega0`` with probability 1/2 per round; ``alt``
    raises the target arm's chance to ``1/2 + delta_t``. The regime tag tells
    whether the sampling is sparse enough for the perturbation argument
    (``case1``, sum 1/q >= 710 |window|) or whether estimation error is driven
    by the plain coin-flip variance (``case2``); the pair is built either way.
    """
    q = np.asarray(expected_probs, dtype=float)
    delta = delta_schedule(q)
    if np.any(delta > 0.5):
        raise ValueError("schedule needs delta_t <= 1/2; some sampling probability is too small")
    regime = "case1" if float(np.sum(1.0 / q)) >= CASE1_FACTOR * q.size else "case2"
    half = np.full(q.size, 0.5)
    base = Adversary("lower-bound", _bernoulli_rows(n_arms, target_arm, omega0, omega1, half, 0.5),
                     n_arms, q.size, name="lb:base")
    alt = Adversary("lower-bound", _bernoulli_rows(n_arms, target_arm, omega0, omega1, half + delta, 0.5),
                    n_arms, q.size, name="lb:alt")
    return LowerBoundPair(base, alt, delta, q, regime, target_arm, omega0)


def realize_frequencies(freq: TypeDistribution | np.ndarray, window: int) -> np.ndarray:
    """Contiguous blocks in type order realizing ``freq`` exactly over ``window`` rounds."""
    p = freq.probs if isinstance(freq, TypeDistribution) else np.asarray(freq, dtype=float)
    counts = p * window
    rounded = np.rint(counts)
    if np.any(np.abs(counts - rounded) > 1e-9 * max(1, window)) or rounded.sum() != window:
        raise ValueError("freq not realizable: frequencies must be multiples of 1/|window|")
    return np.repeat(np.arange(p.size), rounded.astype(np.int64))


def lb_adversary_heterogeneous(instance: Instance, state0: int, expected_probs: Sequence[float] | np.ndarray,
                               T0: int, freq: TypeDistribution | np.ndarray | None = None,
                               hard_type: int = 0, target_arm: int = 0, omega0: int = 0,
                               omega1: int = 1) -> LowerBoundPair:
    """Lower-bound pair for typed agents.

    Warm-up rounds draw types from the instance type distribution and outcomes
    from ``state0``. Main-stage rounds emit either the single ``hard_type`` or
    a block sequence realizing ``freq`` exactly; non-target arms keep their
    ``state0`` outcomes and the target arm follows the binary perturbation.
    """
    q = np.asarray(expected_probs, dtype=float)
    window = q.size
    seq = (np.full(window, hard_type, dtype=np.int64) if freq is None
           else realize_frequencies(freq, window))
    core = lb_adversary_homogeneous(q, instance.n_arms, target_arm, omega0, omega1)
    table = instance.states[state0]
    warm = stochastic_adversary(instance, state0)

    def main(p_target):
        def sampler(rng, start, n):
            types = seq[start:start + n]
            rows = _draw_outcomes(rng, table, types // instance.n_private)
            u = rng.random(n)
            rows[:, target_arm] = np.where(u < p_target[start:start + n], omega0, omega1)
            return types, rows
        return sampler

    half = np.full(window, 0.5)
    base = Adversary("lower-bound", main(half), instance.n_arms, window, name="lb:base")
    alt = Adversary("lower-bound", main(half + core.delta), instance.n_arms, window, name="lb:alt")
    return LowerBoundPair(concat(warm, T0, base, "lb:base"), concat(warm, T0, alt, "lb:alt"),
                          core.delta, q, core.regime, target_arm, omega0)


def pinsker_gap(p: Sequence[float] | np.ndarray, q: Sequence[float] | np.ndarray) -> float:
    """sqrt(KL(p || q) / 2), an upper bound on |P(A) - Q(A)| over all events A."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share an outcome space")
    return math.sqrt(max(kl_divergence(p, q), 0.0) / 2)
