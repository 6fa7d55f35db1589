"""Belief model: outcomes, arms, agent types, states, prior and utilities.

All per-state quantities are held as dense numpy arrays indexed by position
in the declared label orderings, so every downstream computation is an exact
finite sum. Agent types are enumerated public-major: type index
``x * n_private + s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SIMPLEX_TOL = 1e-12
CHECK_TOL = 1e-9


class InstanceError(ValueError):
    """Raised when an instance description violates the model invariants.

    ``violations`` carries every problem found, not just the first one.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class AgentType:
    public: str
    private: str

    def __str__(self) -> str:
        return f"{self.public}/{self.private}"


@dataclass(frozen=True)
class ScoringFunction:
    """Score in [0, 1] per outcome, aligned with the instance outcome order."""

    values: np.ndarray
    name: str = "f"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or np.any(v < 0) or np.any(v > 1):
            raise ValueError("scores must be a vector with entries in [0, 1]")
        object.__setattr__(self, "values", v)

    @classmethod
    def indicator(cls, n_outcomes: int, index: int, name: str | None = None) -> "ScoringFunction":
        v = np.zeros(n_outcomes)
        v[index] = 1.0
        return cls(v, name or f"1[{index}]")


@dataclass(frozen=True)
class TypeDistribution:
    """Probability per agent type, in instance type order."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > SIMPLEX_TOL * max(1, p.size):
            raise ValueError(f"type distribution must be nonnegative and sum to 1, got {p.tolist()}")
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, n_types: int, index: int) -> "TypeDistribution":
        p = np.zeros(n_types)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, n_types: int) -> "TypeDistribution":
        return cls(np.full(n_types, 1.0 / n_types))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def l1(self, other: "TypeDistribution") -> float:
        return float(np.abs(self.probs - other.probs).sum())


@dataclass(frozen=True, eq=False)
class Instance:
    """Validated belief model.

    ``states`` has shape (K, n_arms, n_public, n_outcomes); ``utilities`` has
    shape (n_outcomes, n_private). ``values[k, a, t]`` is the expected utility
    of arm ``a`` in state ``k`` for type index ``t``.
    """

    arms: tuple[str, ...]
    outcomes: tuple[str, ...]
    public_types: tuple[str, ...]
    private_types: tuple[str, ...]
    state_names: tuple[str, ...]
    states: np.ndarray
    prior: np.ndarray
    utilities: np.ndarray
    scores: np.ndarray | None = None
    outside_arms: tuple[int, ...] = ()
    type_dist: np.ndarray | None = None
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        problems = _check_arrays(self)
        if problems:
            raise InstanceError(problems)
        if not self.outside_arms:
            object.__setattr__(self, "outside_arms", tuple(range(self.n_arms)))
        if self.type_dist is None:
            object.__setattr__(self, "type_dist", np.full(self.n_types, 1.0 / self.n_types))
        # values[k, a, x, s] -> flatten (x, s) into the type axis
        v = np.einsum("kaxo,os->kaxs", self.states, self.utilities)
        v = v.reshape(self.n_states, self.n_arms, self.n_types)
        for arr in (self.states, self.prior, self.utilities, v):
            arr.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def n_public(self) -> int:
        return len(self.public_types)

    @property
    def n_private(self) -> int:
        return len(self.private_types)

    @property
    def n_types(self) -> int:
        return self.n_public * self.n_private

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def types(self) -> list[AgentType]:
        return [AgentType(x, s) for x in self.public_types for s in self.private_types]

    def type_index(self, t: AgentType | int | tuple[str, str]) -> int:
        if isinstance(t, (int, np.integer)):
            if not 0 <= t < self.n_types:
                raise IndexError(f"type index {t} out of range")
            return int(t)
        if isinstance(t, tuple) and not isinstance(t, AgentType):
            t = AgentType(*t)
        try:
            return self.public_types.index(t.public) * self.n_private + self.private_types.index(t.private)
        except ValueError:
            raise KeyError(f"unknown type {t}") from None

    def public_of(self, t: int) -> int:
        return t // self.n_private

    def private_of(self, t: int) -> int:
        return t % self.n_private

    def type_label(self, t: int) -> str:
        return f"{self.public_types[self.public_of(t)]}/{self.private_types[self.private_of(t)]}"

    def misreports(self, t: int) -> list[int]:
        """Type indices sharing the public part of ``t`` with a different private part."""
        x = self.public_of(t)
        return [x * self.n_private + r for r in range(self.n_private) if r != self.private_of(t)]

    def state_table(self, k: int) -> np.ndarray:
        return self.states[k]

    def default_scoring(self) -> ScoringFunction | None:
        return None if self.scores is None else ScoringFunction(self.scores, "scores")

    def with_prior(self, support: Iterable[int], weights: Sequence[float]) -> "Instance":
        idx = list(support)
        return Instance(
            arms=self.arms, outcomes=self.outcomes, public_types=self.public_types,
            private_types=self.private_types,
            state_names=tuple(self.state_names[i] for i in idx),
            states=np.array(self.states[idx]), prior=np.asarray(weights, dtype=float),
            utilities=np.array(self.utilities), scores=self.scores,
            outside_arms=self.outside_arms, type_dist=None,
        )

    def restrict_private(self, private: Sequence[int]) -> "Instance":
        """Sub-instance keeping only the listed private types (all public types kept)."""
        private = list(private)
        td = self.type_dist.reshape(self.n_public, self.n_private)[:, private].ravel()
        td = td / td.sum() if td.sum() > 0 else None
        return Instance(
            arms=self.arms, outcomes=self.outcomes, public_types=self.public_types,
            private_types=tuple(self.private_types[s] for s in private),
            state_names=self.state_names, states=np.array(self.states), prior=np.array(self.prior),
            utilities=np.array(self.utilities[:, private]), scores=self.scores,
            outside_arms=self.outside_arms, type_dist=td,
        )

    def restrict_types_index(self, private: Sequence[int]) -> list[int]:
        """Type indices of this instance that survive :meth:`restrict_private`."""
        return [x * self.n_private + s for x in range(self.n_public) for s in private]


def _check_arrays(inst: Instance) -> list[str]:
    out: list[str] = []
    for name in ("arms", "outcomes", "public_types", "private_types", "state_names"):
        labels = getattr(inst, name)
        if len(labels) == 0:
            out.append(f"{name} is empty")
        if len(set(labels)) != len(labels):
            out.append(f"{name} has duplicate labels")
    if out:
        return out
    states = np.asarray(inst.states, dtype=float)
    object.__setattr__(inst, "states", states)
    shape = (inst.n_states, inst.n_arms, inst.n_public, inst.n_outcomes)
    if states.shape != shape:
        return [f"states have shape {states.shape}, expected {shape}"]
    for k in range(shape[0]):
        for a in range(shape[1]):
            for x in range(shape[2]):
                d = states[k, a, x]
                where = f"state {inst.state_names[k]!r}, arm {inst.arms[a]!r}, public type {inst.public_types[x]!r}"
                if np.any(d < 0):
                    out.append(f"{where}: negative probability")
                s = d.sum()
                if abs(s - 1.0) > SIMPLEX_TOL:
                    out.append(f"{where}: distribution sums to {s:.12g}")
                elif np.any(d <= 0):
                    out.append(f"{where}: full-support violated")
    prior = np.asarray(inst.prior, dtype=float)
    object.__setattr__(inst, "prior", prior)
    if prior.shape != (inst.n_states,):
        out.append("prior weights do not match the state list")
    elif np.any(prior < 0) or abs(prior.sum() - 1.0) > SIMPLEX_TOL:
        out.append(f"prior weights sum to {prior.sum():.12g}")
    for i in range(inst.n_states):
        for j in range(i):
            if np.array_equal(states[i], states[j]):
                out.append(f"states {inst.state_names[j]!r} and {inst.state_names[i]!r} are identical")
    u = np.asarray(inst.utilities, dtype=float)
    object.__setattr__(inst, "utilities", u)
    if u.shape != (inst.n_outcomes, inst.n_private):
        out.append(f"utilities have shape {u.shape}, expected {(inst.n_outcomes, inst.n_private)}")
    elif np.any(u < 0) or np.any(u > 1):
        out.append("utilities must lie in [0, 1]")
    if inst.scores is not None:
        f = np.asarray(inst.scores, dtype=float)
        object.__setattr__(inst, "scores", f)
        if f.shape != (inst.n_outcomes,) or np.any(f < 0) or np.any(f > 1):
            out.append("scores must give a value in [0, 1] for every outcome")
    arms_out = tuple(int(a) for a in inst.outside_arms)
    object.__setattr__(inst, "outside_arms", arms_out)
    if any(not 0 <= a < inst.n_arms for a in arms_out) or len(set(arms_out)) != len(arms_out):
        out.append("outside_arms must be distinct arms of the instance")
    if inst.type_dist is not None:
        td = np.asarray(inst.type_dist, dtype=float)
        object.__setattr__(inst, "type_dist", td)
        if td.shape != (inst.n_public * inst.n_private,) or np.any(td < 0) or abs(td.sum() - 1) > SIMPLEX_TOL:
            out.append("type distribution must be a probability vector over all types")
    return out


def expected_utility(instance: Instance, state: int | np.ndarray, arm: int, type_: int | AgentType) -> float:
    """Expected utility of ``arm`` for ``type_`` when outcomes follow ``state``.

    ``state`` is either an index into the prior support or an outcome table of
    shape (n_arms, n_public, n_outcomes), e.g. an empirical state.
    """
    t = instance.type_index(type_)
    if isinstance(state, (int, np.integer)):
        return float(instance.values[state, arm, t])
    table = np.asarray(state)
    x, s = instance.public_of(t), instance.private_of(t)
    return float(table[arm, x] @ instance.utilities[:, s])


def prior_mean_values(instance: Instance) -> np.ndarray:
    """Prior-mean utility per (arm, type)."""
    return np.einsum("k,kat->at", instance.prior, instance.values)


def outside_option(instance: Instance, type_: int | AgentType) -> float:
    t = instance.type_index(type_)
    means = prior_mean_values(instance)[:, t]
    return float(means[list(instance.outside_arms)].max())


def outside_options(instance: Instance) -> np.ndarray:
    means = prior_mean_values(instance)[list(instance.outside_arms)]
    return means.max(axis=0)


def average_score(outcome_table: np.ndarray, arm: int, scoring: ScoringFunction,
                  window: Sequence[int] | slice | None = None) -> float:
    """Mean score of ``arm`` over the rounds in ``window``.

    ``outcome_table`` holds outcome indices with shape (rounds, n_arms).
    """
    table = np.asarray(outcome_table)
    col = table[:, arm] if window is None else table[window, arm]
    if np.size(col) == 0:
        raise ValueError("empty estimation window")
    return float(scoring.values[col].mean())
