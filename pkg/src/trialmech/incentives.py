"""State-aware recommendation policies and exact BIR/BIC verification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CHECK_TOL, Instance, outside_options


@dataclass(frozen=True, eq=False)
class Policy:
    """``probs[k, t, a]``: probability of recommending arm ``a`` in state ``k`` to type ``t``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 3:
            raise ValueError("policy probabilities must have shape (states, types, arms)")
        if np.any(p < -CHECK_TOL) or np.any(np.abs(p.sum(axis=-1) - 1.0) > CHECK_TOL):
            raise ValueError("every policy distribution must be nonnegative and sum to 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __call__(self, state: int, type_: int) -> np.ndarray:
        return self.probs[state, type_]

    @property
    def floor(self) -> float:
        return float(self.probs.min())

    def check_shape(self, instance: Instance) -> None:
        want = (instance.n_states, instance.n_types, instance.n_arms)
        if self.probs.shape != want:
            raise ValueError(f"policy shape {self.probs.shape} does not match instance {want}")


@dataclass
class IncentiveReport:
    margin: float
    bir_margin: dict[int, float] = field(default_factory=dict)
    bic_margin: dict[tuple[int, int], float] = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        margins = list(self.bir_margin.values()) + list(self.bic_margin.values())
        return all(m >= self.margin - CHECK_TOL for m in margins)

    @property
    def min_margin(self) -> float:
        return min(list(self.bir_margin.values()) + list(self.bic_margin.values()))


def cross_values(instance: Instance, policy: Policy) -> np.ndarray:
    """``W[t, r]``: prior-expected utility of type ``t`` when served as type ``r``."""
    policy.check_shape(instance)
    # sum_k lambda_k sum_a pi[k, r, a] V[k, a, t]
    return np.einsum("k,kra,kat->tr", instance.prior, policy.probs, instance.values)


def policy_value(instance: Instance, policy: Policy, type_: int) -> float:
    policy.check_shape(instance)
    t = instance.type_index(type_)
    return float(np.einsum("k,ka,ka->", instance.prior, policy.probs[:, t, :], instance.values[:, :, t]))


def check_bir(instance: Instance, policy: Policy, margin: float = 0.0) -> IncentiveReport:
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    w = np.diag(cross_values(instance, policy))
    out = outside_options(instance)
    return IncentiveReport(margin, bir_margin={t: float(w[t] - out[t]) for t in range(instance.n_types)})


def check_bic(instance: Instance, policy: Policy, margin: float = 0.0) -> IncentiveReport:
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    w = cross_values(instance, policy)
    bic = {(t, r): float(w[t, t] - w[t, r]) for t in range(instance.n_types) for r in instance.misreports(t)}
    return IncentiveReport(margin, bic_margin=bic)


def check_incentives(instance: Instance, policy: Policy, margin: float = 0.0) -> IncentiveReport:
    """BIR and BIC margins in one report."""
    bir, bic = check_bir(instance, policy, margin), check_bic(instance, policy, margin)
    return IncentiveReport(margin, bir.bir_margin, bic.bic_margin)


def best_arms(values: np.ndarray) -> np.ndarray:
    """Argmax over the arm axis (axis 1), lowest index on ties."""
    return np.argmax(values, axis=1)


def best_arm_policy(instance: Instance) -> Policy:
    best = best_arms(instance.values)  # (K, T)
    probs = np.zeros((instance.n_states, instance.n_types, instance.n_arms))
    k, t = np.indices(best.shape)
    probs[k, t, best] = 1.0
    return Policy(probs)


def uniform_policy(instance: Instance) -> Policy:
    return Policy(np.full((instance.n_states, instance.n_types, instance.n_arms), 1.0 / instance.n_arms))


def epsilon_greedy(instance: Instance, eps: float, exploit: Policy) -> Policy:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    return Policy((1 - eps) * exploit.probs + eps / instance.n_arms)


def best_values(instance: Instance) -> np.ndarray:
    """Prior-mean utility of the best arm, per type."""
    return np.einsum("k,kt->t", instance.prior, instance.values.max(axis=1))


def best_values_reported(instance: Instance) -> np.ndarray:
    """``B[t, r]``: prior-mean utility of type ``t`` served the best arm for type ``r``."""
    best = best_arms(instance.values)  # (K, R)
    k = np.arange(instance.n_states)[:, None]
    v = instance.values[k, best, :]  # (K, R, T)
    return np.einsum("k,krt->tr", instance.prior, v)


def prior_gap(instance: Instance, type_: int) -> float:
    t = instance.type_index(type_)
    v = instance.values[:, :, t]
    return float(instance.prior @ (v.max(axis=1) - v.mean(axis=1)))


def degeneracy_gap(instance: Instance) -> float:
    """Smallest slack of the best-arm policy across BIR and BIC constraints."""
    best = best_values(instance)
    gaps = list(best - outside_options(instance))
    b = best_values_reported(instance)
    for t in range(instance.n_types):
        gaps.extend(best[t] - b[t, r] for r in instance.misreports(t))
    return float(min(gaps))
