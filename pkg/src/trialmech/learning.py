"""State estimation from warm-up data and the sample-size formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import bench_homogeneous
from .incentives import degeneracy_gap, prior_gap
from .model import CHECK_TOL, Instance
from .rng import batched, stream, wilson_interval


@dataclass(frozen=True, eq=False)
class WarmupData:
    """Outcome counts with shape (n_arms, n_public, n_outcomes)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 3 or np.any(c < 0):
            raise ValueError("warm-up counts must be a nonnegative (arms, public types, outcomes) array")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def empty(cls, instance: Instance) -> "WarmupData":
        return cls(np.zeros((instance.n_arms, instance.n_public, instance.n_outcomes), dtype=np.int64))

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=-1)

    def __add__(self, other: "WarmupData") -> "WarmupData":
        return WarmupData(self.counts + other.counts)


def empirical_state(data: WarmupData) -> np.ndarray:
    """Per-(arm, public type) empirical outcome frequencies."""
    tot = data.totals
    if np.any(tot == 0):
        a, x = np.argwhere(tot == 0)[0]
        raise ValueError(f"no warm-up samples for arm {a}, public type {x}")
    return data.counts / tot[..., None]


def log_likelihoods(instance: Instance, data: WarmupData) -> np.ndarray:
    """Log-likelihood of the counts under every support state."""
    return np.einsum("axo,kaxo->k", data.counts, np.log(instance.states))


def mle_state(instance: Instance, data: WarmupData) -> int:
    """Index of the most likely support state; lowest index on ties."""
    ll = log_likelihoods(instance, data)
    return int(np.argmax(ll))


def mle_state_batch(instance: Instance, counts: np.ndarray) -> np.ndarray:
    """``mle_state`` for a stack of count arrays of shape (R, n_arms, n_public, n_outcomes)."""
    ll = np.einsum("raxo,kaxo->rk", counts, np.log(instance.states))
    return np.argmax(ll, axis=1)


@dataclass
class KlReport:
    kl: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)  # (k, k') -> (n_arms, n_public)
    ll_max: dict[tuple[int, int], float] = field(default_factory=dict)
    kl_min: dict[tuple[int, int], float] = field(default_factory=dict)
    lr_min: float | None = None
    argmin_pair: tuple[int, int] | None = None


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if np.any((p > 0) & (q <= 0)):
        raise ValueError("first distribution is not absolutely continuous w.r.t. the second")
    m = p > 0
    return float(np.sum(p[m] * np.log(p[m] / q[m])))


def kl_quantities(instance: Instance) -> KlReport:
    """KL divergences, LLR ranges and lr_min over ordered pairs of distinct states."""
    rep = KlReport()
    K = instance.n_states
    logs = np.log(instance.states)
    for k in range(K):
        for j in range(K):
            if j == k:
                continue
            llr = logs[k] - logs[j]  # (a, x, o)
            kl = np.sum(instance.states[k] * llr, axis=-1)
            kl = np.maximum(kl, 0.0)
            pos = kl[kl > 0]
            if pos.size == 0:
                raise ValueError(f"states {k} and {j} coincide on every arm and public type")
            rep.kl[(k, j)] = kl
            rep.ll_max[(k, j)] = float(np.abs(llr - kl[..., None]).max())
            rep.kl_min[(k, j)] = float(pos.min())
    if K >= 2:
        ratios = {pair: (rep.kl_min[pair] / rep.ll_max[pair]) ** 2 for pair in rep.kl}
        rep.argmin_pair = min(ratios, key=lambda p: (ratios[p], p))
        rep.lr_min = ratios[rep.argmin_pair]
    return rep


def warmup_sample_size(instance: Instance, variant: str, eta: float | None = None) -> int:
    """Warm-up samples per (arm, public type) that the mechanism guarantees rely on."""
    if variant == "homogeneous":
        bench = bench_homogeneous(instance)
        if not bench.finite:
            raise ValueError("warm-up size is undefined for an infinite benchmark")
        n = instance.n_arms
        gap = prior_gap(instance, 0)
        alpha = n * gap / bench.value
        if alpha <= 0:
            raise ValueError("prior gap is zero; no warm-up is needed to separate the arms")
        return math.ceil(32 / alpha ** 2 * math.log(8 * n / alpha))
    if variant == "heterogeneous":
        lr = kl_quantities(instance).lr_min
        if lr is None:
            raise ValueError("lr_min needs at least two support states")
        eta_star = degeneracy_gap(instance)
        if eta is None:
            eta = eta_star
        if not 0 < eta <= eta_star + CHECK_TOL:
            raise ValueError(f"eta must lie in (0, {eta_star:.6g}], got {eta}")
        return math.ceil(1 + 1 / (2 * lr) * math.log(4 * instance.n_states / (eta * lr)))
    raise ValueError(f"unknown variant {variant!r}")


def draw_counts(rng: np.random.Generator, tables: np.ndarray, samples: int | np.ndarray) -> np.ndarray:
    """Multinomial counts for every (arm, public type) row of ``tables``.

    ``tables`` has shape (..., n_arms, n_public, n_outcomes); ``samples`` is a
    scalar or broadcasts against the row shape.
    """
    tables = np.asarray(tables)
    n = np.broadcast_to(np.asarray(samples, dtype=np.int64), tables.shape[:-1])
    return rng.multinomial(n, tables)


@dataclass
class MleErrorEstimate:
    samples_per_pair: int
    reps: int
    errors: int
    estimate: float
    ci95: tuple[float, float]

    @property
    def half_width(self) -> float:
        return max(self.estimate - self.ci95[0], self.ci95[1] - self.estimate)


def mle_error_probability(instance: Instance, samples_per_pair: int, reps: int, seed: int,
                          batch: int = 20_000) -> MleErrorEstimate:
    """Monte Carlo frequency of the MLE missing the true state, with the state drawn from the prior."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if samples_per_pair < 0:
        raise ValueError("samples_per_pair must be nonnegative")
    errors = 0
    for b, (start, stop) in enumerate(batched(reps, batch)):
        rng = stream(seed, "mle", b)
        m = stop - start
        truth = rng.choice(instance.n_states, size=m, p=instance.prior)
        counts = draw_counts(rng, instance.states[truth], samples_per_pair)
        est = mle_state_batch(instance, counts)
        errors += int(np.sum(est != truth))
    return MleErrorEstimate(samples_per_pair, reps, errors, errors / reps, wilson_interval(errors, reps))
