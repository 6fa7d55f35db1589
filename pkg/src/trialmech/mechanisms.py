"""Two-stage trial mechanisms: warm-up, frozen main-stage policy, IPS finalisation.

A mechanism first collects warm-up samples (round-robin over (arm, public
type) pairs inside the trial, or injected from outside), then freezes a state
estimate and samples every main-stage round from a fixed per-type
distribution. Nothing observed after the freeze changes the sampling
distributions, so the main stage is stationary and non-data-adaptive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adversaries import Adversary
from .benchmarks import bench_homogeneous
from .incentives import Policy, best_arm_policy, check_incentives, degeneracy_gap
from .learning import WarmupData, draw_counts, empirical_state, mle_state, mle_state_batch
from .model import CHECK_TOL, Instance, ScoringFunction, outside_options
from .rng import batched, inverse_cdf, mean_ci, stream


@dataclass(frozen=True, eq=False)
class MechanismConfig:
    """Immutable mechanism description.

    ``T0`` is the number of in-trial warm-up rounds and ``T`` the horizon.
    ``exogenous`` counts samples per (arm, public type) supplied from outside
    the trial, drawn from the adversary's volunteer state; ``warmup_data``
    injects fixed counts instead. Both add to any in-trial warm-up.
    """

    variant: str  # "homogeneous" | "heterogeneous"
    T0: int
    T: int
    eps: float | None = None
    bench_policy: Policy | None = None
    exploit_policy: Policy | None = None
    eta: float | None = None
    exogenous: int = 0
    warmup_data: WarmupData | None = None

    def __post_init__(self):
        if self.variant not in ("homogeneous", "heterogeneous"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0 <= self.T0 <= self.T / 2:
            raise ValueError(f"need 0 <= T0 <= T/2, got T0={self.T0}, T={self.T}")
        if self.exogenous < 0:
            raise ValueError("exogenous sample count must be nonnegative")
        if self.variant == "homogeneous" and (self.eps is None or not 0 <= self.eps <= 1):
            raise ValueError("homogeneous mechanism needs eps in [0, 1]")
        if self.variant == "heterogeneous" and (self.bench_policy is None or self.exploit_policy is None):
            raise ValueError("heterogeneous mechanism needs bench and exploit policies")

    @property
    def window(self) -> int:
        return self.T - self.T0


def homogeneous_mechanism(instance: Instance, T0: int, T: int, *, exogenous: int = 0,
                          warmup_data: WarmupData | None = None, eps: float | None = None) -> MechanismConfig:
    """eps-greedy around the best arm of the empirical state, eps = (n/2)/bench."""
    if instance.n_types != 1:
        raise ValueError("homogeneous mechanism needs a single-type instance")
    if eps is None:
        bench = bench_homogeneous(instance)
        if not bench.finite:
            raise ValueError("benchmark is infinite; no BIR mechanism explores every arm")
        eps = instance.n_arms / 2 / bench.value
    return MechanismConfig("homogeneous", T0, T, eps=eps, exogenous=exogenous, warmup_data=warmup_data)


def heterogeneous_mechanism(instance: Instance, bench_policy: Policy, exploit_policy: Policy | None,
                            T0: int, T: int, *, eta: float | None = None, exogenous: int = 0,
                            warmup_data: WarmupData | None = None) -> MechanismConfig:
    """Average of the benchmark policy and an eta-BIR/BIC policy at the MLE state."""
    exploit = best_arm_policy(instance) if exploit_policy is None else exploit_policy
    bench_policy.check_shape(instance)
    exploit.check_shape(instance)
    if not check_incentives(instance, bench_policy, 0.0).satisfied:
        raise ValueError("bench_policy is not BIR and BIC")
    eta_star = degeneracy_gap(instance)
    if eta is None:
        eta = check_incentives(instance, exploit, 0.0).min_margin
    if not 0 < eta <= eta_star + CHECK_TOL:
        raise ValueError(f"exploit margin must lie in (0, {eta_star:.6g}], got {eta:.6g}")
    if not check_incentives(instance, exploit, eta).satisfied:
        raise ValueError(f"exploit_policy is not {eta:.6g}-BIR and BIC")
    return MechanismConfig("heterogeneous", T0, T, bench_policy=bench_policy, exploit_policy=exploit,
                           eta=eta, exogenous=exogenous, warmup_data=warmup_data)


@dataclass
class TrialHistory:
    T0: int
    types: np.ndarray  # (T,)
    probs: np.ndarray  # (T, n_arms), recorded before the draw
    arms: np.ndarray  # (T,)
    table: np.ndarray  # (T, n_arms) outcome of every arm, fixed by the adversary
    warmup: WarmupData
    estimated_state: np.ndarray | int  # empirical table or MLE state index
    main_dists: np.ndarray  # (n_types, n_arms), frozen main-stage distribution per type
    estimates: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def outcomes(self) -> np.ndarray:
        return self.table[np.arange(self.table.shape[0]), self.arms]

    @property
    def window(self) -> slice:
        return slice(self.T0, self.types.shape[0])


def schedule_arms(instance: Instance, T0: int) -> np.ndarray:
    """Round-robin arm assignment over (arm, public type) pairs, arm-major."""
    pairs = instance.n_arms * instance.n_public
    return (np.arange(T0) % pairs) // instance.n_public


def run_warmup(instance: Instance, config: MechanismConfig, adversary: Adversary,
               rng: np.random.Generator) -> tuple[WarmupData, np.ndarray, np.ndarray, np.ndarray]:
    """In-trial warm-up rounds plus any exogenous or injected samples.

    Returns the counts, and the types, arms and outcome table of the T0
    in-trial rounds. The scheduled arm is assigned even when the realized
    public type differs from the schedule target; the sample is counted for
    the realized pair.
    """
    counts = np.zeros((instance.n_arms, instance.n_public, instance.n_outcomes), dtype=np.int64)
    if config.warmup_data is not None:
        counts += config.warmup_data.counts
    if config.exogenous:
        if adversary.volunteer_state is None:
            raise ValueError("exogenous warm-up needs an adversary with a volunteer state")
        counts += draw_counts(rng, adversary.volunteer_state, config.exogenous)
    types, table = adversary.draw(rng, 0, config.T0)
    arms = schedule_arms(instance, config.T0)
    if config.T0:
        publics = types // instance.n_private
        obs = table[np.arange(config.T0), arms]
        np.add.at(counts, (arms, publics, obs), 1)
    return WarmupData(counts), types, arms, table


def main_stage_dists(instance: Instance, config: MechanismConfig,
                     data: WarmupData) -> tuple[np.ndarray, np.ndarray | int]:
    """Frozen per-type sampling distribution and the state estimate behind it."""
    n = instance.n_arms
    if config.variant == "homogeneous":
        est = empirical_state(data)
        # values of every arm for every type under the empirical table
        v = np.einsum("axo,os->axs", est, instance.utilities).reshape(n, instance.n_types)
        best = np.argmax(v, axis=0)
        dist = np.full((instance.n_types, n), config.eps / n)
        dist[np.arange(instance.n_types), best] += 1 - config.eps
        return dist, est
    k = mle_state(instance, data)
    dist = 0.5 * config.bench_policy.probs[k] + 0.5 * config.exploit_policy.probs[k]
    return dist, k


def ips_from_rounds(probs: np.ndarray, arms: np.ndarray, table: np.ndarray, scoring: ScoringFunction) -> np.ndarray:
    """IPS estimate of every arm's average score over the given rounds."""
    m, n = probs.shape
    if m == 0:
        raise ValueError("empty estimation window")
    rows = np.arange(m)
    p = probs[rows, arms]
    if np.any(p <= 0):
        raise ValueError("corrupt history: chosen arm had zero recorded probability")
    w = scoring.values[table[rows, arms]] / p
    return np.bincount(arms, weights=w, minlength=n) / m


def run_trial(instance: Instance, config: MechanismConfig, adversary: Adversary,
              scoring_functions: Sequence[ScoringFunction], rng: np.random.Generator) -> TrialHistory:
    """Warm-up, then the frozen main stage, then IPS over the main-stage window."""
    if config.T == config.T0:
        raise ValueError("empty estimation window")
    data, w_types, w_arms, w_table = run_warmup(instance, config, adversary, rng)
    dists, est = main_stage_dists(instance, config, data)
    m = config.window
    types, table = adversary.draw(rng, config.T0, m)
    probs = dists[types]
    arms = inverse_cdf(probs, rng.random(m))
    w_probs = np.zeros((config.T0, instance.n_arms))
    w_probs[np.arange(config.T0), w_arms] = 1.0
    hist = TrialHistory(
        T0=config.T0, types=np.concatenate([w_types, types]), probs=np.vstack([w_probs, probs]),
        arms=np.concatenate([w_arms, arms]).astype(np.int64), table=np.vstack([w_table, table]),
        warmup=data, estimated_state=est, main_dists=dists,
    )
    for f in scoring_functions:
        hist.estimates[f.name] = ips_from_rounds(probs, arms, table, f)
    return hist


def expected_sampling_probs(instance: Instance, config: MechanismConfig, adversary: Adversary,
                            reps: int, seed: int) -> np.ndarray:
    """Monte Carlo mean of the recorded main-stage probabilities, per round and arm."""
    total = np.zeros((config.window, instance.n_arms))
    for r in range(reps):
        rng = stream(seed, "expected-probs", r)
        data, *_ = run_warmup(instance, config, adversary, rng)
        dists, _ = main_stage_dists(instance, config, data)
        types, _ = adversary.draw(rng, config.T0, config.window)
        total += dists[types]
    return total / reps


@dataclass
class MarginEstimate:
    mean: float
    half_width: float
    allowance: float

    @property
    def lower(self) -> float:
        return self.mean - self.half_width

    @property
    def satisfied(self) -> bool:
        return self.mean >= -(self.allowance + self.half_width)


@dataclass
class MechanismIcReport:
    reps: int
    allowance: float
    bir: dict[int, MarginEstimate] = field(default_factory=dict)
    bic: dict[tuple[int, int], MarginEstimate] = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return all(m.satisfied for m in list(self.bir.values()) + list(self.bic.values()))


def _warmup_counts_batch(instance: Instance, config: MechanismConfig, rng: np.random.Generator,
                         tables: np.ndarray) -> np.ndarray:
    """Warm-up counts for a batch of true states under stochastic truthful arrivals."""
    R = tables.shape[0]
    n, X = instance.n_arms, instance.n_public
    counts = np.zeros((R, n, X, instance.n_outcomes), dtype=np.int64)
    if config.warmup_data is not None:
        counts += config.warmup_data.counts
    if config.exogenous:
        counts += draw_counts(rng, tables, config.exogenous)
    if config.T0:
        per_arm = np.bincount(schedule_arms(instance, config.T0), minlength=n)
        pub = instance.type_dist.reshape(X, instance.n_private).sum(axis=1)
        split = rng.multinomial(np.broadcast_to(per_arm, (R, n)), pub)  # (R, n, X)
        counts += rng.multinomial(split, tables)
    return counts


def verify_mechanism_ic(instance: Instance, config: MechanismConfig, reps: int, seed: int,
                        batch: int = 20_000) -> MechanismIcReport:
    """Monte Carlo BIR/BIC margins of the frozen main-stage policy.

    Each replication draws the true state from the prior, simulates the warm-up
    under truthful stochastic arrivals from that state, freezes the main-stage
    distributions, and evaluates exact expected utilities in the true state.
    Margins are reported as mean and 95% half-width; the allowance is 0 for the
    homogeneous mechanism and eta/8 for the heterogeneous one.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    T = instance.n_types
    out = outside_options(instance)
    bir_s = np.zeros((reps, T))
    bic_pairs = [(t, r) for t in range(T) for r in instance.misreports(t)]
    bic_s = np.zeros((reps, len(bic_pairs)))
    for b, (start, stop) in enumerate(batched(reps, batch)):
        rng = stream(seed, "ic", b)
        R = stop - start
        truth = rng.choice(instance.n_states, size=R, p=instance.prior)
        counts = _warmup_counts_batch(instance, config, rng, instance.states[truth])
        dists = _batch_dists(instance, config, counts)  # (R, T, n)
        vals = instance.values[truth]  # (R, n, T)
        cross = np.einsum("rqa,rat->rtq", dists, vals)  # type t served as q
        diag = cross[:, np.arange(T), np.arange(T)]
        bir_s[start:stop] = diag - out
        for j, (t, r) in enumerate(bic_pairs):
            bic_s[start:stop, j] = diag[:, t] - cross[:, t, r]
    allowance = 0.0 if config.variant == "homogeneous" else (config.eta or degeneracy_gap(instance)) / 8
    rep = MechanismIcReport(reps, allowance)
    for t in range(T):
        rep.bir[t] = MarginEstimate(*mean_ci(bir_s[:, t]), allowance)
    for j, pair in enumerate(bic_pairs):
        rep.bic[pair] = MarginEstimate(*mean_ci(bic_s[:, j]), allowance)
    return rep


def _batch_dists(instance: Instance, config: MechanismConfig, counts: np.ndarray) -> np.ndarray:
    n, T = instance.n_arms, instance.n_types
    R = counts.shape[0]
    if config.variant == "homogeneous":
        tot = counts.sum(axis=-1, keepdims=True)
        if np.any(tot == 0):
            raise ValueError("empirical state needs at least one sample per (arm, public type)")
        est = counts / tot
        v = np.einsum("raxo,os->raxs", est, instance.utilities).reshape(R, n, T)
        best = np.argmax(v, axis=1)  # (R, T)
        dists = np.full((R, T, n), config.eps / n)
        r_idx, t_idx = np.indices((R, T))
        dists[r_idx, t_idx, best] += 1 - config.eps
        return dists
    k = mle_state_batch(instance, counts)
    return 0.5 * config.bench_policy.probs[k] + 0.5 * config.exploit_policy.probs[k]
