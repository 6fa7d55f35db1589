"""IPS estimation, its analytic error bound, and Monte Carlo MSE."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adversaries import Adversary, LowerBoundPair
from .mechanisms import MechanismConfig, TrialHistory, ips_from_rounds, run_trial
from .model import Instance, ScoringFunction
from .rng import batched, mean_ci, replicate, stream


def ips_estimate(history: TrialHistory, scoring: ScoringFunction, window: slice | Sequence[int] | None = None) -> np.ndarray:
    """Per-arm inverse-propensity estimate of the window-average score."""
    w = history.window if window is None else window
    return ips_from_rounds(history.probs[w], history.arms[w], history.table[w], scoring)


def ips_error_bound(sampling_probs: np.ndarray, window: slice | Sequence[int] | None = None) -> float:
    """(1/|S|^2) * max over arms of sum_t 1/p_t(a)."""
    p = np.asarray(sampling_probs, dtype=float)
    if window is not None:
        p = p[window]
    if p.ndim != 2 or p.shape[0] == 0:
        raise ValueError("empty estimation window")
    if np.any(p <= 0):
        raise ValueError("sampling probabilities must be positive")
    return float((1.0 / p).sum(axis=0).max() / p.shape[0] ** 2)


def ips_variance(sampling_probs: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Exact per-arm variance of IPS for a fixed table and independent per-round draws.

    ``scores[t, a]`` is f of arm a's outcome in round t. Equals
    (1/|S|^2) sum_t f^2 (1/p - 1), which is at most the f-linear form and the
    f-free bound of :func:`ips_error_bound`.
    """
    p = np.asarray(sampling_probs, dtype=float)
    f = np.asarray(scores, dtype=float)
    return (f ** 2 * (1.0 / p - 1.0)).sum(axis=0) / p.shape[0] ** 2


def scoring_family(instance: Instance, extra: Sequence[ScoringFunction] = ()) -> list[ScoringFunction]:
    """All outcome indicators, the instance default score, and caller-supplied ones."""
    fam = [ScoringFunction.indicator(instance.n_outcomes, i, f"1[{o}]") for i, o in enumerate(instance.outcomes)]
    if instance.scores is not None:
        fam.append(ScoringFunction(instance.scores, "scores"))
    fam.extend(extra)
    return fam


@dataclass
class MseReport:
    arms: tuple[str, ...]
    scoring: tuple[str, ...]
    mse: np.ndarray  # (n_arms, n_scoring)
    half_width: np.ndarray
    reps: int
    overflow: bool  # some replication produced an IPS value above 1
    per_rep: np.ndarray = field(repr=False, default=None)

    @property
    def max_mse(self) -> float:
        return float(self.mse.max())

    @property
    def argmax(self) -> tuple[int, int]:
        a, j = np.unravel_index(np.argmax(self.mse), self.mse.shape)
        return int(a), int(j)

    @property
    def max_upper(self) -> float:
        """95% upper confidence bound of the largest entry, taken over all entries."""
        return float((self.mse + self.half_width).max())


def trial_errors(instance: Instance, config: MechanismConfig, adversary: Adversary,
                 family: Sequence[ScoringFunction], rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """Squared IPS errors against the realized window averages, shape (n_arms, |family|)."""
    hist = run_trial(instance, config, adversary, family, rng)
    table = hist.table[hist.window]
    err = np.zeros((instance.n_arms, len(family)))
    over = False
    for j, f in enumerate(family):
        truth = f.values[table].mean(axis=0)
        est = hist.estimates[f.name]
        over = over or bool(np.any(est > 1))
        err[:, j] = (est - truth) ** 2
    return err, over


def mse(instance: Instance, config: MechanismConfig, adversary: Adversary,
        family: Sequence[ScoringFunction] | None, reps: int, seed: int, tag: str = "mse") -> MseReport:
    """Monte Carlo mean squared IPS error per (arm, scoring function)."""
    fam = list(family) if family else scoring_family(instance)
    names = [f.name for f in fam]
    if len(set(names)) != len(names):
        raise ValueError("scoring functions need distinct names")
    res = replicate(lambda r, rng: trial_errors(instance, config, adversary, fam, rng), reps, seed,
                    f"{tag}:{adversary.name}")
    errs = np.stack([e for e, _ in res])  # (reps, n, F)
    mean = errs.mean(axis=0)
    hw = np.zeros_like(mean)
    for a in range(mean.shape[0]):
        for j in range(mean.shape[1]):
            hw[a, j] = mean_ci(errs[:, a, j])[1]
    return MseReport(instance.arms, tuple(names), mean, hw, reps, any(o for _, o in res), errs)


@dataclass
class LowerBoundRun:
    name: str
    mse: float
    half_width: float


def lower_bound_mse(pair: LowerBoundPair, reps: int, seed: int, batch: int = 2_000) -> list[LowerBoundRun]:
    """IPS error on the target arm when it is sampled with the scheduled probabilities.

    For each adversary of the pair, every replication draws the target arm's
    indicator outcomes and independent Bernoulli(q_t) selections, then squares
    the gap between the IPS estimate and the realized window average.
    """
    q = pair.probs
    S = q.size
    runs = []
    for name, p in (("base", np.full(S, 0.5)), ("alt", 0.5 + pair.delta)):
        sq = np.empty(reps)
        for b, (start, stop) in enumerate(batched(reps, batch)):
            rng = stream(seed, f"lower-bound:{name}", b)
            m = stop - start
            x = rng.random((m, S)) < p
            picked = rng.random((m, S)) < q
            err = ((x & picked) / q - x).sum(axis=1) / S
            sq[start:stop] = err ** 2
        runs.append(LowerBoundRun(name, *mean_ci(sq)))
    return runs


def lower_bound_threshold(pair: LowerBoundPair) -> float:
    """((sum_t delta_t) / (4 |S|))^2 / 16."""
    return (float(pair.delta.sum()) / (4 * pair.delta.size)) ** 2 / 16
