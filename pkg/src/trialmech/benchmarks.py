"""Benchmarks: the best sampling floors achievable by incentive-compatible state-aware policies.

Three variants are computed here:

* homogeneous agents, in closed form via the optimal epsilon-greedy policy;
* heterogeneous agents, worst case over types (a linear program);
* heterogeneous agents weighted by a type distribution (a convex program,
  solved by cutting planes over the BIR/BIC polytope).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .incentives import (
    IncentiveReport, Policy, best_arm_policy, best_values, check_incentives,
    degeneracy_gap, epsilon_greedy, prior_gap,
)
from .lp import LPError, linprog
from .model import CHECK_TOL, Instance, TypeDistribution, outside_options

INF_THRESHOLD = 1e-9


@dataclass
class BenchmarkResult:
    value: float
    policy: Policy | None
    certificate: IncentiveReport | None
    eps_star: float | None = None
    lower_bound: float | None = None
    iterations: int = 0

    @property
    def min_prob(self) -> float:
        return 0.0 if math.isinf(self.value) else 1.0 / self.value

    @property
    def finite(self) -> bool:
        return not math.isinf(self.value)

    @property
    def floor(self) -> float:
        """Smallest probability the returned policy assigns to any (state, type, arm)."""
        return 0.0 if self.policy is None else self.policy.floor


class _Layout:
    """Column layout: policy entries pi[k, t, a] first, then extra scalars."""

    def __init__(self, instance: Instance, n_extra: int):
        self.K, self.T, self.n = instance.n_states, instance.n_types, instance.n_arms
        self.N = self.K * self.T * self.n
        self.nv = self.N + n_extra

    def idx(self, k, t, a) -> int:
        return (k * self.T + t) * self.n + a

    def extra(self, j: int) -> int:
        return self.N + j

    def policy(self, x: np.ndarray) -> np.ndarray:
        p = np.clip(x[: self.N].reshape(self.K, self.T, self.n), 0.0, None)
        return p / p.sum(axis=-1, keepdims=True)


def _simplex_rows(lay: _Layout) -> tuple[np.ndarray, np.ndarray]:
    A = np.zeros((lay.K * lay.T, lay.nv))
    for k in range(lay.K):
        for t in range(lay.T):
            A[k * lay.T + t, lay.idx(k, t, 0): lay.idx(k, t, 0) + lay.n] = 1.0
    return A, np.ones(lay.K * lay.T)


def _incentive_rows(instance: Instance, lay: _Layout, types: Sequence[int] | None = None,
                    bir_margin: float = 0.0, margin_col: int | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """``A @ x <= b`` rows for BIR (per type) and BIC (per ordered misreport pair).

    With ``margin_col`` the BIR margin is the LP variable in that column
    instead of the constant ``bir_margin``.
    """
    types = list(range(instance.n_types)) if types is None else list(types)
    tset = set(types)
    lam, V = instance.prior, instance.values
    out = outside_options(instance)
    rows, rhs = [], []
    for t in types:
        r = np.zeros(lay.nv)
        for k in range(lay.K):
            r[lay.idx(k, t, 0): lay.idx(k, t, 0) + lay.n] = -lam[k] * V[k, :, t]
        if margin_col is not None:
            r[margin_col] = 1.0
            rhs.append(-out[t])
        else:
            rhs.append(-out[t] - bir_margin)
        rows.append(r)
    for t in types:
        for rep in instance.misreports(t):
            if rep not in tset:
                continue
            r = np.zeros(lay.nv)
            for k in range(lay.K):
                r[lay.idx(k, t, 0): lay.idx(k, t, 0) + lay.n] -= lam[k] * V[k, :, t]
                r[lay.idx(k, rep, 0): lay.idx(k, rep, 0) + lay.n] += lam[k] * V[k, :, t]
            rows.append(r)
            rhs.append(0.0)
    if not rows:
        return np.zeros((0, lay.nv)), np.zeros(0)
    return np.array(rows), np.array(rhs)


def _solve(c, A_ub, b_ub, A_eq, b_eq, *, maximize: bool, what: str, lb=None):
    res = linprog(c, A_ub, b_ub, A_eq, b_eq, maximize=maximize, lb=lb)
    if not res.success:
        raise LPError(f"{what}: solver returned {res.status} after {res.iterations} pivots "
                      f"({A_ub.shape[0]} inequalities, {A_eq.shape[0]} equalities, {len(c)} variables)")
    return res


def bench_homogeneous(instance: Instance) -> BenchmarkResult:
    """Closed form for a single agent type: optimal exploration rate of epsilon-greedy."""
    if instance.n_types != 1:
        raise ValueError("bench_homogeneous needs a single-type instance; use bench_worst")
    best = float(best_values(instance)[0])
    out = float(outside_options(instance)[0])
    gap = prior_gap(instance, 0)
    if gap <= CHECK_TOL:
        eps = 1.0
    else:
        eps = min(1.0, max(0.0, (best - out) / gap))
    if eps * 1.0 / instance.n_arms <= INF_THRESHOLD:
        return BenchmarkResult(math.inf, None, None, eps_star=0.0)
    pol = epsilon_greedy(instance, eps, best_arm_policy(instance))
    return BenchmarkResult(instance.n_arms / eps, pol, check_incentives(instance, pol), eps_star=eps)


def bench_worst(instance: Instance) -> BenchmarkResult:
    """Largest uniform sampling floor over BIR and BIC state-aware policies, as an LP."""
    lay = _Layout(instance, 1)
    p = lay.extra(0)
    A_eq, b_eq = _simplex_rows(lay)
    floor = np.zeros((lay.N, lay.nv))
    floor[np.arange(lay.N), np.arange(lay.N)] = -1.0
    floor[:, p] = 1.0
    A_inc, b_inc = _incentive_rows(instance, lay)
    A_ub = np.vstack([floor, A_inc])
    b_ub = np.concatenate([np.zeros(lay.N), b_inc])
    c = np.zeros(lay.nv)
    c[p] = 1.0
    res = _solve(c, A_ub, b_ub, A_eq, b_eq, maximize=True, what="bench_worst")
    pstar = res.x[p]
    if pstar <= INF_THRESHOLD:
        return BenchmarkResult(math.inf, None, None, iterations=res.iterations)
    pol = Policy(lay.policy(res.x))
    return BenchmarkResult(1.0 / pstar, pol, check_incentives(instance, pol), iterations=res.iterations)


def freq_objective(policy_probs: np.ndarray, freq: np.ndarray) -> float:
    """max over (state, arm) of sum_t freq[t] / pi[state, t, arm]."""
    pos = freq > 0
    with np.errstate(divide="ignore"):
        terms = np.where(pos[None, :, None], freq[None, :, None] / policy_probs, 0.0)
    return float(terms.sum(axis=1).max())


def bench_typefreq(instance: Instance, freq: TypeDistribution | np.ndarray, *,
                   rel_gap: float = 1e-9, max_iter: int = 10_000) -> BenchmarkResult:
    """Minimise the max over (state, arm) of the expected inverse sampling probability.

    Outer approximation: each term ``1/x`` is replaced by supporting lines at a
    growing set of query points. Query points are midpoints between the current
    LP solution and the best feasible policy found so far, which keeps them
    strictly positive and stabilises convergence. Iterates until the relative
    gap between the best feasible value and the LP lower bound is at most
    ``rel_gap``.
    """
    F = freq.probs if isinstance(freq, TypeDistribution) else TypeDistribution(np.asarray(freq)).probs
    if F.shape != (instance.n_types,):
        raise ValueError("type distribution does not match the instance types")
    worst = bench_worst(instance)
    if not worst.finite:
        # the warm start needs a strictly positive feasible policy
        return BenchmarkResult(math.inf, None, None)
    pos = np.flatnonzero(F > 0)
    lay = _Layout(instance, 1)
    z = lay.extra(0)
    A_eq, b_eq = _simplex_rows(lay)
    A_inc, b_inc = _incentive_rows(instance, lay)
    # at the optimum every positive-frequency term F_t/pi <= objective <= bench_worst
    lower = np.zeros(lay.nv)
    for t in pos:
        for k in range(lay.K):
            for a in range(lay.n):
                lower[lay.idx(k, t, a)] = F[t] / worst.value * (1 - 1e-9)
    c = np.zeros(lay.nv)
    c[z] = 1.0

    def cuts_at(pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rows = np.zeros((lay.K * lay.n, lay.nv))
        rhs = np.zeros(lay.K * lay.n)
        for k in range(lay.K):
            for a in range(lay.n):
                j = k * lay.n + a
                rows[j, z] = -1.0
                for t in pos:
                    x0 = pi[k, t, a]
                    rows[j, lay.idx(k, t, a)] = -F[t] / x0 ** 2
                    rhs[j] -= 2 * F[t] / x0
        return rows, rhs

    best = worst.policy.probs.copy()
    ub = freq_objective(best, F)
    cut_rows, cut_rhs = cuts_at(best)
    lb = -math.inf
    it = 0
    for it in range(1, max_iter + 1):
        A_ub = np.vstack([A_inc, cut_rows])
        b_ub = np.concatenate([b_inc, cut_rhs])
        res = _solve(c, A_ub, b_ub, A_eq, b_eq, maximize=False, what="bench_typefreq", lb=lower)
        lb = max(lb, float(res.x[z]))
        if lb > ub * (1 + 1e-7):
            raise LPError(f"bench_typefreq: LP bound {lb:.12g} exceeds feasible value {ub:.12g}")
        if ub - lb <= rel_gap * ub:
            break
        # cuts that are slack at the LP optimum can go without moving that optimum
        slack = cut_rhs - cut_rows @ res.x
        keep = slack <= 1e-7 * max(1.0, ub)
        cut_rows, cut_rhs = cut_rows[keep], cut_rhs[keep]
        lp_pi = lay.policy(res.x)
        query = 0.5 * (lp_pi + best)
        gq = freq_objective(query, F)
        if gq < ub:
            best, ub = query, gq
        g_lp = freq_objective(lp_pi, F)
        if g_lp < ub:
            best, ub = lp_pi, g_lp
        r1, h1 = cuts_at(query)
        r2, h2 = cuts_at(lp_pi)
        cut_rows = np.vstack([cut_rows, r1, r2])
        cut_rhs = np.concatenate([cut_rhs, h1, h2])
    else:
        raise LPError(f"bench_typefreq did not converge in {max_iter} iterations: "
                      f"best value {ub:.12g}, lower bound {lb:.12g}")
    best = _lift_unweighted_types(instance, best, F)
    pol = Policy(best)
    return BenchmarkResult(ub, pol, check_incentives(instance, pol), lower_bound=lb, iterations=it)


def _lift_unweighted_types(instance: Instance, probs: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Raise the sampling floor of zero-frequency types without touching the others.

    Those types do not enter the objective, so any feasible choice keeps the
    value; the largest floor keeps the normalisation factor finite and small.
    """
    zero = np.flatnonzero(F == 0)
    if zero.size == 0:
        return probs
    lay = _Layout(instance, 1)
    q = lay.extra(0)
    A_eq, b_eq = _simplex_rows(lay)
    fix_rows, fix_rhs = [], []
    for t in np.flatnonzero(F > 0):
        for k in range(lay.K):
            for a in range(lay.n):
                r = np.zeros(lay.nv)
                r[lay.idx(k, t, a)] = 1.0
                fix_rows.append(r)
                fix_rhs.append(probs[k, t, a])
    floor = []
    for t in zero:
        for k in range(lay.K):
            for a in range(lay.n):
                r = np.zeros(lay.nv)
                r[lay.idx(k, t, a)] = -1.0
                r[q] = 1.0
                floor.append(r)
    A_inc, b_inc = _incentive_rows(instance, lay)
    # fixed entries are equalities; relax BIR/BIC by the policy tolerance to absorb drift
    A_ub = np.vstack([np.array(floor), A_inc])
    b_ub = np.concatenate([np.zeros(len(floor)), b_inc + 0.5 * CHECK_TOL])
    A_eq2 = np.vstack([A_eq[[k * lay.T + t for k in range(lay.K) for t in zero]], np.array(fix_rows)])
    b_eq2 = np.concatenate([b_eq[: len(zero) * lay.K], np.array(fix_rhs)])
    cvec = np.zeros(lay.nv)
    cvec[q] = 1.0
    res = linprog(cvec, A_ub, b_ub, A_eq2, b_eq2, maximize=True)
    if not res.success or res.x[q] <= probs[:, zero, :].min():
        return probs
    out = probs.copy()
    lifted = lay.policy(res.x)
    out[:, zero, :] = lifted[:, zero, :]
    if not check_incentives(instance, Policy(out)).satisfied:
        return probs
    return out


def normalization_factor(instance: Instance, freq: TypeDistribution | np.ndarray,
                         result: BenchmarkResult | None = None) -> float:
    """Inverse of the smallest probability in the frequency-optimal policy."""
    res = result if result is not None else bench_typefreq(instance, freq)
    if not res.finite:
        raise ValueError("normalization factor is undefined for an infinite benchmark")
    return 1.0 / res.policy.floor


def normalization_pair(instance: Instance, freq: TypeDistribution, freq_est: TypeDistribution) -> float:
    return normalization_factor(instance, freq) + normalization_factor(instance, freq_est)


def max_bir_margin(instance: Instance, types: Sequence[int] | None = None) -> tuple[float, Policy | None]:
    """Largest eta such that some policy is eta-BIR on ``types`` and BIC among them."""
    lay = _Layout(instance, 1)
    eta = lay.extra(0)
    A_eq, b_eq = _simplex_rows(lay)
    A_inc, b_inc = _incentive_rows(instance, lay, types, margin_col=eta)
    cap = np.zeros((1, lay.nv))
    cap[0, eta] = 1.0
    c = np.zeros(lay.nv)
    c[eta] = 1.0
    res = linprog(c, np.vstack([A_inc, cap]), np.append(b_inc, 1.0), A_eq, b_eq, maximize=True)
    if not res.success:
        return 0.0, None
    return float(res.x[eta]), Policy(lay.policy(res.x))


def eta_feasible(instance: Instance, eta: float, types: Sequence[int] | None = None) -> bool:
    return max_bir_margin(instance, types)[0] >= eta - CHECK_TOL


@dataclass
class MixturePoint:
    eps: float
    value: float
    lower_env: float
    upper_env: float


@dataclass
class MixtureCurve:
    bench_good: float
    bench_bad: float
    p_min: float
    eta: float
    points: list[MixturePoint] = field(default_factory=list)


def mixture_benchmark_curve(instance: Instance, f_good: TypeDistribution, f_bad: TypeDistribution,
                            eps_list: Sequence[float], eta: float) -> MixtureCurve:
    """Benchmark along the mixtures (1 - eps) * f_good + eps * f_bad, with analytic envelopes.

    The upper envelope is the value certified by a two-option menu built from
    the f_good-optimal policy, an eta-BIR policy on the support of f_good and
    the f_bad-optimal policy.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    good_types = list(f_good.support)
    if not eta_feasible(instance, eta, good_types):
        raise ValueError(f"no BIC policy is {eta}-BIR on the support of f_good")
    good = bench_typefreq(instance, f_good)
    bad = bench_typefreq(instance, f_bad)
    if not (good.finite and bad.finite):
        raise ValueError("both component benchmarks must be finite")
    p_min = float(good.policy.probs[:, good_types, :].min())
    curve = MixtureCurve(good.value, bad.value, p_min, eta)
    for eps in eps_list:
        if not 0.0 <= eps <= 1.0:
            raise ValueError("mixture weights must lie in [0, 1]")
        mix = TypeDistribution((1 - eps) * f_good.probs + eps * f_bad.probs)
        if eps == 0.0:
            value = good.value
        elif eps == 1.0:
            value = bad.value
        else:
            value = bench_typefreq(instance, mix).value
        lower = (1 - eps) * good.value + eps * bad.value
        root = math.sqrt(eps)
        if eps == 0.0:
            upper = good.value
        elif eps == 1.0:
            upper = math.inf
        else:
            upper = ((1 - eps) / (1 - root) * good.value
                     + eps * (1.0 / ((1 - root) * p_min) + bad.value / (eta * root)))
        curve.points.append(MixturePoint(eps, value, lower, upper))
    return curve


__all__ = [
    "BenchmarkResult", "bench_homogeneous", "bench_worst", "bench_typefreq", "normalization_factor",
    "normalization_pair", "max_bir_margin", "eta_feasible", "mixture_benchmark_curve", "MixtureCurve",
    "MixturePoint", "freq_objective", "degeneracy_gap",
]
