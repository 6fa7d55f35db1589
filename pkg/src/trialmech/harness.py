"""Experiment orchestration behind the CLI: every command returns a header and rows.

Rows are plain lists of numbers and strings; :func:`write_csv` renders them
with 12 significant digits and LF line endings, so a command's output is a
pure function of its configuration and seed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import adversaries as adv
from .benchmarks import (bench_homogeneous, bench_typefreq, bench_worst, max_bir_margin, mixture_benchmark_curve,
                         normalization_factor)
from .estimation import lower_bound_mse, lower_bound_threshold, mse, scoring_family
from .incentives import Policy, best_arm_policy, check_incentives, degeneracy_gap
from .io import load_instance
from .learning import mle_error_probability, warmup_sample_size
from .mechanisms import (MechanismConfig, expected_sampling_probs, heterogeneous_mechanism, homogeneous_mechanism,
                         verify_mechanism_ic)
from .model import Instance, TypeDistribution

Rows = list[list[Any]]


@dataclass
class ExperimentConfig:
    instance: str
    seed: int | None = None
    reps: int = 1000
    horizon: int | None = None  # T; with exogenous warm-up, the main-stage length
    warmup: int | None = None  # samples per (arm, public type); default N_prior
    exogenous: bool = False
    eta: float | None = None
    freq: list[float] | None = None
    freq_est: list[float] | None = None
    freq_bad: list[float] | None = None
    eps_grid: list[float] = field(default_factory=lambda: [0.1, 0.01, 0.001])
    samples: list[int] | None = None
    state: int = 0
    prob_reps: int = 10_000

    def need_seed(self) -> int:
        if self.seed is None:
            raise ValueError("--seed is required for stochastic commands")
        return self.seed


def fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return format(f, ".12g")
    return "" if v is None else str(v)


def write_csv(header: Sequence[str], rows: Rows, out: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_bytes(text.encode())
    return text


def parse_freq(instance: Instance, values: Sequence[float] | None) -> TypeDistribution:
    if values is None:
        return TypeDistribution(instance.type_dist)
    p = np.asarray(values, dtype=float)
    if p.shape != (instance.n_types,):
        raise ValueError(f"frequency vector needs {instance.n_types} entries in type order")
    return TypeDistribution(p)


def _warmup_per_pair(instance: Instance, cfg: ExperimentConfig) -> int:
    if cfg.warmup is not None:
        return cfg.warmup
    if instance.n_types == 1:
        return warmup_sample_size(instance, "homogeneous")
    return warmup_sample_size(instance, "heterogeneous", cfg.eta)


def build_mechanism(instance: Instance, cfg: ExperimentConfig, bench_policy: Policy | None = None) -> MechanismConfig:
    """The instance's mechanism under the configured warm-up.

    Single-type instances get the homogeneous eps-greedy mechanism; otherwise
    the averaged benchmark/best-arm mechanism, with the benchmark policy for
    the estimated frequencies when given, else the worst-type one.
    """
    N = _warmup_per_pair(instance, cfg)
    pairs = instance.n_arms * instance.n_public
    if cfg.exogenous:
        T0, extra = 0, N
        T = cfg.horizon if cfg.horizon is not None else 10_000
    else:
        T0, extra = N * pairs, 0
        T = cfg.horizon if cfg.horizon is not None else T0 + 10_000
    if instance.n_types == 1:
        return homogeneous_mechanism(instance, T0, T, exogenous=extra)
    if bench_policy is None:
        res = (bench_typefreq(instance, parse_freq(instance, cfg.freq_est)) if cfg.freq_est is not None
               else bench_worst(instance))
        if not res.finite:
            raise ValueError("benchmark is infinite")
        bench_policy = res.policy
    return heterogeneous_mechanism(instance, bench_policy, None, T0, T, eta=cfg.eta, exogenous=extra)


# -- commands -----------------------------------------------------------------

def cmd_bench(instance: Instance, cfg: ExperimentConfig) -> tuple[list[str], Rows, list[str], Rows]:
    header = ["benchmark", "value", "eps_star", "min_prob", "policy_floor", "bir_min_margin",
              "bic_min_margin", "normalization", "iterations"]
    rows: Rows = []
    results = []
    if instance.n_types == 1:
        results.append(("homogeneous", bench_homogeneous(instance)))
    results.append(("worst", bench_worst(instance)))
    F = parse_freq(instance, cfg.freq)
    results.append(("typefreq", bench_typefreq(instance, F)))
    for name, r in results:
        if r.finite:
            bir = min(r.certificate.bir_margin.values())
            bic = min(r.certificate.bic_margin.values()) if r.certificate.bic_margin else None
            norm = normalization_factor(instance, F, r) if name == "typefreq" else 1.0 / r.policy.floor
            rows.append([name, r.value, r.eps_star, r.min_prob, r.policy.floor, bir, bic, norm, r.iterations])
        else:
            rows.append([name, math.inf, r.eps_star, 0.0, None, None, None, math.inf, r.iterations])
    pheader = ["benchmark", "state", "type", "arm", "probability"]
    prows: Rows = []
    for name, r in results:
        if not r.finite:
            continue
        for k in range(instance.n_states):
            for t in range(instance.n_types):
                for a in range(instance.n_arms):
                    prows.append([name, instance.state_names[k], instance.type_label(t), instance.arms[a],
                                  r.policy.probs[k, t, a]])
    return header, rows, pheader, prows


IC_HEADER = ["level", "subject", "constraint", "type", "misreport", "margin", "half_width", "allowance", "satisfied"]


def cmd_ic_check(instance: Instance, cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    rows: Rows = []
    lbl = instance.type_label
    policies = [("best_arm", best_arm_policy(instance))]
    worst = bench_worst(instance)
    if worst.finite:
        policies.append(("bench_worst", worst.policy))
    for name, pol in policies:
        rep = check_incentives(instance, pol, 0.0)
        for t, m in rep.bir_margin.items():
            rows.append(["policy", name, "BIR", lbl(t), None, m, 0.0, 0.0, m >= -1e-9])
        for (t, r), m in rep.bic_margin.items():
            rows.append(["policy", name, "BIC", lbl(t), lbl(r), m, 0.0, 0.0, m >= -1e-9])
    seed = cfg.need_seed()
    mech = build_mechanism(instance, cfg)
    rep = verify_mechanism_ic(instance, mech, cfg.reps, seed)
    for t, m in rep.bir.items():
        rows.append(["mechanism", mech.variant, "BIR", lbl(t), None, m.mean, m.half_width, m.allowance, m.satisfied])
    for (t, r), m in rep.bic.items():
        rows.append(["mechanism", mech.variant, "BIC", lbl(t), lbl(r), m.mean, m.half_width, m.allowance,
                     m.satisfied])
    return IC_HEADER, rows


def _adversaries(instance: Instance, mech: MechanismConfig) -> list[adv.Adversary]:
    out = [adv.stochastic_adversary(instance, k) for k in range(instance.n_states)]
    out.append(adv.alternating_table(instance, mech.T, 0))
    return out


def cmd_simulate(instance: Instance, cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    seed = cfg.need_seed()
    mech = build_mechanism(instance, cfg)
    fam = scoring_family(instance)
    header = ["adversary", "arm", "scoring", "mse", "half_width", "reps", "T0", "window", "overflow"]
    rows: Rows = []
    for a in _adversaries(instance, mech):
        rep = mse(instance, mech, a, fam, cfg.reps, seed)
        for i, arm in enumerate(instance.arms):
            for j, f in enumerate(fam):
                rows.append([a.name, arm, f.name, rep.mse[i, j], rep.half_width[i, j], cfg.reps, mech.T0,
                             mech.window, rep.overflow])
    return header, rows


def cmd_mle(instance: Instance, cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    seed = cfg.need_seed()
    eta = cfg.eta if cfg.eta is not None else degeneracy_gap(instance)
    n_prior = warmup_sample_size(instance, "heterogeneous", eta)
    sizes = cfg.samples if cfg.samples else sorted({0, max(1, n_prior // 4), max(1, n_prior // 2), n_prior, 2 * n_prior})
    header = ["samples_per_pair", "reps", "errors", "estimate", "ci_low", "ci_high", "n_prior", "bound"]
    rows: Rows = []
    for s in sizes:
        e = mle_error_probability(instance, s, cfg.reps, seed)
        rows.append([s, e.reps, e.errors, e.estimate, e.ci95[0], e.ci95[1], n_prior, eta / 4 if s >= n_prior else None])
    return header, rows


def lower_bound_pair(instance: Instance, cfg: ExperimentConfig) -> tuple[adv.LowerBoundPair, MechanismConfig]:
    """Adversary pair against the least-sampled arm of the instance's mechanism in ``cfg.state``."""
    seed = cfg.need_seed()
    mech = build_mechanism(instance, cfg)
    stoch = adv.stochastic_adversary(instance, cfg.state)
    q_all = expected_sampling_probs(instance, mech, stoch, cfg.prob_reps, seed)
    target = int(np.argmin(q_all.mean(axis=0)))
    q = q_all[:, target]
    if instance.n_types == 1:
        pair = adv.lb_adversary_homogeneous(q, instance.n_arms, target)
    else:
        freq = None if cfg.freq is None else parse_freq(instance, cfg.freq)
        pair = adv.lb_adversary_heterogeneous(instance, cfg.state, q, mech.T0, freq, target_arm=target)
    return pair, mech


def cmd_lower_bound(instance: Instance, cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    pair, mech = lower_bound_pair(instance, cfg)
    thr = lower_bound_threshold(pair)
    header = ["adversary", "regime", "target_arm", "window", "sum_delta", "tv_proxy", "mean_shift", "mse",
              "half_width", "threshold", "ratio"]
    rows: Rows = []
    for run in lower_bound_mse(pair, cfg.reps, cfg.need_seed()):
        rows.append([run.name, pair.regime, instance.arms[pair.target_arm], pair.delta.size, pair.delta.sum(),
                     pair.tv_proxy, pair.mean_shift, run.mse, run.half_width, thr, run.mse / thr])
    return header, rows


def cmd_bad_types(instance: Instance, cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    if cfg.freq is None or cfg.freq_bad is None:
        raise ValueError("bad-types needs --freq (good) and --freq-bad")
    good, bad = parse_freq(instance, cfg.freq), parse_freq(instance, cfg.freq_bad)
    eta = cfg.eta
    if eta is None:
        eta, _ = max_bir_margin(instance, list(good.support))
        if eta <= 0:
            raise ValueError("no BIC policy is strictly BIR on the support of the good frequencies")
    curve = mixture_benchmark_curve(instance, good, bad, cfg.eps_grid, eta)
    header = ["eps", "value", "lower_env", "upper_env", "bench_good", "bench_bad", "p_min", "eta", "within"]
    rows: Rows = []
    for p in curve.points:
        ok = p.lower_env - 1e-6 <= p.value <= p.upper_env + 1e-6
        rows.append([p.eps, p.value, p.lower_env, p.upper_env, curve.bench_good, curve.bench_bad, curve.p_min,
                     eta, ok])
    return header, rows


BOUND_HEADER = ["mechanism", "adversary", "max_mse", "mse_upper", "bound", "bench", "diff_term", "window", "pass"]


def reproduce_theorem_bounds(cfg: ExperimentConfig, instance: Instance | None = None) -> tuple[list[str], Rows]:
    """Empirical max-MSE of the instance's mechanism against its theorem bound.

    Rows cover the stochastic adversary of every support state and one
    deterministic table. With typed agents and ``freq_est`` set, extra rows use
    type sequences realizing the instance type distribution F exactly and the
    bound picks up the C(F, F_est) * |F_est - F|_1 term.
    """
    inst = instance if instance is not None else load_instance(cfg.instance)
    seed = cfg.need_seed()
    fam = scoring_family(inst)
    rows: Rows = []
    if inst.n_types == 1:
        bench = bench_homogeneous(inst).value
        mech = build_mechanism(inst, cfg)
        label = "homogeneous"
    else:
        bench = bench_worst(inst).value
        mech = build_mechanism(inst, ExperimentConfig(**{**cfg.__dict__, "freq_est": None}))
        label = "worst"
    bound = 2 * bench / mech.window
    for a in _adversaries(inst, mech):
        rep = mse(inst, mech, a, fam, cfg.reps, seed)
        rows.append([label, a.name, rep.max_mse, rep.max_upper, bound, bench, 0.0, mech.window,
                     rep.max_upper <= bound])
    if inst.n_types > 1 and cfg.freq_est is not None:
        F = TypeDistribution(inst.type_dist)
        F_est = parse_freq(inst, cfg.freq_est)
        est = bench_typefreq(inst, F_est)
        mech_f = build_mechanism(inst, cfg, est.policy)
        seq = adv.realize_frequencies(F, mech_f.window)
        b_F = bench_typefreq(inst, F).value
        diff = (normalization_factor(inst, F) + normalization_factor(inst, F_est, est)) * F.l1(F_est)
        bound_f = 2 * (b_F + diff) / mech_f.window
        for k in range(inst.n_states):
            a = adv.concat(adv.stochastic_adversary(inst, k), mech_f.T0, adv.sequence_adversary(inst, k, seq),
                           f"sequence:{inst.state_names[k]}")
            rep = mse(inst, mech_f, a, fam, cfg.reps, seed)
            rows.append(["typefreq", a.name, rep.max_mse, rep.max_upper, bound_f, b_F, diff, mech_f.window,
                         rep.max_upper <= bound_f])
    return BOUND_HEADER, rows

