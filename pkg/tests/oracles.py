"""Independent reference solvers used only by the tests."""

import cvxpy as cp
import numpy as np

from trialmech.model import outside_options


def _constraints(inst, pi, margin=0.0, types=None):
    K, T, n = inst.n_states, inst.n_types, inst.n_arms
    lam, V = inst.prior, inst.values
    types = range(T) if types is None else types
    out = outside_options(inst)
    cons = [pi[k] >= 0 for k in range(K)] + [cp.sum(pi[k], axis=1) == 1 for k in range(K)]

    def W(t, r):
        return sum(lam[k] * (pi[k][r, :] @ V[k, :, t]) for k in range(K))

    for t in types:
        cons.append(W(t, t) >= out[t] + margin)
        for r in types:
            if r != t and inst.public_of(r) == inst.public_of(t):
                cons.append(W(t, t) >= W(t, r))
    return cons


def typefreq_oracle(inst, freq):
    pi = [cp.Variable((inst.n_types, inst.n_arms)) for _ in range(inst.n_states)]
    z = cp.Variable()
    cons = _constraints(inst, pi)
    for k in range(inst.n_states):
        for a in range(inst.n_arms):
            cons.append(sum(f * cp.inv_pos(pi[k][t, a]) for t, f in enumerate(freq) if f > 0) <= z)
    prob = cp.Problem(cp.Minimize(z), cons)
    prob.solve(solver="CLARABEL")
    return float(prob.value)


def worst_oracle(inst):
    pi = [cp.Variable((inst.n_types, inst.n_arms)) for _ in range(inst.n_states)]
    p = cp.Variable()
    cons = _constraints(inst, pi) + [pi[k] >= p for k in range(inst.n_states)]
    prob = cp.Problem(cp.Maximize(p), cons)
    prob.solve(solver="CLARABEL")
    return float(p.value)


def homogeneous_closed_form(inst):
    """n / eps* where eps-greedy value (1 - eps) best + eps uniform meets the outside option."""
    vals = inst.values[:, :, 0]
    best = float(inst.prior @ vals.max(axis=1))
    means = inst.prior @ vals
    out = float(means.max())
    gap = best - float(means.mean())
    eps = 1.0 if gap <= 1e-12 else min(1.0, (best - out) / gap)
    return np.inf if eps == 0 else inst.n_arms / eps
