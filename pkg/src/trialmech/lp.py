"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``x >= lb`` (default ``lb = 0``). Entering variables are picked by steepest
reduced cost while the objective keeps improving; after a run of pivots without
objective progress the solver switches to Bland's rule (lowest eligible index for both
entering and leaving variables), which cannot cycle. Leaving-variable ties
always go to the lowest basis index, so a given problem is solved along one
deterministic path.

The tableau is periodically rebuilt from the original data and the current
basis, and optimality is re-verified on a freshly rebuilt tableau before
returning, so round-off from long pivot sequences does not accumulate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
DUAL_TOL = 1e-10
REFACTOR_EVERY = 40


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


class _Simplex:
    """Tableau over fixed columns ``A`` (m x ncol) and right-hand side ``b``."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int], rule: str, max_iter: int):
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.rule = rule
        self.max_iter = max_iter
        self.iterations = 0
        self.cost = np.zeros(A.shape[1])
        self.T = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
        self.rebuild()

    def rebuild(self) -> None:
        m = self.A.shape[0]
        if m:
            B = self.A[:, self.basis]
            try:
                body = np.linalg.solve(B, np.column_stack([self.A, self.b]))
            except np.linalg.LinAlgError:
                # numerically singular basis: keep the current tableau
                return
            self.T[:m] = body
            # exact identity on basic columns and nonnegative rhs remove round-off
            self.T[:m, self.basis] = np.eye(m)
            self.T[:m, -1] = np.maximum(self.T[:m, -1], 0.0) if np.all(self.T[:m, -1] > -FEAS_TOL) else self.T[:m, -1]
        self.set_cost(self.cost)

    def set_cost(self, cost: np.ndarray) -> None:
        self.cost = cost
        m = self.A.shape[0]
        row = np.zeros(self.T.shape[1])
        row[:-1] = cost
        cb = cost[self.basis]
        if m:
            row -= cb @ self.T[:m]
        row[self.basis] = 0.0
        self.T[-1] = row

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= np.outer(colv, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    @staticmethod
    def _pivot_rows(colv: np.ndarray) -> np.ndarray:
        tol = max(PIVOT_TOL, 1e-9 * float(np.abs(colv).max(initial=0.0)))
        return np.flatnonzero(colv > tol)

    def _dual_repair(self, allowed: np.ndarray) -> bool:
        while True:
            if self.iterations >= self.max_iter:
                return True  # the primal loop reports the iteration limit
            T = self.T
            rhs = T[:-1, -1]
            row = int(np.argmin(rhs))
            if rhs[row] >= -FEAS_TOL:
                return True
            r = T[row, :-1]
            tol = max(PIVOT_TOL, 1e-9 * float(np.abs(r).max(initial=0.0)))
            cols = np.flatnonzero((r < -tol) & allowed)
            if cols.size == 0:
                return False
            d = np.maximum(T[-1, cols], 0.0)
            ratios = d / -r[cols]
            tied = cols[ratios <= ratios.min() + 1e-12 * max(1.0, ratios.min())]
            col = int(tied[np.argmax(-r[tied])])
            self.pivot(row, col)
            self.iterations += 1
            if self.iterations % REFACTOR_EVERY == 0:
                self.rebuild()

    def run(self, allowed: np.ndarray) -> str:
        stalled = 0
        best_obj = np.inf
        bland = self.rule == "bland"
        verified = False
        while True:
            if self.iterations >= self.max_iter:
                return "iteration_limit"
            T = self.T
            obj = T[-1, :-1]
            # reduced costs are judged relative to their column, so round-off on
            # large-coefficient columns does not look like an improving direction
            dual_tol = DUAL_TOL * np.maximum(1.0, np.abs(T[:-1, :-1]).max(axis=0, initial=0.0))
            cand = np.flatnonzero((obj < -dual_tol) & allowed)
            if cand.size == 0:
                if verified:
                    if self.T[:-1, -1].min(initial=0.0) < -FEAS_TOL:
                        # drift left the basis primal infeasible; it is still dual
                        # feasible, so dual simplex pivots restore primal feasibility
                        if not self._dual_repair(allowed):
                            return "infeasible"
                        verified = False
                        continue
                    return "optimal"
                self.rebuild()
                verified = True
                continue
            verified = False
            col = int(cand[0]) if bland else int(cand[np.argmin(obj[cand])])
            colv = T[:-1, col]
            rows = self._pivot_rows(colv)
            if rows.size == 0:
                self.rebuild()
                T = self.T
                colv = T[:-1, col]
                rows = self._pivot_rows(colv)
                if rows.size == 0:
                    return "unbounded"
            rhs = np.maximum(T[rows, -1], 0.0)
            ratios = rhs / colv[rows]
            best = ratios.min()
            # two-pass ratio test: among rows within a small feasibility relaxation
            # of the minimum ratio, take the largest pivot (or lowest basis index
            # under Bland's rule)
            relaxed = ((rhs + FEAS_TOL) / colv[rows]).min()
            near = rows[ratios <= relaxed]
            if bland:
                tied = rows[ratios <= best + 1e-12 * max(1.0, best)]
                row = int(min(tied, key=lambda r: self.basis[r]))
            else:
                row = int(near[np.argmax(colv[near])])
            self.pivot(row, col)
            # -T[-1, -1] is the current objective; pivots that do not improve it
            # by more than round-off (degenerate or relaxed-ratio steps) count as stalls
            obj_now = -self.T[-1, -1]
            if obj_now < best_obj - 1e-12 * max(1.0, abs(best_obj) if np.isfinite(best_obj) else 1.0):
                best_obj = obj_now
                stalled = 0
            else:
                stalled += 1
                if stalled > 50:
                    bland = True
            self.iterations += 1
            if self.iterations % REFACTOR_EVERY == 0:
                self.rebuild()


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *, lb=None, maximize: bool = False,
            rule: str = "dantzig", max_iter: int = 50_000) -> LPResult:
    """Solve a small LP with ``x >= lb`` (``lb`` defaults to zero).

    ``rule`` is ``"dantzig"`` (with automatic Bland fallback on degeneracy) or
    ``"bland"`` (pure Bland's rule throughout).
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    sign = -1.0 if maximize else 1.0
    A_ub = np.zeros((0, nv)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, nv)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    lo = np.zeros(nv) if lb is None else np.broadcast_to(np.asarray(lb, dtype=float), (nv,)).copy()
    # substitute x = lo + y, y >= 0
    b_ub = b_ub - A_ub @ lo
    b_eq = b_eq - A_eq @ lo
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    A = np.zeros((m, nv + m_ub))
    b = np.concatenate([b_ub, b_eq])
    A[:m_ub, :nv] = A_ub
    A[:m_ub, nv:] = np.eye(m_ub)
    A[m_ub:, :nv] = A_eq
    # alternate row and column equilibration; columns are rescaled back at the end
    col_scale = np.ones(nv)
    for _ in range(4):
        scale = np.sqrt(np.abs(A[:, :nv]).max(axis=1, initial=0.0))
        scale[scale == 0] = 1.0
        A /= scale[:, None]
        b = b / scale
        cs = np.abs(A[:, :nv]).max(axis=0, initial=0.0)
        cs[cs == 0] = 1.0
        cs = np.sqrt(cs)
        A[:, :nv] /= cs
        col_scale *= cs
    scale = np.maximum(np.abs(A[:, :nv]).max(axis=1, initial=0.0), np.abs(b))
    scale[scale == 0] = 1.0
    A /= scale[:, None]
    b = b / scale
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    basis: list[int] = [-1] * m
    art_rows = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = nv + i
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    n_real = nv + m_ub
    A_full = np.zeros((m, n_real + n_art))
    A_full[:, :n_real] = A
    for j, i in enumerate(art_rows):
        A_full[i, n_real + j] = 1.0
        basis[i] = n_real + j

    def result(status, sx, iters):
        x = lo + np.clip(sx[:nv], 0.0, None) / col_scale if sx is not None else np.full(nv, np.nan)
        return LPResult(x, float(c @ x) if status == "optimal" else np.nan, status, iters)

    sp = _Simplex(A_full, b, basis, rule, max_iter)
    if n_art:
        cost1 = np.zeros(A_full.shape[1])
        cost1[n_real:] = 1.0
        sp.set_cost(cost1)
        status = sp.run(np.ones(A_full.shape[1], dtype=bool))
        if status == "iteration_limit":
            return result(status, None, sp.iterations)
        if -sp.T[-1, -1] > FEAS_TOL:
            return result("infeasible", None, sp.iterations)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if sp.basis[i] >= n_real:
                row = sp.T[i, :n_real]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    sp.pivot(i, int(nz[np.argmax(np.abs(row[nz]))]))
                else:
                    keep[i] = False
        basis = [bv for i, bv in enumerate(sp.basis) if keep[i]]
        sp2 = _Simplex(A[keep], b[keep], basis, rule, max_iter)
        sp2.iterations = sp.iterations
        sp = sp2
    cost = np.zeros(n_real)
    cost[:nv] = sign * c / col_scale
    sp.set_cost(cost)
    status = sp.run(np.ones(n_real, dtype=bool))
    x_full = np.zeros(sp.A.shape[1])
    for i, bv in enumerate(sp.basis):
        x_full[bv] = sp.T[i, -1]
    return result(status, x_full, sp.iterations)
