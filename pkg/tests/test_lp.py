import numpy as np
import pytest
from scipy.optimize import linprog as highs

from trialmech.lp import linprog


def random_lp(rng, m, n, eq=0):
    A = rng.normal(size=(m, n))
    x0 = rng.random(n)
    b = A @ x0 + rng.random(m)
    Aeq = rng.normal(size=(eq, n)) if eq else None
    beq = Aeq @ x0 if eq else None
    c = rng.normal(size=n)
    # box keeps the problem bounded
    A = np.vstack([A, np.eye(n)])
    b = np.concatenate([b, np.full(n, 3.0)])
    return c, A, b, Aeq, beq


@pytest.mark.parametrize("rule", ["dantzig", "bland"])
def test_matches_highs_on_random_lps(rule):
    rng = np.random.default_rng(7)
    for _ in range(60):
        m, n, eq = rng.integers(1, 12), rng.integers(1, 10), rng.integers(0, 3)
        c, A, b, Aeq, beq = random_lp(rng, m, n, eq)
        ref = highs(c, A, b, Aeq, beq, bounds=(0, None), method="highs")
        res = linprog(c, A, b, Aeq, beq, rule=rule)
        assert res.success == (ref.status == 0)
        if ref.status == 0:
            assert res.fun == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
            assert np.all(A @ res.x <= b + 1e-8)


def test_beale_cycling_example_terminates():
    # the classic instance on which textbook Dantzig pivoting with lowest-index ties cycles
    c = np.array([-0.75, 150, -0.02, 6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0, 0, 1.0])
    for rule in ("dantzig", "bland"):
        res = linprog(c, A, b, rule=rule)
        assert res.success
        assert res.fun == pytest.approx(-0.05)


def test_infeasible_and_unbounded():
    assert linprog([1, 1], [[1, 1]], [-1]).status == "infeasible"
    assert linprog([-1, 0], [[0, 1]], [1]).status == "unbounded"
    assert linprog([1], A_eq=[[1]], b_eq=[2], maximize=True).fun == pytest.approx(2)


def test_lower_bounds():
    res = linprog([1, 1], [[-1, -1]], [-1], lb=[0.3, 0.4])
    assert res.success and res.fun == pytest.approx(1.0)
    assert np.all(res.x >= [0.3, 0.4])
    assert linprog([1], [[1]], [0.1], lb=[0.2]).status == "infeasible"


def test_redundant_equalities():
    res = linprog([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    assert res.success and res.fun == pytest.approx(1.0)


def test_deterministic():
    rng = np.random.default_rng(3)
    c, A, b, _, _ = random_lp(rng, 8, 6)
    r1, r2 = linprog(c, A, b), linprog(c, A, b)
    np.testing.assert_array_equal(r1.x, r2.x)
