import itertools

import numpy as np
import pytest

from trialmech.adversaries import stochastic_adversary, table_adversary
from trialmech.estimation import (ips_error_bound, ips_variance, lower_bound_mse, lower_bound_threshold, mse,
                                  scoring_family)
from trialmech.learning import WarmupData
from trialmech.mechanisms import homogeneous_mechanism, ips_from_rounds
from trialmech.adversaries import lb_adversary_homogeneous
from trialmech.model import ScoringFunction


def enumerate_ips(probs, table, f):
    """Exact mean and variance of IPS by summing over every arm sequence."""
    m, n = probs.shape
    mean = np.zeros(n)
    second = np.zeros(n)
    for arms in itertools.product(range(n), repeat=m):
        arms = np.array(arms)
        w = np.prod(probs[np.arange(m), arms])
        est = ips_from_rounds(probs, arms, table, f)
        mean += w * est
        second += w * est ** 2
    return mean, second - mean ** 2


def test_ips_unbiased_and_variance_formula(rng):
    f = ScoringFunction(np.array([0.2, 1.0]))
    for _ in range(30):
        m = int(rng.integers(1, 5))
        probs = rng.dirichlet(np.ones(3), size=m)
        table = rng.integers(0, 2, size=(m, 3))
        mean, var = enumerate_ips(probs, table, f)
        np.testing.assert_allclose(mean, f.values[table].mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(var, ips_variance(probs, f.values[table]), atol=1e-12)
        assert np.all(var <= ips_error_bound(probs) + 1e-15)


def test_ips_error_bound_validation():
    assert ips_error_bound(np.full((4, 2), 0.5)) == pytest.approx(0.5)
    with pytest.raises(ValueError, match="empty"):
        ips_error_bound(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        ips_error_bound(np.array([[1.0, 0.0]]))


def test_ips_rejects_corrupt_history():
    f = ScoringFunction(np.array([0.0, 1.0]))
    with pytest.raises(ValueError, match="corrupt"):
        ips_from_rounds(np.array([[1.0, 0.0]]), np.array([1]), np.array([[0, 1]]), f)
    with pytest.raises(ValueError, match="empty"):
        ips_from_rounds(np.zeros((0, 2)), np.zeros(0, dtype=int), np.zeros((0, 2), dtype=int), f)


def test_monte_carlo_mse_matches_exact_variance(H1):
    # fixed injected counts make the main-stage distribution deterministic
    data = WarmupData(np.array([[[2, 8]], [[6, 4]]]))
    cfg = homogeneous_mechanism(H1, 0, 4, warmup_data=data)
    table = np.array([[1, 0], [0, 1], [1, 1], [0, 0]])
    adv = table_adversary(np.zeros(4, dtype=int), table)
    fam = scoring_family(H1)
    rep = mse(H1, cfg, adv, fam, reps=20_000, seed=3)
    probs = np.tile([0.875, 0.125], (4, 1))
    for j, f in enumerate(fam):
        exact = ips_variance(probs, f.values[table])
        assert np.all(np.abs(rep.mse[:, j] - exact) <= 3 * rep.half_width[:, j] + 1e-12)


def test_mse_is_deterministic(H1):
    cfg = homogeneous_mechanism(H1, 0, 50, exogenous=20)
    adv = stochastic_adversary(H1, 0)
    a = mse(H1, cfg, adv, None, reps=30, seed=1)
    b = mse(H1, cfg, adv, None, reps=30, seed=1)
    np.testing.assert_array_equal(a.per_rep, b.per_rep)
    assert a.scoring == ("1[lo]", "1[hi]", "scores")


def test_lower_bound_mse_matches_formula():
    q = np.full(200, 0.25)
    pair = lb_adversary_homogeneous(q)
    base, alt = lower_bound_mse(pair, 20_000, seed=2)
    # base: target outcome is Bernoulli(1/2), so E[(IPS - avg)^2] = (1/S^2) sum p (1/q - 1)
    exact = 0.5 * (1 / 0.25 - 1) / 200
    assert abs(base.mse - exact) <= 3 * base.half_width
    p_alt = 0.5 + pair.delta
    assert abs(alt.mse - np.sum(p_alt * (1 / q - 1)) / 200 ** 2) <= 3 * alt.half_width
    assert lower_bound_threshold(pair) == pytest.approx((pair.delta.sum() / 800) ** 2 / 16)
