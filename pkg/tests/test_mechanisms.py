import numpy as np
import pytest

from trialmech.adversaries import stochastic_adversary, table_adversary
from trialmech.benchmarks import bench_typefreq
from trialmech.estimation import scoring_family
from trialmech.incentives import best_arm_policy, uniform_policy
from trialmech.learning import WarmupData
from trialmech.mechanisms import (MechanismConfig, expected_sampling_probs, heterogeneous_mechanism,
                                  homogeneous_mechanism, run_trial, run_warmup, schedule_arms, verify_mechanism_ic)


def t1_mech(T1, T0=8, T=40):
    pol = bench_typefreq(T1, [0.5, 0.5]).policy
    return heterogeneous_mechanism(T1, pol, None, T0, T), pol


def test_config_invariants(H1):
    with pytest.raises(ValueError, match="T0 <= T/2"):
        homogeneous_mechanism(H1, 6, 10)
    with pytest.raises(ValueError):
        MechanismConfig("weird", 0, 10)
    assert homogeneous_mechanism(H1, 0, 10).eps == pytest.approx(0.25)


def test_schedule_round_robin(T1):
    assert schedule_arms(T1, 6).tolist() == [0, 1, 0, 1, 0, 1]


def test_homogeneous_main_stage(H1, rng):
    cfg = homogeneous_mechanism(H1, 0, 10, warmup_data=WarmupData(np.array([[[2, 8]], [[6, 4]]])))
    hist = run_trial(H1, cfg, stochastic_adversary(H1, 0), scoring_family(H1), rng)
    np.testing.assert_allclose(hist.main_dists, [[0.875, 0.125]])
    np.testing.assert_allclose(hist.probs[:, 0], 0.875)


def test_heterogeneous_main_stage(T1, rng):
    cfg, pol = t1_mech(T1)
    hist = run_trial(T1, cfg, stochastic_adversary(T1, 1), scoring_family(T1), rng)
    k = hist.estimated_state
    np.testing.assert_allclose(hist.main_dists, 0.5 * pol.probs[k] + 0.5 * best_arm_policy(T1).probs[k])
    # warm-up rounds are deterministic round-robin, recorded with probability one
    assert hist.arms[:8].tolist() == [0, 1] * 4
    assert np.all(hist.probs[np.arange(8), hist.arms[:8]] == 1)
    assert set(hist.estimates) == {"1[lo]", "1[hi]", "scores"}


def test_heterogeneous_rejects_bad_policies(T1):
    pol = bench_typefreq(T1, [0.5, 0.5]).policy
    with pytest.raises(ValueError):
        heterogeneous_mechanism(T1, pol, uniform_policy(T1), 8, 40)
    with pytest.raises(ValueError):
        heterogeneous_mechanism(T1, pol, None, 8, 40, eta=0.2)


def test_trial_errors(H1, rng):
    cfg = homogeneous_mechanism(H1, 0, 0)
    with pytest.raises(ValueError, match="empty estimation window"):
        run_trial(H1, cfg, stochastic_adversary(H1, 0), scoring_family(H1), rng)
    cfg = homogeneous_mechanism(H1, 0, 4, exogenous=5)
    adv = table_adversary([0] * 4, np.zeros((4, 2), dtype=int))
    with pytest.raises(ValueError, match="volunteer state"):
        run_warmup(H1, cfg, adv, rng)


def test_mechanism_frozen_after_warmup(T1):
    # the same warm-up seed yields the same main-stage distribution whatever the later table
    cfg, _ = t1_mech(T1)
    a = run_trial(T1, cfg, stochastic_adversary(T1, 0), scoring_family(T1), np.random.default_rng(4))
    b = run_trial(T1, cfg, stochastic_adversary(T1, 0), scoring_family(T1), np.random.default_rng(4))
    np.testing.assert_array_equal(a.main_dists, b.main_dists)
    assert np.all(a.probs[8:] == a.main_dists[a.types[8:]])


def test_verify_ic_homogeneous(H1):
    cfg = homogeneous_mechanism(H1, 0, 100, exogenous=200)
    rep = verify_mechanism_ic(H1, cfg, 20_000, seed=1)
    assert rep.satisfied and rep.allowance == 0.0
    # eps = 1/4 keeps a margin of one half of the eps* slack: 0.2 * (0.5 - 0.25) = 0.05
    assert rep.bir[0].mean == pytest.approx(0.05, abs=0.01)


def test_verify_ic_heterogeneous(T1):
    cfg, _ = t1_mech(T1, T0=136, T=1000)
    rep = verify_mechanism_ic(T1, cfg, 20_000, seed=1)
    assert rep.allowance == pytest.approx(0.1 / 8)
    assert rep.satisfied
    assert set(rep.bic) == {(0, 1), (1, 0)}


def test_expected_sampling_probs(H1):
    cfg = homogeneous_mechanism(H1, 0, 20, exogenous=50)
    q = expected_sampling_probs(H1, cfg, stochastic_adversary(H1, 0), 200, seed=0)
    assert q.shape == (20, 2)
    np.testing.assert_allclose(q.sum(axis=1), 1.0)
    assert q[:, 1].min() >= 0.125 - 1e-12
