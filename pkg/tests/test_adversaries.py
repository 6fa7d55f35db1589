import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from trialmech.adversaries import (alternating_table, concat, delta_schedule, lb_adversary_heterogeneous,
                                   lb_adversary_homogeneous, pinsker_gap, realize_frequencies, sequence_adversary,
                                   stochastic_adversary, table_adversary)


def test_stochastic_adversary_frequencies(T1, rng):
    adv = stochastic_adversary(T1, 1, [0.25, 0.75])
    types, rows = adv.draw(rng, 0, 200_000)
    assert np.mean(types == 1) == pytest.approx(0.75, abs=0.005)
    np.testing.assert_allclose(rows.mean(axis=0), T1.states[1, :, 0, 1], atol=0.005)
    np.testing.assert_array_equal(adv.volunteer_state, T1.states[1])


def test_table_adversary_is_fixed(H1, rng):
    adv = alternating_table(H1, 6)
    t1, o1 = adv.draw(rng, 0, 6)
    t2, o2 = adv.draw(np.random.default_rng(0), 0, 6)
    np.testing.assert_array_equal(o1, o2)
    assert o1[:, 0].tolist() == [0, 1, 0, 1, 0, 1] and o1[:, 1].tolist() == [1, 0, 1, 0, 1, 0]
    with pytest.raises(ValueError, match="adversary exhausted"):
        adv.draw(rng, 4, 3)
    with pytest.raises(ValueError):
        table_adversary([0, 0], np.zeros((3, 2)))


def test_sequence_and_concat(T1, rng):
    seq = sequence_adversary(T1, 0, [1, 1, 0])
    t, _ = seq.draw(rng, 0, 3)
    assert t.tolist() == [1, 1, 0]
    tab = table_adversary([0, 1], np.array([[0, 0], [1, 1]]))
    both = concat(seq, 3, tab)
    t, o = both.draw(rng, 2, 3)
    assert t.tolist() == [0, 0, 1] and o[1:].tolist() == [[0, 0], [1, 1]]
    assert both.length == 5


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=80))
def test_tv_identity_exact(q):
    assume(delta_schedule(q).max() <= 0.5)
    pair = lb_adversary_homogeneous(q)
    assert pair.tv_proxy == pytest.approx(0.5, abs=1e-12)


def test_delta_schedule_h1():
    q = np.full(1000, 0.125)
    pair = lb_adversary_homogeneous(q)
    assert pair.delta[0] == pytest.approx(1 / (0.125 * np.sqrt(8 * 8000)))
    assert pair.regime == "case2"
    sparse = lb_adversary_homogeneous(np.full(1000, 1e-3))
    assert sparse.regime == "case1"
    with pytest.raises(ValueError):
        lb_adversary_homogeneous([1e-6])
    with pytest.raises(ValueError):
        delta_schedule([0.0, 0.5])


def test_lb_pair_outcome_rates(rng):
    q = np.full(400, 0.125)
    pair = lb_adversary_homogeneous(q)
    _, base = pair.base.draw(rng, 0, 400)
    hits = np.mean([pair.alt.draw(rng, 0, 400)[1][:, 0] == 0 for _ in range(200)], axis=0)
    assert hits.mean() == pytest.approx(0.5 + pair.delta.mean(), abs=0.01)
    assert set(np.unique(base)) <= {0, 1}


def test_realize_frequencies():
    assert realize_frequencies(np.array([0.25, 0.75]), 4).tolist() == [0, 1, 1, 1]
    with pytest.raises(ValueError, match="freq not realizable"):
        realize_frequencies(np.array([0.3, 0.7]), 4)


def test_lb_heterogeneous(T1, rng):
    q = np.full(8, 0.25)
    pair = lb_adversary_heterogeneous(T1, 0, q, T0=4, freq=np.array([0.5, 0.5]))
    t, o = pair.alt.draw(rng, 0, 12)
    assert t[4:].tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
    assert o.shape == (12, 2)
    assert pair.tv_proxy == pytest.approx(0.5)


def test_pinsker():
    assert pinsker_gap([0.5, 0.5], [0.5, 0.5]) == 0.0
    p, q = np.array([0.7, 0.3]), np.array([0.5, 0.5])
    assert abs(p - q).sum() / 2 <= pinsker_gap(p, q)
