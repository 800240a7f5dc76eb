import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aoi_threshold.rbr import (
    LAMBDA_MAX,
    RbrSolution,
    f_sequence,
    p_rbr,
    rbr_epoch_schedule,
    rbr_epoch_updates,
    solve_rbr,
)


def test_unit_battery():
    s = solve_rbr(1)
    assert s.lambda_star == pytest.approx(0.9012, abs=1e-4)
    assert s.thresholds == ()
    # direct form of the unit-battery condition
    lam = s.lambda_star
    assert math.exp(-lam) - 0.5 * lam**2 == pytest.approx(0.0, abs=1e-8)


def test_four_unit_battery():
    s = solve_rbr(4)
    assert s.lambda_star == pytest.approx(0.3592, abs=1e-3)
    np.testing.assert_allclose(s.f_values, [0.99292, 0.62242, 0.45628], atol=1e-4)
    np.testing.assert_allclose(s.thresholds, [2.07162, 1.07870, 0.45628], atol=1e-4)


def test_optimum_decreases_with_battery():
    lams = [solve_rbr(B).lambda_star for B in range(1, 13)]
    assert all(a > b for a, b in zip(lams, lams[1:]))


def test_f_recursion():
    lam = 0.4
    f = f_sequence(lam, 5)
    assert f[0] == pytest.approx(lam + math.exp(-lam) - lam**2 / 2)
    for j in range(1, 4):
        assert f[j] == pytest.approx(f[0] - math.exp(-f[j - 1]))


def test_domain_checks():
    with pytest.raises(ValueError):
        f_sequence(0.0, 3)
    with pytest.raises(ValueError):
        f_sequence(LAMBDA_MAX + 0.01, 3)
    with pytest.raises(ValueError):
        p_rbr(0.5, 0)


@given(lam=st.floats(0.01, 0.9012), B=st.integers(2, 20))
def test_gaps_strictly_decrease(lam, B):
    f = f_sequence(lam, B)
    finite = f[np.isfinite(f)]
    assert np.all(np.diff(finite) < 0)
    # once the recursion diverges it stays diverged
    assert np.all(np.isneginf(f[len(finite):]))


@pytest.mark.parametrize("B", [2, 4, 8, 16, 32])
def test_gaps_positive_at_optimum(B):
    s = solve_rbr(B)
    assert min(s.f_values) > s.lambda_star


@given(B=st.integers(1, 12), a=st.floats(0.01, 0.89), d=st.floats(1e-3, 0.01))
def test_p_decreasing(B, a, d):
    assert p_rbr(a, B) > p_rbr(a + d, B)


def test_schedule_branches():
    s = solve_rbr(4)
    lam, x1, x2, x3 = s.lambda_star, *s.thresholds
    assert rbr_epoch_schedule(s, 0.0) == pytest.approx(lam)
    assert rbr_epoch_schedule(s, 0.5 * x3) == pytest.approx(lam)
    # x3 < lam + ... branch: first cut-off fired, recharge soon after
    assert rbr_epoch_schedule(s, x3 + 0.01) == pytest.approx(x3 + lam)
    assert rbr_epoch_schedule(s, x2 - 1e-9) == pytest.approx(x2 - 1e-9)
    assert rbr_epoch_schedule(s, x1 + 5.0) == pytest.approx(x1 + 5.0)
    v = rbr_epoch_schedule(s, np.array([0.0, x1 + 5.0]))
    np.testing.assert_allclose(v, [lam, x1 + 5.0])
    with pytest.raises(ValueError):
        rbr_epoch_schedule(s, -1.0)


def test_epoch_updates():
    s = solve_rbr(3)
    u = rbr_epoch_updates(s, 10.0)
    np.testing.assert_allclose(u, [s.thresholds[1], s.thresholds[0], 10.0])
    assert len(rbr_epoch_updates(s, 0.0)) == 1


def test_policy_levels():
    s = solve_rbr(4)
    p = s.policy()
    assert p.thresholds == tuple(s.f_values) + (s.lambda_star,)
    assert RbrSolution.from_lambda(s.lambda_star, 4).thresholds == s.thresholds
