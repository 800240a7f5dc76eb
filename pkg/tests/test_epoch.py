import math

import numpy as np
import pytest

from aoi_threshold.core_model import ThresholdPolicy
from aoi_threshold.epoch import (
    EpochCapExceeded,
    EpochSample,
    SolveBudget,
    estimate_objective,
    generic_solve,
    independence_diagnostic,
    simulate_epoch_ibr,
    simulate_epoch_rbr,
    simulate_epochs_ibr,
    simulate_epochs_rbr,
    simulate_epochs_threshold,
)
from aoi_threshold.ibr import solve_ibr
from aoi_threshold.rbr import solve_rbr


@pytest.fixture(scope="module")
def rbr4():
    return solve_rbr(4)


def test_rbr_epoch_immediate_recharge(rbr4):
    e = simulate_epoch_rbr(rbr4, tau=0.0)
    lam = rbr4.lambda_star
    assert e == EpochSample(pytest.approx(0.5 * lam * lam), pytest.approx(lam), 1)


def test_rbr_epoch_late_recharge(rbr4):
    x1, x2, x3 = rbr4.thresholds
    tau = rbr4.lambda_star + x1 + 1.0
    e = simulate_epoch_rbr(rbr4, tau=tau)
    expected = 0.5 * x3**2 + 0.5 * (x2 - x3) ** 2 + 0.5 * (x1 - x2) ** 2 + 0.5 * (tau - x1) ** 2
    assert e.updates == 4
    assert e.length == pytest.approx(tau)
    assert e.area == pytest.approx(expected)


def test_rbr_update_count_bins(rbr4):
    rng = np.random.default_rng(3)
    tau = rng.exponential(size=20000)
    b = simulate_epochs_rbr(rbr4, len(tau), tau=tau)
    x1, x2, x3 = rbr4.thresholds
    expected = np.select([tau < x3, tau < x2, tau < x1], [1, 2, 3], 4)
    np.testing.assert_array_equal(b.updates, expected)
    assert b.updates.max() <= 4


def test_rbr_vectorized_agrees_with_event_loop(rbr4):
    vec = estimate_objective("rbr", rbr4, rbr4.lambda_star, 200_000, seed=1)
    ev = simulate_epochs_threshold("rbr", rbr4.policy(), 200_000, np.random.default_rng(2))
    ratio = ev.area.mean() / ev.length.mean()
    se = math.hypot(vec.ratio_std_error, vec.ratio_std_error)
    assert abs(vec.ratio - ratio) < 4 * se


def test_ibr_unit_battery_mean_length():
    lam = 0.9012
    b = simulate_epochs_ibr(ThresholdPolicy(1, (lam,)), 200_000, np.random.default_rng(0))
    mean, se = b.length.mean(), b.length.std() / math.sqrt(len(b))
    assert abs(mean - (lam + math.exp(-lam))) < 4 * se
    assert np.all(b.updates == 1)


def test_ibr_epoch_positive():
    e = simulate_epoch_ibr(solve_ibr(4), np.random.default_rng(0))
    assert e.length > 0 and e.area > 0 and e.updates >= 1


def test_update_cap():
    # a large battery with slow updates drifts up and almost never empties
    pol = ThresholdPolicy(8, (5.0,) * 8)
    with pytest.raises(EpochCapExceeded, match="suspect policy"):
        simulate_epochs_ibr(pol, 10, np.random.default_rng(0), cap=50)


def test_objective_at_zero_lambda():
    est = estimate_objective("ibr", solve_ibr(4), 0.0, 1000, seed=0)
    assert est.p_value == est.mean_R > 0


def test_objective_deterministic():
    a = estimate_objective("ibr", solve_ibr(4), 0.6, 5000, seed=11)
    b = estimate_objective("ibr", solve_ibr(4), 0.6, 5000, seed=11)
    assert a == b


def test_objective_decreasing_in_lambda():
    pol = solve_ibr(4)
    vals = [estimate_objective("ibr", pol, lam, 20000, seed=5).p_value for lam in np.linspace(0.3, 0.9, 13)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_objective_needs_two_epochs():
    with pytest.raises(ValueError):
        estimate_objective("rbr", solve_rbr(2), 0.5, 1)


def test_independence_diagnostic_edges():
    with pytest.raises(ValueError):
        independence_diagnostic([1.0] * 999)
    assert independence_diagnostic([2.0] * 2000) == 0.0
    rng = np.random.default_rng(0)
    dup = np.repeat(rng.exponential(size=1000), 50)
    assert independence_diagnostic(dup) > 0.9


def test_independence_accepts_samples():
    b = simulate_epochs_ibr(solve_ibr(4), 5000, np.random.default_rng(4))
    assert independence_diagnostic(list(b)) == pytest.approx(independence_diagnostic(b))


def test_generic_unit_battery():
    s = generic_solve("rbr", 1, SolveBudget(n_epochs=100_000), seed=0)
    assert s.lambda_star == pytest.approx(solve_rbr(1).lambda_star, abs=0.01)
    assert s.source == "monte_carlo"


def test_generic_ibr_four_units():
    s = generic_solve("ibr", 4, SolveBudget(n_epochs=50_000, sweeps=2, golden_iters=14), seed=0)
    assert s.lambda_star == pytest.approx(0.6023, abs=0.01)
    assert s.thresholds[0] >= s.thresholds[1] >= s.thresholds[2] >= s.lambda_star


def test_generic_horizon_mode():
    s = generic_solve("ibr", 8, SolveBudget(n_epochs=40_000, sweeps=1, golden_iters=10), seed=0)
    assert 0.5 < s.lambda_star < 0.6
    assert len(s.thresholds) == 7


def test_generic_flags_nonconvergence():
    s = generic_solve("ibr", 2, SolveBudget(n_epochs=500, sweeps=1, golden_iters=6), seed=0)
    assert not s.converged
    assert s.ci95 > 0.01


def test_generic_rejects_bad_inputs():
    with pytest.raises(ValueError):
        generic_solve("ibr", 0)
    with pytest.raises(ValueError):
        generic_solve("ibr", 2, method="exact")
