import math

import numpy as np
import pytest

from aoi_threshold.core_model import EnergyCausalityError, ThresholdPolicy
from aoi_threshold.ibr import solve_ibr
from aoi_threshold.rbr import solve_rbr
from aoi_threshold.sim import (
    BatteryAwareAdaptive,
    BestEffortUniform,
    MarkovOnOff,
    OptimalThreshold,
    Poisson,
    baseline_policy,
    gen_arrivals,
    monte_carlo,
    run_policy,
    run_policy_reference,
)


def _trace(times):
    t = np.asarray(times, dtype=float)
    return t, np.ones(len(t), dtype=np.int64)


def test_single_triangle():
    lam = 0.9012
    pol = OptimalThreshold(ThresholdPolicy(1, (lam,)))
    assert run_policy("rbr", 1, pol, _trace([0.5]), lam) == pytest.approx(lam / 2)


def test_uniform_unit_triangles():
    arr = _trace(np.arange(1, 1001) - 0.1)
    assert run_policy("ibr", 1, BestEffortUniform(1.0), arr, 1000.0) == pytest.approx(0.5)


def test_uniform_skips_empty_grid_points():
    # single arrival at 1.5: grid point 1 skipped, update at 2
    v = run_policy("ibr", 1, BestEffortUniform(1.0), _trace([1.5]), 3.0)
    assert v == pytest.approx((0.5 * 4 + 0.5 * 1) / 3)


def test_no_arrivals_no_updates():
    v = run_policy("ibr", 2, OptimalThreshold(ThresholdPolicy(2, (1.0, 0.5))), _trace([]), 4.0)
    assert v == pytest.approx(2.0)


def test_adaptive_defers_to_arrival():
    # target 1/(1-beta) passes with an empty battery; fires at the arrival
    pol = BatteryAwareAdaptive(1.0, 0.5)
    v = run_policy("ibr", 2, pol, _trace([3.0]), 3.0)
    assert v == pytest.approx(1.5)


@pytest.mark.parametrize("model", ["rbr", "ibr"])
@pytest.mark.parametrize("name", ["optimal", "uniform", "adaptive"])
@pytest.mark.parametrize("proc", [Poisson(), MarkovOnOff(0.3, 0.6)])
def test_compiled_matches_reference(model, name, proc):
    B = 3
    if name == "optimal":
        pol = OptimalThreshold(solve_rbr(B).policy())
    else:
        pol = baseline_policy(name, model, B)
    rng = np.random.default_rng(7)
    for _ in range(5):
        arr = gen_arrivals(proc, 150.0, rng)
        assert run_policy(model, B, pol, arr, 150.0) == pytest.approx(
            run_policy_reference(model, B, pol, arr, 150.0), rel=1e-12
        )


def test_poisson_mean_gap():
    t, u = gen_arrivals(Poisson(), 1e6, np.random.default_rng(0))
    assert np.diff(t).mean() == pytest.approx(1.0, abs=0.005)
    assert t[-1] <= 1e6 and np.all(u == 1)


@pytest.mark.parametrize("q", [0.1, 0.5, 1.0])
def test_markov_unit_rate(q):
    t, _ = gen_arrivals(MarkovOnOff(q, q), 1e5, np.random.default_rng(1))
    assert len(t) / 1e5 == pytest.approx(1.0, rel=0.01)


def test_markov_asymmetric_rate():
    t, _ = gen_arrivals(MarkovOnOff(0.2, 0.6), 1e5, np.random.default_rng(2))
    assert len(t) / 1e5 == pytest.approx(1.0, rel=0.02)


def test_markov_alternates_when_q_is_one():
    t, _ = gen_arrivals(MarkovOnOff(1.0, 1.0), 100.0, np.random.default_rng(3))
    np.testing.assert_allclose(np.diff(t), 1.0)


def test_arrival_validation():
    with pytest.raises(ValueError):
        MarkovOnOff(0.0, 0.5)
    with pytest.raises(ValueError):
        Poisson(rate=2.0)
    with pytest.raises(ValueError):
        gen_arrivals(Poisson(), 0.0, 0)


def test_policy_validation():
    with pytest.raises(ValueError):
        BestEffortUniform(0.0)
    with pytest.raises(ValueError):
        BatteryAwareAdaptive(1.0, 1.0)
    assert baseline_policy("uniform", "rbr", 4).nu == 4.0
    assert baseline_policy("adaptive", "ibr", 4).beta == pytest.approx(math.log(4) / 4)
    with pytest.raises(ValueError):
        baseline_policy("optimal", "rbr", 4)


def test_capacity_mismatch():
    with pytest.raises(ValueError):
        run_policy("rbr", 3, OptimalThreshold(solve_rbr(2).policy()), _trace([1.0]), 2.0)


def test_reference_causality_guard():
    from aoi_threshold.core_model import BatteryState, battery_step

    with pytest.raises(EnergyCausalityError):
        battery_step("rbr", BatteryState(0, 1), 0, 1)


def test_monte_carlo_deterministic_and_thread_independent():
    pol = OptimalThreshold(solve_ibr(4).policy())
    a = monte_carlo("ibr", 4, pol, Poisson(), 200.0, 64, seed=9, threads=1)
    b = monte_carlo("ibr", 4, pol, Poisson(), 200.0, 64, seed=9, threads=4)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.avg_age == b.avg_age and a.ci95_halfwidth == b.ci95_halfwidth


def test_single_replicate():
    r = monte_carlo("rbr", 1, OptimalThreshold(solve_rbr(1).policy()), Poisson(), 100.0, 1, seed=0)
    assert r.ci95_halfwidth == 0.0 and r.avg_age > 0


@pytest.mark.parametrize(
    "model,B,sol",
    [("rbr", 1, solve_rbr(1)), ("rbr", 4, solve_rbr(4)), ("ibr", 1, solve_ibr(1)), ("ibr", 4, solve_ibr(4))],
)
def test_long_horizon_converges_to_optimum(model, B, sol):
    r = monte_carlo(model, B, OptimalThreshold(sol.policy()), Poisson(), 1e4, 200, seed=0)
    assert abs(r.avg_age - sol.lambda_star) <= max(0.01, 3 * r.ci95_halfwidth)


def test_markov_q1_unit_battery():
    r = monte_carlo("ibr", 1, OptimalThreshold(solve_ibr(1).policy()), MarkovOnOff(1, 1), 1000.0, 1000, seed=0)
    assert r.avg_age == pytest.approx(0.4992, abs=0.01)
