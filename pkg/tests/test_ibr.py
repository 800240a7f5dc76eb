import pytest

from aoi_threshold.ibr import IBR_BRACKET, P4_BRACKET, ibr_x1, ibr_x2, ibr_x3, p4_ibr, solve_ibr
from aoi_threshold.rbr import solve_rbr


def test_closed_forms_at_reference_point():
    lam = 0.6023
    assert ibr_x3(lam) == pytest.approx(1.004663, abs=1e-6)
    assert ibr_x2(lam) == pytest.approx(1.243111, abs=1e-6)
    assert ibr_x1(lam) == pytest.approx(1.635814, abs=1e-6)


def test_thresholds_ordered():
    for lam in (0.5, 0.55, 0.6, 0.63):
        assert ibr_x1(lam) > ibr_x2(lam) > ibr_x3(lam) > lam


def test_p4_sign_change_and_monotone():
    lo, hi = P4_BRACKET
    assert p4_ibr(lo) > 0 > p4_ibr(hi)
    grid = [0.5 + 0.01 * k for k in range(14)]
    vals = [p4_ibr(x) for x in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_domain_errors():
    with pytest.raises(ValueError):
        ibr_x1(0.65)
    with pytest.raises(ValueError):
        ibr_x2(0.73)
    with pytest.raises(ValueError):
        ibr_x3(1.5)


def test_solve_four_units():
    s = solve_ibr(4)
    assert s.lambda_star == pytest.approx(0.60234, abs=1e-5)
    assert s.policy().thresholds[-1] == s.lambda_star
    assert s.source == "closed_form"


def test_unit_battery_matches_rbr():
    assert solve_ibr(1).lambda_star == solve_rbr(1).lambda_star


def test_unsupported_size():
    with pytest.raises(ValueError, match="generic_solve"):
        solve_ibr(5)


def test_bracket_constant():
    assert IBR_BRACKET[1] == pytest.approx(0.72)
