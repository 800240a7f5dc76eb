"""Optimal threshold policy when every energy arrival adds one unit.

Closed forms exist for a four-unit battery: the thresholds for one, two and
three stored units are explicit functions of the full-battery threshold
``lam``, and ``lam`` itself is the zero of a scalar function bracketed in
``[0.5, 0.64]``. The unit battery coincides with the RBR case. Two- and
three-unit batteries are solved numerically by :func:`aoi_threshold.epoch.generic_solve`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core_model import ThresholdPolicy
from .dinkelbach import find_root
from .rbr import solve_rbr

# Domain guards use strict positivity with this margin.
LOG_MARGIN = 1e-12
# Bracket for the four-unit optimum: below by the infinite-battery optimum,
# above by the largest lam for which the one-unit threshold is real.
P4_BRACKET = (0.5, 0.64)
# Search interval for B >= 2 (two-unit optimum is 0.72).
IBR_BRACKET = (0.5, 0.72)


def _neg_log(arg: float, name: str, lam: float) -> float:
    if not arg > LOG_MARGIN:
        raise ValueError(f"{name} undefined at lambda={lam!r}: log argument {arg!r} is not positive")
    return -math.log(arg)


def _g(lam: float) -> float:
    return math.exp(-lam) - 0.5 * lam * lam


def ibr_x3(lam: float) -> float:
    """Age threshold with three stored units: ``-log(exp(-lam) - lam**2/2)``."""
    return _neg_log(_g(lam), "x3", lam)


def ibr_x2(lam: float) -> float:
    """Age threshold with two stored units (real only for ``lam`` below about 0.7198)."""
    g = _g(lam)
    if not g > LOG_MARGIN:
        raise ValueError(f"x2 undefined at lambda={lam!r}")
    arg = (lam + 1.0) * math.exp(-lam) + 0.5 * lam * lam + lam + math.log(g) * (g + 1.0)
    return _neg_log(arg, "x2", lam)


def ibr_x1(lam: float) -> float:
    """Age threshold with one stored unit (real only for ``lam`` below about 0.6435)."""
    x3 = ibr_x3(lam)
    x2 = ibr_x2(lam)
    arg = (
        (0.5 * lam * lam + lam + 1.0) * math.exp(-lam)
        - x2 * (math.exp(-x2) + 1.0)
        - x3 * (0.5 * x3 * math.exp(-x3) - 1.0)
    )
    return _neg_log(arg, "x1", lam)


def p4_ibr(lam: float) -> float:
    x1, x2, x3 = ibr_x1(lam), ibr_x2(lam), ibr_x3(lam)
    e = math.exp
    return (
        e(-lam) * (lam**3 / 6.0 + 1.5 * lam**2 + 6.0 * lam + 10.0)
        - 0.5 * lam**2
        - (x1 - lam)
        - (x2 - lam)
        - (x3 - lam)
        - (x1 + 2.0) * e(-x1)
        - (0.5 * x2**2 + 2.0 * x2 + 3.0) * e(-x2)
        - (x3**3 / 6.0 + x3**2 + 3.0 * x3 + 4.0) * e(-x3)
    )


@dataclass(frozen=True)
class IbrSolution:
    """Solved IBR policy; ``thresholds`` are ``x_1 > ... > x_{B-1}``."""

    capacity: int
    lambda_star: float
    thresholds: tuple[float, ...]
    source: str = "closed_form"
    residual: float = 0.0
    iterations: int = 0
    ci95: float = 0.0
    converged: bool = True

    def policy(self) -> ThresholdPolicy:
        return ThresholdPolicy(self.capacity, self.thresholds + (self.lambda_star,))


def solve_ibr(B: int, tol: float = 1e-9, **generic_kw) -> IbrSolution:
    """Optimal IBR policy for ``B`` in {1, 2, 3, 4}.

    ``B = 1`` and ``B = 4`` are closed form; ``B = 2, 3`` run the Monte Carlo
    optimizer, forwarding ``generic_kw`` to it.
    """
    if B == 1:
        sol = solve_rbr(1, tol)
        return IbrSolution(1, sol.lambda_star, (), residual=sol.residual, iterations=sol.iterations)
    if B == 4:
        res = find_root(p4_ibr, *P4_BRACKET, tol)
        lam = res.lambda_star
        return IbrSolution(
            4,
            lam,
            (ibr_x1(lam), ibr_x2(lam), ibr_x3(lam)),
            residual=res.residual,
            iterations=res.iterations,
        )
    if B in (2, 3):
        from .epoch import generic_solve

        return generic_solve("ibr", B, **generic_kw)
    raise ValueError(
        f"no IBR solver for B={B!r}; use aoi_threshold.epoch.generic_solve('ibr', B) instead"
    )
