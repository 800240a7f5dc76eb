"""Bisection on a strictly decreasing parameterized objective.

For a ratio objective ``min E[R] / E[L]`` the value ``p(lam) = min E[R] - lam E[L]``
is strictly decreasing in ``lam`` and its unique zero is the optimal ratio, so
a sign-bracketed bisection is unconditionally convergent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change of ``p``."""

    def __init__(self, lo: float, hi: float, p_lo: float, p_hi: float):
        self.lo, self.hi, self.p_lo, self.p_hi = lo, hi, p_lo, p_hi
        super().__init__(
            f"need p(lo) > 0 >= p(hi); got p({lo!r}) = {p_lo!r}, p({hi!r}) = {p_hi!r}"
        )


class NonFiniteError(ArithmeticError):
    """``p`` returned NaN."""


@dataclass(frozen=True)
class RootResult:
    lambda_star: float
    residual: float
    iterations: int
    bracket: tuple[float, float]


def _eval(p: Callable[[float], float], x: float) -> float:
    v = float(p(x))
    # infinities still carry the sign; only NaN is unusable
    if math.isnan(v):
        raise NonFiniteError(f"p({x!r}) = {v!r}")
    return v


def max_iterations(lo: float, hi: float, tol: float) -> int:
    return math.ceil(math.log2(max((hi - lo) / tol, 1.0))) + 2


def find_root(
    p: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
    xtol: float | None = None,
) -> RootResult:
    """Find the zero of a decreasing function by bisection.

    Stops once ``|p(mid)| <= tol`` or the bracket is narrower than ``xtol``
    (default: ``tol``). The bracket ``(lo, hi)`` keeps ``p(lo) > 0 >= p(hi)``
    throughout, and at most ``ceil(log2((hi - lo) / xtol)) + 2`` evaluations of
    the midpoint are made.

    Parameters
    ----------
    p : callable
        Strictly decreasing function of one real variable.
    lo, hi : float
        Bracket endpoints with ``p(lo) > 0`` and ``p(hi) <= 0``.
    tol : float
        Residual tolerance.
    xtol : float, optional
        Bracket-width tolerance.

    Returns
    -------
    RootResult
        The returned point is the bracket end (or midpoint) with the smallest
        residual magnitude.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    xtol = tol if xtol is None else xtol
    if not lo < hi:
        raise ValueError(f"empty interval [{lo!r}, {hi!r}]")
    p_lo, p_hi = _eval(p, lo), _eval(p, hi)
    if not (p_lo > 0 >= p_hi):
        raise BracketError(lo, hi, p_lo, p_hi)
    if p_hi == 0 or abs(p_hi) <= tol:
        return RootResult(hi, p_hi, 0, (lo, hi))

    limit = max_iterations(lo, hi, xtol)
    best_x, best_p = (lo, p_lo) if abs(p_lo) < abs(p_hi) else (hi, p_hi)
    it = 0
    while it < limit:
        it += 1
        mid = 0.5 * (lo + hi)
        p_mid = _eval(p, mid)
        if abs(p_mid) < abs(best_p):
            best_x, best_p = mid, p_mid
        if p_mid > 0:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
        if abs(p_mid) <= tol or hi - lo <= xtol:
            break
    return RootResult(best_x, best_p, it, (lo, hi))
