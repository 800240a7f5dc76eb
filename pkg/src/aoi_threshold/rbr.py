"""Optimal threshold policy when every energy arrival fills the battery.

Epochs start each time the battery drops to ``B - 1`` units. Within an epoch
the sensor sends updates at the cumulative cut-offs ``x_{B-1} < ... < x_1``
while no recharge has happened yet, and once the battery is recharged it
updates as soon as the age reaches ``lam``. The inter-update gaps before the
recharge are ``f_{B-1}(lam), ..., f_1(lam)`` with

    f_1(lam) = lam + exp(-lam) - lam**2 / 2
    f_j(lam) = f_1(lam) - exp(-f_{j-1}(lam))

and the optimal ``lam`` is the zero of
``p(lam) = exp(-lam) - lam**2 / 2 - exp(-f_{B-1}(lam))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ThresholdPolicy
from .dinkelbach import find_root

# Smallest 4-digit upper bound on the unit-battery optimum (0.901201...);
# larger batteries cannot do worse, so every RBR optimum lies below it.
LAMBDA_MAX = 0.9013
LAMBDA_MIN = 1e-9
MAX_BATTERY = 64
_EXP_FLOOR = -700.0


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 < lam <= LAMBDA_MAX):
        raise ValueError(f"lambda={lam!r} outside (0, {LAMBDA_MAX}]")
    return lam


def _check_battery(B: int) -> int:
    if int(B) != B or not 1 <= B <= MAX_BATTERY:
        raise ValueError(f"battery size must be an integer in [1, {MAX_BATTERY}], got {B!r}")
    return int(B)


def f_sequence(lam: float, B: int) -> np.ndarray:
    """Inter-update gaps ``[f_1, ..., f_{B-1}]`` before a recharge; empty for ``B == 1``."""
    lam = _check_lambda(lam)
    B = _check_battery(B)
    f = np.empty(B - 1)
    if B == 1:
        return f
    f1 = lam + math.exp(-lam) - 0.5 * lam * lam
    f[0] = f1
    for j in range(1, B - 1):
        # far above the optimum the recursion runs off to -inf
        prev = f[j - 1]
        f[j] = f1 - math.exp(-prev) if prev > _EXP_FLOOR else -math.inf
    return f


def p_rbr(lam: float, B: int) -> float:
    """Parameterized objective; its zero is the optimal average age."""
    f = f_sequence(lam, B)
    val = math.exp(-lam) - 0.5 * lam * lam
    if B > 1:
        val -= math.exp(-f[-1]) if f[-1] > _EXP_FLOOR else math.inf
    return val


@dataclass(frozen=True)
class RbrSolution:
    """Solved RBR policy.

    ``thresholds[j - 1]`` is the cumulative cut-off ``x_j`` (time since the
    start of the epoch) for ``j = 1..B-1``, so they decrease with ``j``.
    """

    capacity: int
    lambda_star: float
    f_values: tuple[float, ...]
    thresholds: tuple[float, ...]
    residual: float = 0.0
    iterations: int = 0
    source: str = "closed_form"
    ci95: float = 0.0
    converged: bool = True

    @classmethod
    def from_lambda(cls, lam: float, B: int, **kw) -> "RbrSolution":
        f = f_sequence(lam, B)
        x = np.cumsum(f[::-1])[::-1]
        return cls(B, float(lam), tuple(f.tolist()), tuple(x.tolist()), **kw)

    @property
    def cutoffs(self) -> np.ndarray:
        """Cut-offs in increasing order: ``x_{B-1}, ..., x_1``."""
        return np.asarray(self.thresholds[::-1], dtype=float)

    def policy(self) -> ThresholdPolicy:
        """Per-energy-level age thresholds for the simulator.

        With ``e < B`` units left after an update the next one is due after
        ``f_e``; a recharged (full) battery uses ``lambda_star``.
        """
        return ThresholdPolicy(self.capacity, self.f_values + (self.lambda_star,))


def solve_rbr(B: int, tol: float = 1e-9) -> RbrSolution:
    """Optimal RBR policy by bisection on :func:`p_rbr`."""
    B = _check_battery(B)
    res = find_root(lambda lam: p_rbr(lam, B), LAMBDA_MIN, LAMBDA_MAX, tol)
    return RbrSolution.from_lambda(
        res.lambda_star, B, residual=res.residual, iterations=res.iterations
    )


def rbr_epoch_schedule(sol: RbrSolution, tau):
    """Epoch length as a function of the recharge delay ``tau``.

    Piecewise map: ``lam`` for ``tau < lam``; ``tau`` up to the first
    cut-off; ``lam + x_j`` while ``x_j <= tau < lam + x_j``; ``tau`` again
    until the next cut-off; and ``tau`` once ``tau >= lam + x_1``. Accepts a
    scalar or an array of delays.
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ValueError("recharge delay must be nonnegative")
    cut = sol.cutoffs
    k = np.searchsorted(cut, tau_arr, side="right")
    last = np.where(k > 0, np.concatenate([[0.0], cut])[k], 0.0)
    out = np.maximum(last + sol.lambda_star, tau_arr)
    return float(out) if np.ndim(tau) == 0 else out


def rbr_epoch_updates(sol: RbrSolution, tau: float) -> np.ndarray:
    """Update instants within one epoch, measured from its start."""
    cut = sol.cutoffs
    early = cut[cut <= tau]
    return np.append(early, rbr_epoch_schedule(sol, tau))
