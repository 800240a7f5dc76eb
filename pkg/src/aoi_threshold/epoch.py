"""Monte Carlo evaluation of renewal epochs.

The long-term average age of a renewal policy is ``E[R] / E[L]`` where ``R``
is the age area accumulated over one epoch and ``L`` its length. This module
simulates epochs, estimates ``E[R] - lam * E[L]`` and the ratio with
delta-method standard errors, and optimizes thresholds for battery sizes that
have no closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels
from .core_model import RechargeModel, ThresholdPolicy
from .dinkelbach import BracketError
from .ibr import IbrSolution
from .rbr import LAMBDA_MIN, RbrSolution

DEFAULT_UPDATE_CAP = 10**6
# Per-epoch update cap inside the optimizer; a candidate that hits it is
# scored +inf so the line search moves away from it.
SEARCH_UPDATE_CAP = 10**4
# Upper end of the generic outer bracket. Wider than the unit-battery optimum
# so Monte Carlo noise cannot flip the sign of p at the bracket end.
GENERIC_LAMBDA_HI = 1.0
Z95 = 1.959963984540054

PolicyLike = Union[ThresholdPolicy, RbrSolution, IbrSolution]


class EpochCapExceeded(RuntimeError):
    """An epoch did not return to the renewal state within the update cap."""


@dataclass(frozen=True)
class EpochSample:
    area: float
    length: float
    updates: int


@dataclass(frozen=True)
class EpochBatch:
    """Consecutive epochs as parallel arrays."""

    area: np.ndarray
    length: np.ndarray
    updates: np.ndarray

    def __len__(self) -> int:
        return len(self.length)

    def __getitem__(self, i: int) -> EpochSample:
        return EpochSample(float(self.area[i]), float(self.length[i]), int(self.updates[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class ObjectiveEstimate:
    """Sample estimate of ``E[R] - lam E[L]`` and of the ratio ``E[R] / E[L]``."""

    mean_R: float
    mean_L: float
    p_value: float
    std_error: float
    n: int
    ratio: float
    ratio_std_error: float

    @property
    def ratio_ci95(self) -> float:
        return Z95 * self.ratio_std_error


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --------------------------------------------------------------------------
# policy coercion


def rbr_solution_from_policy(policy: PolicyLike) -> RbrSolution:
    """Reinterpret per-level thresholds as RBR cumulative cut-offs."""
    if isinstance(policy, RbrSolution):
        return policy
    if isinstance(policy, IbrSolution):
        policy = policy.policy()
    th = policy.thresholds
    f = th[:-1]
    x = np.cumsum(np.asarray(f[::-1], dtype=float))[::-1]
    return RbrSolution(policy.capacity, th[-1], tuple(f), tuple(x.tolist()), source="policy")


def threshold_policy(policy: PolicyLike) -> ThresholdPolicy:
    if isinstance(policy, ThresholdPolicy):
        return policy
    return policy.policy()


# --------------------------------------------------------------------------
# epoch simulation


def simulate_epochs_rbr(sol: RbrSolution, n: int, rng=None, tau=None) -> EpochBatch:
    """Vectorized RBR epochs.

    Each epoch draws a recharge delay ``tau ~ Exp(1)`` (or uses the supplied
    delays), sends the cut-off updates that precede it and ends with the
    post-recharge update.
    """
    if tau is None:
        tau = _rng(rng).exponential(1.0, size=n)
    tau = np.asarray(tau, dtype=float)
    lam = sol.lambda_star
    c0 = np.concatenate([[0.0], sol.cutoffs])
    gaps = np.diff(c0)
    pre = np.concatenate([[0.0], np.cumsum(0.5 * gaps * gaps)])
    k = np.searchsorted(c0[1:], tau, side="right")
    last = c0[k]
    length = np.maximum(last + lam, tau)
    tail = length - last
    area = pre[k] + 0.5 * tail * tail
    return EpochBatch(area, length, k + 1)


def simulate_epoch_rbr(sol: RbrSolution, rng=None, tau: float | None = None) -> EpochSample:
    if tau is None:
        return simulate_epochs_rbr(sol, 1, rng)[0]
    return simulate_epochs_rbr(sol, 1, tau=[tau])[0]


def simulate_epochs_threshold(
    model: RechargeModel | str,
    policy: PolicyLike,
    n: int,
    rng=None,
    cap: int = DEFAULT_UPDATE_CAP,
) -> EpochBatch:
    """Event-driven epochs of a per-level threshold policy.

    IBR epochs run between visits to the empty battery with zero age; RBR
    epochs between updates that leave ``B - 1`` units. Consecutive epochs are
    cut from a single arrival trajectory.
    """
    model = RechargeModel.parse(model)
    pol = threshold_policy(policy)
    B = pol.capacity
    start = B - 1 if model is RechargeModel.RBR else 0
    R, L, U, status = _kernels.threshold_epochs(
        pol.as_array(), B, model is RechargeModel.RBR, start, int(n), _rng(rng), int(cap)
    )
    if status == _kernels.CAP_EXCEEDED:
        raise EpochCapExceeded(
            f"epoch {len(L)} exceeded {cap} updates without returning to the renewal state; "
            f"suspect policy {pol.thresholds}"
        )
    return EpochBatch(R, L, U)


def simulate_epochs_ibr(policy: PolicyLike, n: int, rng=None, cap: int = DEFAULT_UPDATE_CAP) -> EpochBatch:
    return simulate_epochs_threshold(RechargeModel.IBR, policy, n, rng, cap)


def simulate_epoch_ibr(policy: PolicyLike, rng=None, cap: int = DEFAULT_UPDATE_CAP) -> EpochSample:
    return simulate_epochs_ibr(policy, 1, rng, cap)[0]


def simulate_epochs(model, policy: PolicyLike, n: int, rng=None) -> EpochBatch:
    model = RechargeModel.parse(model)
    if model is RechargeModel.RBR:
        return simulate_epochs_rbr(rbr_solution_from_policy(policy), n, rng)
    return simulate_epochs_ibr(policy, n, rng)


# --------------------------------------------------------------------------
# estimators


def summarize(batch: EpochBatch, lam: float) -> ObjectiveEstimate:
    """Sample means, ``p = mean_R - lam * mean_L`` and delta-method errors."""
    R, L = batch.area, batch.length
    n = len(L)
    if n < 2:
        raise ValueError("need at least two epochs")
    mR, mL = float(R.mean()), float(L.mean())
    d = R - lam * L
    se = float(d.std(ddof=1) / math.sqrt(n))
    rho = mR / mL
    z = R - rho * L
    rse = float(z.std(ddof=1) / (math.sqrt(n) * mL))
    return ObjectiveEstimate(mR, mL, mR - lam * mL, se, n, rho, rse)


def estimate_objective(model, policy: PolicyLike, lam: float, n_epochs: int, seed=0) -> ObjectiveEstimate:
    """Estimate ``E[R] - lam E[L]`` for a fixed policy from ``n_epochs`` epochs.

    ``lam`` is the fractional-programming parameter and is independent of the
    policy's own full-battery threshold. Deterministic for a fixed seed.
    """
    if n_epochs < 2:
        raise ValueError("n_epochs must be >= 2")
    return summarize(simulate_epochs(model, policy, n_epochs, _rng(seed)), lam)


def independence_diagnostic(samples: Union[EpochBatch, Iterable[EpochSample], Sequence[float]]) -> float:
    """Lag-1 sample autocorrelation of consecutive epoch lengths.

    Returns 0.0 for constant lengths.
    """
    if isinstance(samples, EpochBatch):
        x = np.asarray(samples.length, dtype=float)
    else:
        seq = list(samples)
        if seq and isinstance(seq[0], EpochSample):
            x = np.array([s.length for s in seq])
        else:
            x = np.asarray(seq, dtype=float)
    if len(x) < 1000:
        raise ValueError(f"need at least 1000 epochs, got {len(x)}")
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0.0:
        return 0.0
    return float(d[:-1] @ d[1:]) / denom


# --------------------------------------------------------------------------
# generic optimizer


@dataclass(frozen=True)
class SolveBudget:
    """Work limits for :func:`generic_solve`.

    ``n_epochs`` epochs are simulated per objective evaluation (the same
    random stream every time); in horizon mode it is the total simulated
    time, split into ``segments`` independent runs. ``ci_target`` is the 95%
    half-width on the optimal age below which the result counts as converged.
    """

    n_epochs: int = 200_000
    segments: int = 40
    sweeps: int = 3
    golden_iters: int = 20
    lambda_tol: float = 1e-3
    max_outer: int = 40
    ci_target: float = 0.01


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(fun, a: float, b: float, iters: int) -> tuple[float, float]:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


class _Objective:
    """``mean_R - lam * mean_L`` for ordered thresholds, on common random numbers."""

    def __init__(self, model: RechargeModel, B: int, n: int, seed):
        self.model, self.B, self.n = model, B, n
        self.seed = seed
        self.evaluations = 0
        if model is RechargeModel.RBR:
            self._tau = _rng(seed).exponential(1.0, size=n)

    def batch(self, x: Sequence[float], lam: float, seed=None) -> EpochBatch:
        self.evaluations += 1
        if self.model is RechargeModel.RBR:
            x = np.asarray(x, dtype=float)
            f = tuple((x - np.append(x[1:], 0.0)).tolist())
            sol = RbrSolution(self.B, lam, f, tuple(x.tolist()), source="candidate")
            if seed is None:
                return simulate_epochs_rbr(sol, self.n, tau=self._tau)
            return simulate_epochs_rbr(sol, self.n, _rng(seed))
        # thresholds may tie during the search; ThresholdPolicy allows equality
        pol = ThresholdPolicy(self.B, tuple(x) + (lam,))
        cap = SEARCH_UPDATE_CAP if seed is None else DEFAULT_UPDATE_CAP
        return simulate_epochs_ibr(pol, self.n, _rng(self.seed if seed is None else seed), cap)

    def __call__(self, x: Sequence[float], lam: float) -> float:
        try:
            b = self.batch(x, lam)
        except EpochCapExceeded:
            return math.inf
        return float(b.area.mean() - lam * b.length.mean())


def _level_thresholds(model: RechargeModel, x: Sequence[float], lam: float) -> np.ndarray:
    """Kernel threshold array from search coordinates (RBR coordinates are cumulative)."""
    x = np.asarray(x, dtype=float)
    if model is RechargeModel.RBR:
        x = x - np.append(x[1:], 0.0)
    return np.concatenate([[np.inf], x, [lam]])


class _HorizonObjective(_Objective):
    """Fixed-horizon runs from an empty battery as pseudo-epochs.

    Used when renewal epochs are too long to simulate, as for IBR with a
    large battery. Each segment contributes its age area and its horizon;
    minimizing ``sum R - lam sum L`` over a fixed set of arrival traces is
    the same fractional program on the empirical measure.
    """

    def __init__(self, model: RechargeModel, B: int, horizon: float, segments: int, seed):
        if segments < 2:
            raise ValueError("need at least two segments")
        self.model, self.B = model, B
        self.seed = seed
        self.evaluations = 0
        self.h = float(horizon) / segments
        self.segments = segments
        self._traces = self._draw(_rng(seed))

    def _draw(self, rng: np.random.Generator):
        traces = []
        for _ in range(self.segments):
            n = int(self.h + 8.0 * math.sqrt(self.h) + 16)
            t = np.cumsum(rng.exponential(1.0, size=n))
            while t[-1] <= self.h:
                t = np.concatenate([t, t[-1] + np.cumsum(rng.exponential(1.0, size=n))])
            t = t[t <= self.h]
            traces.append((t, np.ones(len(t), dtype=np.int64)))
        return traces

    def batch(self, x: Sequence[float], lam: float, seed=None) -> EpochBatch:
        self.evaluations += 1
        thr = _level_thresholds(self.model, x, lam)
        rbr = self.model is RechargeModel.RBR
        traces = self._traces if seed is None else self._draw(_rng(seed))
        R = np.empty(self.segments)
        U = np.empty(self.segments, dtype=np.int64)
        for k, (t, u) in enumerate(traces):
            area, count, status = _kernels.run_threshold(t, u, self.B, rbr, self.h, thr)
            if status != _kernels.OK:
                raise RuntimeError(f"threshold run failed with status {status}")
            R[k], U[k] = area, count
        return EpochBatch(R, np.full(self.segments, self.h), U)


def _initial_thresholds(model: RechargeModel, B: int, lam: float) -> list[float]:
    if model is RechargeModel.RBR:
        # cumulative cut-offs, roughly one unit apart
        return [lam + 0.5 + 0.8 * (B - 1 - j) for j in range(1, B)]
    return [lam + 0.4 + 0.3 * (B - 1 - j) for j in range(1, B)]


def _upper_bound(model: RechargeModel, B: int, lam: float) -> float:
    return lam + (1.5 * B + 2.0 if model is RechargeModel.RBR else 4.0)


def _minimize_thresholds(obj: _Objective, lam: float, x0: list[float], budget: SolveBudget):
    """Coordinate-wise golden-section search on the cone ``x_1 >= ... >= x_{B-1} >= lam``."""
    x = list(x0)
    m = len(x)
    if m == 0:
        return x, obj([], lam)
    top = _upper_bound(obj.model, obj.B, lam)
    # project the warm start onto the cone
    x[-1] = min(max(x[-1], lam), top)
    for j in range(m - 2, -1, -1):
        x[j] = min(max(x[j], x[j + 1]), top)
    best = obj(x, lam)
    sweeps = 1 if m == 1 else budget.sweeps
    for _ in range(sweeps):
        for j in range(m - 1, -1, -1):
            lo = x[j + 1] if j + 1 < m else lam
            hi = x[j - 1] if j > 0 else top
            if hi - lo <= 1e-12:
                continue

            def f(v, j=j):
                trial = x.copy()
                trial[j] = v
                return obj(trial, lam)

            v, fv = _golden(f, lo, hi, budget.golden_iters)
            if fv < best:
                x[j], best = v, fv
    return x, best


def generic_solve(model, B: int, budget: SolveBudget | None = None, seed=0, method: str = "auto"):
    """Simulation-based optimal threshold policy for any battery size.

    Bisects on ``lam``; for each ``lam`` the ordered thresholds minimizing
    the estimated ``E[R] - lam E[L]`` are found by coordinate descent on a
    fixed stream of random numbers. The returned ``ci95`` is the 95%
    half-width of the optimal age, estimated from an independent stream at
    the final policy.

    ``method`` selects renewal epochs (``"renewal"``) or fixed-horizon runs
    (``"horizon"``); ``"auto"`` uses fixed-horizon runs for IBR batteries of
    three or more units, whose renewal epochs get very long for candidate
    policies with large thresholds.
    """
    model = RechargeModel.parse(model)
    budget = budget or SolveBudget()
    if int(B) != B or B < 1:
        raise ValueError(f"battery size must be a positive integer, got {B!r}")
    B = int(B)
    if method == "auto":
        method = "horizon" if model is RechargeModel.IBR and B >= 3 else "renewal"
    if method == "renewal":
        obj = _Objective(model, B, budget.n_epochs, seed)
    elif method == "horizon":
        obj = _HorizonObjective(model, B, budget.n_epochs, budget.segments, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    lo = LAMBDA_MIN if model is RechargeModel.RBR else 0.5
    hi = GENERIC_LAMBDA_HI

    x_lo, p_lo = _minimize_thresholds(obj, lo, _initial_thresholds(model, B, lo), budget)
    x_hi, p_hi = _minimize_thresholds(obj, hi, _initial_thresholds(model, B, hi), budget)
    if not (p_lo > 0 >= p_hi):
        raise BracketError(lo, hi, p_lo, p_hi)

    x = x_lo
    it = 0
    while hi - lo > budget.lambda_tol and it < budget.max_outer:
        it += 1
        mid = 0.5 * (lo + hi)
        x, p_mid = _minimize_thresholds(obj, mid, x, budget)
        if p_mid > 0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    x, residual = _minimize_thresholds(obj, lam, x, budget)

    check_seed = np.random.SeedSequence(seed if isinstance(seed, int) else None).spawn(1)[0]
    est = summarize(obj.batch(x, lam, seed=np.random.default_rng(check_seed)), lam)
    ci = est.ratio_ci95
    converged = hi - lo <= budget.lambda_tol and ci <= budget.ci_target

    if model is RechargeModel.RBR:
        xa = np.asarray(x, dtype=float)
        f = tuple((xa - np.append(xa[1:], 0.0)).tolist())
        return RbrSolution(
            B, lam, f, tuple(xa.tolist()), residual=residual, iterations=it,
            source="monte_carlo", ci95=ci, converged=converged,
        )
    return IbrSolution(
        B, lam, tuple(x), source="monte_carlo", residual=residual, iterations=it,
        ci95=ci, converged=converged,
    )
