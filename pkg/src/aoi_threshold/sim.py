"""Long-horizon simulation of update policies.

Arrival traces are generated once per replicate and replayed through a
compiled event loop, so policies compared under the same seed see identical
energy arrivals. A pure-Python engine built on :mod:`aoi_threshold.core_model`
is kept as a reference for testing the compiled loops.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .core_model import (
    AgeAccumulator,
    BatteryState,
    EnergyCausalityError,
    RechargeModel,
    ThresholdPolicy,
    accumulate_age,
    battery_step,
)

Z95 = 1.959963984540054


class InvariantViolation(RuntimeError):
    """The simulator reached a state that should be impossible."""


# --------------------------------------------------------------------------
# arrivals


@dataclass(frozen=True)
class Poisson:
    """Unit-rate Poisson energy arrivals."""

    rate: float = 1.0

    def __post_init__(self):
        if self.rate != 1.0:
            raise ValueError("only unit-rate Poisson arrivals are supported")

    @property
    def label(self) -> str:
        return "poisson"


@dataclass(frozen=True)
class MarkovOnOff:
    """Slotted two-state chain; each ON slot delivers energy at its end.

    ``q0`` is the ON to OFF switch probability and ``q1`` the OFF to ON one.
    The slot lasts ``q1 / (q0 + q1)``, the stationary ON probability, which
    makes the long-run arrival rate one per unit time.
    """

    q0: float
    q1: float

    def __post_init__(self):
        for name in ("q0", "q1"):
            q = getattr(self, name)
            if not (0.0 < q <= 1.0):
                raise ValueError(f"{name} must be in (0, 1], got {q!r}")

    @property
    def slot(self) -> float:
        return self.q1 / (self.q0 + self.q1)

    @property
    def label(self) -> str:
        return "markov"


ArrivalProcess = Union[Poisson, MarkovOnOff]


def _poisson_times(T: float, rng: np.random.Generator) -> np.ndarray:
    # draw in chunks sized a few SDs above the mean count
    chunk = int(T + 6.0 * math.sqrt(T) + 16)
    parts = []
    t = 0.0
    while True:
        c = t + np.cumsum(rng.exponential(1.0, size=chunk))
        parts.append(c)
        if c[-1] > T:
            break
        t = c[-1]
    times = np.concatenate(parts)
    return times[times <= T]


def _markov_times(proc: MarkovOnOff, T: float, rng: np.random.Generator) -> np.ndarray:
    s = proc.slot
    n_slots = int(math.floor(T / s))
    if n_slots == 0:
        return np.empty(0)
    on = np.empty(n_slots, dtype=bool)
    state = rng.random() < proc.q1 / (proc.q0 + proc.q1)
    i = 0
    while i < n_slots:
        # sojourn in the current state is geometric in the leaving probability
        run = int(rng.geometric(proc.q0 if state else proc.q1))
        on[i : i + run] = state
        i += run
        state = not state
    return (np.flatnonzero(on) + 1.0) * s


def gen_arrivals(proc: ArrivalProcess, T: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Energy arrival instants in ``(0, T]`` and the units each one carries.

    Every event carries one unit; under RBR the battery model turns it into a
    full recharge.
    """
    if not (T > 0 and math.isfinite(T)):
        raise ValueError(f"horizon must be positive and finite, got {T!r}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if isinstance(proc, Poisson):
        times = _poisson_times(T, rng)
    elif isinstance(proc, MarkovOnOff):
        times = _markov_times(proc, T, rng)
    else:
        raise TypeError(f"unknown arrival process {proc!r}")
    return times, np.ones(len(times), dtype=np.int64)


# --------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class OptimalThreshold:
    policy: ThresholdPolicy
    name: str = field(default="optimal", init=False)


@dataclass(frozen=True)
class BestEffortUniform:
    """Update on the grid ``k / nu`` whenever the battery is not empty."""

    nu: float
    name: str = field(default="uniform", init=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")


@dataclass(frozen=True)
class BatteryAwareAdaptive:
    """Next update after ``1/(nu(1+beta))`` above half charge, ``1/(nu(1-beta))`` below."""

    nu: float
    beta: float
    name: str = field(default="adaptive", init=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0, 1)")


PolicySpec = Union[OptimalThreshold, BestEffortUniform, BatteryAwareAdaptive]
POLICY_NAMES = ("optimal", "uniform", "adaptive")


def default_nu(model, B: int) -> float:
    return float(B) if RechargeModel.parse(model) is RechargeModel.RBR else 1.0


def default_beta(B: int) -> float:
    return math.log(B) / B


def baseline_policy(name: str, model, B: int) -> PolicySpec:
    """Uniform or adaptive baseline with the standard ``nu`` and ``beta``."""
    nu = default_nu(model, B)
    if name == "uniform":
        return BestEffortUniform(nu)
    if name == "adaptive":
        return BatteryAwareAdaptive(nu, default_beta(B))
    raise ValueError(f"unknown baseline policy {name!r}")


# --------------------------------------------------------------------------
# single run


def _check_status(status: int):
    if status == _kernels.CAUSALITY:
        raise EnergyCausalityError(math.nan, "update scheduled with an empty battery")
    if status == _kernels.LEVEL_RANGE:
        raise InvariantViolation("battery level left [0, B]")


def run_policy(model, B: int, policy: PolicySpec, arrivals, T: float) -> float:
    """Average age ``r(T) / T`` of one run starting from an empty battery at zero age."""
    model = RechargeModel.parse(model)
    rbr = model is RechargeModel.RBR
    times, units = arrivals
    times = np.ascontiguousarray(times, dtype=float)
    units = np.ascontiguousarray(units, dtype=np.int64)
    T = float(T)
    if not T > 0:
        raise ValueError("horizon must be positive")
    if isinstance(policy, OptimalThreshold):
        if policy.policy.capacity != B:
            raise ValueError("policy capacity does not match B")
        area, _, status = _kernels.run_threshold(times, units, B, rbr, T, policy.policy.as_array())
    elif isinstance(policy, BestEffortUniform):
        area, _, status = _kernels.run_uniform(times, units, B, rbr, T, 1.0 / policy.nu)
    elif isinstance(policy, BatteryAwareAdaptive):
        area, _, status = _kernels.run_adaptive(times, units, B, rbr, T, policy.nu, policy.beta)
    else:
        raise TypeError(f"unknown policy {policy!r}")
    _check_status(status)
    return area / T


def run_policy_reference(model, B: int, policy: PolicySpec, arrivals, T: float) -> float:
    """Slow event loop on :func:`battery_step` and :func:`accumulate_age`.

    Same semantics as :func:`run_policy`; kept as a test oracle.
    """
    model = RechargeModel.parse(model)
    times, units = arrivals
    battery = BatteryState(0, B)
    acc = AgeAccumulator()
    k = 1  # next uniform grid index
    if isinstance(policy, BatteryAwareAdaptive):
        from ._kernels import _adaptive_interval

        target = _adaptive_interval.py_func(0, B, policy.nu, policy.beta)
    i = 0
    while True:
        t = acc.now
        ta = times[i] if i < len(times) else math.inf
        if isinstance(policy, OptimalThreshold):
            s = t + max(policy.policy.threshold(battery.level) - acc.age(), 0.0) if battery.level else math.inf
        elif isinstance(policy, BestEffortUniform):
            s = k * (1.0 / policy.nu)  # same rounding as the compiled loop
        else:
            s = max(target, t) if battery.level else math.inf
        if ta <= s and ta <= T:
            acc = accumulate_age(acc, ta)
            battery = battery_step(model, battery, int(units[i]), 0, ta)
            i += 1
        elif s <= T:
            if isinstance(policy, BestEffortUniform):
                k += 1
                if battery.level < 1:
                    acc = accumulate_age(acc, s)
                    continue
            acc = accumulate_age(acc, s, update=True)
            battery = battery_step(model, battery, 0, 1, s)
            if isinstance(policy, BatteryAwareAdaptive):
                target = s + _adaptive_interval.py_func(battery.level, B, policy.nu, policy.beta)
        else:
            break
    acc = accumulate_age(acc, T)
    return acc.area / T


# --------------------------------------------------------------------------
# replicates


@dataclass(frozen=True)
class SimResult:
    avg_age: float
    T: float
    replicates: int
    ci95_halfwidth: float
    values: np.ndarray = field(repr=False, compare=False)


def thread_count() -> int:
    env = os.environ.get("AOI_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("AOI_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def replicate_streams(seed: int, replicates: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(replicates)


def monte_carlo(
    model,
    B: int,
    policy: PolicySpec,
    proc: ArrivalProcess,
    T: float,
    replicates: int,
    seed: int = 0,
    threads: int | None = None,
) -> SimResult:
    """Average age over independent replicates with a normal 95% CI.

    Replicate ``i`` draws its arrivals from the ``i``-th child of
    ``SeedSequence(seed)``, so results do not depend on the thread count
    and different policies run with the same seed are paired.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    streams = replicate_streams(seed, replicates)

    def one(ss):
        arr = gen_arrivals(proc, T, np.random.default_rng(ss))
        return run_policy(model, B, policy, arr, T)

    n_threads = threads or thread_count()
    if n_threads == 1 or replicates == 1:
        values = np.array([one(ss) for ss in streams])
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            values = np.array(list(pool.map(one, streams)))
    mean = float(values.mean())
    ci = float(Z95 * values.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return SimResult(mean, float(T), replicates, ci, values)
