"""Domain types shared by the solvers and the simulator.

Battery dynamics for the two recharge models, the age-area accumulator and
the energy-dependent threshold decision rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class EnergyCausalityError(RuntimeError):
    """An update was attempted with an empty battery."""

    def __init__(self, time: float, message: str | None = None):
        self.time = time
        super().__init__(message or f"update attempted with empty battery at t={time!r}")


class TimeRegressionError(ValueError):
    pass


class RechargeModel(enum.Enum):
    """How a single energy arrival refills the battery."""

    RBR = "rbr"  # every arrival fills the battery to capacity
    IBR = "ibr"  # every arrival adds one unit

    @classmethod
    def parse(cls, value: "RechargeModel | str") -> "RechargeModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown recharge model {value!r}; expected 'rbr' or 'ibr'") from None


@dataclass(frozen=True)
class BatteryState:
    level: int
    capacity: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"battery capacity must be >= 1, got {self.capacity}")
        if not 0 <= self.level <= self.capacity:
            raise ValueError(f"battery level {self.level} outside [0, {self.capacity}]")


def battery_step(
    model: RechargeModel,
    state: BatteryState,
    arrivals: int,
    spend: int,
    time: float = math.nan,
) -> BatteryState:
    """Advance the battery over one inter-event interval.

    The update (if any) is charged at the start of the interval and the
    arrivals that follow it during the interval are credited afterwards,
    clipped at capacity.

    Parameters
    ----------
    model : RechargeModel
        RBR arrivals fill the battery, IBR arrivals add one unit each.
    state : BatteryState
        Battery just before the update that opens the interval.
    arrivals : int
        Number of energy arrivals during the interval.
    spend : int
        1 if an update opens the interval, else 0.
    time : float, optional
        Simulated time of the update, only used in the error message.

    Raises
    ------
    EnergyCausalityError
        If ``spend`` is 1 and the battery is empty.
    """
    if arrivals < 0:
        raise ValueError("arrival count must be nonnegative")
    if spend not in (0, 1):
        raise ValueError("spend must be 0 or 1")
    if spend and state.level < 1:
        raise EnergyCausalityError(time)
    B = state.capacity
    level = state.level - spend
    if RechargeModel.parse(model) is RechargeModel.RBR:
        level = B if arrivals > 0 else level
    else:
        level = min(level + arrivals, B)
    return BatteryState(level, B)


@dataclass(frozen=True)
class AgeAccumulator:
    """Running area under the age curve.

    ``area`` covers ``[0, now]`` where ``now`` is the time of the last call to
    :func:`accumulate_age`.
    """

    last_update_time: float = 0.0
    area: float = 0.0
    update_count: int = 0
    now: float = 0.0

    def age(self, t: float | None = None) -> float:
        t = self.now if t is None else t
        return t - self.last_update_time

    def average(self) -> float:
        return self.area / self.now if self.now > 0 else 0.0


def accumulate_age(acc: AgeAccumulator, now: float, update: bool = False) -> AgeAccumulator:
    """Extend the age area to ``now``; optionally register an update at ``now``."""
    if now < acc.now:
        raise TimeRegressionError(f"time went backwards: {now!r} < {acc.now!r}")
    a_prev = acc.now - acc.last_update_time
    a_now = now - acc.last_update_time
    # (a_now - a_prev) * (a_now + a_prev) / 2 avoids cancellation of the two squares
    area = acc.area + 0.5 * (a_now - a_prev) * (a_now + a_prev)
    if update:
        return AgeAccumulator(now, area, acc.update_count + 1, now)
    return AgeAccumulator(acc.last_update_time, area, acc.update_count, now)


def age_area(update_times: Sequence[float], T: float) -> float:
    """Batch area under the age curve on ``[0, T]`` from the update instants."""
    s = np.concatenate([[0.0], np.asarray(update_times, dtype=float), [T]])
    gaps = np.diff(s)
    if np.any(gaps < 0):
        raise ValueError("update times must be sorted and within [0, T]")
    return 0.5 * float(np.sum(gaps * gaps))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Energy-dependent age thresholds.

    ``thresholds[e - 1]`` is the age at which an update is sent while the
    battery holds ``e`` units; the last entry is the full-battery threshold,
    which equals the long-term average age for an optimal policy.
    """

    capacity: int
    thresholds: tuple[float, ...] = field(default=())

    def __post_init__(self):
        th = tuple(float(x) for x in self.thresholds)
        object.__setattr__(self, "thresholds", th)
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if len(th) != self.capacity:
            raise ValueError(f"expected {self.capacity} thresholds, got {len(th)}")
        if not all(x > 0 and math.isfinite(x) for x in th):
            raise ValueError(f"thresholds must be positive and finite: {th}")
        if any(a < b for a, b in zip(th, th[1:])):
            raise ValueError(f"thresholds must be nonincreasing in the energy level: {th}")

    @property
    def full_threshold(self) -> float:
        return self.thresholds[-1]

    def threshold(self, energy: int) -> float:
        if not 1 <= energy <= self.capacity:
            raise ValueError(f"energy level {energy} outside [1, {self.capacity}]")
        return self.thresholds[energy - 1]

    def as_array(self) -> np.ndarray:
        """Thresholds indexed by energy level; slot 0 (empty battery) is +inf."""
        return np.array((math.inf,) + self.thresholds)


def next_update_time(policy: ThresholdPolicy, energy: int, age_now: float, now: float) -> float:
    """Scheduled update instant given the current energy level and age.

    An age equal to the threshold triggers an immediate update.
    """
    if energy < 1:
        raise ValueError("no update can be scheduled with an empty battery")
    return now + max(policy.threshold(energy) - age_now, 0.0)
