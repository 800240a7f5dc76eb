"""Compiled event loops.

All kernels release the GIL so replicates can run on a thread pool. Status
codes are returned rather than raised so the Python side can attach context.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
CAP_EXCEEDED = 1
CAUSALITY = 2
LEVEL_RANGE = 3


@njit(nogil=True, cache=True)
def _recharge(e, units, B, rbr):
    if rbr:
        return B if units > 0 else e
    e += units
    return B if e > B else e


@njit(nogil=True, cache=True)
def threshold_epochs(thr, B, rbr, start_level, n, rng, cap):
    """Cut one unit-rate Poisson trajectory into ``n`` consecutive epochs.

    An epoch starts right after an update that leaves ``start_level`` units and
    ends at the next update that leaves ``start_level`` units again; the
    pending arrival carries over to the next epoch. ``thr[e]`` is the age
    threshold with ``e`` units; ``thr[0]`` is ignored.
    """
    R = np.empty(n)
    L = np.empty(n)
    U = np.empty(n, dtype=np.int64)
    na = rng.exponential(1.0)
    for i in range(n):
        t = 0.0
        u = 0.0
        e = start_level
        area = 0.0
        k = 0
        while True:
            if e >= 1:
                s = u + thr[e]
                if s < t:
                    s = t
            else:
                s = np.inf
            if na <= s:
                t = na
                e = _recharge(e, 1, B, rbr)
                na = t + rng.exponential(1.0)
            else:
                d = s - u
                area += 0.5 * d * d
                u = s
                t = s
                e -= 1
                k += 1
                if e == start_level:
                    break
                if k >= cap:
                    return R[:i], L[:i], U[:i], CAP_EXCEEDED
        R[i] = area
        L[i] = u
        U[i] = k
        na -= u
    return R, L, U, OK


@njit(nogil=True, cache=True)
def run_threshold(times, units, B, rbr, T, thr):
    """Long-horizon run of a threshold policy over a fixed arrival trace.

    Returns ``(area, n_updates, status)`` with ``area`` over ``[0, T]``.
    """
    n = times.shape[0]
    i = 0
    e = 0
    u = 0.0
    t = 0.0
    area = 0.0
    count = 0
    while True:
        ta = times[i] if i < n else np.inf
        if e >= 1:
            s = u + thr[e]
            if s < t:
                s = t
        else:
            s = np.inf
        if ta <= s and ta <= T:
            t = ta
            e = _recharge(e, units[i], B, rbr)
            i += 1
        elif s <= T:
            if e < 1:
                return area, count, CAUSALITY
            d = s - u
            area += 0.5 * d * d
            u = s
            t = s
            e -= 1
            count += 1
        else:
            break
        if e < 0 or e > B:
            return area, count, LEVEL_RANGE
    d = T - u
    area += 0.5 * d * d
    return area, count, OK


@njit(nogil=True, cache=True)
def run_uniform(times, units, B, rbr, T, period):
    """Best-effort updates on the grid ``k * period``; empty-battery grid points are skipped."""
    n = times.shape[0]
    i = 0
    e = 0
    u = 0.0
    area = 0.0
    count = 0
    k = 1
    while True:
        g = k * period
        ta = times[i] if i < n else np.inf
        if ta <= g and ta <= T:
            e = _recharge(e, units[i], B, rbr)
            i += 1
        elif g <= T:
            if e >= 1:
                d = g - u
                area += 0.5 * d * d
                u = g
                e -= 1
                count += 1
            k += 1
        else:
            break
        if e < 0 or e > B:
            return area, count, LEVEL_RANGE
    d = T - u
    area += 0.5 * d * d
    return area, count, OK


@njit(nogil=True, cache=True)
def _adaptive_interval(e, B, nu, beta):
    if 2 * e > B:
        return 1.0 / (nu * (1.0 + beta))
    if 2 * e < B:
        return 1.0 / (nu * (1.0 - beta))
    return 1.0 / nu


@njit(nogil=True, cache=True)
def run_adaptive(times, units, B, rbr, T, nu, beta):
    """Battery-aware adaptive updates.

    After each update (and at time 0) the next target is set from the battery
    level at that moment. A target reached with an empty battery is deferred
    to the next arrival.
    """
    n = times.shape[0]
    i = 0
    e = 0
    u = 0.0
    t = 0.0
    area = 0.0
    count = 0
    g = _adaptive_interval(0, B, nu, beta)
    while True:
        ta = times[i] if i < n else np.inf
        if e >= 1:
            s = g if g > t else t
        else:
            s = np.inf
        if ta <= s and ta <= T:
            t = ta
            e = _recharge(e, units[i], B, rbr)
            i += 1
        elif s <= T:
            d = s - u
            area += 0.5 * d * d
            u = s
            t = s
            e -= 1
            count += 1
            g = u + _adaptive_interval(e, B, nu, beta)
        else:
            break
        if e < 0 or e > B:
            return area, count, LEVEL_RANGE
    d = T - u
    area += 0.5 * d * d
    return area, count, OK
