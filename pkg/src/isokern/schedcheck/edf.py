"""Uniprocessor EDF processor-demand test with release jitter.

Jitter is treated as an arrival advance: a job whose release may be delayed
by J has to be finished within D - J of its actual release in the worst case.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

# beyond this many demand checkpoints fall back to the busy-period bound
_MAX_POINTS = 2_000_000


def demand(tasks: Sequence, t: int) -> int:
    return sum(
        max(0, (t - (task.deadline - task.jitter)) // task.period + 1) * task.wcet for task in tasks
    )


def busy_period(tasks: Sequence) -> int:
    """Synchronous busy period with every task released at its maximal jitter."""
    w = sum(t.wcet for t in tasks)
    while True:
        nxt = sum(-(-(w + t.jitter) // t.period) * t.wcet for t in tasks)
        if nxt == w:
            return w
        w = nxt


def edf_test(tasks: Sequence) -> bool:
    if not tasks:
        return True
    u = sum((Fraction(t.wcet, t.period) for t in tasks), Fraction(0))
    if u > 1:
        return False
    offsets = [t.deadline - t.jitter for t in tasks]
    if min(offsets) <= 0:
        return False
    if u == 1:
        if all(t.jitter == 0 and t.deadline >= t.period for t in tasks):
            return True
        # dbf(t + H) = dbf(t) + H, so one hyperperiod past the last offset decides
        hyper = math.lcm(*(t.period for t in tasks))
        horizon = max(offsets) + hyper
        if sum(horizon // t.period + 1 for t in tasks) > _MAX_POINTS:
            return False  # too long to enumerate; stay on the safe side
    else:
        slack = sum(Fraction(t.wcet, t.period) * (t.period - t.deadline + t.jitter) for t in tasks)
        bound = math.floor(slack / (1 - u))
        horizon = bound
        if sum(bound // t.period + 1 for t in tasks) > _MAX_POINTS:
            horizon = min(bound, busy_period(tasks))
    if horizon < min(offsets):
        return True
    points = np.unique(
        np.concatenate([np.arange(o, horizon + 1, t.period, dtype=np.int64) for o, t in zip(offsets, tasks)])
    )
    dbf = np.zeros_like(points)
    for o, t in zip(offsets, tasks):
        jobs = np.maximum(0, (points - o) // t.period + 1)
        dbf += jobs * t.wcet
    return bool(np.all(dbf <= points))
