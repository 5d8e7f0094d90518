"""Worst-fit decreasing assignment of tasks to cores."""

from __future__ import annotations

from typing import Optional

from isokern.schedcheck.model import TaskSet

EPS = 1e-12


def worst_fit_decreasing(utils, m: int) -> Optional[dict]:
    """Map item index -> bin, or None when some item does not fit."""
    loads = [0.0] * m
    assignment = {}
    for i in sorted(range(len(utils)), key=lambda i: (-utils[i], i)):
        core = min(range(m), key=lambda c: (loads[c], c))
        if loads[core] + utils[i] > 1.0 + EPS:
            return None
        loads[core] += utils[i]
        assignment[i] = core
    return assignment


def partition_tasks(ts: TaskSet) -> Optional[dict]:
    assignment = worst_fit_decreasing([t.utilization for t in ts.tasks], ts.num_cores)
    ts.assignment = assignment
    return assignment


def core_loads(ts: TaskSet) -> list:
    loads = [0.0] * ts.num_cores
    for i, c in ts.assignment.items():
        loads[c] += ts.tasks[i].utilization
    return loads
