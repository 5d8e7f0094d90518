"""Fixed-priority response-time analysis with release jitter and blocking."""

from __future__ import annotations

from typing import Optional, Sequence


def _by_priority(tasks):
    return sorted(range(len(tasks)), key=lambda i: (tasks[i].priority, i))


def response_time(task, higher, blocking: int = 0) -> Optional[int]:
    """Worst-case response time of ``task`` under ``higher``-priority tasks.

    Iterates w = C + B + sum(ceil((w + J_j) / T_j) * C_j) from w = C + B and
    returns J + w, or None once w exceeds D - J.
    """
    limit = task.deadline - task.jitter
    base = task.wcet + blocking
    w = base
    while w <= limit:
        nxt = base
        for h in higher:
            nxt += -(-(w + h.jitter) // h.period) * h.wcet
        if nxt == w:
            return task.jitter + w
        w = nxt
    return None


def rta_fixed_priority(tasks: Sequence, blocking: Optional[Sequence[int]] = None) -> list:
    """Response time per task (input order), None where unbounded."""
    order = _by_priority(tasks)
    out = [None] * len(tasks)
    for rank, i in enumerate(order):
        b = blocking[i] if blocking is not None else 0
        out[i] = response_time(tasks[i], [tasks[j] for j in order[:rank]], b)
    return out


def fp_schedulable(tasks: Sequence, blocking: Optional[Sequence[int]] = None) -> bool:
    order = _by_priority(tasks)
    for rank, i in enumerate(order):
        b = blocking[i] if blocking is not None else 0
        if response_time(tasks[i], [tasks[j] for j in order[:rank]], b) is None:
            return False
    return True
