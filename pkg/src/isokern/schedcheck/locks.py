"""Spin-lock blocking bounds for one shared global resource.

Both bounds are inflation-style: time spent spinning on remote holders is
added to the task's execution cost. The MCS bound is the holistic FIFO
bound (every other contending core can be ahead once per request); the
reader-writer bound follows phase-fair lock semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

from isokern.schedcheck.model import Role, TaskSet


@dataclass(frozen=True)
class Blocking:
    spin: int = 0  # added to the task's own cost
    arrival: int = 0  # lower-priority local holder, charged once per job

    @property
    def total(self) -> int:
        return self.spin + self.arrival


def _users(ts: TaskSet, roles) -> list:
    return [i for i, t in enumerate(ts.tasks) if t.resource_use is not None and t.resource_use.role in roles]


def contending_cores(ts: TaskSet, users) -> int:
    if ts.assignment is None:
        return min(ts.num_cores, len(users))
    return len({ts.assignment[i] for i in users})


def _cs_length(ts: TaskSet, users) -> int:
    return max((ts.tasks[i].resource_use.cs_length for i in users), default=0)


def mcs_blocking(ts: TaskSet) -> list:
    users = _users(ts, {Role.Mutex})
    if not users:
        return [Blocking() for _ in ts.tasks]
    cs = _cs_length(ts, users)
    per_request = (min(ts.num_cores, contending_cores(ts, users)) - 1) * cs
    out = []
    for i, task in enumerate(ts.tasks):
        spin = 0
        if task.resource_use is not None and task.resource_use.role is Role.Mutex:
            spin = task.resource_use.requests_per_period * per_request
        arrival = cs if _lower_local_user(ts, i, users) else 0
        out.append(Blocking(spin, arrival))
    return out


def _lower_local_user(ts: TaskSet, i: int, users) -> bool:
    if ts.assignment is None:
        return False
    core = ts.assignment[i]
    mine = (ts.tasks[i].priority, i)
    return any(
        ts.assignment[j] == core and (ts.tasks[j].priority, j) > mine for j in users if j != i
    )


def reader_bound(cs: int, writers_present: bool, cores: int) -> int:
    if cores <= 1:
        return 0
    return cs * (2 if writers_present else 1)


def writer_bound(cs: int, cores: int) -> int:
    return max(0, cores - 1) * cs


def rw_blocking(ts: TaskSet) -> list:
    users = _users(ts, {Role.Reader, Role.Writer})
    if not users:
        return [Blocking() for _ in ts.tasks]
    cs = _cs_length(ts, users)
    cores = contending_cores(ts, users)
    writers = [i for i in users if ts.tasks[i].resource_use.role is Role.Writer]
    out = []
    for i, task in enumerate(ts.tasks):
        use = task.resource_use
        if use is None or use.role is Role.Mutex:
            out.append(Blocking())
        elif use.role is Role.Reader:
            out.append(Blocking(use.requests_per_period * reader_bound(cs, bool(writers), cores)))
        else:
            out.append(Blocking(use.requests_per_period * writer_bound(cs, cores)))
    return out
