"""Task model and schedulability curves. All times are integer microseconds."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional


class Role(enum.Enum):
    Reader = "reader"
    Writer = "writer"
    Mutex = "mutex"


@dataclass(frozen=True)
class ResourceUse:
    role: Role
    requests_per_period: int = 1
    cs_length: int = 100


@dataclass(frozen=True)
class Task:
    wcet: int
    period: int
    deadline: Optional[int] = None
    jitter: int = 0
    priority: int = 0
    resource_use: Optional[ResourceUse] = None

    def __post_init__(self):
        if self.deadline is None:
            object.__setattr__(self, "deadline", self.period)
        if not 0 < self.wcet <= self.period:
            raise ValueError(f"need 0 < C <= T, got C={self.wcet} T={self.period}")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")

    @property
    def utilization(self) -> float:
        return self.wcet / self.period

    @property
    def exact_utilization(self) -> Fraction:
        return Fraction(self.wcet, self.period)

    def with_jitter(self, jitter: int) -> "Task":
        return replace(self, jitter=jitter)


@dataclass
class TaskSet:
    tasks: list
    num_cores: int
    assignment: Optional[dict] = None  # task index -> core

    @property
    def utilization(self) -> float:
        return sum(t.utilization for t in self.tasks)

    def on_core(self, core: int) -> list:
        """Tasks assigned to ``core`` in priority order."""
        if self.assignment is None:
            raise ValueError("task set has not been partitioned")
        idx = [i for i, c in self.assignment.items() if c == core]
        return [self.tasks[i] for i in sorted(idx, key=lambda i: (self.tasks[i].priority, i))]

    def indices_on_core(self, core: int) -> list:
        idx = [i for i, c in self.assignment.items() if c == core]
        return sorted(idx, key=lambda i: (self.tasks[i].priority, i))

    def with_jitter(self, jitter: int) -> "TaskSet":
        return TaskSet([t.with_jitter(jitter) for t in self.tasks], self.num_cores, self.assignment)


@dataclass
class SchedCurve:
    points: list  # (x, fraction schedulable)
    axis: str = "util"
    sets: list = field(default_factory=list)  # sets evaluated per point

    def __post_init__(self):
        xs = [x for x, _ in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("curve abscissae must be strictly increasing")
        if any(not 0.0 <= f <= 1.0 for _, f in self.points):
            raise ValueError("schedulable fractions must lie in [0, 1]")

    @property
    def sua(self) -> float:
        return sua(self)


def sua(curve: SchedCurve) -> float:
    """Area under the curve by the trapezoid rule."""
    pts = curve.points
    if len(pts) < 2:
        raise ValueError("need at least two points to integrate")
    return sum((x1 - x0) * (y0 + y1) / 2 for (x0, y0), (x1, y1) in zip(pts, pts[1:]))
