"""Workqueue activation and isolation-aware core selection."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from isokern.ledger import InterferenceKind
from isokern.sim_core import CoreId, Partition, SimTime


class ActivationPolicy(enum.Enum):
    Baseline = "baseline"
    Restricted = "restricted"


class PlacementPolicy(enum.Enum):
    Baseline = "baseline"
    IsolationAware = "isolation_aware"


class PartitionViolation(RuntimeError):
    """A wake-up would cross from one partition into the other."""


@dataclass
class WorkItem:
    cost: SimTime
    target: CoreId

    def __post_init__(self):
        if self.cost <= 0:
            raise ValueError("work item cost must be positive")


@dataclass
class WorkQueue:
    id: int
    per_core_pending: dict
    per_core_workers: dict
    max_active: int = 1

    def pending_cores(self) -> set:
        return {c for c, q in self.per_core_pending.items() if q}


@dataclass
class Wake:
    at: SimTime
    core: CoreId
    caller: CoreId
    wq_id: int
    pending: int
    reason: str


class Workqueues:
    """All workqueues of one machine under a single activation policy."""

    def __init__(self, machine, policy: ActivationPolicy = ActivationPolicy.Baseline):
        self.machine = machine
        self.policy = ActivationPolicy(policy)
        self.queues: list[WorkQueue] = []
        self.wakes: list[Wake] = []

    @property
    def partition(self) -> Partition:
        return self.machine.partition

    def _at(self, at):
        return self.machine.now if at is None else at

    def alloc_workqueue(self, caller: CoreId, at: Optional[SimTime] = None) -> WorkQueue:
        at = self._at(at)
        cores = sorted(self.partition.cores)
        wq = WorkQueue(
            len(self.queues),
            {c: deque() for c in cores},
            {c: "idle" for c in cores},
        )
        self.queues.append(wq)
        if self.policy is ActivationPolicy.Baseline:
            for c in cores:
                self._wake(wq, c, caller, at, "alloc")
        return wq

    def queue_work(self, wq: WorkQueue, item: WorkItem, caller: CoreId, at: Optional[SimTime] = None) -> None:
        at = self._at(at)
        if item.target not in wq.per_core_pending:
            raise ValueError(f"core {item.target} does not exist")
        if self.policy is ActivationPolicy.Restricted and not self.partition.same_side(caller, item.target):
            raise PartitionViolation(
                f"core {caller} may not wake a worker on core {item.target} across partitions"
            )
        wq.per_core_pending[item.target].append(item)
        if wq.max_active > 0:
            self._wake(wq, item.target, caller, at, "queue_work")

    def adjust_max_active(
        self, wq: WorkQueue, new_max: int, caller: CoreId, at: Optional[SimTime] = None
    ) -> set:
        if new_max < 0:
            raise ValueError("max_active must be non-negative")
        at = self._at(at)
        wq.max_active = new_max
        if self.policy is ActivationPolicy.Baseline:
            targets = sorted(wq.per_core_pending)
        else:
            side = self.partition.side(caller)
            targets = sorted(c for c in wq.pending_cores() if c in side)
            if new_max == 0:
                targets = []
        for c in targets:
            self._wake(wq, c, caller, at, "adjust_max_active")
        return set(targets)

    def _wake(self, wq: WorkQueue, core: CoreId, caller: CoreId, at: SimTime, reason: str) -> None:
        """IPI (if remote), switch to the worker, run pending items, switch back."""
        m = self.machine
        costs = m.costs
        pending = wq.per_core_pending[core]
        self.wakes.append(Wake(at, core, caller, wq.id, len(pending), reason))
        wq.per_core_workers[core] = "running"
        if core != caller:
            m.charge(InterferenceKind.IpiHandle, core, caller, at, costs.ipi_handle_ns)
        m.charge(InterferenceKind.ContextSwitch, core, caller, at, costs.ctx_switch_ns)
        if wq.max_active > 0:
            while pending:
                item = pending.popleft()
                m.charge(InterferenceKind.KernelTaskExec, core, caller, at, item.cost)
        m.charge(InterferenceKind.ContextSwitch, core, caller, at, costs.ctx_switch_ns)
        wq.per_core_workers[core] = "idle"


def select_spread_core(
    hint: int, online, partition: Partition, policy: PlacementPolicy = PlacementPolicy.Baseline
) -> CoreId:
    online = sorted(online)
    if not online:
        raise ValueError("no online cores")
    if PlacementPolicy(policy) is PlacementPolicy.Baseline:
        return online[hint % len(online)]
    candidates = [c for c in online if not partition.is_isolated(c)] or online
    return candidates[hint % len(candidates)]


def irq_balance_targets(user_list, partition: Partition) -> set:
    if user_list is not None:
        user_list = set(user_list)
        if not user_list:
            raise ValueError("explicit IRQ balance list is empty")
        return user_list
    return set(partition.cores - partition.isolated)
