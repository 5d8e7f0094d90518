"""Lazy ASID allocation with generation rollover.

``Shared`` mode keeps one bitmap, generation counter and spinlock for the
whole machine, so an exhaustion driven by non-isolated cores marks TLB
flushes on isolated cores and can make them wait for the lock.
``Partitioned`` mode gives isolated and non-isolated cores disjoint
subspaces, each with its own bitmap, generation and lock.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from isokern.ledger import InterferenceKind
from isokern.sim_core import ConfigError, CoreId, CostModel, Partition, SimTime


class AsidMode(enum.Enum):
    Shared = "shared"
    Partitioned = "partitioned"


class Home(enum.Enum):
    Isolated = "isolated"
    NonIsolated = "non_isolated"


class AsidExhausted(RuntimeError):
    """More running processes than ASIDs in the (sub)space."""


@dataclass
class AsidConfig:
    capacity: int = 65536
    mode: AsidMode = AsidMode.Shared
    isolated_quota: Optional[int] = None

    def __post_init__(self):
        self.mode = AsidMode(self.mode)
        if self.capacity < 2:
            raise ConfigError("ASID capacity must be at least 2")
        if self.isolated_quota is None:
            self.isolated_quota = self.capacity // 2
        if self.mode is AsidMode.Partitioned and not 1 <= self.isolated_quota < self.capacity:
            raise ConfigError("isolated_quota must lie in [1, capacity)")


class FifoSpinLock:
    """Occupancy model of a FIFO spinlock.

    Requests are served in arrival order; a waiter spins in whole quanta, so
    its wait is rounded up to the spin quantum.
    """

    def __init__(self, quantum: SimTime):
        self.quantum = quantum
        self.free_at: SimTime = 0
        self.holds: deque = deque()  # (core, start, end)

    @property
    def holder(self) -> Optional[CoreId]:
        return self.holds[-1][0] if self.holds else None

    def blockers(self, at: SimTime) -> list:
        return [core for core, _, end in self.holds if end > at]

    def acquire(self, core: CoreId, at: SimTime, hold: SimTime) -> tuple:
        """Returns (start, wait, blocking cores)."""
        while self.holds and self.holds[0][2] <= at:
            self.holds.popleft()
        blockers = [c for c, _, _ in self.holds]
        wait = 0
        if self.free_at > at:
            wait = -(-(self.free_at - at) // self.quantum) * self.quantum
        start = at + wait
        self.free_at = start + hold
        self.holds.append((core, start, self.free_at))
        return start, wait, blockers


@dataclass
class Process:
    pid: int
    home: Home = Home.NonIsolated
    asid: Optional[int] = None
    local_gen: int = 0
    alive: bool = True


@dataclass
class AsidOutcome:
    asid: int
    reused: bool
    rolled_over: bool
    tlb_flushed: bool
    lock_wait: SimTime = 0


@dataclass
class AsidSpace:
    name: str
    lo: int
    hi: int
    cores: frozenset
    quantum: SimTime = 100
    gen: int = 1
    allocated: set = field(default_factory=set)
    flush_pending: dict = field(default_factory=dict)
    flush_origin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lock = FifoSpinLock(self.quantum)
        for c in self.cores:
            self.flush_pending[c] = False

    @property
    def size(self) -> int:
        return self.hi - self.lo

    def lowest_free(self) -> Optional[int]:
        for a in range(self.lo, self.hi):
            if a not in self.allocated:
                return a
        return None

    def full(self) -> bool:
        return len(self.allocated) >= self.size


class AsidAllocator:
    """ASID management for one machine, optionally ledgering into ``machine``."""

    def __init__(self, config: AsidConfig, partition: Partition, machine=None, costs: Optional[CostModel] = None):
        self.config = config
        self.partition = partition
        self.machine = machine
        self.costs = costs or (machine.costs if machine is not None else CostModel())
        q = self.costs.lock_spin_quantum_ns
        if config.mode is AsidMode.Shared:
            whole = AsidSpace("shared", 0, config.capacity, partition.cores, q)
            self.spaces = {Home.Isolated: whole, Home.NonIsolated: whole}
        else:
            quota = config.isolated_quota
            self.spaces = {
                Home.Isolated: AsidSpace("isolated", 0, quota, partition.isolated, q),
                Home.NonIsolated: AsidSpace("non_isolated", quota, config.capacity, partition.non_isolated, q),
            }
        self.running: dict = {c: None for c in partition.cores}
        self.processes: dict = {}

    def home_of(self, core: CoreId) -> Home:
        return Home.Isolated if self.partition.is_isolated(core) else Home.NonIsolated

    def space_for_core(self, core: CoreId) -> AsidSpace:
        return self.spaces[self.home_of(core)]

    def distinct_spaces(self) -> list:
        seen = []
        for s in self.spaces.values():
            if all(s is not t for t in seen):
                seen.append(s)
        return seen

    def new_process(self, pid: int, home: Home = Home.NonIsolated) -> Process:
        if pid in self.processes and self.processes[pid].alive:
            raise ValueError(f"pid {pid} already alive")
        proc = Process(pid, Home(home))
        self.processes[pid] = proc
        return proc

    def exit_process(self, proc: Process) -> None:
        # lazy: the ASID is not returned to the bitmap
        proc.alive = False
        for core, p in self.running.items():
            if p is proc:
                self.running[core] = None

    def _now(self, at):
        if at is not None:
            return at
        return self.machine.now if self.machine is not None else 0

    def context_switch(self, proc: Process, core: CoreId, at: Optional[SimTime] = None) -> AsidOutcome:
        at = self._now(at)
        if not proc.alive:
            raise ValueError(f"pid {proc.pid} has exited")
        if self.config.mode is AsidMode.Partitioned and self.home_of(core) is not proc.home:
            raise ConfigError(
                f"pid {proc.pid} ({proc.home.value}) cannot run on core {core} in partitioned ASID mode"
            )
        space = self.space_for_core(core)
        for c, p in self.running.items():
            if p is proc and c != core:
                self.running[c] = None

        reused = proc.asid is not None and proc.local_gen == space.gen
        rolled = False
        wait = 0
        t = at
        if not reused:
            rolled = space.full()
            hold = self.costs.asid_rollover_hold_ns if rolled else self.costs.asid_alloc_hold_ns
            start, wait, blockers = space.lock.acquire(core, at, hold)
            if wait > 0 and self.machine is not None:
                origin = next((b for b in blockers if not self.partition.is_isolated(b)), blockers[-1])
                self.machine.charge(InterferenceKind.LockBlock, core, origin, at, wait)
            t = start
            if rolled:
                self.rollover(space, t, core)
            asid = space.lowest_free()
            space.allocated.add(asid)
            proc.asid = asid
            proc.local_gen = space.gen
        self.running[core] = proc

        flushed = space.flush_pending.get(core, False)
        if flushed:
            space.flush_pending[core] = False
            origin = space.flush_origin.get(core, core)
            if self.machine is not None:
                self.machine.charge(InterferenceKind.TlbFlush, core, origin, t, self.costs.tlb_flush_ns)
                self.machine.charge(InterferenceKind.TlbMissBurst, core, origin, t, self.costs.tlb_miss_burst_ns)
        return AsidOutcome(proc.asid, reused, rolled, flushed, wait)

    def rollover(self, space: AsidSpace, at: SimTime, by_core: Optional[CoreId] = None) -> None:
        """Start a new generation; the caller holds ``space``'s lock."""
        reserved = [
            p for c, p in self.running.items()
            if c in space.cores and p is not None and p.alive
        ]
        if len(reserved) >= space.size:
            raise AsidExhausted(
                f"{len(reserved)} running processes leave no free ASID in the {space.name} space"
            )
        space.allocated.clear()
        space.gen += 1
        for p in reserved:
            space.allocated.add(p.asid)
            p.local_gen = space.gen
        origin = by_core if by_core is not None else min(space.cores)
        for c in space.cores:
            space.flush_pending[c] = True
            space.flush_origin[c] = origin

    def check_invariants(self) -> None:
        for space in self.distinct_spaces():
            held = {}
            for p in self.processes.values():
                if not p.alive or p.asid is None or self.spaces[p.home] is not space:
                    continue
                if self.config.mode is AsidMode.Partitioned and not space.lo <= p.asid < space.hi:
                    raise AssertionError(f"pid {p.pid} holds ASID {p.asid} outside {space.name} range")
                if p.local_gen > space.gen:
                    raise AssertionError(f"pid {p.pid} generation ahead of space")
                key = (p.local_gen, p.asid)
                if key in held:
                    raise AssertionError(f"pids {held[key]} and {p.pid} share ASID {p.asid}")
                held[key] = p.pid
                if p.local_gen == space.gen and p.asid not in space.allocated:
                    raise AssertionError(f"current ASID {p.asid} of pid {p.pid} not marked allocated")
