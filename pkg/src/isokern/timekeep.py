"""Seqlock-protected jiffies with baseline and compressed writer sections.

Writers serialize on a FIFO writer lock; the sequence counter is odd while
a writer is inside its protected region. The writer stores the tick count
when it enters the region and the last-update timestamp when it leaves, so
a reader that ignored the sequence counter could observe a torn pair.
Readers spin while the counter is odd; each spin episode is one retry.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from isokern.ledger import InterferenceKind
from isokern.sim_core import CoreId, SimTime


class JiffiesVariant(enum.Enum):
    Baseline = "baseline"
    Compressed = "compressed"


@dataclass
class Seqlock:
    sequence: int = 0
    holder: Optional[CoreId] = None
    queue: deque = field(default_factory=deque)
    free_at: SimTime = 0

    @property
    def write_in_progress(self) -> bool:
        return self.sequence % 2 == 1


@dataclass
class JiffiesState:
    jiffies: int = 0
    last_update: SimTime = 0
    tick_period: SimTime = 1_000_000
    variant: JiffiesVariant = JiffiesVariant.Baseline


@dataclass
class Section:
    writer: CoreId
    requested: SimTime
    start: SimTime
    end: SimTime
    jiffies: int
    last_update: SimTime
    ticks: int
    enter_op: int = -1
    exit_op: int = -1


@dataclass
class TickResult:
    ticks_advanced: int
    lock_held: SimTime
    seq_bumped: bool
    lock_wait: SimTime = 0


@dataclass
class ReadResult:
    core: CoreId
    started: SimTime
    value: tuple = (0, 0)
    retries: int = 0
    finished: SimTime = -1
    start_op: int = -1
    finish_op: int = -1
    blamed: list = field(default_factory=list)

    @property
    def wait(self) -> SimTime:
        return self.finished - self.started


class Jiffies:
    """Global tick counter shared by every core of ``machine``."""

    def __init__(self, machine, variant: JiffiesVariant = JiffiesVariant.Baseline, retry_threshold: int = 8):
        costs = machine.costs
        self.machine = machine
        self.engine = machine.engine
        self.state = JiffiesState(tick_period=costs.tick_period_ns, variant=JiffiesVariant(variant))
        self.lock = Seqlock()
        self.section_ns = costs.seqlock_section_ns
        self.compressed_ns = costs.seqlock_compressed_ns
        self.retry_threshold = retry_threshold
        self.sections: list[Section] = []
        self.reads: list[ReadResult] = []
        self.flagged_reads = 0
        self._op = 0
        self._current: Optional[Section] = None
        # state as it will be once every queued writer has finished
        self._plan_jiffies = 0
        self._plan_last = 0

    @property
    def variant(self) -> JiffiesVariant:
        return self.state.variant

    def _next_op(self) -> int:
        self._op += 1
        return self._op

    def tick_update(self, core: CoreId, now: Optional[SimTime] = None) -> TickResult:
        now = self.engine.now if now is None else now
        period = self.state.tick_period
        start = max(now, self.lock.free_at)
        ticks = max(0, (start - self._plan_last) // period)
        if self.variant is JiffiesVariant.Compressed:
            if ticks == 0:
                return TickResult(0, 0, False)
            hold = self.compressed_ns
        else:
            hold = self.section_ns
        self._plan_jiffies += ticks
        self._plan_last += ticks * period
        section = Section(core, now, start, start + hold, self._plan_jiffies, self._plan_last, ticks)
        self.sections.append(section)
        self.lock.free_at = section.end
        wait = start - now
        if wait > 0:
            blocker = self.lock.queue[-1].writer if self.lock.queue else self.lock.holder
            self.machine.charge(InterferenceKind.LockBlock, core, blocker, now, wait)
        if self.lock.holder is None and not self.lock.queue and start == self.engine.now:
            self._enter(section)
        else:
            self.lock.queue.append(section)
            if self.lock.holder is None and len(self.lock.queue) == 1:
                self.engine.schedule(start, self._kick, "seqlock.enter")
        return TickResult(ticks, hold, True, wait)

    def _kick(self) -> None:
        if self.lock.holder is None and self.lock.queue:
            self._enter(self.lock.queue.popleft())

    def _enter(self, section: Section) -> None:
        lock = self.lock
        lock.holder = section.writer
        lock.sequence += 1
        self._current = section
        self.state.jiffies = section.jiffies
        section.enter_op = self._next_op()
        self.engine.schedule(section.end, lambda: self._exit(section), "seqlock.exit")

    def _exit(self, section: Section) -> None:
        lock = self.lock
        self.state.last_update = section.last_update
        lock.sequence += 1
        lock.holder = None
        self._current = None
        section.exit_op = self._next_op()
        if lock.queue:
            self._enter(lock.queue.popleft())

    def read(
        self,
        core: CoreId,
        at: Optional[SimTime] = None,
        done: Optional[Callable[[ReadResult], None]] = None,
    ) -> ReadResult:
        """Start a read on ``core``; the result is complete once ``done`` fires."""
        at = self.engine.now if at is None else at
        result = ReadResult(core, at)
        if at == self.engine.now:
            self._attempt(result, done)
        else:
            self.engine.schedule(at, lambda: self._attempt(result, done), "seqlock.read")
        return result

    def _attempt(self, result: ReadResult, done) -> None:
        now = self.engine.now
        core = result.core
        if result.start_op < 0:
            result.start_op = self._next_op()
        busy = self.machine.busy_until[core]
        if busy > now:
            self.engine.schedule(busy, lambda: self._attempt(result, done), "seqlock.read")
            return
        if self.lock.write_in_progress:
            section = self._current
            if section.end <= now:
                # the writer leaves at this very instant; look again once it has
                self.engine.schedule(now, lambda: self._attempt(result, done), "seqlock.read")
                return
            result.retries += 1
            result.blamed.append(section.writer)
            self.machine.charge(InterferenceKind.SeqlockRetry, core, section.writer, now, section.end - now)
            self.engine.schedule(section.end, lambda: self._attempt(result, done), "seqlock.read")
            return
        result.value = (self.state.jiffies, self.state.last_update)
        result.finished = now
        result.finish_op = self._next_op()
        if result.retries > self.retry_threshold:
            self.flagged_reads += 1
        self.reads.append(result)
        if done is not None:
            done(result)

    def total_hold(self) -> SimTime:
        return sum(s.end - s.start for s in self.sections)

    def total_reader_wait(self) -> SimTime:
        return sum(r.wait for r in self.reads)
