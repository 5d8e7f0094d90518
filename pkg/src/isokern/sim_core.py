"""Deterministic discrete-event engine and machine topology.

Time is an integer count of nanoseconds throughout; conversion to
microseconds happens only when reporting.
"""

from __future__ import annotations

import heapq
import zlib
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable, Optional

import numpy as np

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000
MAX_HORIZON = 2**63

SimTime = int
CoreId = int


class CausalityError(ValueError):
    """An event was scheduled in the past."""


class ConfigError(ValueError):
    """Invalid simulator or scenario configuration."""


@dataclass(frozen=True)
class Partition:
    isolated: frozenset
    non_isolated: frozenset

    def __post_init__(self):
        object.__setattr__(self, "isolated", frozenset(self.isolated))
        object.__setattr__(self, "non_isolated", frozenset(self.non_isolated))
        if self.isolated & self.non_isolated:
            raise ConfigError("isolated and non-isolated core sets overlap")

    @classmethod
    def split(cls, num_cores: int, isolated: Iterable[int]) -> "Partition":
        iso = frozenset(isolated)
        bad = [c for c in iso if not 0 <= c < num_cores]
        if bad:
            raise ConfigError(f"isolated cores {sorted(bad)} outside [0, {num_cores})")
        return cls(iso, frozenset(range(num_cores)) - iso)

    @property
    def cores(self) -> frozenset:
        return self.isolated | self.non_isolated

    @property
    def num_cores(self) -> int:
        return len(self.cores)

    def is_isolated(self, core: CoreId) -> bool:
        return core in self.isolated

    def side(self, core: CoreId) -> frozenset:
        """The partition half that contains ``core``."""
        if core in self.isolated:
            return self.isolated
        if core in self.non_isolated:
            return self.non_isolated
        raise ConfigError(f"core {core} is not part of the partition")

    def same_side(self, a: CoreId, b: CoreId) -> bool:
        return (a in self.isolated) == (b in self.isolated)

    def crosses(self, origin: CoreId, victim: CoreId) -> bool:
        """True when ``origin`` is non-isolated and ``victim`` is isolated."""
        return origin in self.non_isolated and victim in self.isolated


@dataclass
class CostModel:
    ipi_handle_ns: int = 2_000
    ctx_switch_ns: int = 3_000
    tlb_flush_ns: int = 5_000
    tlb_refill_per_entry_ns: int = 50
    working_set_entries: int = 64
    lock_spin_quantum_ns: int = 100
    # mechanism-specific knobs
    work_item_ns: int = 4_000
    backlog_flush_ns: int = 1_500
    vmstat_fold_ns: int = 2_500
    asid_alloc_hold_ns: int = 300
    asid_rollover_hold_ns: int = 3_000
    seqlock_section_ns: int = 800
    seqlock_compressed_ns: int = 200
    tick_period_ns: int = 1_000_000

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ConfigError(f"cost {f.name} must be a positive integer, got {value!r}")
        if self.seqlock_compressed_ns >= self.seqlock_section_ns:
            raise ConfigError("seqlock_compressed_ns must be shorter than seqlock_section_ns")

    @property
    def tlb_miss_burst_ns(self) -> int:
        return self.working_set_entries * self.tlb_refill_per_entry_ns


@dataclass
class SimConfig:
    num_cores: int
    partition: Partition
    seed: int = 0
    horizon: SimTime = NS_PER_S
    costs: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.num_cores < 2:
            raise ConfigError("num_cores must be at least 2")
        if self.partition.cores != frozenset(range(self.num_cores)):
            raise ConfigError("partition must cover exactly cores 0..num_cores-1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not 0 <= self.horizon <= MAX_HORIZON:
            raise ConfigError("horizon must be within [0, 2^63] ns")


@dataclass(order=True)
class Event:
    fire_at: SimTime
    seq: int
    action: Optional[Callable[[], None]] = field(compare=False, default=None)
    label: str = field(compare=False, default="")
    cancelled: bool = field(compare=False, default=False)


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


class Engine:
    """Virtual clock plus a (fire_at, seq) ordered event queue."""

    def __init__(self, seed: int = 0, keep_log: bool = True):
        self.seed = seed
        self.now: SimTime = 0
        self._queue: list[Event] = []
        self._seq = 0
        self.dispatched = 0
        self.keep_log = keep_log
        self.log: list[tuple[int, int, str]] = []

    def schedule(self, fire_at: SimTime, action: Callable[[], None], label: str = "") -> Event:
        if fire_at < self.now:
            raise CausalityError(f"event {label!r} at {fire_at} ns precedes clock {self.now} ns")
        event = Event(fire_at, self._seq, action, label)
        self._seq += 1
        heapq.heappush(self._queue, event)
        return event

    def after(self, delay: SimTime, action: Callable[[], None], label: str = "") -> Event:
        return self.schedule(self.now + delay, action, label)

    @staticmethod
    def cancel(event: Event) -> None:
        event.cancelled = True

    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def run_until(self, t: SimTime) -> int:
        if t < self.now:
            raise CausalityError(f"run_until({t}) precedes clock {self.now}")
        count = 0
        queue = self._queue
        while queue and queue[0].fire_at <= t:
            event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self.now = event.fire_at
            self.dispatched += 1
            count += 1
            if self.keep_log:
                self.log.append((event.fire_at, event.seq, event.label))
            event.action()
        self.now = t
        return count

    def stream(self, label: str) -> np.random.Generator:
        """Independent PRNG sub-stream keyed by ``label``."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(label_key(label),))
        return np.random.default_rng(seq)
