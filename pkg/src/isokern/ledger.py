"""Interference event log and the metrics derived from it."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from isokern.sim_core import NS_PER_US, CoreId, Partition, SimTime

CSV_HEADER = ("at_ns", "kind", "victim", "origin", "duration_ns")


class InterferenceKind(enum.Enum):
    IpiHandle = "IpiHandle"
    KernelTaskExec = "KernelTaskExec"
    ContextSwitch = "ContextSwitch"
    TlbFlush = "TlbFlush"
    TlbMissBurst = "TlbMissBurst"
    LockBlock = "LockBlock"
    SeqlockRetry = "SeqlockRetry"
    CrossFlushWarning = "CrossFlushWarning"


# kinds that by construction always come from another core
REMOTE_KINDS = frozenset({InterferenceKind.IpiHandle, InterferenceKind.CrossFlushWarning})


@dataclass(frozen=True)
class InterferenceEvent:
    at: SimTime
    kind: InterferenceKind
    victim: CoreId
    origin: CoreId
    duration: SimTime = 0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("interference duration must be non-negative")
        if self.kind in REMOTE_KINDS and self.victim == self.origin:
            raise ValueError(f"{self.kind.value} requires victim != origin")

    @property
    def end(self) -> SimTime:
        return self.at + self.duration


class Ledger:
    """Append-only interference log; aggregates are kept alongside the raw log."""

    def __init__(self):
        self.events: list[InterferenceEvent] = []
        self.kind_counts: Counter = Counter()
        self._stolen: defaultdict = defaultdict(int)

    def __len__(self):
        return len(self.events)

    def record(self, event: InterferenceEvent) -> None:
        self.events.append(event)
        self.kind_counts[event.kind] += 1
        self._stolen[event.victim] += event.duration

    def count(self, kind: Optional[InterferenceKind] = None) -> int:
        if kind is None:
            return len(self.events)
        return self.kind_counts[kind]

    def cross_partition_count(self, partition: Partition, kind=None) -> int:
        """Events with an isolated victim and a non-isolated origin.

        ``kind`` may be a single kind, an iterable of kinds, or None for all.
        """
        kinds = _kind_filter(kind)
        return sum(
            1
            for e in self.events
            if (kinds is None or e.kind in kinds) and partition.crosses(e.origin, e.victim)
        )

    def cross_partition_by_kind(self, partition: Partition) -> dict:
        counts = Counter(e.kind for e in self.events if partition.crosses(e.origin, e.victim))
        return {k.value: counts[k] for k in InterferenceKind}

    def stolen_time(self, victim: CoreId) -> SimTime:
        return self._stolen.get(victim, 0)

    def on_core(self, victim: CoreId) -> list:
        return [e for e in self.events if e.victim == victim]

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in self.events:
            writer.writerow((e.at, e.kind.value, e.victim, e.origin, e.duration))

    def dumps(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, fh) -> "Ledger":
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected event log header {header}")
        ledger = cls()
        for row in reader:
            at, kind, victim, origin, duration = row
            ledger.record(
                InterferenceEvent(int(at), InterferenceKind(kind), int(victim), int(origin), int(duration))
            )
        return ledger


def _kind_filter(kind):
    if kind is None:
        return None
    if isinstance(kind, InterferenceKind):
        return {kind}
    return set(kind)


@dataclass
class LatencyHistogram:
    bucket_width: SimTime = NS_PER_US
    counts: dict = field(default_factory=dict)
    max_observed: Optional[SimTime] = None

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def rows(self) -> list:
        """(bucket index, count) pairs in ascending bucket order."""
        return sorted(self.counts.items())


def histogram(samples: Iterable[SimTime], bucket_width: SimTime = NS_PER_US) -> LatencyHistogram:
    if bucket_width <= 0:
        raise ValueError("bucket_width must be positive")
    counts: Counter = Counter()
    top = None
    for s in samples:
        counts[math.floor(s / bucket_width) if not isinstance(s, int) else s // bucket_width] += 1
        top = s if top is None or s > top else top
    return LatencyHistogram(bucket_width, dict(counts), top)
