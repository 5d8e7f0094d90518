"""Per-core VM statistics and the shepherd that folds them into globals."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from isokern.ledger import InterferenceKind
from isokern.sim_core import CoreId

DEFAULT_STATS = ("pgfault", "pgalloc", "nr_dirty")


class ShepherdPolicy(enum.Enum):
    Baseline = "baseline"
    Scoped = "scoped"


class MembershipError(ValueError):
    """The caller is not part of the partition it asked to aggregate."""


@dataclass
class StatCounters:
    per_core: dict
    global_: Counter = field(default_factory=Counter)

    @classmethod
    def for_cores(cls, cores) -> "StatCounters":
        return cls({c: Counter() for c in sorted(cores)})

    def add(self, core: CoreId, name: str, delta: int) -> None:
        self.per_core[core][name] += delta

    def fold(self, core: CoreId) -> None:
        for name, delta in self.per_core[core].items():
            self.global_[name] += delta
        self.per_core[core] = Counter()

    def totals(self) -> Counter:
        """Global plus every unfolded delta; invariant under aggregation."""
        out = Counter(self.global_)
        for deltas in self.per_core.values():
            for name, delta in deltas.items():
                out[name] += delta
        return out


class VmStat:
    def __init__(self, machine, policy: ShepherdPolicy = ShepherdPolicy.Baseline):
        self.machine = machine
        self.policy = ShepherdPolicy(policy)
        self.stats = StatCounters.for_cores(machine.partition.cores)

    def _aggregate(self, cores, caller: CoreId, at) -> set:
        m = self.machine
        for c in sorted(cores):
            m.charge(InterferenceKind.KernelTaskExec, c, caller, at, m.costs.vmstat_fold_ns)
            self.stats.fold(c)
        return set(cores)

    def shepherd_baseline(self, caller: CoreId, at=None) -> set:
        at = self.machine.now if at is None else at
        return self._aggregate(self.stats.per_core.keys(), caller, at)

    def shepherd_scoped(self, caller: CoreId, subset, at=None) -> set:
        subset = set(subset)
        if caller not in subset:
            raise MembershipError(f"caller core {caller} is not a member of {sorted(subset)}")
        at = self.machine.now if at is None else at
        return self._aggregate(subset, caller, at)

    def shepherd(self, caller: CoreId, at=None) -> set:
        """Policy dispatch: scoped runs over the caller's own partition."""
        if self.policy is ShepherdPolicy.Baseline:
            return self.shepherd_baseline(caller, at)
        return self.shepherd_scoped(caller, self.machine.partition.side(caller), at)
