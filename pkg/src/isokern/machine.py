"""Shared simulation context handed to every mechanism model."""

from __future__ import annotations

from typing import Optional

from isokern.ledger import InterferenceEvent, InterferenceKind, Ledger
from isokern.sim_core import CostModel, Engine, Partition, SimConfig, SimTime


class Machine:
    """Engine, topology, costs and ledger, plus a per-core busy timeline.

    Interference charged to a core is serialized: a new charge starts when
    the core finishes whatever it was already forced to do.
    """

    def __init__(self, config: SimConfig, engine: Optional[Engine] = None, ledger: Optional[Ledger] = None):
        self.config = config
        self.engine = engine if engine is not None else Engine(config.seed)
        self.ledger = ledger if ledger is not None else Ledger()
        self.busy_until = [0] * config.num_cores

    @classmethod
    def build(cls, num_cores: int, isolated, seed: int = 0, costs: Optional[CostModel] = None, **kw) -> "Machine":
        config = SimConfig(num_cores, Partition.split(num_cores, isolated), seed, costs=costs or CostModel(), **kw)
        return cls(config)

    @property
    def partition(self) -> Partition:
        return self.config.partition

    @property
    def costs(self) -> CostModel:
        return self.config.costs

    @property
    def now(self) -> SimTime:
        return self.engine.now

    def charge(self, kind: InterferenceKind, victim: int, origin: int, at: SimTime, duration: SimTime) -> SimTime:
        """Ledger an interference block on ``victim``; returns its end time."""
        start = max(at, self.busy_until[victim]) if duration > 0 else at
        self.ledger.record(InterferenceEvent(start, kind, victim, origin, duration))
        if duration > 0:
            self.busy_until[victim] = start + duration
        return start + duration

    def charge_at(self, kind: InterferenceKind, victim: int, origin: int, start: SimTime, duration: SimTime) -> None:
        """Ledger a block whose start was already fixed by the caller."""
        self.ledger.record(InterferenceEvent(start, kind, victim, origin, duration))
        self.busy_until[victim] = max(self.busy_until[victim], start + duration)

    def idle_at(self, core: int) -> SimTime:
        return self.busy_until[core]
