"""Per-core NIC backlog queues and the flush issued on uninstall."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from isokern.ledger import InterferenceKind
from isokern.sim_core import CoreId


class FlushPolicy(enum.Enum):
    Baseline = "baseline"
    OnDemand = "on_demand"


class NicStateError(RuntimeError):
    pass


@dataclass
class Nic:
    id: int
    cores: tuple
    installed: bool = True
    backlog: dict = field(default_factory=dict)

    def __post_init__(self):
        for c in self.cores:
            self.backlog.setdefault(c, 0)


@dataclass
class UninstallReport:
    flushed: set
    warnings: int
    packets_flushed: int


class NetDevices:
    def __init__(self, machine, policy: FlushPolicy = FlushPolicy.Baseline):
        self.machine = machine
        self.policy = FlushPolicy(policy)
        self.nics: list[Nic] = []
        self.flushes: list = []  # (at, nic id, core, backlog before flush)
        self.warnings = 0

    def install(self) -> Nic:
        nic = Nic(len(self.nics), tuple(sorted(self.machine.partition.cores)))
        self.nics.append(nic)
        return nic

    def enqueue_packet(self, nic: Nic, core: CoreId, n: int = 1) -> None:
        if not nic.installed:
            raise NicStateError(f"NIC {nic.id} is not installed")
        if n < 1:
            raise ValueError("packet count must be at least 1")
        if core not in nic.backlog:
            raise ValueError(f"core {core} does not exist")
        nic.backlog[core] += n

    def uninstall(self, nic: Nic, caller: CoreId, at=None) -> UninstallReport:
        if not nic.installed:
            raise NicStateError(f"NIC {nic.id} is not installed")
        at = self.machine.now if at is None else at
        partition = self.machine.partition
        flushed, warnings, packets = set(), 0, 0
        for core in nic.cores:
            pending = nic.backlog[core]
            if self.policy is FlushPolicy.OnDemand:
                if pending == 0:
                    continue
                if partition.is_isolated(core) and not partition.is_isolated(caller):
                    warnings += 1
                    self.machine.charge(InterferenceKind.CrossFlushWarning, core, caller, at, 0)
                    continue
            self._flush(nic, core, caller, at)
            flushed.add(core)
            packets += pending
        nic.installed = False
        self.warnings += warnings
        return UninstallReport(flushed, warnings, packets)

    def _flush(self, nic: Nic, core: CoreId, caller: CoreId, at) -> None:
        m = self.machine
        self.flushes.append((at, nic.id, core, nic.backlog[core]))
        if core != caller:
            m.charge(InterferenceKind.IpiHandle, core, caller, at, m.costs.ipi_handle_ns)
        m.charge(InterferenceKind.KernelTaskExec, core, caller, at, m.costs.backlog_flush_ns)
        nic.backlog[core] = 0
