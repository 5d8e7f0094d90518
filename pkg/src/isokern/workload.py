"""Interference workloads on non-isolated cores and a wakeup-latency probe.

A probe thread on an isolated core sleeps until its next absolute wakeup
time, then has to get through whatever interference is pending on its core,
switch in (ASID check, possibly a TLB flush), and read the clock. The
wakeup latency is the time from the scheduled instant to the moment the
clock read succeeds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from isokern.asid import AsidAllocator, AsidConfig, AsidMode, Home
from isokern.ledger import LatencyHistogram, histogram
from isokern.machine import Machine
from isokern.netdev import FlushPolicy, NetDevices
from isokern.sim_core import NS_PER_S, NS_PER_US, ConfigError, CoreId, Partition, SimConfig, SimTime
from isokern.taskmgmt import (
    ActivationPolicy,
    PartitionViolation,
    PlacementPolicy,
    WorkItem,
    Workqueues,
    select_spread_core,
)
from isokern.timekeep import Jiffies, JiffiesVariant
from isokern.vmstat import DEFAULT_STATS, ShepherdPolicy, VmStat


class WorkloadKind(enum.Enum):
    KWorkqueue = "k_workqueue"
    UThread = "u_thread"
    UFork = "u_fork"
    NicChurn = "nic_churn"
    TimerStorm = "timer_storm"
    VmStress = "vm_stress"


@dataclass(frozen=True)
class Workload:
    kind: WorkloadKind
    core: CoreId
    rate: float = 1000.0  # events per simulated second

    def __post_init__(self):
        object.__setattr__(self, "kind", WorkloadKind(self.kind))
        if self.rate <= 0:
            raise ConfigError(f"{self.kind.value} rate must be positive")


@dataclass(frozen=True)
class ProbeConfig:
    cores: tuple
    period: SimTime = 100 * NS_PER_US
    threads_per_core: int = 1

    def __post_init__(self):
        object.__setattr__(self, "cores", tuple(sorted(self.cores)))
        if self.period <= 0:
            raise ConfigError("probe period must be positive")
        if self.threads_per_core < 1:
            raise ConfigError("threads_per_core must be at least 1")


@dataclass(frozen=True)
class Mechanisms:
    asid: AsidConfig = field(default_factory=AsidConfig)
    workqueue: ActivationPolicy = ActivationPolicy.Baseline
    placement: PlacementPolicy = PlacementPolicy.Baseline
    jiffies: JiffiesVariant = JiffiesVariant.Baseline
    netdev: FlushPolicy = FlushPolicy.Baseline
    vmstat: ShepherdPolicy = ShepherdPolicy.Baseline

    def __post_init__(self):
        object.__setattr__(self, "workqueue", ActivationPolicy(self.workqueue))
        object.__setattr__(self, "placement", PlacementPolicy(self.placement))
        object.__setattr__(self, "jiffies", JiffiesVariant(self.jiffies))
        object.__setattr__(self, "netdev", FlushPolicy(self.netdev))
        object.__setattr__(self, "vmstat", ShepherdPolicy(self.vmstat))

    def all_baseline(self) -> "Mechanisms":
        asid = replace(self.asid, mode=AsidMode.Shared)
        return Mechanisms(asid)

    def all_fixed(self) -> "Mechanisms":
        asid = replace(self.asid, mode=AsidMode.Partitioned)
        return Mechanisms(
            asid,
            ActivationPolicy.Restricted,
            PlacementPolicy.IsolationAware,
            JiffiesVariant.Compressed,
            FlushPolicy.OnDemand,
            ShepherdPolicy.Scoped,
        )

    def as_dict(self) -> dict:
        return {
            "asid": {
                "mode": self.asid.mode.value,
                "capacity": self.asid.capacity,
                "isolated_quota": self.asid.isolated_quota,
            },
            "workqueue": self.workqueue.value,
            "placement": self.placement.value,
            "jiffies": self.jiffies.value,
            "netdev": self.netdev.value,
            "vmstat": self.vmstat.value,
        }


@dataclass(frozen=True)
class Scenario:
    name: str
    workloads: tuple
    probe: ProbeConfig
    mechanisms: Mechanisms = field(default_factory=Mechanisms)

    def validate(self, partition: Partition) -> None:
        for i, w in enumerate(self.workloads):
            if w.core not in partition.cores:
                raise ConfigError(f"workloads[{i}] ({w.kind.value}) names unknown core {w.core}")
            if partition.is_isolated(w.core):
                raise ConfigError(
                    f"workloads[{i}] ({w.kind.value}) is placed on isolated core {w.core}"
                )
        for c in self.probe.cores:
            if not partition.is_isolated(c):
                raise ConfigError(f"probe core {c} is not isolated")

    def with_mechanisms(self, mechanisms: Mechanisms, name: Optional[str] = None) -> "Scenario":
        return replace(self, mechanisms=mechanisms, name=name or self.name)


@dataclass
class ProbeSample:
    core: CoreId
    thread: int
    scheduled: SimTime
    latency: SimTime
    retries: int = 0


@dataclass
class ScenarioResult:
    scenario: Scenario
    config: SimConfig
    machine: Machine
    samples: list
    counters: dict
    models: dict = field(default_factory=dict)  # mechanism name -> model object

    @property
    def ledger(self):
        return self.machine.ledger

    @property
    def latencies(self) -> list:
        return [s.latency for s in self.samples]

    def per_thread(self) -> dict:
        out: dict = {}
        for s in self.samples:
            out.setdefault((s.core, s.thread), []).append(s.latency)
        return out


@dataclass
class ProbeStats:
    min: SimTime
    avg: float
    max: SimTime
    histogram: LatencyHistogram


def probe_stats(samples, bucket_width: SimTime = NS_PER_US) -> ProbeStats:
    samples = list(samples)
    if not samples:
        raise ValueError("no probe samples")
    return ProbeStats(min(samples), sum(samples) / len(samples), max(samples), histogram(samples, bucket_width))


class _Probe:
    def __init__(self, core, thread, proc, first):
        self.core = core
        self.thread = thread
        self.proc = proc
        self.next_wake = first


class _Run:
    def __init__(self, scenario: Scenario, config: SimConfig):
        scenario.validate(config.partition)
        self.scenario = scenario
        self.config = config
        self.m = Machine(config)
        self.engine = self.m.engine
        mech = scenario.mechanisms
        self.asid = AsidAllocator(mech.asid, config.partition, self.m)
        self.wq = Workqueues(self.m, mech.workqueue)
        self.jiffies = Jiffies(self.m, mech.jiffies)
        self.net = NetDevices(self.m, mech.netdev)
        self.vm = VmStat(self.m, mech.vmstat)
        self.samples: list[ProbeSample] = []
        self.counters = {"prevented_wakes": 0, "overruns": 0, "asid_rollovers": 0}
        self._pid = 0
        self._hint = 0
        self._system_wq = None

    def next_pid(self) -> int:
        self._pid += 1
        return self._pid

    def run(self) -> ScenarioResult:
        horizon = self.config.horizon
        probe = self.scenario.probe
        for core in probe.cores:
            for k in range(probe.threads_per_core):
                proc = self.asid.new_process(self.next_pid(), Home.Isolated)
                # warm-up switch at t=0 so the first measured wakeup is not an allocation
                self.asid.context_switch(proc, core, 0)
                first = probe.period + k * probe.period // probe.threads_per_core
                th = _Probe(core, k, proc, first)
                if first <= horizon:
                    self.engine.schedule(first, lambda th=th: self._wake(th), "probe.wake")
        for i, w in enumerate(self.scenario.workloads):
            rng = self.engine.stream(f"workload/{i}/{w.kind.value}")
            state = self._setup(w, rng)
            self._arm(w, rng, state)
        self.engine.run_until(horizon)
        rollovers = sum(s.gen - 1 for s in self.asid.distinct_spaces())
        self.counters["asid_rollovers"] = rollovers
        self.counters["warnings"] = self.net.warnings
        self.counters["flagged_reads"] = self.jiffies.flagged_reads
        models = {"asid": self.asid, "workqueue": self.wq, "jiffies": self.jiffies, "netdev": self.net, "vmstat": self.vm}
        return ScenarioResult(self.scenario, self.config, self.m, self.samples, self.counters, models)

    # probe

    def _wake(self, th: _Probe) -> None:
        now = self.engine.now
        busy = self.m.busy_until[th.core]
        if busy > now:
            self.engine.schedule(busy, lambda: self._wake(th), "probe.wake")
            return
        self.asid.context_switch(th.proc, th.core, now)
        start = max(now, self.m.busy_until[th.core])
        self.jiffies.read(th.core, start, lambda r: self._woke(th, r))

    def _woke(self, th: _Probe, read) -> None:
        scheduled = th.next_wake
        self.samples.append(ProbeSample(th.core, th.thread, scheduled, read.finished - scheduled, read.retries))
        period = self.scenario.probe.period
        nxt = scheduled + period
        now = self.engine.now
        if nxt <= now:
            missed = (now - nxt) // period + 1
            self.counters["overruns"] += missed
            nxt += missed * period
        th.next_wake = nxt
        if nxt <= self.config.horizon:
            self.engine.schedule(nxt, lambda: self._wake(th), "probe.wake")

    # workloads

    def _arm(self, w: Workload, rng, state) -> None:
        mean = NS_PER_S / w.rate
        t = self.engine.now + max(1, int(round(rng.exponential(mean))))
        if t > self.config.horizon:
            return

        def fire():
            self._act(w, rng, state)
            self._arm(w, rng, state)

        self.engine.schedule(t, fire, f"workload.{w.kind.value}")

    def _setup(self, w: Workload, rng):
        if w.kind is WorkloadKind.UFork:
            parent = self.asid.new_process(self.next_pid(), Home.NonIsolated)
            self.asid.context_switch(parent, w.core, 0)
            return parent
        if w.kind is WorkloadKind.UThread:
            if self._system_wq is None:
                self._system_wq = self.wq.alloc_workqueue(w.core, 0)
            return self._system_wq
        return None

    def _non_isolated(self) -> list:
        return sorted(self.config.partition.non_isolated)

    def _act(self, w: Workload, rng, state) -> None:
        now = self.engine.now
        c = w.core
        costs = self.m.costs
        kind = w.kind
        if kind is WorkloadKind.UFork:
            child = self.asid.new_process(self.next_pid(), Home.NonIsolated)
            self.asid.context_switch(child, c, now)
            self.asid.exit_process(child)
            self.asid.context_switch(state, c, now)
        elif kind is WorkloadKind.KWorkqueue:
            targets = self._non_isolated()
            target = targets[int(rng.integers(len(targets)))]
            wq = self.wq.alloc_workqueue(c, now)
            self.wq.adjust_max_active(wq, 0, c, now)
            self.wq.queue_work(wq, WorkItem(costs.work_item_ns, target), c, now)
            self.wq.adjust_max_active(wq, 1, c, now)
        elif kind is WorkloadKind.UThread:
            self._hint += 1
            target = select_spread_core(
                self._hint, self.config.partition.cores, self.config.partition, self.scenario.mechanisms.placement
            )
            try:
                self.wq.queue_work(state, WorkItem(costs.work_item_ns, target), c, now)
            except PartitionViolation:
                self.counters["prevented_wakes"] += 1
        elif kind is WorkloadKind.NicChurn:
            nic = self.net.install()
            targets = self._non_isolated()
            for core in targets:
                n = int(rng.integers(0, 4))
                if n:
                    self.net.enqueue_packet(nic, core, n)
            self.net.uninstall(nic, c, now)
        elif kind is WorkloadKind.TimerStorm:
            self.jiffies.tick_update(c, now)
        elif kind is WorkloadKind.VmStress:
            for name in DEFAULT_STATS:
                self.vm.stats.add(c, name, int(rng.integers(-4, 16)))
            self.vm.shepherd(c, now)


def run_scenario(scenario: Scenario, config: SimConfig) -> ScenarioResult:
    return _Run(scenario, config).run()
