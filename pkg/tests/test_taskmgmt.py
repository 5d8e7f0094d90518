import random

import pytest
from hypothesis import given, strategies as st

from isokern.ledger import InterferenceKind as K
from isokern.machine import Machine
from isokern.sim_core import Partition
from isokern.taskmgmt import (
    ActivationPolicy,
    PartitionViolation,
    PlacementPolicy,
    WorkItem,
    Workqueues,
    irq_balance_targets,
    select_spread_core,
)

WORK = (K.IpiHandle, K.KernelTaskExec, K.ContextSwitch)


def setup(policy, cores=4, isolated=(2, 3)):
    m = Machine.build(cores, set(isolated))
    return m, Workqueues(m, policy)


def test_isolated_caller_on_isolated_target_executes():
    m, wqs = setup(ActivationPolicy.Restricted)
    wq = wqs.alloc_workqueue(2, 0)
    wqs.queue_work(wq, WorkItem(1000, 3), 2, 0)
    assert m.ledger.count(K.KernelTaskExec) == 1
    assert m.ledger.cross_partition_count(m.partition) == 0


def test_baseline_cross_partition_ipi():
    m, wqs = setup(ActivationPolicy.Baseline)
    wq = wqs.alloc_workqueue(0, 0)
    before = m.ledger.cross_partition_count(m.partition, K.IpiHandle)
    wqs.queue_work(wq, WorkItem(1000, 3), 0, 100_000)
    assert m.ledger.cross_partition_count(m.partition, K.IpiHandle) == before + 1


def test_restricted_rejects_cross_partition_queue_work():
    m, wqs = setup(ActivationPolicy.Restricted)
    wq = wqs.alloc_workqueue(0, 0)
    with pytest.raises(PartitionViolation):
        wqs.queue_work(wq, WorkItem(1000, 3), 0, 0)
    assert m.ledger.count(K.IpiHandle) == 0
    assert not wq.pending_cores()


def test_adjust_baseline_wakes_everything():
    m, wqs = setup(ActivationPolicy.Baseline)
    wq = wqs.alloc_workqueue(0, 0)
    start = len(m.ledger)
    woken = wqs.adjust_max_active(wq, 2, 0, 100_000)
    assert woken == {0, 1, 2, 3}
    ipis = [e for e in m.ledger.events[start:] if e.kind is K.IpiHandle]
    assert sum(m.partition.crosses(e.origin, e.victim) for e in ipis) == 2


def test_adjust_restricted_without_pending_wakes_nothing():
    m, wqs = setup(ActivationPolicy.Restricted)
    wq = wqs.alloc_workqueue(0, 0)
    assert wqs.adjust_max_active(wq, 2, 0, 0) == set()
    assert len(m.ledger) == 0


def test_adjust_restricted_wakes_only_pending_same_side():
    m, wqs = setup(ActivationPolicy.Restricted)
    wq = wqs.alloc_workqueue(0, 0)
    wqs.adjust_max_active(wq, 0, 0, 0)
    wqs.queue_work(wq, WorkItem(1000, 1), 0, 0)
    assert wqs.adjust_max_active(wq, 1, 0, 10) == {1}


def test_frozen_queue_holds_items():
    m, wqs = setup(ActivationPolicy.Baseline)
    wq = wqs.alloc_workqueue(0, 0)
    wqs.adjust_max_active(wq, 0, 0, 0)
    n = len(wqs.wakes)
    wqs.queue_work(wq, WorkItem(1000, 1), 0, 0)
    assert len(wqs.wakes) == n
    assert wq.pending_cores() == {1}


def test_alloc_wake_counts():
    _, base = setup(ActivationPolicy.Baseline)
    base.alloc_workqueue(0, 0)
    assert len(base.wakes) == 4
    _, restr = setup(ActivationPolicy.Restricted)
    a, b = restr.alloc_workqueue(0, 0), restr.alloc_workqueue(0, 0)
    assert len(restr.wakes) == 0 and a.id != b.id


def test_spread_core_examples():
    p = Partition.split(4, {2, 3})
    assert select_spread_core(2, {0, 1, 2, 3}, p, PlacementPolicy.Baseline) == 2
    assert select_spread_core(2, {0, 1, 2, 3}, p, PlacementPolicy.IsolationAware) == 0
    assert select_spread_core(2, {2, 3}, p, PlacementPolicy.IsolationAware) == 2
    with pytest.raises(ValueError):
        select_spread_core(0, set(), p)


@given(st.integers(0, 10**6), st.sets(st.integers(0, 7), min_size=1))
def test_isolation_aware_avoids_isolated(hint, online):
    p = Partition.split(8, {4, 5, 6, 7})
    core = select_spread_core(hint, online, p, PlacementPolicy.IsolationAware)
    assert core in online
    if online - p.isolated:
        assert core not in p.isolated


def test_irq_balance():
    p = Partition.split(4, {2, 3})
    assert irq_balance_targets({1, 3}, p) == {1, 3}
    assert irq_balance_targets(None, p) == {0, 1}
    assert irq_balance_targets(None, Partition.split(4, set())) == {0, 1, 2, 3}
    with pytest.raises(ValueError):
        irq_balance_targets(set(), p)


@given(st.integers(0, 2**31))
def test_restricted_safety_and_wake_necessity(seed):
    rng = random.Random(seed)
    m, wqs = setup(ActivationPolicy.Restricted, cores=6, isolated=(3, 4, 5))
    queues = [wqs.alloc_workqueue(rng.choice((0, 1, 2)), 0)]
    t = 0
    for _ in range(60):
        t += rng.randint(0, 5000)
        caller = rng.choice((0, 1, 2))
        wq = rng.choice(queues)
        op = rng.random()
        if op < 0.2:
            queues.append(wqs.alloc_workqueue(caller, t))
        elif op < 0.6:
            try:
                wqs.queue_work(wq, WorkItem(rng.randint(1, 5000), rng.randrange(6)), caller, t)
            except PartitionViolation:
                pass
        else:
            wqs.adjust_max_active(wq, rng.randint(0, 3), caller, t)
    assert m.ledger.cross_partition_count(m.partition, WORK) == 0
    assert all(w.pending > 0 for w in wqs.wakes)
