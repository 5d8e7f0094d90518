"""Schedulability experiments: fraction of random task sets that pass.

Every (point, set) pair draws from its own seed-derived stream, and the same
task set is analysed under every jitter value, so curves for different
jitters are computed over identical task sets.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from isokern.schedcheck.edf import edf_test
from isokern.schedcheck.fp import fp_schedulable
from isokern.schedcheck.locks import Blocking, mcs_blocking, rw_blocking
from isokern.schedcheck.model import ResourceUse, Role, SchedCurve, Task, TaskSet
from isokern.schedcheck.partition import partition_tasks
from isokern.schedcheck.taskgen import generate_taskset

DEFAULT_JITTER_US = (104, 48, 12)
UTIL_GRID = tuple(round(0.80 + 0.01 * i, 2) for i in range(20))
LOCK_UTIL_GRID = tuple(round(0.60 + 0.05 * i, 2) for i in range(7))
LOCK_CORES = (1, 5, 10, 15, 20, 25, 30, 35, 40)


class Kind(enum.Enum):
    FP = "fp"
    EDF = "edf"
    MCS = "mcs"
    RW = "rw"


@dataclass
class ExperimentResult:
    kind: Kind
    axis: str
    xs: list
    jitters: list
    curves: dict  # jitter -> SchedCurve
    verdicts: np.ndarray  # [point, set, jitter] -> schedulable

    def sua(self) -> dict:
        return {j: c.sua for j, c in self.curves.items()}


@dataclass(frozen=True)
class _Point:
    index: int
    x: float
    cores: int
    tasks: int
    util: float  # per core


def set_stream(seed: int, point: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, index)))


def build_taskset(kind: Kind, p: _Point, rng, period_range, cs_us: int) -> TaskSet:
    ts = generate_taskset(p.tasks, p.util * p.cores, period_range, num_cores=p.cores, rng=rng)
    if kind is Kind.MCS:
        ts.tasks = [replace(t, resource_use=ResourceUse(Role.Mutex, 1, cs_us)) for t in ts.tasks]
    elif kind is Kind.RW:
        readers = rng.random(len(ts.tasks)) < 0.5
        ts.tasks = [
            replace(t, resource_use=ResourceUse(Role.Reader if r else Role.Writer, 1, cs_us))
            for t, r in zip(ts.tasks, readers)
        ]
    return ts


def blocking_for(kind: Kind, ts: TaskSet) -> list:
    if kind is Kind.MCS:
        return mcs_blocking(ts)
    if kind is Kind.RW:
        return rw_blocking(ts)
    return [Blocking() for _ in ts.tasks]


def core_schedulable(kind: Kind, tasks: list, blocking: list, jitter: int) -> bool:
    inflated = []
    for t, b in zip(tasks, blocking):
        c = t.wcet + b.spin
        if c > t.period:
            return False
        inflated.append(Task(c, t.period, t.deadline, jitter, t.priority))
    if kind is Kind.EDF:
        return edf_test(inflated)
    return fp_schedulable(inflated, [b.arrival for b in blocking])


def analyse_set(kind: Kind, ts: TaskSet, jitters: Sequence[int]) -> list:
    if partition_tasks(ts) is None:
        return [False] * len(jitters)
    blocking = blocking_for(kind, ts)
    per_core = []
    for core in range(ts.num_cores):
        idx = ts.indices_on_core(core)
        per_core.append(([ts.tasks[i] for i in idx], [blocking[i] for i in idx]))
    verdicts = []
    for j in jitters:
        verdicts.append(all(core_schedulable(kind, tasks, b, j) for tasks, b in per_core if tasks))
    return verdicts


def _run_point(args) -> np.ndarray:
    kind, p, sets, seed, jitters, period_range, cs_us = args
    out = np.zeros((sets, len(jitters)), dtype=bool)
    for s in range(sets):
        ts = build_taskset(kind, p, set_stream(seed, p.index, s), period_range, cs_us)
        out[s] = analyse_set(kind, ts, jitters)
    return out


def schedulability_experiment(
    kind,
    jitter_us: Sequence[int] = DEFAULT_JITTER_US,
    cores=20,
    tasks_n: Optional[int] = 40,
    utils: Optional[Sequence[float]] = None,
    sets_per_point: int = 500,
    seed: int = 0,
    period_range=(10_000, 100_000),
    cs_us: int = 100,
    tasks_per_core: int = 10,
    workers: int = 1,
) -> ExperimentResult:
    kind = Kind(kind)
    if sets_per_point < 1:
        raise ValueError("sets_per_point must be at least 1")
    locked = kind in (Kind.MCS, Kind.RW)
    core_list = [cores] if isinstance(cores, int) else list(cores)
    if utils is None:
        utils = (0.75,) if locked and len(core_list) > 1 else (LOCK_UTIL_GRID if locked else UTIL_GRID)
    utils = list(utils)

    def n_tasks(m):
        return tasks_per_core * m if locked or tasks_n is None else tasks_n

    if len(core_list) > 1:
        if len(utils) != 1:
            raise ValueError("vary either the core count or the utilization, not both")
        axis = "cores"
        points = [_Point(i, m, m, n_tasks(m), utils[0]) for i, m in enumerate(core_list)]
    else:
        axis = "util"
        m = core_list[0]
        points = [_Point(i, u, m, n_tasks(m), u) for i, u in enumerate(utils)]

    jitters = list(jitter_us)
    jobs = [(kind, p, sets_per_point, seed, jitters, period_range, cs_us) for p in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(job) for job in jobs]
    verdicts = np.stack(results)
    curves = {}
    for k, j in enumerate(jitters):
        frac = verdicts[:, :, k].mean(axis=1)
        curves[j] = SchedCurve([(p.x, float(f)) for p, f in zip(points, frac)], axis, [sets_per_point] * len(points))
    return ExperimentResult(kind, axis, [p.x for p in points], jitters, curves, verdicts)
