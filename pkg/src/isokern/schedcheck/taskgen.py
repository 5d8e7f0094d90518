"""Random task-set generation with a fixed total utilization.

Per-task utilizations are drawn uniformly from the bounded simplex with
Stafford's randfixedsum algorithm, the generator recommended by Emberson,
Stafford and Davis for unbiased task sets.
"""

from __future__ import annotations

import numpy as np

from isokern.schedcheck.model import Task, TaskSet

PERIOD_GRID_US = 10


def randfixedsum(n: int, total: float, rng: np.random.Generator, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """One vector uniform over {x : lo <= x_i <= hi, sum(x) = total}."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not n * lo <= total <= n * hi:
        raise ValueError(f"total {total} infeasible for {n} values in [{lo}, {hi}]")
    if n == 1:
        return np.array([float(total)])
    s = (total - n * lo) / (hi - lo)
    k = int(max(min(np.floor(s), n - 1), 0))
    s = max(min(s, k + 1), k)
    s1 = s - np.arange(k, k - n, -1, dtype=float)
    s2 = np.arange(k + n, k, -1, dtype=float) - s

    realmax = np.finfo(float).max
    tiny = np.finfo(float).tiny
    w = np.zeros((n, n + 1))
    w[0, 1] = realmax
    t = np.zeros((n - 1, n))
    for i in range(2, n + 1):
        tmp1 = w[i - 2, 1 : i + 1] * s1[:i] / i
        tmp2 = w[i - 2, 0:i] * s2[n - i : n] / i
        w[i - 1, 1 : i + 1] = tmp1 + tmp2
        tmp3 = w[i - 1, 1 : i + 1] + tiny
        tmp4 = s2[n - i : n] > s1[:i]
        t[i - 2, :i] = (tmp2 / tmp3) * tmp4 + (1 - tmp1 / tmp3) * (~tmp4)

    x = np.zeros(n)
    rt = rng.random(n - 1)
    rs = rng.random(n - 1)
    j = k + 1
    sm, pr = 0.0, 1.0
    for i in range(n - 1, 0, -1):
        e = 1 if rt[n - i - 1] <= t[i - 1, j - 1] else 0
        sx = rs[n - i - 1] ** (1.0 / i)
        sm += (1.0 - sx) * pr * s / (i + 1)
        pr *= sx
        x[n - i - 1] = sm + pr * e
        s -= e
        j -= e
    x[n - 1] = sm + pr * s
    x = x[rng.permutation(n)]
    return (hi - lo) * x + lo


def log_uniform_periods(n: int, lo: int, hi: int, rng: np.random.Generator, grid: int = PERIOD_GRID_US) -> np.ndarray:
    raw = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    periods = np.round(raw / grid).astype(np.int64) * grid
    return np.clip(periods, lo, hi)


def rate_monotonic(tasks: list) -> list:
    """Assign priorities by period (shorter is higher), ties by position."""
    order = sorted(range(len(tasks)), key=lambda i: (tasks[i].period, i))
    rank = {i: r for r, i in enumerate(order)}
    return [Task(t.wcet, t.period, t.deadline, t.jitter, rank[i], t.resource_use) for i, t in enumerate(tasks)]


def generate_taskset(
    n: int,
    total_util: float,
    period_range=(10_000, 100_000),
    seed=None,
    num_cores: int = 1,
    rng: np.random.Generator = None,
) -> TaskSet:
    lo, hi = period_range
    if n < 1:
        raise ValueError("need at least one task")
    if total_util <= 0:
        raise ValueError("total utilization must be positive")
    if total_util > n:
        raise ValueError(f"total utilization {total_util} is infeasible for {n} tasks")
    if not lo < hi:
        raise ValueError("period range must satisfy lo < hi")
    rng = rng if rng is not None else np.random.default_rng(seed)
    utils = randfixedsum(n, total_util, rng)
    periods = log_uniform_periods(n, lo, hi, rng)
    tasks = []
    for u, p in zip(utils, periods):
        p = int(p)
        c = min(max(1, int(round(u * p))), p)
        tasks.append(Task(c, p))
    return TaskSet(rate_monotonic(tasks), num_cores)
