"""Independent reference models used only by the tests.

Nothing here imports the code under test's internals beyond plain data
types, so a shared bug cannot make both sides agree.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from pathlib import Path

# ---------------------------------------------------------------- ASID


class RefAsid:
    """Straight-line ASID allocator over explicit Python sets.

    Spaces are keyed "iso"/"non" (partitioned) or "all" (shared).
    """

    def __init__(self, capacity, partitioned, quota, isolated, cores):
        self.partitioned = partitioned
        self.isolated = set(isolated)
        self.cores = set(cores)
        if partitioned:
            self.ranges = {"iso": range(0, quota), "non": range(quota, capacity)}
            self.served = {"iso": self.cores & self.isolated, "non": self.cores - self.isolated}
        else:
            self.ranges = {"all": range(0, capacity)}
            self.served = {"all": set(self.cores)}
        self.gen = {k: 1 for k in self.ranges}
        self.used = {k: set() for k in self.ranges}
        self.flush = {k: {c: False for c in self.served[k]} for k in self.ranges}
        self.procs = {}  # pid -> dict(home, asid, gen, alive)
        self.running = {c: None for c in self.cores}

    def key(self, core):
        if not self.partitioned:
            return "all"
        return "iso" if core in self.isolated else "non"

    def new(self, pid, home):
        self.procs[pid] = {"home": home, "asid": None, "gen": 0, "alive": True}

    def exit(self, pid):
        self.procs[pid]["alive"] = False
        for c in self.cores:
            if self.running[c] == pid:
                self.running[c] = None

    def switch(self, pid, core):
        """Returns (asid, reused, rolled, flushed) or the string 'exhausted'."""
        k = self.key(core)
        p = self.procs[pid]
        for c in self.cores:
            if self.running[c] == pid and c != core:
                self.running[c] = None
        reused = p["asid"] is not None and p["gen"] == self.gen[k]
        rolled = False
        if not reused:
            free = [a for a in self.ranges[k] if a not in self.used[k]]
            if not free:
                keep = [q for c, q in self.running.items() if c in self.served[k] and q is not None]
                if len(keep) >= len(self.ranges[k]):
                    return "exhausted"
                rolled = True
                self.gen[k] += 1
                self.used[k] = set()
                for q in keep:
                    self.used[k].add(self.procs[q]["asid"])
                    self.procs[q]["gen"] = self.gen[k]
                for c in self.served[k]:
                    self.flush[k][c] = True
                free = [a for a in self.ranges[k] if a not in self.used[k]]
            p["asid"] = free[0]
            p["gen"] = self.gen[k]
            self.used[k].add(free[0])
        self.running[core] = pid
        flushed = self.flush[k][core]
        self.flush[k][core] = False
        return p["asid"], reused, rolled, flushed

    def snapshot(self):
        return {
            "gen": dict(self.gen),
            "used": {k: sorted(v) for k, v in self.used.items()},
            "flush": {k: dict(v) for k, v in self.flush.items()},
            "procs": {pid: (p["asid"], p["gen"], p["alive"]) for pid, p in self.procs.items()},
            "running": dict(self.running),
        }


def allocator_snapshot(alloc, partitioned):
    """Observable state of the real allocator in RefAsid.snapshot() form."""
    from isokern.asid import Home

    if partitioned:
        spaces = {"iso": alloc.spaces[Home.Isolated], "non": alloc.spaces[Home.NonIsolated]}
    else:
        spaces = {"all": alloc.spaces[Home.Isolated]}
    return {
        "gen": {k: s.gen for k, s in spaces.items()},
        "used": {k: sorted(s.allocated) for k, s in spaces.items()},
        "flush": {k: dict(s.flush_pending) for k, s in spaces.items()},
        "procs": {pid: (p.asid, p.local_gen, p.alive) for pid, p in alloc.processes.items()},
        "running": {c: (p.pid if p is not None else None) for c, p in alloc.running.items()},
    }


# ---------------------------------------------------------------- scheduling


def hyperperiod(tasks):
    h = 1
    for t in tasks:
        h = h * t.period // math.gcd(h, t.period)
    return h


def _jobs(tasks, horizon):
    """Worst-case pattern: first job arrives at -J and is released at 0,
    later jobs arrive and are released at k*T - J."""
    jobs = []
    for i, t in enumerate(tasks):
        k = 0
        while True:
            arrival = k * t.period - t.jitter
            release = max(0, arrival)
            if release >= horizon:
                break
            jobs.append([release, arrival + t.deadline, t.wcet, i, arrival])
            k += 1
    jobs.sort()
    return jobs


def _run(tasks, policy, on_finish=None):
    horizon = 2 * hyperperiod(tasks) + 2 * max(t.period + t.jitter for t in tasks)
    jobs = _jobs(tasks, horizon)
    active = []
    nxt = 0
    for now in range(horizon):
        while nxt < len(jobs) and jobs[nxt][0] <= now:
            active.append(jobs[nxt])
            nxt += 1
        if not active:
            continue
        if any(j[1] <= now for j in active):
            return False
        if policy == "fp":
            pick = min(active, key=lambda j: (tasks[j[3]].priority, j[3], j[0]))
        else:
            pick = min(active, key=lambda j: (j[1], j[3]))
        pick[2] -= 1
        if pick[2] == 0:
            active.remove(pick)
            if on_finish is not None:
                on_finish(pick, now + 1)
    return not any(j[1] <= horizon for j in active)


def simulate(tasks, policy):
    """Unit-step preemptive uniprocessor simulation; True if no deadline is missed."""
    return _run(tasks, policy)


def worst_response_fp(tasks, index):
    """Largest arrival-to-finish time of task ``index`` under the worst-case pattern."""
    worst = [0]

    def seen(job, finish):
        if job[3] == index:
            worst[0] = max(worst[0], finish - job[4])

    _run(tasks, "fp", seen)
    return worst[0]


# ---------------------------------------------------------------- seqlock


def torn_reads(sections, reads):
    """Replay writer sections by op ordinal; count reads that do not match a committed state."""
    timeline = []
    for s in sections:
        if s.enter_op >= 0:
            timeline.append((s.enter_op, "enter", s))
        if s.exit_op >= 0:
            timeline.append((s.exit_op, "exit", s))
    timeline.sort(key=lambda x: x[0])
    torn = 0
    for r in reads:
        committed = (0, 0)
        inside = False
        for op, what, s in timeline:
            if op > r.finish_op:
                break
            if what == "enter":
                inside = True
            else:
                inside = False
                committed = (s.jiffies, s.last_update)
        if inside or tuple(r.value) != committed:
            torn += 1
    return torn


# ---------------------------------------------------------------- latency decomposition


def overlap_sum(events, core, lo, hi):
    total = 0
    for e in events:
        if e.victim != core or e.duration <= 0:
            continue
        a, b = max(lo, e.at), min(hi, e.at + e.duration)
        if b > a:
            total += b - a
    return total


# ---------------------------------------------------------------- run outputs


INTERFERING_EXCLUDED = {"SeqlockRetry", "CrossFlushWarning"}


def rederive_summary(out_dir):
    """Recompute every summary.json figure from the CSV outputs alone."""
    out_dir = Path(out_dir)
    summary = json.loads((out_dir / "summary.json").read_text())
    isolated = set(summary["isolated"])
    with (out_dir / "events.csv").open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    counts = Counter(r["kind"] for r in rows)
    cross = Counter()
    stolen = defaultdict(int)
    for r in rows:
        victim, origin = int(r["victim"]), int(r["origin"])
        if victim in isolated:
            stolen[victim] += int(r["duration_ns"])
            if origin not in isolated:
                cross[r["kind"]] += 1
    with (out_dir / "latency_samples.csv").open(newline="") as fh:
        lat = [int(r["latency_ns"]) for r in csv.DictReader(fh)]
    with (out_dir / "latency_hist.csv").open(newline="") as fh:
        hist = {int(r["bucket_us"]): int(r["count"]) for r in csv.DictReader(fh)}
    kinds = summary["counts"].keys()
    derived = {
        "events": len(rows),
        "counts": {k: counts.get(k, 0) for k in kinds},
        "cross_partition": {
            "by_kind": {k: cross.get(k, 0) for k in kinds},
            "total": sum(cross.values()),
            "interfering": sum(v for k, v in cross.items() if k not in INTERFERING_EXCLUDED),
        },
        "isolated_stolen_ns": {str(c): stolen.get(c, 0) for c in sorted(isolated)},
        "probe": {"samples": len(lat)},
        "warnings": counts.get("CrossFlushWarning", 0),
    }
    if lat:
        derived["probe"].update(min_ns=min(lat), avg_ns=sum(lat) / len(lat), max_ns=max(lat))
    mismatches = []
    for key, value in derived.items():
        if summary.get(key) != value:
            mismatches.append((key, summary.get(key), value))
    hist_expected = Counter(x // 1000 for x in lat)
    if hist != dict(hist_expected):
        mismatches.append(("latency_hist", hist, dict(hist_expected)))
    return mismatches, summary
