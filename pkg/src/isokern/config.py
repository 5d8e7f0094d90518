"""Scenario files: strict JSON with line-anchored diagnostics.

Layout::

    {
      "cores": 8,
      "isolated": [4, 5, 6, 7],
      "horizon_ms": 1000,
      "costs": {"ipi_handle_ns": 2000},
      "mechanisms": {"asid": {"mode": "partitioned", "capacity": 64}, "workqueue": "restricted"},
      "workloads": [{"kind": "u_fork", "core": 0, "rate": 20000}],
      "probe": {"cores": [4, 5], "period_us": 100, "threads_per_core": 1}
    }

Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from isokern.asid import AsidConfig, AsidMode
from isokern.netdev import FlushPolicy
from isokern.sim_core import NS_PER_MS, NS_PER_US, ConfigError, CostModel, Partition, SimConfig
from isokern.taskmgmt import ActivationPolicy, PlacementPolicy
from isokern.timekeep import JiffiesVariant
from isokern.vmstat import ShepherdPolicy
from isokern.workload import Mechanisms, ProbeConfig, Scenario, Workload, WorkloadKind

TOP_KEYS = {"cores", "isolated", "costs", "mechanisms", "workloads", "probe", "horizon_ms"}
REQUIRED = {"cores", "isolated", "workloads", "probe"}
MECH_KEYS = {"asid", "workqueue", "placement", "jiffies", "netdev", "vmstat"}
ASID_KEYS = {"mode", "capacity", "isolated_quota"}
WORKLOAD_KEYS = {"kind", "core", "rate"}
PROBE_KEYS = {"cores", "period_us", "threads_per_core"}
COST_KEYS = {f.name for f in fields(CostModel)}


class ScenarioFileError(ConfigError):
    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line
        self.message = message


def _ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in " \t\r\n":
        i += 1
    return i


def value_offsets(text: str) -> dict:
    """Map every JSON path (tuple of keys/indices) to the offset of its value."""
    dec = json.JSONDecoder()
    out: dict = {}

    def walk(i: int, path: tuple) -> int:
        i = _ws(text, i)
        out[path] = i
        if text[i] == "{":
            i = _ws(text, i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, _ws(text, i) + 1)
                i = _ws(text, i) + 1  # colon
                i = _ws(text, walk(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if text[i] == "[":
            i = _ws(text, i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = _ws(text, walk(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    walk(0, ())
    return out


def locate(text: str, path: tuple) -> int:
    """1-based line of the value at ``path``, falling back to its nearest parent."""
    offsets = value_offsets(text)
    while path not in offsets and path:
        path = path[:-1]
    return text.count("\n", 0, offsets.get(path, 0)) + 1


def render_path(path: tuple) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out or "<root>"


@dataclass(frozen=True)
class RunSpec:
    scenario: Scenario
    num_cores: int
    isolated: tuple
    horizon: int
    costs: CostModel

    def partition(self) -> Partition:
        return Partition.split(self.num_cores, self.isolated)

    def sim_config(self, seed: int) -> SimConfig:
        return SimConfig(self.num_cores, self.partition(), seed, self.horizon, self.costs)


class _Checker:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, path: tuple, message: str):
        raise ScenarioFileError(self.source, locate(self.text, path), message)

    def obj(self, value, path, allowed, required=()):
        if not isinstance(value, dict):
            self.fail(path, f"{render_path(path)} must be an object")
        for key in value:
            if key not in allowed:
                self.fail(path + (key,), f"unknown key {render_path(path + (key,))!r}")
        for key in sorted(required):
            if key not in value:
                self.fail(path, f"{render_path(path)} is missing required key {key!r}")
        return value

    def int_(self, value, path, lo=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"{render_path(path)} must be an integer")
        if lo is not None and value < lo:
            self.fail(path, f"{render_path(path)} must be at least {lo}")
        return value

    def num(self, value, path):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
            self.fail(path, f"{render_path(path)} must be a positive number")
        return value

    def int_list(self, value, path):
        if not isinstance(value, list):
            self.fail(path, f"{render_path(path)} must be a list of core ids")
        return [self.int_(v, path + (k,), 0) for k, v in enumerate(value)]

    def enum(self, cls, value, path):
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(repr(m.value) for m in cls)
            self.fail(path, f"{render_path(path)}: {value!r} is not one of {choices}")


def _mechanisms(ck: _Checker, raw, path) -> Mechanisms:
    ck.obj(raw, path, MECH_KEYS)
    asid_raw = raw.get("asid", {})
    apath = path + ("asid",)
    if isinstance(asid_raw, str):
        asid_raw = {"mode": asid_raw}
    else:
        ck.obj(asid_raw, apath, ASID_KEYS)
    kwargs = {}
    if "mode" in asid_raw:
        kwargs["mode"] = ck.enum(AsidMode, asid_raw["mode"], apath + ("mode",))
    if "capacity" in asid_raw:
        kwargs["capacity"] = ck.int_(asid_raw["capacity"], apath + ("capacity",), 2)
    if "isolated_quota" in asid_raw:
        kwargs["isolated_quota"] = ck.int_(asid_raw["isolated_quota"], apath + ("isolated_quota",), 1)
    try:
        asid = AsidConfig(**kwargs)
    except ConfigError as e:
        ck.fail(apath, str(e))
    pick = {
        "workqueue": ActivationPolicy,
        "placement": PlacementPolicy,
        "jiffies": JiffiesVariant,
        "netdev": FlushPolicy,
        "vmstat": ShepherdPolicy,
    }
    chosen = {k: ck.enum(cls, raw[k], path + (k,)) for k, cls in pick.items() if k in raw}
    return Mechanisms(asid, **chosen)


def parse_scenario(text: str, source: str = "<config>", name: Optional[str] = None) -> RunSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioFileError(source, e.lineno, e.msg) from None
    ck = _Checker(text, source)
    ck.obj(raw, (), TOP_KEYS, REQUIRED)
    cores = ck.int_(raw["cores"], ("cores",), 1)
    isolated = ck.int_list(raw["isolated"], ("isolated",))
    for k, c in enumerate(isolated):
        if c >= cores:
            ck.fail(("isolated", k), f"isolated[{k}] = {c} is not a core of a {cores}-core machine")
    horizon = NS_PER_MS * ck.int_(raw.get("horizon_ms", 1000), ("horizon_ms",), 1)

    costs_raw = ck.obj(raw.get("costs", {}), ("costs",), COST_KEYS)
    for key, value in costs_raw.items():
        ck.int_(value, ("costs", key), 1)
    try:
        costs = CostModel(**costs_raw)
    except ConfigError as e:
        ck.fail(("costs",), str(e))

    mechanisms = _mechanisms(ck, raw.get("mechanisms", {}), ("mechanisms",))

    if not isinstance(raw["workloads"], list):
        ck.fail(("workloads",), "workloads must be a list")
    workloads = []
    for i, w in enumerate(raw["workloads"]):
        path = ("workloads", i)
        ck.obj(w, path, WORKLOAD_KEYS, {"kind", "core"})
        kind = ck.enum(WorkloadKind, w["kind"], path + ("kind",))
        core = ck.int_(w["core"], path + ("core",), 0)
        if core >= cores:
            ck.fail(path + ("core",), f"workloads[{i}] ({kind.value}) names unknown core {core}")
        if core in isolated:
            ck.fail(path + ("core",), f"workloads[{i}] ({kind.value}) is placed on isolated core {core}")
        rate = ck.num(w.get("rate", 1000), path + ("rate",))
        workloads.append(Workload(kind, core, float(rate)))

    praw = ck.obj(raw["probe"], ("probe",), PROBE_KEYS, {"cores"})
    pcores = ck.int_list(praw["cores"], ("probe", "cores"))
    for k, c in enumerate(pcores):
        if c not in isolated:
            ck.fail(("probe", "cores", k), f"probe core {c} is not isolated")
    period = NS_PER_US * ck.int_(praw.get("period_us", 100), ("probe", "period_us"), 1)
    threads = ck.int_(praw.get("threads_per_core", 1), ("probe", "threads_per_core"), 1)
    probe = ProbeConfig(tuple(pcores), period, threads)

    scenario = Scenario(name or Path(source).stem, tuple(workloads), probe, mechanisms)
    try:
        Partition.split(cores, isolated)
    except ConfigError as e:
        ck.fail(("isolated",), str(e))
    return RunSpec(scenario, cores, tuple(sorted(isolated)), horizon, costs)


def load_scenario(path) -> RunSpec:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path), path.stem)
