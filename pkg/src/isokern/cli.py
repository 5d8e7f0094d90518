"""isokern command line: simulate, compare, analyze."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from isokern.config import load_scenario
from isokern.ledger import InterferenceKind
from isokern.schedcheck.experiment import Kind, schedulability_experiment
from isokern.sim_core import NS_PER_US, ConfigError
from isokern.workload import probe_stats, run_scenario

SEED_ENV = "ISOKERN_SEED"
# kinds that a correct fix may still legitimately record across the partition
NON_INTERFERING = (InterferenceKind.SeqlockRetry, InterferenceKind.CrossFlushWarning)
SAMPLES_HEADER = ("core", "thread", "scheduled_ns", "latency_ns")
HIST_HEADER = ("bucket_us", "count")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def summarize(result, seed: int) -> dict:
    """Run summary; every figure is recomputable from events.csv and latency_samples.csv."""
    ledger = result.ledger
    partition = result.config.partition
    by_kind = ledger.cross_partition_by_kind(partition)
    interfering = [k for k in InterferenceKind if k not in NON_INTERFERING]
    lat = result.latencies
    probe = {"samples": len(lat)}
    if lat:
        stats = probe_stats(lat)
        probe.update(min_ns=stats.min, avg_ns=stats.avg, max_ns=stats.max)
    return {
        "scenario": result.scenario.name,
        "seed": seed,
        "isolated": sorted(partition.isolated),
        "mechanisms": result.scenario.mechanisms.as_dict(),
        "events": len(ledger),
        "counts": {k.value: ledger.count(k) for k in InterferenceKind},
        "cross_partition": {
            "by_kind": by_kind,
            "total": sum(by_kind.values()),
            "interfering": ledger.cross_partition_count(partition, interfering),
        },
        "isolated_stolen_ns": {str(c): ledger.stolen_time(c) for c in sorted(partition.isolated)},
        "probe": probe,
        "warnings": ledger.count(InterferenceKind.CrossFlushWarning),
    }


def write_run(result, seed: int, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "events.csv").open("w", encoding="utf-8", newline="") as fh:
        result.ledger.to_csv(fh)
    _write_csv(
        out_dir / "latency_samples.csv",
        SAMPLES_HEADER,
        ((s.core, s.thread, s.scheduled, s.latency) for s in result.samples),
    )
    hist_rows = []
    if result.latencies:
        hist_rows = probe_stats(result.latencies, NS_PER_US).histogram.rows()
    _write_csv(out_dir / "latency_hist.csv", HIST_HEADER, hist_rows)
    summary = summarize(result, seed)
    _dump_json(out_dir / "summary.json", summary)
    return summary


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


def cmd_simulate(args) -> int:
    spec = load_scenario(args.config)
    seed = _seed(args)
    result = run_scenario(spec.scenario, spec.sim_config(seed))
    summary = write_run(result, seed, Path(args.out_dir))
    p = summary["probe"]
    print(
        f"{summary['scenario']}: {summary['events']} events, "
        f"{summary['cross_partition']['total']} cross-partition, "
        f"max latency {p.get('max_ns', 0)} ns over {p['samples']} wakeups"
    )
    return 0


def latency_ratio(baseline_max: int, fixed_max: int):
    if baseline_max == 0 and fixed_max == 0:
        return "n/a"
    if fixed_max == 0:
        return "inf"
    return baseline_max / fixed_max


def cmd_compare(args) -> int:
    spec = load_scenario(args.config)
    seed = _seed(args)
    out = Path(args.out_dir)
    base_mech = spec.scenario.mechanisms.all_baseline()
    fixed_mech = spec.scenario.mechanisms.all_fixed()
    summaries = {}
    for label, mech in (("baseline", base_mech), ("fixed", fixed_mech)):
        result = run_scenario(spec.scenario.with_mechanisms(mech), spec.sim_config(seed))
        summaries[label] = write_run(result, seed, out / label)
    maxes = {k: s["probe"].get("max_ns", 0) for k, s in summaries.items()}
    delta = {
        "scenario": spec.scenario.name,
        "seed": seed,
        "max_latency_ns": maxes,
        "max_latency_ratio": latency_ratio(maxes["baseline"], maxes["fixed"]),
        "cross_partition": {k: s["cross_partition"]["interfering"] for k, s in summaries.items()},
        "cross_partition_all_kinds": {k: s["cross_partition"]["total"] for k, s in summaries.items()},
    }
    _dump_json(out / "delta.json", delta)
    print(
        f"{delta['scenario']}: max latency {maxes['baseline']} -> {maxes['fixed']} ns "
        f"(ratio {delta['max_latency_ratio']}), cross-partition "
        f"{delta['cross_partition']['baseline']} -> {delta['cross_partition']['fixed']}"
    )
    return 0


def write_curves(result, path: Path) -> None:
    """Curve rows, then one SUA row per curve under its own header."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("kind", "jitter_us", result.axis, "frac_schedulable"))
        for j in result.jitters:
            for x, f in result.curves[j].points:
                w.writerow((result.kind.value, j, x, repr(float(f))))
        w.writerow(("kind", "jitter_us", "SUA"))
        for j in result.jitters:
            w.writerow((result.kind.value, j, repr(float(result.curves[j].sua))))


def read_curves(path) -> tuple:
    """Inverse of ``write_curves``: ({jitter: [(x, frac)]}, {jitter: sua})."""
    curves: dict = {}
    suas: dict = {}
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    split = next(i for i, r in enumerate(rows) if i > 0 and r[-1] == "SUA")
    for r in rows[1:split]:
        curves.setdefault(int(r[1]), []).append((float(r[2]), float(r[3])))
    for r in rows[split + 1 :]:
        suas[int(r[1])] = float(r[2])
    return curves, suas


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_analyze(args) -> int:
    cores = args.cores[0] if len(args.cores) == 1 else args.cores
    result = schedulability_experiment(
        args.kind,
        jitter_us=args.jitter_us,
        cores=cores,
        tasks_n=args.tasks,
        utils=args.utils,
        sets_per_point=args.sets,
        seed=_seed(args),
        cs_us=args.cs_us,
        tasks_per_core=args.tasks_per_core,
        workers=args.workers,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_curves(result, out)
    for j, value in result.sua().items():
        print(f"{result.kind.value} jitter {j} us: SUA {value:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isokern", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (
        ("simulate", cmd_simulate, "run one scenario file"),
        ("compare", cmd_compare, "run a scenario with every mechanism at baseline, then fixed"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config", help="scenario JSON file")
        s.add_argument("--seed", type=int, default=None, help=f"PRNG seed (default ${SEED_ENV} or 0)")
        s.add_argument("--out-dir", default="out", help="directory for CSV/JSON outputs")
        s.set_defaults(func=fn)

    a = sub.add_parser("analyze", help="schedulability experiment over random task sets")
    a.add_argument("--kind", required=True, choices=[k.value for k in Kind])
    a.add_argument("--jitter-us", type=_int_list, default=[104, 48, 12])
    a.add_argument("--cores", type=_int_list, default=[20], help="core count, or a list to sweep cores")
    a.add_argument("--tasks", type=int, default=40, help="tasks per set (fp/edf)")
    a.add_argument("--tasks-per-core", type=int, default=10, help="tasks per core (mcs/rw)")
    a.add_argument("--utils", type=_float_list, default=None, help="per-core utilization levels")
    a.add_argument("--sets", type=int, default=500, help="task sets per point")
    a.add_argument("--cs-us", type=int, default=100, help="critical section length")
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--out", default="curves.csv")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"isokern: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"isokern: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
