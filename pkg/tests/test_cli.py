import json

import pytest

from isokern.cli import latency_ratio, main, read_curves
from isokern.config import ScenarioFileError, locate, parse_scenario

from conftest import CONFIGS
from oracles import rederive_summary

BASE = {
    "cores": 4,
    "isolated": [2, 3],
    "horizon_ms": 5,
    "workloads": [{"kind": "u_fork", "core": 0, "rate": 5000}],
    "probe": {"cores": [2, 3], "period_us": 100},
}


def write(tmp_path, obj, name="scn.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path


def test_simulate_writes_outputs(tmp_path):
    cfg = write(tmp_path, BASE)
    assert main(["simulate", str(cfg), "--seed", "1", "--out-dir", str(tmp_path / "o")]) == 0
    out = tmp_path / "o"
    for name in ("events.csv", "latency_hist.csv", "latency_samples.csv", "summary.json"):
        assert (out / name).exists()
    assert (out / "latency_hist.csv").read_text().startswith("bucket_us,count\n")
    mismatches, summary = rederive_summary(out)
    assert mismatches == []
    assert summary["scenario"] == "scn" and summary["seed"] == 1


def test_idle_summary(tmp_path):
    assert main(["simulate", str(CONFIGS / "idle.json"), "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["probe"]["max_ns"] == 0


def test_repeat_is_byte_identical(tmp_path):
    cfg = write(tmp_path, BASE)
    for d in ("a", "b"):
        main(["simulate", str(cfg), "--seed", "7", "--out-dir", str(tmp_path / d)])
    for name in ("events.csv", "latency_hist.csv", "latency_samples.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, BASE)
    monkeypatch.setenv("ISOKERN_SEED", "13")
    main(["simulate", str(cfg), "--out-dir", str(tmp_path / "o")])
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["seed"] == 13


def test_workload_on_isolated_core_is_line_anchored(tmp_path, capsys):
    bad = json.loads(json.dumps(BASE))
    bad["workloads"].append({"kind": "u_fork", "core": 3})
    cfg = write(tmp_path, bad)
    assert main(["simulate", str(cfg), "--out-dir", str(tmp_path / "o")]) != 0
    err = capsys.readouterr().err
    line = cfg.read_text().splitlines().index('      "core": 3') + 1
    assert f"scn.json:{line}:" in err and "workloads[1]" in err
    assert not (tmp_path / "o" / "events.csv").exists()


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"colour": 1}, ("colour",)),
        ({"probe": {"cores": [2], "periods_us": 5}}, ("probe", "periods_us")),
        ({"costs": {"ipi_ns": 5}}, ("costs", "ipi_ns")),
        ({"mechanisms": {"asid": {"modes": "shared"}}}, ("mechanisms", "asid", "modes")),
    ],
)
def test_unknown_keys_rejected(patch, path):
    obj = dict(BASE)
    obj.update(patch)
    text = json.dumps(obj, indent=2)
    with pytest.raises(ScenarioFileError) as exc:
        parse_scenario(text, "x.json")
    assert exc.value.line == locate(text, path)
    assert exc.value.line > 1


def test_bad_enum_and_syntax():
    obj = dict(BASE, mechanisms={"jiffies": "squashed"})
    with pytest.raises(ScenarioFileError, match="squashed"):
        parse_scenario(json.dumps(obj, indent=2))
    with pytest.raises(ScenarioFileError) as exc:
        parse_scenario('{\n  "cores": 4,\n  "isolated": [2,\n}')
    assert exc.value.line == 4


def test_locate_nested_paths():
    text = '{\n  "a": [\n    1,\n    {"b": 2}\n  ]\n}'
    assert locate(text, ("a",)) == 2
    assert locate(text, ("a", 0)) == 3
    assert locate(text, ("a", 1, "b")) == 4
    assert locate(text, ("missing",)) == 1


def test_canned_configs_parse():
    for path in sorted(CONFIGS.glob("*.json")):
        spec = parse_scenario(path.read_text(), str(path))
        spec.scenario.validate(spec.partition())


def test_compare_idle(tmp_path):
    assert main(["compare", str(CONFIGS / "idle.json"), "--out-dir", str(tmp_path)]) == 0
    delta = json.loads((tmp_path / "delta.json").read_text())
    assert delta["max_latency_ratio"] == "n/a"
    for sub in ("baseline", "fixed"):
        assert rederive_summary(tmp_path / sub)[0] == []


def test_compare_stress(tmp_path):
    obj = json.loads((CONFIGS / "stress.json").read_text())
    obj["horizon_ms"] = 20
    cfg = write(tmp_path, obj, "stress.json")
    assert main(["compare", str(cfg), "--seed", "2", "--out-dir", str(tmp_path / "o")]) == 0
    delta = json.loads((tmp_path / "o" / "delta.json").read_text())
    assert delta["cross_partition"]["fixed"] == 0
    assert delta["cross_partition"]["baseline"] > 0
    assert delta["max_latency_ns"]["fixed"] <= delta["max_latency_ns"]["baseline"]


def test_latency_ratio():
    assert latency_ratio(0, 0) == "n/a"
    assert latency_ratio(5, 0) == "inf"
    assert latency_ratio(10, 4) == 2.5


def test_analyze(tmp_path, capsys):
    out = tmp_path / "c.csv"
    rc = main([
        "analyze", "--kind", "fp", "--jitter-us", "104,48,12", "--cores", "4", "--tasks", "8",
        "--sets", "1", "--utils", "0.8,0.9,0.99", "--out", str(out),
    ])
    assert rc == 0
    curves, suas = read_curves(out)
    assert sorted(curves) == [12, 48, 104]
    assert all(f in (0.0, 1.0) for pts in curves.values() for _, f in pts)
    assert out.read_text().splitlines()[0] == "kind,jitter_us,util,frac_schedulable"
    printed = capsys.readouterr().out
    assert printed.count("SUA") == 3 and set(suas) == {12, 48, 104}


def test_analyze_cores_axis(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["analyze", "--kind", "mcs", "--jitter-us", "104", "--cores", "1,5", "--sets", "3", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "kind,jitter_us,cores,frac_schedulable"


def test_analyze_unknown_kind():
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--kind", "gedf"])
    assert exc.value.code != 0
