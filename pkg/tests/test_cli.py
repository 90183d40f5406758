import csv
import json

import pytest

from hflop.cli import main, parse_int_list
from hflop.scenarios import bundled_sensor_points
from hflop.solver import load_solution, solve_brute_force
from hflop.topology import load_instance


def run(*args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("text, expected", [
    ("5..50", [5, 10, 20, 50]),
    ("10..100", [10, 20, 50, 100]),
    ("100..10000", [100, 200, 500, 1000, 2000, 5000, 10000]),
    ("3..7", [3, 5, 7]),
    ("7", [7]),
    ("100,1000,5000", [100, 1000, 5000]),
])
def test_parse_int_list(text, expected):
    assert parse_int_list(text) == expected


def test_gen_is_valid_and_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("gen", "--n", 500, "--m", 25, "--seed", 7, "--out", a) == 0
    assert run("gen", "--n", 500, "--m", 25, "--seed", 7, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    inst = load_instance(a)
    assert (inst.n, inst.m) == (500, 25)
    man = json.loads((tmp_path / "a.json.manifest.json").read_text())
    assert man["command"] == "gen" and man["params"]["seed"] == 7
    assert {"argv", "inputs", "tool_version", "started_at", "finished_at", "outputs"} <= set(man)


def test_gen_from_sensors(tmp_path):
    ids, pts = bundled_sensor_points()
    sensors = tmp_path / "sensors.csv"
    sensors.write_text("sensor_id,latitude,longitude\n" + "".join(
        f"{i},{lat},{lon}\n" for i, (lat, lon) in zip(ids, pts)))
    out = tmp_path / "c.json"
    assert run("gen", "--from-sensors", sensors, "--clusters", 4, "--per-cluster", 5, "--out", out) == 0
    inst = load_instance(out)
    assert (inst.n, inst.m, inst.T) == (20, 4, 20)
    man = json.loads((tmp_path / "c.json.manifest.json").read_text())
    assert str(sensors) in man["inputs"]


def test_solve_matches_brute_and_uncap_below_exact(tmp_path):
    inst_path = tmp_path / "i.json"
    run("gen", "--n", 7, "--m", 3, "--seed", 11, "--capacity-range", "8,20", "--out", inst_path)
    inst = load_instance(inst_path)
    assert run("solve", inst_path, "--out", tmp_path / "e.json") == 0
    assert run("solve", inst_path, "--solver", "uncap", "--out", tmp_path / "u.json") == 0
    assert run("solve", inst_path, "--solver", "brute", "--out", tmp_path / "b.json") == 0
    e = load_solution(tmp_path / "e.json", inst)
    u = load_solution(tmp_path / "u.json", inst)
    assert e.objective == solve_brute_force(inst).objective == load_solution(tmp_path / "b.json", inst).objective
    assert u.objective <= e.objective


def test_solve_exit_codes(tmp_path):
    big = tmp_path / "big.json"
    run("gen", "--n", 3000, "--m", 40, "--seed", 1, "--capacity-range", "300,700", "--out", big)
    assert run("solve", big, "--time-limit", 0.001, "--out", tmp_path / "s.json") == 4
    sol = json.loads((tmp_path / "s.json").read_text())
    assert sol["proven_optimal"] is False and sol["gap"] > 0 and sol["objective"] is not None

    tight = tmp_path / "tight.json"
    run("gen", "--n", 2, "--m", 1, "--lambda-range", "1,1", "--capacity-range", "0,0", "--out", tight)
    assert run("solve", tight, "--out", tmp_path / "t.json") == 3
    assert run("solve", tight, "--solver", "greedy", "--out", "-") == 3


def test_input_errors(tmp_path, capsys):
    assert run("solve", tmp_path / "missing.json") == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"devices": [], "edges": [{"id": 0, "capacity": 1, "cloud_cost": 1}], '
                   '"device_edge_cost": [[0, 1]], "l": 1, "T": 0}')
    assert run("solve", bad) == 2
    assert "device_edge_cost" in capsys.readouterr().err
    bad.write_text("{not json")
    assert run("solve", bad) == 2
    with pytest.raises(SystemExit) as exc:
        run("gen", "--n", 3, "--m", 2, "--lambda-range", "5,1")
    assert exc.value.code == 2
    assert run("gen", "--n", 3) == 2


def test_env_defaults_and_flag_override(tmp_path, monkeypatch):
    monkeypatch.setenv("HFLOP_OUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("HFLOP_SEED", "5")
    assert run("gen", "--n", 10, "--m", 3) == 0
    from_env = (tmp_path / "out" / "instance.json").read_bytes()
    assert json.loads((tmp_path / "out" / "instance.json.manifest.json").read_text())["params"]["seed"] == 5
    assert run("gen", "--n", 10, "--m", 3, "--seed", 5, "--out", tmp_path / "x.json") == 0
    assert (tmp_path / "x.json").read_bytes() == from_env
    assert run("gen", "--n", 10, "--m", 3, "--seed", 6, "--out", tmp_path / "y.json") == 0
    assert (tmp_path / "y.json").read_bytes() != from_env
    monkeypatch.setenv("HFLOP_SEED", "abc")
    assert run("gen", "--n", 10, "--m", 3) == 2


def test_simulate_flat_and_solution(tmp_path):
    inst_path = tmp_path / "c.json"
    run("gen", "--from-sensors", "bundled", "--out", inst_path)
    run("solve", inst_path, "--out", tmp_path / "s.json")
    assert run("simulate", inst_path, "--flat", "--duration", 2, "--out", tmp_path / "f.csv") == 0
    assert run("simulate", inst_path, "--solution", tmp_path / "s.json", "--duration", 2,
               "--out", tmp_path / "h.csv", "--report", tmp_path / "h.json") == 0
    (flat,), (hier,) = read_csv(tmp_path / "f.csv"), read_csv(tmp_path / "h.csv")
    assert flat["scheme"] == "flat" and float(flat["mean_ms"]) > float(hier["mean_ms"])
    assert len(json.loads((tmp_path / "h.json").read_text())["outcomes"]) == int(hier["requests"])
    assert run("simulate", inst_path, "--duration", 2) == 2


def test_bench_latency_and_speedup(tmp_path):
    assert run("bench", "latency", "--duration", 3, "--out", tmp_path / "lat.csv") == 0
    rows = {r["scheme"]: float(r["mean_ms"]) for r in read_csv(tmp_path / "lat.csv")}
    assert rows["flat"] > rows["location"] > rows["hflop"]
    assert run("bench", "speedup", "--duration", 1, "--speedups", "0,0.5,0.9", "--lambda-scales", "1,10",
               "--out", tmp_path / "sp.csv") == 0
    sp = read_csv(tmp_path / "sp.csv")
    assert len(sp) == 2 * 3 * 3 and set(sp[0]) == {"lambda_scale", "scheme", "speedup", "mean_ms"}


def test_bench_scaling_and_savings(tmp_path):
    assert run("bench", "scaling", "--n", "100,200", "--m", "5", "--seeds", 2, "--out", tmp_path / "sc.csv") == 0
    sc = read_csv(tmp_path / "sc.csv")
    assert [(r["n"], r["seed"], r["solver"]) for r in sc[:4]] == [
        ("100", "0", "exact"), ("100", "0", "greedy"), ("100", "1", "exact"), ("100", "1", "greedy")]
    assert run("bench", "savings", "--n", 60, "--m", "2..5", "--seeds", 3, "--rows", tmp_path / "rows.csv",
               "--out", tmp_path / "sv.csv") == 0
    sv = read_csv(tmp_path / "sv.csv")
    assert [(r["m"], r["scheme"]) for r in sv] == [
        ("2", "hflop"), ("2", "uncapacitated"), ("5", "hflop"), ("5", "uncapacitated")]
    assert len(read_csv(tmp_path / "rows.csv")) == 12
    man = json.loads((tmp_path / "sv.csv.manifest.json").read_text())
    assert str(tmp_path / "rows.csv") in man["outputs"]
