"""hflop command line: gen, solve, simulate, bench {scaling,savings,latency,speedup}.

Exit codes: 0 ok / optimal, 2 bad input, 3 infeasible, 4 time limit with an
incumbent, 5 time limit without one. HFLOP_SEED and HFLOP_OUT_DIR supply the
default seed and output directory; flags win over both.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime as dt
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import __version__
from .cost import CostParams, savings_curve, write_savings_rows, write_savings_summary
from .routing import FLAT_FL, SimConfig, find_crossover, simulate, sweep_speedup, write_report_csv
from .scenarios import bundled_sensor_points, clustered_scenario
from .solver import SOLVERS, solve_exact, solve_greedy
from .solver.model import FEASIBLE, INFEASIBLE, OPTIMAL, UNKNOWN, load_solution, save_solution
from .topology import InstanceError, generate_uniform, load_instance, read_sensor_file, save_instance

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_TIME_LIMIT, EXIT_NO_INCUMBENT = 0, 2, 3, 4, 5
STATUS_EXIT = {OPTIMAL: EXIT_OK, FEASIBLE: EXIT_TIME_LIMIT, INFEASIBLE: EXIT_INFEASIBLE, UNKNOWN: EXIT_NO_INCUMBENT}

SEED_ENV = "HFLOP_SEED"
OUT_DIR_ENV = "HFLOP_OUT_DIR"
DEFAULT_SPEEDUPS = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95"
# Edge service time for the speedup sweep. With the 4 ms default the cloud
# cannot win at any speedup; see the README.
SWEEP_SERVICE_MS = 50.0


class UsageError(Exception):
    pass


# -- argument helpers --------------------------------------------------------

def _series_125(lo: int, hi: int) -> List[int]:
    out = []
    decade = 1
    while decade <= hi:
        for k in (1, 2, 5):
            v = k * decade
            if lo <= v <= hi:
                out.append(v)
        decade *= 10
    for v in (lo, hi):
        if v not in out:
            out.append(v)
    return sorted(out)


def parse_int_list(text: str) -> List[int]:
    """'5', '5,10,20' or 'a..b' (a 1-2-5 series from a to b, both included)."""
    try:
        if ".." in text:
            a, b = (int(x) for x in text.split("..", 1))
            if a < 1 or a > b:
                raise ValueError
            return _series_125(a, b)
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N, N,M,... or A..B, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_range(text: str):
    vals = parse_float_list(text)
    if len(vals) != 2 or vals[0] > vals[1]:
        raise argparse.ArgumentTypeError(f"expected LO,HI with LO <= HI, got {text!r}")
    return tuple(vals)


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _resolve_out(arg: Optional[str], default_name: str) -> Optional[Path]:
    """Explicit --out wins; '-' means stdout; otherwise HFLOP_OUT_DIR/default_name or stdout."""
    if arg == "-":
        return None
    if arg:
        return Path(arg)
    out_dir = os.environ.get(OUT_DIR_ENV)
    return Path(out_dir) / default_name if out_dir else None


def _sha256(path) -> Optional[str]:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


class Run:
    """Collects what is needed to re-derive an output and writes it beside it."""

    def __init__(self, command: str, args: argparse.Namespace, argv: List[str]):
        self.command = command
        self.argv = list(argv)
        self.params = {k: v for k, v in vars(args).items() if k != "func" and not callable(v)}
        self.started = dt.datetime.now(dt.timezone.utc).isoformat()
        self.inputs = {}

    def add_input(self, path):
        if path is not None:
            self.inputs[str(path)] = _sha256(path)

    def manifest(self, outputs) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "inputs": self.inputs,
            "params": {k: (str(v) if isinstance(v, Path) else v) for k, v in self.params.items()},
            "tool_version": __version__,
            "started_at": self.started,
            "finished_at": dt.datetime.now(dt.timezone.utc).isoformat(),
            "outputs": [str(p) for p in outputs],
        }

    def write_manifest(self, out: Path, extra_outputs=()):
        side = out.with_name(out.name + ".manifest.json")
        side.write_text(json.dumps(self.manifest([out, *extra_outputs]), indent=1, default=str) + "\n")
        return side


@contextlib.contextmanager
def _sink(path: Optional[Path]):
    if path is None:
        yield sys.stdout
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _load_points(source: Optional[str]):
    if source in (None, "bundled"):
        return bundled_sensor_points()[1]
    try:
        return read_sensor_file(source)[1]
    except OSError as exc:
        raise UsageError(f"cannot read sensor file {source}: {exc}") from None


# -- commands ----------------------------------------------------------------

def cmd_gen(args, run: Run) -> int:
    seed = args.seed
    if args.from_sensors:
        run.add_input(None if args.from_sensors == "bundled" else args.from_sensors)
        points = _load_points(args.from_sensors)
        scen = clustered_scenario(points, args.clusters, args.per_cluster, seed,
                                  args.lambda_range or (20.0, 100.0), args.capacity_range or (150.0, 650.0), args.l)
        inst = scen.instance
    else:
        if args.n is None or args.m is None:
            raise UsageError("gen needs --n and --m, or --from-sensors")
        inst = generate_uniform(args.n, args.m, seed, args.lambda_range or (1.0, 10.0),
                                args.capacity_range or (10.0, 100.0), args.l, args.T)
    out = _resolve_out(args.out, "instance.json")
    if out is None:
        save_instance(inst, sys.stdout)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        save_instance(inst, out)
        run.write_manifest(out)
        print(f"wrote {out} (n={inst.n}, m={inst.m}, l={inst.l}, T={inst.T})", file=sys.stderr)
    return EXIT_OK


def _read_instance(path, run: Run):
    run.add_input(path)
    try:
        return load_instance(path)
    except OSError as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from None


def cmd_solve(args, run: Run) -> int:
    inst = _read_instance(args.instance, run)
    solver = SOLVERS[args.solver]
    if args.solver in ("exact", "uncap"):
        sol = solver(inst, time_limit=args.time_limit)
    else:
        sol = solver(inst)
    out = _resolve_out(args.out, "solution.json")
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        save_solution(sol, inst, out)
        run.write_manifest(out)
    else:
        save_solution(sol, inst, sys.stdout)
    obj = "none" if sol.objective is None else f"{sol.objective:g}"
    print(f"status={sol.status} objective={obj} gap={sol.gap:g} assigned={sol.n_assigned}/{inst.n} "
          f"placed={sum(sol.placements(inst.m))} nodes={sol.nodes_explored} elapsed_ms={sol.elapsed_ms:.1f}",
          file=sys.stderr)
    if sol.status == FEASIBLE and args.solver not in ("exact", "uncap"):
        return EXIT_OK  # heuristic answer, not a time-limit cut
    return STATUS_EXIT[sol.status]


def _sim_config(args, **overrides) -> SimConfig:
    fields = dict(seed=args.seed, duration=args.duration, lambda_scale=args.lambda_scale,
                  edge_latency=args.edge_latency, cloud_latency=args.cloud_latency,
                  edge_service_time=args.edge_service_time, device_service_time=args.device_service_time,
                  cloud_speedup=args.cloud_speedup, busy_fraction=args.busy_fraction,
                  r2_local_probability=args.r2_local_probability, nonbusy_headroom=args.nonbusy_headroom,
                  keep_outcomes=bool(getattr(args, "report", None)))
    fields.update(overrides)
    try:
        return SimConfig(**fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args, run: Run) -> int:
    inst = _read_instance(args.instance, run)
    if args.flat == bool(args.solution):
        raise UsageError("give exactly one of --solution or --flat")
    if args.flat:
        sol = FLAT_FL
    else:
        run.add_input(args.solution)
        try:
            sol = load_solution(args.solution, inst)
        except OSError as exc:
            raise UsageError(f"cannot read solution {args.solution}: {exc}") from None
        if not sol.feasible:
            print("error: solution is infeasible, nothing to simulate", file=sys.stderr)
            return EXIT_INFEASIBLE
    rep = simulate(inst, sol, _sim_config(args))
    out = _resolve_out(args.out, "simulation.csv")
    with _sink(out) as fh:
        write_report_csv([rep], fh)
    extra = []
    if args.report:
        Path(args.report).write_text(json.dumps(rep.to_dict(with_outcomes=True), indent=1) + "\n")
        extra.append(Path(args.report))
    if out is not None:
        run.write_manifest(out, extra)
    return EXIT_OK


def _scaling(args, run: Run, fh) -> int:
    # warm-up so imports and first-call allocation stay out of the timings
    solve_exact(generate_uniform(20, 3, 0))
    seeds = range(args.seed, args.seed + args.seeds)
    fields = ["n", "m", "seed", "solver", "status", "objective", "elapsed_s", "nodes"]
    w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    mean_lam = sum(args.lambda_range or (1.0, 10.0)) / 2
    for n in args.n:
        for m in args.m:
            load = n * mean_lam / m
            caps = (args.capacity_factor[0] * load, args.capacity_factor[1] * load)
            for seed in seeds:
                inst = generate_uniform(n, m, seed, args.lambda_range or (1.0, 10.0), caps)
                for name in args.solvers:
                    t0 = time.perf_counter()
                    sol = solve_exact(inst, time_limit=args.time_limit) if name == "exact" else solve_greedy(inst)
                    elapsed = time.perf_counter() - t0
                    w.writerow({"n": n, "m": m, "seed": seed, "solver": name, "status": sol.status,
                                "objective": "" if sol.objective is None else f"{sol.objective:g}",
                                "elapsed_s": f"{elapsed:.6f}", "nodes": sol.nodes_explored})
                    fh.flush()
    return EXIT_OK


def _savings(args, run: Run, fh) -> int:
    n = args.n[0]
    if len(args.n) != 1:
        raise UsageError("bench savings takes a single --n")
    params = CostParams(total_local_rounds=args.rounds)
    res = savings_curve(n, args.m, range(args.seed, args.seed + args.seeds), params,
                        args.lambda_range or (1.0, 10.0), tuple(args.capacity_factor), args.l, args.time_limit)
    write_savings_summary(res, fh)
    if args.rows:
        with open(args.rows, "w", newline="", encoding="utf-8") as rf:
            write_savings_rows(res, rf)
        run.extra_outputs.append(Path(args.rows))
    return EXIT_OK


def _latency_scenario(args, run: Run):
    if args.sensors not in (None, "bundled"):
        run.add_input(args.sensors)
    points = _load_points(args.sensors)
    scen = clustered_scenario(points, args.clusters, args.per_cluster, args.scenario_seed)
    hflop = solve_exact(scen.instance)
    if not hflop.feasible:
        raise UsageError(f"scenario seed {args.scenario_seed} has no capacity-feasible assignment")
    return scen.instance, {"flat": FLAT_FL, "location": scen.location, "hflop": hflop}


def _latency(args, run: Run, fh) -> int:
    inst, schemes = _latency_scenario(args, run)
    cfg = _sim_config(args, keep_outcomes=False)
    reports = [simulate(inst, sol, cfg, scheme=name) for name, sol in schemes.items()]
    write_report_csv(reports, fh)
    for r in reports:
        print(f"{r.scheme:9s} {r.mean:7.2f} ms +- {r.std:6.2f}  (n={r.total}, overflow={r.offload_counts['R3']})",
              file=sys.stderr)
    return EXIT_OK


def _speedup(args, run: Run, fh) -> int:
    inst, schemes = _latency_scenario(args, run)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["lambda_scale", "scheme", "speedup", "mean_ms"])
    for scale in args.lambda_scales:
        cfg = _sim_config(args, lambda_scale=scale, keep_outcomes=False)
        rows = sweep_speedup(inst, schemes, cfg, args.speedups)
        for name, s, mean in rows:
            w.writerow([f"{scale:g}", name, f"{s:g}", f"{mean:.6f}"])
        cross = find_crossover(rows)
        print(f"lambda x{scale:g}: crossover {'none' if cross is None else f'at s={cross:g}'}", file=sys.stderr)
    return EXIT_OK


BENCHES = {"scaling": _scaling, "savings": _savings, "latency": _latency, "speedup": _speedup}


def cmd_bench(args, run: Run) -> int:
    run.extra_outputs = []
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    out = _resolve_out(args.out, f"bench_{args.kind}.csv")
    with _sink(out) as fh:
        code = BENCHES[args.kind](args, run, fh)
    if out is not None:
        run.write_manifest(out, run.extra_outputs)
    return code


# -- parser ------------------------------------------------------------------

def _add_sim_flags(p, service_time=4.0, duration=30.0):
    p.add_argument("--duration", type=float, default=duration, help="simulated seconds")
    p.add_argument("--lambda-scale", type=float, default=1.0)
    p.add_argument("--edge-latency", type=parse_range, default=(8.0, 10.0), metavar="LO,HI")
    p.add_argument("--cloud-latency", type=parse_range, default=(50.0, 100.0), metavar="LO,HI")
    p.add_argument("--edge-service-time", type=float, default=service_time, help="ms")
    p.add_argument("--device-service-time", type=float, default=4.0, help="ms")
    p.add_argument("--cloud-speedup", type=float, default=0.0)
    p.add_argument("--busy-fraction", type=float, default=1.0)
    p.add_argument("--r2-local-probability", type=float, default=0.5)
    p.add_argument("--nonbusy-headroom", type=float, default=0.8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hflop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hflop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--seed", type=int, default=None, help=f"default ${SEED_ENV} or 0")
        p.add_argument("--out", default=None, help=f"{out_help}; '-' for stdout (default ${OUT_DIR_ENV}/... or stdout)")

    g = sub.add_parser("gen", help="generate an instance")
    common(g, "instance file")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--lambda-range", type=parse_range, metavar="LO,HI")
    g.add_argument("--capacity-range", type=parse_range, metavar="LO,HI")
    g.add_argument("--l", type=int, default=2)
    g.add_argument("--T", type=int, default=None, help="minimum participants (default n)")
    g.add_argument("--from-sensors", metavar="CSV", help="id,lat,lon file, or 'bundled'")
    g.add_argument("--clusters", type=int, default=4)
    g.add_argument("--per-cluster", type=int, default=5)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance")
    common(s, "solution file")
    s.add_argument("instance")
    s.add_argument("--solver", choices=sorted(SOLVERS), default="exact")
    s.add_argument("--time-limit", type=float, default=None, help="seconds (exact and uncap)")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="simulate inference routing")
    common(m, "CSV report row")
    m.add_argument("instance")
    m.add_argument("--solution")
    m.add_argument("--flat", action="store_true", help="flat FL: no edge tier")
    m.add_argument("--report", help="also write the full JSON report with every request")
    _add_sim_flags(m)
    m.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="benchmark drivers")
    b.add_argument("kind", choices=sorted(BENCHES))
    common(b, "CSV output")
    b.add_argument("--seeds", type=int, default=3, help="number of consecutive seeds from --seed")
    b.add_argument("--n", type=parse_int_list, default=None)
    b.add_argument("--m", type=parse_int_list, default=None)
    b.add_argument("--l", type=int, default=2)
    b.add_argument("--lambda-range", type=parse_range, metavar="LO,HI")
    b.add_argument("--capacity-factor", type=parse_range, default=(1.0, 2.0), metavar="LO,HI",
                   help="capacity range as multiples of the mean per-edge load")
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--solvers", type=lambda t: t.split(","), default=["exact", "greedy"])
    b.add_argument("--rounds", type=int, default=100, help="local rounds until convergence (savings)")
    b.add_argument("--rows", help="per-seed rows file (savings)")
    b.add_argument("--sensors", default="bundled", help="sensor CSV for latency/speedup")
    b.add_argument("--clusters", type=int, default=4)
    b.add_argument("--per-cluster", type=int, default=5)
    b.add_argument("--scenario-seed", type=int, default=0)
    b.add_argument("--lambda-scales", type=parse_float_list, default=[1.0, 10.0])
    b.add_argument("--speedups", type=parse_float_list, default=parse_float_list(DEFAULT_SPEEDUPS))
    _add_sim_flags(b, service_time=None, duration=None)
    b.set_defaults(func=cmd_bench)
    return parser


BENCH_DEFAULTS = {
    "scaling": {"n": [100, 1000, 5000], "m": [10, 50]},
    "savings": {"n": [200], "m": [5, 10, 20, 50], "seeds": 30},
}


def _fill_bench_defaults(args, argv):
    for key, val in BENCH_DEFAULTS.get(args.kind, {}).items():
        if getattr(args, key) is None or (key == "seeds" and "--seeds" not in argv):
            setattr(args, key, val)
    if args.kind in ("scaling", "savings") and (args.n is None or args.m is None):
        raise UsageError(f"bench {args.kind} needs --n and --m")
    if args.edge_service_time is None:
        args.edge_service_time = SWEEP_SERVICE_MS if args.kind == "speedup" else 4.0
    if args.duration is None:
        args.duration = 10.0 if args.kind == "speedup" else 30.0


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _env_seed()
        if args.command == "bench":
            _fill_bench_defaults(args, argv)
        run = Run(args.command if args.command != "bench" else f"bench {args.kind}", args, argv)
        return args.func(args, run)
    except (UsageError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
