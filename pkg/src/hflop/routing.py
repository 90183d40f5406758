"""Event-driven simulation of inference request routing during HFL training.

Requests arrive per device as Poisson processes and are routed by three rules:

* R1: a device busy training offloads to its aggregator.
* R2: an idle device serves locally with some probability, otherwise offloads
  to its aggregator (the closest placed one if it is not an FL participant).
* R3: an aggregator admits busy-device requests while the number it admitted
  in the trailing window stays below its capacity, and idle-device requests
  only below a headroom fraction of it. Everything else goes to the cloud.

Response times are in milliseconds: one uniformly drawn round trip per
network hop plus the service time of the serving tier.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .solver.model import Solution
from .topology import HflopInstance


class _FlatFL:
    """Marker for flat (non-hierarchical) FL: no edge tier at all."""

    def __repr__(self):
        return "FLAT_FL"


FLAT_FL = _FlatFL()

DEVICE, EDGE, CLOUD = "device", "edge", "cloud"
SCHEMES = ("flat", "location", "hflop")


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    duration: float = 30.0  # simulated seconds
    lambda_scale: float = 1.0
    edge_latency: Tuple[float, float] = (8.0, 10.0)  # round trip, ms
    cloud_latency: Tuple[float, float] = (50.0, 100.0)
    edge_service_time: float = 4.0  # ms; calibration constant
    device_service_time: float = 4.0
    cloud_speedup: float = 0.0
    busy_fraction: float = 1.0
    r2_local_probability: float = 0.5
    nonbusy_headroom: float = 0.8
    window: float = 1.0  # seconds, for the admitted-rate test
    keep_outcomes: bool = True

    def __post_init__(self):
        for name in ("edge_latency", "cloud_latency"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        for name in ("busy_fraction", "r2_local_probability", "nonbusy_headroom"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0 <= self.cloud_speedup < 1:
            raise ValueError(f"cloud_speedup must be in [0, 1), got {self.cloud_speedup}")
        if self.duration <= 0 or self.window <= 0:
            raise ValueError("duration and window must be > 0")
        if self.lambda_scale < 0 or self.edge_service_time < 0 or self.device_service_time < 0:
            raise ValueError("rates scale and service times must be >= 0")

    @property
    def cloud_service_time(self) -> float:
        return self.edge_service_time * (1 - self.cloud_speedup)


@dataclass(frozen=True)
class RequestOutcome:
    device: int
    issued_at: float
    served_at: str  # "device", "edge:<j>" or "cloud"
    response_time: float
    hops: Tuple[str, ...]


@dataclass
class SimReport:
    scheme: str
    seed: int
    total: int
    mean: float
    std: float
    p50: float
    p95: float
    p99: float
    served_counts: Dict[str, int]
    offload_counts: Dict[str, int]
    edge_counts: Dict[int, int] = field(default_factory=dict)
    response_times: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    outcomes: List[RequestOutcome] = field(default_factory=list, repr=False)

    CSV_FIELDS = ("scheme", "seed", "requests", "mean_ms", "std_ms", "p50_ms", "p95_ms", "p99_ms",
                  "served_device", "served_edge", "served_cloud", "offload_r1", "offload_r2", "overflow_r3")

    def row(self) -> dict:
        def f(x):
            return "" if math.isnan(x) else f"{x:.6f}"

        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "requests": self.total,
            "mean_ms": f(self.mean),
            "std_ms": f(self.std),
            "p50_ms": f(self.p50),
            "p95_ms": f(self.p95),
            "p99_ms": f(self.p99),
            "served_device": self.served_counts[DEVICE],
            "served_edge": self.served_counts[EDGE],
            "served_cloud": self.served_counts[CLOUD],
            "offload_r1": self.offload_counts["R1"],
            "offload_r2": self.offload_counts["R2"],
            "overflow_r3": self.offload_counts["R3"],
        }

    def to_dict(self, with_outcomes: bool = False) -> dict:
        def clean(x):
            return None if isinstance(x, float) and math.isnan(x) else x

        out = {
            "scheme": self.scheme,
            "seed": self.seed,
            "total": self.total,
            "mean": clean(self.mean),
            "std": clean(self.std),
            "percentiles": {"p50": clean(self.p50), "p95": clean(self.p95), "p99": clean(self.p99)},
            "served_counts": dict(self.served_counts),
            "offload_counts": dict(self.offload_counts),
            "edge_counts": {str(k): v for k, v in self.edge_counts.items()},
        }
        if with_outcomes:
            out["outcomes"] = [asdict(o) for o in self.outcomes]
        return out


def write_report_csv(reports: Sequence[SimReport], target=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SimReport.CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    text = buf.getvalue()
    if target is not None:
        target.write(text)
    return text


def _aggregator_table(instance: HflopInstance, solution) -> Tuple[List[Optional[int]], List[bool]]:
    """Aggregator per device and which devices take part in training."""
    n = instance.n
    if solution is FLAT_FL:
        return [None] * n, [True] * n
    if not isinstance(solution, Solution):
        raise TypeError("solution must be a Solution or FLAT_FL")
    if not solution.feasible:
        raise ValueError("cannot simulate an infeasible solution")
    if len(solution.assignment) != n:
        raise ValueError(f"solution covers {len(solution.assignment)} devices, instance has {n}")
    placed = [j for j, y in enumerate(solution.placements(instance.m)) if y]
    cost = instance.topology.cost_matrix
    agg: List[Optional[int]] = []
    participating = []
    for i, j in enumerate(solution.assignment):
        if j is not None and not 0 <= j < instance.m:
            raise ValueError(f"device {i} assigned to unknown edge {j}")
        participating.append(j is not None)
        if j is None:
            # closest aggregator by communication cost, lowest index on ties
            j = min(placed, key=lambda e: (cost[i, e], e)) if placed else None
        agg.append(j)
    return agg, participating


def _arrivals(rates: np.ndarray, duration: float, rng: np.random.Generator):
    times, devs = [], []
    for i, rate in enumerate(rates):
        if rate <= 0:
            continue
        k = rng.poisson(rate * duration)
        times.append(np.sort(rng.uniform(0.0, duration, size=k)))
        devs.append(np.full(k, i, dtype=np.int64))
    if not times:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    t = np.concatenate(times)
    d = np.concatenate(devs)
    order = np.lexsort((d, t))
    return t[order], d[order]


def simulate(
    instance: HflopInstance,
    solution: Union[Solution, _FlatFL],
    config: SimConfig = SimConfig(),
    scheme: Optional[str] = None,
) -> SimReport:
    """Simulate request routing for ``config.duration`` seconds."""
    agg, participating = _aggregator_table(instance, solution)
    if scheme is None:
        scheme = "flat" if solution is FLAT_FL else solution.solver_kind
    caps = instance.topology.capacities
    rates = instance.topology.lambdas * config.lambda_scale

    root = np.random.SeedSequence(config.seed)
    arrivals_rng, decide_rng, latency_rng = (np.random.default_rng(s) for s in root.spawn(3))
    times, devs = _arrivals(rates, config.duration, arrivals_rng)
    total = len(times)
    busy_u = decide_rng.random(total)
    local_u = decide_rng.random(total)
    edge_rtt = latency_rng.uniform(*config.edge_latency, size=total)
    cloud_rtt = latency_rng.uniform(*config.cloud_latency, size=total)

    cloud_svc = config.cloud_service_time
    windows = {j: deque() for j in range(instance.m)}
    served = {DEVICE: 0, EDGE: 0, CLOUD: 0}
    offloads = {"R1": 0, "R2": 0, "R3": 0}
    edge_counts: Dict[int, int] = {}
    rt = np.empty(total)
    outcomes: List[RequestOutcome] = []
    w = config.window
    headroom = config.nonbusy_headroom

    for k in range(total):
        t = float(times[k])
        i = int(devs[k])
        busy = participating[i] and busy_u[k] < config.busy_fraction
        target = agg[i]
        if busy:
            offloads["R1"] += 1
        elif local_u[k] < config.r2_local_probability:
            rt[k] = config.device_service_time
            served[DEVICE] += 1
            if config.keep_outcomes:
                outcomes.append(RequestOutcome(i, t, DEVICE, rt[k], (DEVICE,)))
            continue
        else:
            offloads["R2"] += 1
        if target is None:
            rt[k] = cloud_rtt[k] + cloud_svc
            served[CLOUD] += 1
            hops = (CLOUD,)
        else:
            win = windows[target]
            while win and t - win[0] >= w:
                win.popleft()
            limit = caps[target] if busy else caps[target] * headroom
            if len(win) < limit:
                win.append(t)
                rt[k] = edge_rtt[k] + config.edge_service_time
                served[EDGE] += 1
                edge_counts[target] = edge_counts.get(target, 0) + 1
                hops = (f"edge:{target}",)
            else:
                offloads["R3"] += 1
                rt[k] = edge_rtt[k] + cloud_rtt[k] + cloud_svc
                served[CLOUD] += 1
                hops = (f"edge:{target}", CLOUD)
        if config.keep_outcomes:
            outcomes.append(RequestOutcome(i, t, hops[-1], float(rt[k]), hops))

    if total:
        mean = float(rt.mean())
        std = float(rt.std(ddof=1)) if total > 1 else 0.0
        p50, p95, p99 = (float(x) for x in np.percentile(rt, [50, 95, 99]))
    else:
        mean = std = p50 = p95 = p99 = math.nan
    return SimReport(scheme, config.seed, total, mean, std, p50, p95, p99, served, offloads,
                     dict(sorted(edge_counts.items())), rt, outcomes)


def sweep_speedup(
    instance: HflopInstance,
    solutions: Mapping[str, Union[Solution, _FlatFL]],
    config: SimConfig,
    speedups: Sequence[float],
) -> List[Tuple[str, float, float]]:
    """(scheme, speedup, mean latency) for every scheme and speedup, one shared seed."""
    rows = []
    for s in speedups:
        cfg = replace(config, cloud_speedup=float(s), keep_outcomes=False)
        for name, sol in solutions.items():
            rows.append((name, float(s), simulate(instance, sol, cfg, scheme=name).mean))
    return rows


def find_crossover(rows: Sequence[Tuple[str, float, float]], flat: str = "flat") -> Optional[float]:
    """Smallest speedup from which flat FL stays faster than every other scheme,
    provided it is not already faster at the smallest speedup."""
    by_s: Dict[float, Dict[str, float]] = {}
    for name, s, mean in rows:
        by_s.setdefault(s, {})[name] = mean
    speeds = sorted(by_s)
    wins = [all(by_s[s][flat] < v for k, v in by_s[s].items() if k != flat) for s in speeds]
    if not speeds or wins[0]:
        return None
    for idx in range(1, len(speeds)):
        if all(wins[idx:]):
            return speeds[idx]
    return None
