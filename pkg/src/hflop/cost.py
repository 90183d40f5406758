"""Traffic over metered links until convergence, and savings against flat FL.

Byte totals are plain Python ints: every contribution is a whole number of
model transfers times an integer model size.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .routing import FLAT_FL, _FlatFL
from .solver import solve_exact, solve_uncapacitated
from .solver.model import Solution
from .topology import HflopInstance, generate_uniform

KB = 1000
GB = 10**9
MODEL_SIZE = 594 * KB
ROUND_PRESETS = (20, 100)


@dataclass(frozen=True)
class CostParams:
    model_size: int = MODEL_SIZE  # bytes per transfer
    total_local_rounds: int = 100
    count_both_directions: bool = True
    l: Optional[int] = None  # local rounds per global round; None = take it from the instance

    def __post_init__(self):
        if int(self.model_size) != self.model_size or self.model_size <= 0:
            raise ValueError(f"model_size must be a positive integer, got {self.model_size}")
        if self.total_local_rounds < 0:
            raise ValueError(f"total_local_rounds must be >= 0, got {self.total_local_rounds}")
        if self.l is not None and self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")

    @property
    def dirs(self) -> int:
        return 2 if self.count_both_directions else 1

    def global_rounds(self, instance: HflopInstance) -> int:
        return self.total_local_rounds // (self.l or instance.l)


@dataclass(frozen=True)
class CostReport:
    scheme: str
    metered_bytes: int
    device_edge_bytes: int
    edge_cloud_bytes: int
    device_cloud_bytes: int
    savings_vs_flat: float  # fraction; nan when the flat baseline is zero

    @property
    def metered_gb(self) -> float:
        return self.metered_bytes / GB


def flat_bytes(instance: HflopInstance, params: CostParams = CostParams()) -> int:
    # every device trains and talks to the cloud every round
    return instance.n * params.total_local_rounds * params.dirs * int(params.model_size)


def cost_until_convergence(
    instance: HflopInstance,
    solution: Union[Solution, _FlatFL],
    params: CostParams = CostParams(),
    scheme: Optional[str] = None,
) -> CostReport:
    per_transfer = params.dirs * int(params.model_size)
    baseline = flat_bytes(instance, params)
    if solution is FLAT_FL:
        de, ec, dc = 0, 0, baseline
        scheme = scheme or "flat"
    else:
        if not isinstance(solution, Solution):
            raise TypeError("solution must be a Solution or FLAT_FL")
        if not solution.feasible:
            raise ValueError("no traffic for an infeasible solution")
        if len(solution.assignment) != instance.n:
            raise ValueError(f"solution covers {len(solution.assignment)} devices, instance has {instance.n}")
        C = instance.topology.cost_matrix
        ce = instance.topology.cloud_costs
        metered_pairs = sum(1 for i, j in enumerate(solution.assignment) if j is not None and C[i, j] > 0)
        metered_edges = sum(1 for j, y in enumerate(solution.placements(instance.m)) if y and ce[j] > 0)
        de = metered_pairs * params.total_local_rounds * per_transfer
        ec = metered_edges * params.global_rounds(instance) * per_transfer
        dc = 0
        scheme = scheme or solution.solver_kind
    total = de + ec + dc
    savings = 1 - total / baseline if baseline else math.nan
    return CostReport(scheme, total, de, ec, dc, savings)


@dataclass
class SavingsResult:
    rows: List[dict]  # one per (m, seed, scheme)
    summary: List[dict]  # one per (m, scheme)
    redraws: Dict[Tuple[int, int], int]  # (m, seed) -> infeasible draws skipped


SAVINGS_SCHEMES = ("hflop", "uncapacitated")
ROW_FIELDS = ("scheme", "n", "m", "seed", "metered_bytes", "savings_pct", "status", "redraws")
SUMMARY_FIELDS = ("m", "scheme", "seeds", "mean_savings_pct", "ci95_pct", "redraws")


def ci95(values: Sequence[float]) -> float:
    """Half-width of the Student-t 95% interval of the mean (0 for one value)."""
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        return 0.0
    return float(stats.t.ppf(0.975, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x)))


def draw_feasible(n, m, seed, lambda_range=(1.0, 10.0), capacity_factor=(1.0, 2.0), l=2,
                  time_limit=None, max_draws=50):
    """First draw with a feasible HFLOP solution: (instance, exact solution, redraws).

    Capacities are drawn around the mean per-edge load n*mean(lambda)/m, so
    the overall slack is comparable across edge densities.
    """
    mean_load = n * (lambda_range[0] + lambda_range[1]) / 2 / m
    caps = (capacity_factor[0] * mean_load, capacity_factor[1] * mean_load)
    for attempt in range(max_draws):
        inst = generate_uniform(n, m, [seed, attempt], lambda_range, caps, l=l)
        sol = solve_exact(inst, time_limit=time_limit)
        if sol.feasible:
            return inst, sol, attempt
    raise RuntimeError(f"no feasible draw for n={n}, m={m}, seed={seed} in {max_draws} attempts")


def savings_curve(
    n: int,
    edge_densities: Sequence[int],
    seeds: Sequence[int],
    params: CostParams = CostParams(),
    lambda_range=(1.0, 10.0),
    capacity_factor=(1.0, 2.0),
    l: int = 2,
    time_limit: Optional[float] = None,
) -> SavingsResult:
    rows, summary, redraws = [], [], {}
    for m in sorted(edge_densities):
        per_scheme: Dict[str, List[float]] = {s: [] for s in SAVINGS_SCHEMES}
        for seed in seeds:
            inst, sol, skipped = draw_feasible(n, m, seed, lambda_range, capacity_factor, l, time_limit)
            redraws[(m, seed)] = skipped
            for scheme, s in (("hflop", sol), ("uncapacitated", solve_uncapacitated(inst))):
                rep = cost_until_convergence(inst, s, params, scheme)
                per_scheme[scheme].append(100 * rep.savings_vs_flat)
                rows.append({"scheme": scheme, "n": n, "m": m, "seed": seed, "metered_bytes": rep.metered_bytes,
                             "savings_pct": 100 * rep.savings_vs_flat, "status": s.status, "redraws": skipped})
        total_redraws = sum(redraws[(m, s)] for s in seeds)
        for scheme in SAVINGS_SCHEMES:
            vals = per_scheme[scheme]
            summary.append({"m": m, "scheme": scheme, "seeds": len(vals), "mean_savings_pct": float(np.mean(vals)),
                            "ci95_pct": ci95(vals), "redraws": total_redraws})
    return SavingsResult(rows, summary, redraws)


def _write(rows, fields, target=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: f"{v:.6f}" if isinstance(v, float) else v for k, v in r.items()})
    text = buf.getvalue()
    if target is not None:
        target.write(text)
    return text


def write_savings_rows(result: SavingsResult, target=None) -> str:
    return _write(result.rows, ROW_FIELDS, target)


def write_savings_summary(result: SavingsResult, target=None) -> str:
    return _write(result.summary, SUMMARY_FIELDS, target)
