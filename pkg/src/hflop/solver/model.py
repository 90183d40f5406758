"""Solution type, objective evaluation and constraint checking."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from decimal import Decimal
from typing import IO, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..topology import HflopInstance

OPTIMAL = "optimal"
FEASIBLE = "feasible"  # time limit hit with an incumbent
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"  # time limit hit without an incumbent

SOLVER_KINDS = ("exact", "brute_force", "greedy", "uncapacitated")
FLOAT_TOL = 1e-9
MAX_DECIMALS = 9


class InfeasibleError(RuntimeError):
    pass


class SolverLimitError(ValueError):
    """Instance exceeds the size the solver accepts."""


@dataclass(frozen=True)
class CostScale:
    """Costs as integers in units of ``10**-decimals``; ``exact`` is False
    when some cost has no short decimal form and floats are used instead."""

    assign: np.ndarray  # n x m, already multiplied by l
    opening: np.ndarray  # m
    decimals: int
    exact: bool

    def to_float(self, value) -> float:
        if self.exact:
            return int(value) / 10**self.decimals
        return float(value)


def _decimals_needed(x: float) -> Optional[int]:
    d = Decimal(repr(float(x))).normalize()
    exp = d.as_tuple().exponent
    places = max(0, -exp)
    return places if places <= MAX_DECIMALS else None


def _common_decimals(values: np.ndarray) -> Optional[int]:
    places = 0
    for v in np.unique(values):
        p = _decimals_needed(v)
        if p is None:
            return None
        places = max(places, p)
    return places


def cost_scale(instance: HflopInstance) -> CostScale:
    topo = instance.topology
    cd, ce = topo.cost_matrix, topo.cloud_costs
    places = _common_decimals(np.concatenate([cd.ravel(), ce]))
    if places is not None:
        f = 10**places
        # round() absorbs representation error; values are exact decimals by construction
        a = np.rint(cd * f).astype(np.int64) * instance.l
        o = np.rint(ce * f).astype(np.int64)
        if np.abs(a).max(initial=0) * max(instance.n, 1) < 2**62 and o.sum() < 2**62:
            return CostScale(a, o, places, True)
    return CostScale(cd * instance.l, ce.astype(float), 0, False)


UNBOUNDED = 2**62


@dataclass(frozen=True)
class LoadScale:
    """Request rates and capacities on a common integer grid so capacity
    tests are exact; infinite capacity maps to ``UNBOUNDED``."""

    lam: np.ndarray
    cap: np.ndarray
    exact: bool

    def fits(self, load, lam, j) -> bool:
        if self.exact:
            return load + lam <= self.cap[j]
        return load + lam <= self.cap[j] * (1 + FLOAT_TOL) + FLOAT_TOL


def load_scale(instance: HflopInstance) -> LoadScale:
    topo = instance.topology
    lam, cap = topo.lambdas, topo.capacities
    finite = cap[np.isfinite(cap)]
    places = _common_decimals(np.concatenate([lam, finite]))
    if places is not None:
        f = 10**places
        if (lam.sum() + finite.sum(initial=0)) * f < 2**60:
            li = np.rint(lam * f).astype(np.int64)
            ci = np.full(len(cap), UNBOUNDED, dtype=np.int64)
            ci[np.isfinite(cap)] = np.rint(finite * f).astype(np.int64)
            return LoadScale(li, ci, True)
    return LoadScale(lam.astype(float), cap.astype(float), False)


@dataclass(frozen=True)
class Solution:
    assignment: Tuple[Optional[int], ...]  # edge position per device, None = unassigned
    objective: Optional[float]
    solver_kind: str
    status: str = OPTIMAL
    gap: float = 0.0
    elapsed_ms: float = 0.0
    nodes_explored: int = 0

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))

    @property
    def feasible(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)

    @property
    def proven_optimal(self) -> bool:
        return self.status == OPTIMAL

    def placements(self, m: int) -> Tuple[bool, ...]:
        used = {j for j in self.assignment if j is not None}
        return tuple(j in used for j in range(m))

    @property
    def n_assigned(self) -> int:
        return sum(j is not None for j in self.assignment)

    @classmethod
    def infeasible(cls, n: int, kind: str, **stats) -> "Solution":
        return cls((None,) * n, None, kind, INFEASIBLE, **stats)


@dataclass(frozen=True)
class Violation:
    kind: str  # capacity | placement_consistency | orphan_aggregator | participation
    subject: Optional[int]  # device or edge position, None for global constraints
    measured: float
    bound: float

    def __str__(self):
        who = "" if self.subject is None else f" {self.subject}"
        return f"{self.kind}{who}: measured {self.measured} vs bound {self.bound}"


def _check_dims(instance: HflopInstance, assignment: Sequence[Optional[int]]) -> None:
    if len(assignment) != instance.n:
        raise ValueError(f"assignment has {len(assignment)} entries, instance has {instance.n} devices")
    for i, j in enumerate(assignment):
        if j is not None and not 0 <= j < instance.m:
            raise ValueError(f"device {i} assigned to edge {j}, instance has {instance.m} edges")


def objective(instance: HflopInstance, solution: Union[Solution, Sequence[Optional[int]]], placements=None) -> float:
    """Total cost: per-assignment device-edge cost times l, plus cloud cost of placed edges.

    ``placements`` defaults to the ones derived from the assignment.
    """
    assignment = solution.assignment if isinstance(solution, Solution) else tuple(solution)
    _check_dims(instance, assignment)
    if placements is None:
        placements = {j for j in assignment if j is not None}
    else:
        if len(placements) != instance.m:
            raise ValueError(f"placements has {len(placements)} entries, instance has {instance.m} edges")
        placements = {j for j, y in enumerate(placements) if y}
    sc = cost_scale(instance)
    total = sum(sc.assign[i, j] for i, j in enumerate(assignment) if j is not None)
    total += sum(sc.opening[j] for j in placements)
    return sc.to_float(total)


def check_feasible(
    instance: HflopInstance,
    solution: Union[Solution, Sequence[Optional[int]]],
    placements: Optional[Sequence[bool]] = None,
    capacitated: bool = True,
) -> List[Violation]:
    """Violations of the placement, capacity and participation constraints.

    With explicit ``placements`` the linking constraints between assignment
    and placement are checked too; otherwise placements are derived.
    """
    assignment = solution.assignment if isinstance(solution, Solution) else tuple(solution)
    _check_dims(instance, assignment)
    m = instance.m
    if placements is None:
        placed = [False] * m
        for j in assignment:
            if j is not None:
                placed[j] = True
    else:
        if len(placements) != m:
            raise ValueError(f"placements has {len(placements)} entries, instance has {m} edges")
        placed = [bool(y) for y in placements]
    out: List[Violation] = []
    counts = [0] * m
    for i, j in enumerate(assignment):
        if j is None:
            continue
        counts[j] += 1
        if not placed[j]:
            out.append(Violation("placement_consistency", i, 1, 0))
    for j in range(m):
        if placed[j] and counts[j] == 0:
            out.append(Violation("orphan_aggregator", j, 0, 1))
    if capacitated:
        ls = load_scale(instance)
        lams, caps = instance.topology.lambdas, instance.topology.capacities
        for j in range(m):
            members = [i for i, a in enumerate(assignment) if a == j]
            if not members:
                continue
            scaled = sum(ls.lam[i] for i in members)
            if not ls.fits(scaled, 0, j):
                load = math.fsum(float(lams[i]) for i in members)
                out.append(Violation("capacity", j, load, float(caps[j])))
    assigned = sum(counts)
    if assigned < instance.T:
        out.append(Violation("participation", None, assigned, instance.T))
    return out


# -- solution documents ----------------------------------------------------------


def solution_to_dict(solution: Solution, instance: HflopInstance) -> dict:
    topo = instance.topology
    return {
        "assignment": [
            {"device": d.id, "edge": None if j is None else topo.edges[j].id}
            for d, j in zip(topo.devices, solution.assignment)
        ],
        "placements": list(solution.placements(instance.m)),
        "objective": solution.objective,
        "solver_kind": solution.solver_kind,
        "status": solution.status,
        "proven_optimal": solution.proven_optimal,
        "gap": solution.gap if math.isfinite(solution.gap) else "inf",
        "elapsed_ms": solution.elapsed_ms,
        "nodes_explored": solution.nodes_explored,
    }


def solution_from_dict(doc: dict, instance: HflopInstance) -> Solution:
    topo = instance.topology
    dev_pos = {d.id: i for i, d in enumerate(topo.devices)}
    edge_pos = {e.id: j for j, e in enumerate(topo.edges)}
    assignment: List[Optional[int]] = [None] * instance.n
    entries = doc.get("assignment")
    if not isinstance(entries, list) or len(entries) != instance.n:
        raise ValueError(f"assignment: expected {instance.n} entries")
    for k, entry in enumerate(entries):
        try:
            i = dev_pos[entry["device"]]
            e = entry["edge"]
            assignment[i] = None if e is None else edge_pos[e]
        except (KeyError, TypeError):
            raise ValueError(f"assignment[{k}]: unknown device or edge in {entry!r}") from None
    gap = doc.get("gap", 0.0)
    return Solution(
        tuple(assignment),
        doc.get("objective"),
        doc.get("solver_kind", "exact"),
        doc.get("status", OPTIMAL if doc.get("proven_optimal", True) else FEASIBLE),
        math.inf if gap == "inf" else float(gap),
        float(doc.get("elapsed_ms", 0.0)),
        int(doc.get("nodes_explored", 0)),
    )


def save_solution(solution: Solution, instance: HflopInstance, target: Union[str, os.PathLike, IO[str]]) -> None:
    text = json.dumps(solution_to_dict(solution, instance), indent=1) + "\n"
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)


def load_solution(source: Union[str, os.PathLike, IO[str]], instance: HflopInstance) -> Solution:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = json.load(source)
    return solution_from_dict(doc, instance)
