"""Capacitated facility location with unsplittable demands, and its HFLOP encoding."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ..topology import Device, EdgeNode, HflopInstance, Topology


@dataclass(frozen=True)
class CflpInstance:
    setup_costs: Tuple[float, ...]  # per facility
    capacities: Tuple[float, ...]  # per facility
    demands: Tuple[float, ...]  # per client
    transport: Tuple[Tuple[float, ...], ...]  # clients x facilities

    def __post_init__(self):
        for name in ("setup_costs", "capacities", "demands"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "transport", tuple(tuple(r) for r in self.transport))
        if len(self.capacities) != len(self.setup_costs):
            raise ValueError("one capacity per facility required")
        if len(self.transport) != len(self.demands):
            raise ValueError("one transport row per client required")
        for k, row in enumerate(self.transport):
            if len(row) != len(self.setup_costs):
                raise ValueError(f"transport[{k}]: expected {len(self.setup_costs)} entries")
        values = list(self.setup_costs) + list(self.capacities) + list(self.demands)
        values += [c for row in self.transport for c in row]
        if any(v < 0 for v in values):
            raise ValueError("costs, capacities and demands must be non-negative")


def reduce_from_cflp(cflp: CflpInstance) -> HflopInstance:
    """Facilities become edges (setup cost as cloud cost), clients become
    devices (demand as request rate); every device must participate and l=1."""
    edges = tuple(EdgeNode(j, float(c), float(f)) for j, (f, c) in enumerate(zip(cflp.setup_costs, cflp.capacities)))
    devices = tuple(Device(i, float(d)) for i, d in enumerate(cflp.demands))
    topo = Topology(devices, edges, [[float(c) for c in row] for row in cflp.transport])
    return HflopInstance(topo, l=1, T=len(devices))


def _exact(x: float) -> Fraction:
    return Fraction(Decimal(repr(float(x))))


def solve_cflp_brute_force(cflp: CflpInstance) -> Optional[Tuple[float, List[int]]]:
    """Optimal (cost, facility per client) by enumerating open facility sets
    and, for each, every capacity-respecting client allocation.

    Returns None when no allocation serves every client.
    """
    nf, nc = len(cflp.setup_costs), len(cflp.demands)
    f = [_exact(x) for x in cflp.setup_costs]
    u = [_exact(x) for x in cflp.capacities]
    d = [_exact(x) for x in cflp.demands]
    t = [[_exact(x) for x in row] for row in cflp.transport]
    best: Optional[Fraction] = None
    best_alloc: List[int] = []

    for mask in range(1 << nf):
        opened = [j for j in range(nf) if mask >> j & 1]
        if nc and not opened:
            continue
        setup = sum((f[j] for j in opened), Fraction(0))
        if best is not None and setup >= best:
            continue
        left = {j: u[j] for j in opened}
        alloc = [0] * nc

        def rec(c: int, acc: Fraction):
            nonlocal best, best_alloc
            if best is not None and acc >= best:
                return
            if c == nc:
                best, best_alloc = acc, list(alloc)
                return
            for j in opened:
                if d[c] <= left[j]:
                    left[j] -= d[c]
                    alloc[c] = j
                    rec(c + 1, acc + t[c][j])
                    left[j] += d[c]

        rec(0, setup)
    if best is None:
        return None
    return float(best), best_alloc


def cflp_cost(cflp: CflpInstance, alloc: Sequence[int]) -> float:
    opened = set(alloc)
    return float(sum(_exact(cflp.setup_costs[j]) for j in opened) + sum(_exact(cflp.transport[c][j]) for c, j in enumerate(alloc)))
