"""Depth-first branch-and-bound for HFLOP.

Devices are decided one at a time in order of descending request rate. Each
child of a node is scored with a combinatorial lower bound and children are
explored best-bound first (ties: unassigned, then lowest edge index).

Lower bound at a node, when every undecided device must still be assigned:

    fixed cost
    + sum over undecided devices of their cheapest admissible assignment cost
    + sum over edges j of an overflow term for the devices whose unique
      cheapest edge is j ("home" devices)

The overflow term for j is the cheapest fractional knapsack cover of the
capacity excess of j's undecided home devices, paying each device's regret
(second-cheapest minus cheapest cost) per unit of rate moved away. For an
edge without an aggregator yet it is min(opening cost + cover, total regret),
since either j opens or all its home devices go elsewhere. Home sets are
disjoint, so the terms add up. With integer costs every cover is rounded up
to a multiple of the gcd of all possible per-device extra costs, since any
real reassignment pays a multiple of it.

When some undecided devices may stay unassigned (T < n) the bound is the
fixed cost plus the cheapest costs of as many devices as are still needed.
Both variants add the cheapest opening cost when the open aggregators cannot
hold the remaining required load.
"""

from __future__ import annotations

import heapq
import math
import time
from bisect import bisect_left
from fractions import Fraction
from typing import List, Optional

from ..topology import HflopInstance
from .greedy import solve_greedy
from .model import (
    FEASIBLE,
    FLOAT_TOL,
    INFEASIBLE,
    OPTIMAL,
    UNKNOWN,
    UNBOUNDED,
    Solution,
    cost_scale,
    load_scale,
)

INF = math.inf
UNASSIGNED = -1
_CLOCK_EVERY = 64


class _Search:
    def __init__(self, instance: HflopInstance, time_limit: Optional[float], kind: str):
        self.instance = instance
        self.kind = kind
        self.deadline = None if time_limit is None else time.perf_counter() + time_limit
        n, m = instance.n, instance.m
        self.n, self.m = n, m
        sc, ls = cost_scale(instance), load_scale(instance)
        self.sc, self.ls = sc, ls
        # integer rounding of the bound is only sound when costs and rates are both exact
        self.exact = sc.exact and ls.exact
        num = int if sc.exact else float
        self.C = [[num(v) for v in row] for row in sc.assign.tolist()]
        self.F = [num(v) for v in sc.opening.tolist()]
        lnum = int if ls.exact else float
        self.lam = [lnum(v) for v in ls.lam.tolist()]
        self.cap = [lnum(v) for v in ls.cap.tolist()]
        if not ls.exact:
            self.cap = [c * (1 + FLOAT_TOL) + FLOAT_TOL for c in self.cap]
        self.T = instance.T

        self.order = sorted(range(n), key=lambda i: (-self.lam[i], i))
        lam, cap, C = self.lam, self.cap, self.C
        self.allowed: List[List[int]] = []
        self.a: List[float] = []
        self.home: List[int] = []
        self.regret: List[float] = []
        for i in range(n):
            opts = sorted((j for j in range(m) if lam[i] <= cap[j]), key=lambda j: (C[i][j], j))
            self.allowed.append(opts)
            if not opts:
                self.a.append(INF)
                self.home.append(-1)
                self.regret.append(INF)
                continue
            best = C[i][opts[0]]
            self.a.append(best)
            if len(opts) > 1 and C[i][opts[1]] == best:
                self.home.append(-1)
                self.regret.append(0)
            else:
                self.home.append(opts[0])
                self.regret.append(C[i][opts[1]] - best if len(opts) > 1 else INF)

        # granularity of extra cost over the cheapest option
        self.grain = 0
        if self.exact:
            for i in range(n):
                for j in self.allowed[i]:
                    self.grain = math.gcd(self.grain, C[i][j] - self.a[i])
                    if self.grain == 1:
                        break
                if self.grain == 1:
                    break
        self.grain = self.grain or 1

        # suffix aggregates over the decision order
        self.suf_a = [0] * (n + 1)
        self.suf_lam = [0] * (n + 1)
        self.suf_bad = [0] * (n + 1)
        for k in range(n - 1, -1, -1):
            i = self.order[k]
            self.suf_a[k] = self.suf_a[k + 1] + (0 if self.a[i] == INF else self.a[i])
            self.suf_lam[k] = self.suf_lam[k + 1] + lam[i]
            self.suf_bad[k] = self.suf_bad[k + 1] + (self.a[i] == INF)

        # per-edge undecided home sets; cover lists hold removable devices by regret per unit rate
        self.home_lam = [0] * m
        self.home_regret = [0] * m
        self.home_count = [0] * m
        self.cov_keys: List[list] = [[] for _ in range(m)]
        self.cov_dev: List[list] = [[] for _ in range(m)]
        self.key = [None] * n
        for i in range(n):
            h = self.home[i]
            if h < 0:
                continue
            self.home_lam[h] += lam[i]
            self.home_regret[h] += self.regret[i]
            self.home_count[h] += 1
            if self.regret[i] != INF and lam[i] > 0:
                r = Fraction(self.regret[i]) / Fraction(lam[i]) if self.exact else self.regret[i] / lam[i]
                self.key[i] = (r, -lam[i], i)
        for i in sorted((i for i in range(n) if self.key[i] is not None), key=lambda i: self.key[i]):
            h = self.home[i]
            self.cov_keys[h].append(self.key[i])
            self.cov_dev[h].append(i)

        self.load = [0] * m
        self.count = [0] * m
        self.fixed = 0
        self.assigned = 0
        # residual capacity of placed edges and capacity of unplaced ones; unbounded edges counted apart
        self.unbounded = [c == INF or c >= UNBOUNDED for c in self.cap]
        self.open_residual = 0
        self.open_unbounded = 0
        self.closed_cap = sum(c for c, u in zip(self.cap, self.unbounded) if not u)
        self.closed_unbounded = sum(self.unbounded)
        self.by_opening = sorted(range(m), key=lambda j: (self.F[j], j))
        self.term = [self._term(j) for j in range(m)]
        self.term_sum = sum(self.term)
        self.assignment: List[int] = [UNASSIGNED] * n
        self.nodes = 0

    # -- bound ---------------------------------------------------------------

    def _cover(self, j: int) -> float:
        excess = self.load[j] + self.home_lam[j] - self.cap[j]
        if excess <= 0:
            return 0
        lam, regret = self.lam, self.regret
        total = 0
        for i in self.cov_dev[j]:
            li = lam[i]
            if li >= excess:
                if self.exact:
                    # ceil(total + regret*excess/li) rounded up to the grain
                    num = total * li + regret[i] * excess
                    g = self.grain * li
                    return -(-num // g) * self.grain
                return total + regret[i] * excess / li
            total += regret[i]
            excess -= li
        return INF

    def _term(self, j: int) -> float:
        if self.count[j]:
            return self._cover(j) if self.home_lam[j] else 0
        if not self.home_count[j]:
            return 0
        return min(self.F[j] + self._cover(j), self.home_regret[j])

    def bound(self, k: int) -> float:
        """Lower bound for the node whose first ``k`` devices are decided."""
        remaining = self.n - k
        need = self.T - self.assigned
        if need <= 0:
            return self.fixed
        if need > remaining:
            return INF
        if need == remaining:
            if self.suf_bad[k]:
                return INF
            req_lam = self.suf_lam[k]
            if not (self.open_unbounded or self.closed_unbounded) and req_lam > self.open_residual + self.closed_cap:
                return INF
            lb = self.fixed + self.suf_a[k] + self.term_sum
        else:
            undecided = [self.order[q] for q in range(k, self.n)]
            cheapest = heapq.nsmallest(need, (self.a[i] for i in undecided))
            if cheapest[-1] == INF:
                return INF
            lb = self.fixed + sum(cheapest)
            req_lam = sum(heapq.nsmallest(need, (self.lam[i] for i in undecided if self.a[i] != INF)))
        if not self.open_unbounded and req_lam > self.open_residual:
            cheapest_closed = next((self.F[j] for j in self.by_opening if not self.count[j]), None)
            if cheapest_closed is None:
                return INF
            lb = max(lb, self.fixed + self.suf_a_min(k, need) + cheapest_closed)
        return lb

    def suf_a_min(self, k: int, need: int) -> float:
        if need == self.n - k:
            return self.suf_a[k]
        return sum(heapq.nsmallest(need, (self.a[self.order[q]] for q in range(k, self.n))))

    # -- state transitions -----------------------------------------------------

    def _move_capacity(self, j: int, sign: int) -> None:
        """Edge j gains (sign=1) or loses (sign=-1) its aggregator."""
        if self.unbounded[j]:
            self.open_unbounded += sign
            self.closed_unbounded -= sign
        else:
            self.open_residual += sign * self.cap[j]
            self.closed_cap -= sign * self.cap[j]

    def apply(self, i: int, j: int):
        h = self.home[i]
        touched = []
        idx = None
        if h >= 0:
            self.home_lam[h] -= self.lam[i]
            self.home_regret[h] -= self.regret[i]
            self.home_count[h] -= 1
            if self.key[i] is not None:
                idx = bisect_left(self.cov_keys[h], self.key[i])
                del self.cov_keys[h][idx]
                del self.cov_dev[h][idx]
            touched.append(h)
        if j >= 0:
            if self.count[j] == 0:
                self.fixed += self.F[j]
                self._move_capacity(j, 1)
            self.fixed += self.C[i][j]
            self.count[j] += 1
            self.load[j] += self.lam[i]
            if not self.unbounded[j]:
                self.open_residual -= self.lam[i]
            self.assigned += 1
            if j != h:
                touched.append(j)
        self.assignment[i] = j
        old = [(t, self.term[t]) for t in touched]
        for t in touched:
            new = self._term(t)
            self.term_sum += new - self.term[t]
            self.term[t] = new
        return idx, old

    def undo(self, i: int, j: int, token) -> None:
        idx, old = token
        for t, val in old:
            self.term_sum += val - self.term[t]
            self.term[t] = val
        if j >= 0:
            self.assigned -= 1
            if not self.unbounded[j]:
                self.open_residual += self.lam[i]
            self.load[j] -= self.lam[i]
            self.count[j] -= 1
            self.fixed -= self.C[i][j]
            if self.count[j] == 0:
                self.fixed -= self.F[j]
                self._move_capacity(j, -1)
        h = self.home[i]
        if h >= 0:
            self.home_lam[h] += self.lam[i]
            self.home_regret[h] += self.regret[i]
            self.home_count[h] += 1
            if idx is not None:
                self.cov_keys[h].insert(idx, self.key[i])
                self.cov_dev[h].insert(idx, i)
        self.assignment[i] = UNASSIGNED

    # -- search ------------------------------------------------------------------

    def children(self, k: int):
        i = self.order[k]
        remaining = self.n - k
        need = self.T - self.assigned
        out = []
        if need <= remaining - 1:
            token = self.apply(i, UNASSIGNED)
            out.append((self.bound(k + 1), UNASSIGNED))
            self.undo(i, UNASSIGNED, token)
        lam_i = self.lam[i]
        for j in self.allowed[i]:
            if self.load[j] + lam_i > self.cap[j]:
                continue
            token = self.apply(i, j)
            out.append((self.bound(k + 1), j))
            self.undo(i, j, token)
        out.sort()
        return out

    def _prunes(self, lb, best) -> bool:
        if lb == INF:
            return True
        if best is None:
            return False
        if self.exact:
            return lb >= best
        return lb >= best - FLOAT_TOL * max(1.0, abs(best))

    def run(self) -> Solution:
        t0 = time.perf_counter()
        n = self.n
        best_val = None
        best_assign = None
        timed_out = False
        root_lb = self.bound(0)
        # stack frames: [k, children, next index]
        stack = []
        if root_lb != INF:
            if self.T - self.assigned <= 0 or n == 0:
                best_val, best_assign = self.fixed, list(self.assignment)
            else:
                stack.append([0, self.children(0), 0])
        path: List[tuple] = []  # (device, choice, token) per applied decision
        while stack:
            frame = stack[-1]
            k, kids, nxt = frame
            if len(path) > k:
                i, j, token = path.pop()
                self.undo(i, j, token)
            if nxt >= len(kids) or self._prunes(kids[nxt][0], best_val):
                stack.pop()
                continue
            if self.deadline is not None and self.nodes % _CLOCK_EVERY == 0 and time.perf_counter() > self.deadline:
                timed_out = True
                break
            lb, j = kids[nxt]
            frame[2] = nxt + 1
            i = self.order[k]
            token = self.apply(i, j)
            path.append((i, j, token))
            self.nodes += 1
            if k + 1 == n or self.T - self.assigned <= 0:
                if best_val is None or (self.fixed < best_val if self.exact else self.fixed < best_val - FLOAT_TOL):
                    best_val, best_assign = self.fixed, list(self.assignment)
                continue
            stack.append([k + 1, self.children(k + 1), 0])
        elapsed = (time.perf_counter() - t0) * 1000
        if timed_out:
            open_lbs = [f[1][f[2]][0] for f in stack if f[2] < len(f[1])]
            frontier = min(open_lbs) if open_lbs else INF
            if best_assign is None:
                # no leaf reached yet: fall back to the heuristic for an incumbent
                warm = solve_greedy(self.instance)
                elapsed = (time.perf_counter() - t0) * 1000
                if not warm.feasible:
                    return Solution((None,) * n, None, self.kind, UNKNOWN, INF, elapsed, self.nodes)
                lb = self.sc.to_float(frontier) if frontier != INF else warm.objective
                gap = max(0.0, warm.objective - lb)
                return Solution(warm.assignment, warm.objective, self.kind, FEASIBLE if gap > 0 else OPTIMAL,
                                gap, elapsed, self.nodes)
            gap = max(0.0, self.sc.to_float(best_val) - (self.sc.to_float(frontier) if frontier != INF else self.sc.to_float(best_val)))
            status = FEASIBLE if gap > 0 else OPTIMAL
            return self._solution(best_assign, best_val, status, gap, elapsed)
        if best_assign is None:
            return Solution.infeasible(n, self.kind, elapsed_ms=elapsed, nodes_explored=self.nodes)
        return self._solution(best_assign, best_val, OPTIMAL, 0.0, elapsed)

    def _solution(self, assign, value, status, gap, elapsed) -> Solution:
        assignment = tuple(None if j == UNASSIGNED else j for j in assign)
        return Solution(assignment, self.sc.to_float(value), self.kind, status, gap, elapsed, self.nodes)


def solve_exact(instance: HflopInstance, time_limit: Optional[float] = None) -> Solution:
    """Optimal assignment by branch-and-bound.

    ``time_limit`` is in seconds. When it expires the best incumbent is
    returned with status ``feasible`` and ``gap`` bounding its distance from
    the optimum. If the search has not reached a leaf by then, the greedy
    heuristic supplies the incumbent; status ``unknown`` means neither found one.
    """
    return _Search(instance, time_limit, "exact").run()


def solve_uncapacitated(instance: HflopInstance, time_limit: Optional[float] = None) -> Solution:
    """Exact optimum with every edge capacity set to infinity."""
    return _Search(instance.uncapacitated(), time_limit, "uncapacitated").run()
