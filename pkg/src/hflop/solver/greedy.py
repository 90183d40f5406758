"""Greedy construction plus local search."""

from __future__ import annotations

import time

import numpy as np

from ..topology import HflopInstance
from .model import FEASIBLE, FLOAT_TOL, Solution, cost_scale, load_scale


def solve_greedy(instance: HflopInstance) -> Solution:
    """Heuristic assignment; never better than the exact optimum.

    Devices are placed in order of descending rate on the feasible edge with
    the smallest marginal cost (opening cost included for an edge without an
    aggregator). Local search then applies single-device moves (to another
    edge, or out of the federation while at least T devices remain) and
    closes aggregators whose devices fit on the other open ones, as long as
    each move strictly lowers the cost.
    """
    t0 = time.perf_counter()
    n, m, T = instance.n, instance.m, instance.T
    sc, ls = cost_scale(instance), load_scale(instance)
    exact = sc.exact and ls.exact
    C, F = sc.assign, sc.opening
    lam = ls.lam
    cap = ls.cap if ls.exact else ls.cap * (1 + FLOAT_TOL) + FLOAT_TOL
    eps = 0 if exact else FLOAT_TOL

    assign = np.full(n, -1, dtype=np.int64)
    load = np.zeros(m, dtype=lam.dtype)
    count = np.zeros(m, dtype=np.int64)
    order = sorted(range(n), key=lambda i: (-lam[i], i))

    def put(i, j):
        assign[i] = j
        load[j] += lam[i]
        count[j] += 1

    def take(i):
        j = assign[i]
        assign[i] = -1
        load[j] -= lam[i]
        count[j] -= 1

    moves = 0
    for i in order:
        ok = load + lam[i] <= cap
        if not ok.any():
            continue
        marginal = np.where(ok, C[i] + np.where(count == 0, F, 0), np.inf)
        put(i, int(np.argmin(marginal)))

    improved = True
    while improved:
        improved = False
        for i in range(n):
            cur = int(assign[i])
            if cur >= 0:
                saving = C[i, cur] + (F[cur] if count[cur] == 1 else 0)
                ok = load + lam[i] <= cap
                ok[cur] = False
            else:
                saving = 0
                ok = load + lam[i] <= cap
            delta = np.where(ok, C[i] + np.where(count == 0, F, 0) - saving, np.inf)
            j = int(np.argmin(delta)) if m else -1
            best = delta[j] if m else np.inf
            if cur >= 0 and int((assign >= 0).sum()) - 1 >= T and -saving < best:
                j, best = -1, -saving
            if best < -eps:
                if cur >= 0:
                    take(i)
                if j >= 0:
                    put(i, j)
                moves += 1
                improved = True
        for e in range(m):
            if count[e] == 0:
                continue
            members = sorted(np.flatnonzero(assign == e).tolist(), key=lambda i: (-lam[i], i))
            trial_load = load.copy()
            targets = []
            delta = -F[e]
            for i in members:
                ok = (count > 0) & (trial_load + lam[i] <= cap)
                ok[e] = False
                if not ok.any():
                    break
                j = int(np.argmin(np.where(ok, C[i], np.inf)))
                trial_load[j] += lam[i]
                delta += C[i, j] - C[i, e]
                targets.append(j)
            else:
                if delta < -eps:
                    for i, j in zip(members, targets):
                        take(i)
                        put(i, j)
                    moves += 1
                    improved = True

    # repair: fill participation with the cheapest remaining feasible devices
    while int((assign >= 0).sum()) < T:
        best_i, best_j, best_cost = -1, -1, np.inf
        for i in np.flatnonzero(assign < 0):
            ok = load + lam[i] <= cap
            if not ok.any():
                continue
            marginal = np.where(ok, C[i] + np.where(count == 0, F, 0), np.inf)
            j = int(np.argmin(marginal))
            if marginal[j] < best_cost:
                best_i, best_j, best_cost = int(i), j, marginal[j]
        if best_i < 0:
            elapsed = (time.perf_counter() - t0) * 1000
            return Solution.infeasible(n, "greedy", elapsed_ms=elapsed, nodes_explored=moves)
        put(best_i, best_j)

    assignment = tuple(None if j < 0 else int(j) for j in assign)
    placed = np.flatnonzero(count > 0)
    total = sum(C[i, j] for i, j in enumerate(assign) if j >= 0) + F[placed].sum()
    elapsed = (time.perf_counter() - t0) * 1000
    return Solution(assignment, sc.to_float(total), "greedy", FEASIBLE, elapsed_ms=elapsed, nodes_explored=moves)
