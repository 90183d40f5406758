"""Exhaustive enumeration of device-to-edge mappings (verification oracle)."""

from __future__ import annotations

import itertools
import time

import numpy as np

from ..topology import HflopInstance
from .model import FLOAT_TOL, Solution, SolverLimitError, cost_scale, load_scale

MAX_N = 10
MAX_M = 4
_CHUNK = 1 << 16


def solve_brute_force(instance: HflopInstance, max_n: int = MAX_N, max_m: int = MAX_M) -> Solution:
    """Minimum-cost feasible mapping over all ``(m+1)**n`` candidates.

    Code 0 means unassigned and code ``j+1`` means edge ``j``; candidates are
    visited in lexicographic order of codes, so the first minimum found is the
    lexicographically smallest one.
    """
    n, m = instance.n, instance.m
    if n > max_n or m > max_m:
        raise SolverLimitError(f"brute force limited to n<={max_n}, m<={max_m}; got n={n}, m={m}")
    t0 = time.perf_counter()
    sc = cost_scale(instance)
    ls = load_scale(instance)

    # column 0 is the "unassigned" option
    cost = np.zeros((n, m + 1), dtype=sc.assign.dtype)
    cost[:, 1:] = sc.assign
    dtype = np.int64 if ls.exact else float

    best_val = None
    best_codes = None
    total = (m + 1) ** n
    rows = itertools.product(range(m + 1), repeat=n)
    seen = 0
    while seen < total:
        chunk = np.array(list(itertools.islice(rows, _CHUNK)), dtype=np.int64).reshape(-1, n)
        seen += len(chunk)
        onehot = chunk[:, :, None] == np.arange(1, m + 1)[None, None, :]  # k x n x m
        counts = onehot.sum(axis=1)
        loads = np.einsum("knm,n->km", onehot.astype(dtype), ls.lam.astype(dtype))
        if ls.exact:
            cap_ok = np.all(loads <= ls.cap[None, :], axis=1)
        else:
            cap_ok = np.all(loads <= ls.cap[None, :] * (1 + FLOAT_TOL) + FLOAT_TOL, axis=1)
        ok = cap_ok & (counts.sum(axis=1) >= instance.T)
        if not ok.any():
            continue
        vals = cost[np.arange(n)[None, :], chunk].sum(axis=1) + (counts > 0) @ sc.opening
        vals = np.where(ok, vals, np.inf if not sc.exact else np.iinfo(np.int64).max)
        k = int(np.argmin(vals))
        if not ok[k]:
            continue
        v = vals[k]
        better = best_val is None or (v < best_val if sc.exact else v < best_val - FLOAT_TOL)
        if better:
            best_val, best_codes = v, chunk[k].copy()
    elapsed = (time.perf_counter() - t0) * 1000
    if best_codes is None:
        return Solution.infeasible(n, "brute_force", elapsed_ms=elapsed, nodes_explored=total)
    assignment = tuple(None if c == 0 else int(c) - 1 for c in best_codes)
    return Solution(assignment, sc.to_float(best_val), "brute_force", elapsed_ms=elapsed, nodes_explored=total)
