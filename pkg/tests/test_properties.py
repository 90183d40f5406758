"""Invariant suites. Each records how many cases it actually checked."""

from collections import Counter

import numpy as np
from hypothesis import given, settings, strategies as st

from hflop.routing import FLAT_FL, SimConfig, simulate
from hflop.solver import (
    check_feasible,
    solve_brute_force,
    solve_exact,
    solve_greedy,
    solve_uncapacitated,
)

from conftest import small_instances

CASES = Counter()
N_CASES = 150

sim_configs = st.builds(
    SimConfig,
    seed=st.integers(0, 2**32 - 1),
    duration=st.sampled_from([1.0, 2.5, 4.0]),
    lambda_scale=st.sampled_from([1.0, 4.0, 10.0]),
    busy_fraction=st.sampled_from([0.0, 0.3, 1.0]),
    r2_local_probability=st.sampled_from([0.0, 0.5, 1.0]),
    cloud_speedup=st.sampled_from([0.0, 0.5, 0.9]),
    edge_service_time=st.sampled_from([0.0, 4.0, 50.0]),
)


def _hier(inst):
    sol = solve_exact(inst)
    return sol if sol.feasible else FLAT_FL


@settings(max_examples=N_CASES)
@given(small_instances())
def test_returned_solutions_are_feasible(inst):
    for sol in (solve_exact(inst), solve_greedy(inst), solve_brute_force(inst)):
        if sol.feasible:
            assert check_feasible(inst, sol) == []
            placed = sol.placements(inst.m)
            assert all(placed[j] == any(a == j for a in sol.assignment) for j in range(inst.m))
    unc = solve_uncapacitated(inst)
    assert unc.feasible and check_feasible(inst, unc, capacitated=False) == []
    CASES["feasibility"] += 1


@settings(max_examples=N_CASES)
@given(small_instances())
def test_relaxation_dominance(inst):
    unc, exact, greedy = solve_uncapacitated(inst), solve_exact(inst), solve_greedy(inst)
    if exact.feasible:
        assert unc.objective <= exact.objective
    if greedy.feasible:
        assert exact.feasible and exact.objective <= greedy.objective
    CASES["relaxation"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(), st.data())
def test_capacity_monotonicity(inst, data):
    j = data.draw(st.integers(0, inst.m - 1))
    extra = data.draw(st.sampled_from([0.1, 1.0, 5.0, float("inf")]))
    caps = list(inst.topology.capacities)
    caps[j] = caps[j] + extra
    before, after = solve_exact(inst), solve_exact(inst.with_capacities(caps))
    if before.feasible:
        assert after.feasible and after.objective <= before.objective
    CASES["capacity_monotonicity"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(max_n=5), sim_configs, st.booleans())
def test_conservation(inst, cfg, flat):
    rep = simulate(inst, FLAT_FL if flat else _hier(inst), cfg)
    assert sum(rep.served_counts.values()) == rep.total == len(rep.outcomes)
    assert rep.served_counts["device"] + rep.offload_counts["R1"] + rep.offload_counts["R2"] == rep.total
    assert rep.offload_counts["R3"] <= rep.served_counts["cloud"]
    assert sum(rep.edge_counts.values()) == rep.served_counts["edge"]
    CASES["conservation"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(max_n=5), sim_configs)
def test_r1_busy_devices_never_serve_locally(inst, cfg):
    cfg = SimConfig(**{**cfg.__dict__, "busy_fraction": 1.0})
    sol = _hier(inst)
    rep = simulate(inst, sol, cfg)
    participating = set(range(inst.n)) if sol is FLAT_FL else {i for i, j in enumerate(sol.assignment) if j is not None}
    assert not any(o.served_at == "device" for o in rep.outcomes if o.device in participating)
    CASES["r1"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(max_n=5), sim_configs)
def test_r3_admitted_rate_within_capacity(inst, cfg):
    sol = _hier(inst)
    rep = simulate(inst, sol, cfg)
    caps = inst.topology.capacities
    for j in range(inst.m):
        t = np.array([o.issued_at for o in rep.outcomes if o.served_at == f"edge:{j}"])
        if len(t) == 0:
            continue
        # admitted requests in every trailing window (t - 1 s, t]
        in_window = np.arange(len(t)) - np.searchsorted(t, t - cfg.window, side="right") + 1
        assert in_window.max() <= caps[j] + 1
    CASES["r3"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(max_n=5), sim_configs)
def test_determinism(inst, cfg):
    for solver in (solve_exact, solve_greedy, solve_uncapacitated, solve_brute_force):
        a, b = solver(inst), solver(inst)
        assert (a.assignment, a.objective, a.status) == (b.assignment, b.objective, b.status)
    sol = _hier(inst)
    r1, r2 = simulate(inst, sol, cfg), simulate(inst, sol, cfg)
    assert r1.response_times.tobytes() == r2.response_times.tobytes()
    assert r1.outcomes == r2.outcomes and r1.to_dict() == r2.to_dict()
    CASES["determinism"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(max_n=5), sim_configs, st.booleans())
def test_latency_bounds(inst, cfg, flat):
    rep = simulate(inst, FLAT_FL if flat else _hier(inst), cfg)
    (elo, ehi), (clo, chi) = cfg.edge_latency, cfg.cloud_latency
    eps = 1e-9
    for o in rep.outcomes:
        rt = o.response_time
        assert o.hops[-1] == o.served_at
        if o.served_at == "device":
            assert rt == cfg.device_service_time
        elif o.served_at == "cloud":
            net = rt - cfg.cloud_service_time
            lo = clo + (elo if len(o.hops) == 2 else 0)
            hi = chi + (ehi if len(o.hops) == 2 else 0)
            assert lo - eps <= net <= hi + eps
        else:
            assert elo - eps <= rt - cfg.edge_service_time <= ehi + eps
    CASES["latency_bounds"] += 1


@settings(max_examples=N_CASES)
@given(small_instances(max_n=8, max_m=3))
def test_oracle_equivalence(inst):
    e, b = solve_exact(inst), solve_brute_force(inst)
    assert e.status == b.status
    assert e.objective == b.objective
    CASES["oracle"] += 1


SUITES = {
    "feasibility": test_returned_solutions_are_feasible,
    "relaxation": test_relaxation_dominance,
    "capacity_monotonicity": test_capacity_monotonicity,
    "conservation": test_conservation,
    "r1": test_r1_busy_devices_never_serve_locally,
    "r3": test_r3_admitted_rate_within_capacity,
    "determinism": test_determinism,
    "latency_bounds": test_latency_bounds,
}
