import io
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from hflop.scenarios import bundled_sensor_points, clustered_scenario
from hflop.solver import (
    INFEASIBLE,
    OPTIMAL,
    Solution,
    SolverLimitError,
    check_feasible,
    load_solution,
    objective,
    save_solution,
    solve_brute_force,
    solve_exact,
    solve_greedy,
    solve_uncapacitated,
)
from hflop.topology import generate_uniform

from conftest import make_instance, small_instances


def naive_optimum(inst):
    """Plain enumeration with exact fractions, independent of the vectorized oracle."""
    n, m = inst.n, inst.m
    C = [[Fraction(repr(float(c))) for c in row] for row in inst.topology.cost_matrix]
    F = [Fraction(repr(float(c))) for c in inst.topology.cloud_costs]
    lam = [Fraction(repr(float(x))) for x in inst.topology.lambdas]
    cap = [None if math.isinf(r) else Fraction(repr(float(r))) for r in inst.topology.capacities]
    best = None
    for codes in itertools.product(range(m + 1), repeat=n):
        if sum(c > 0 for c in codes) < inst.T:
            continue
        load = [Fraction(0)] * m
        for i, c in enumerate(codes):
            if c:
                load[c - 1] += lam[i]
        if any(cap[j] is not None and load[j] > cap[j] for j in range(m)):
            continue
        val = sum(C[i][c - 1] * inst.l for i, c in enumerate(codes) if c)
        val += sum(F[j] for j in {c - 1 for c in codes if c})
        if best is None or val < best[0]:
            best = (val, codes)
    return best


# -- objective and feasibility checks ----------------------------------------

def test_objective_empty():
    inst = make_instance([[1.0], [2.0]], [3.0], [1, 1], [5], T=0)
    assert objective(inst, [None, None]) == 0


def test_objective_single_zero_cost():
    inst = make_instance([[0.0]], [1.0], [1], [2], l=2)
    assert objective(inst, [0]) == 1


def test_objective_hand_example():
    inst = make_instance([[1, 2], [0, 1], [3, 0]], [5, 7], [1, 1, 1], [10, 10], l=2)
    assert objective(inst, [0, 0, 1]) == 14


def test_objective_dimension_mismatch():
    inst = make_instance([[0.0]], [1.0], [1], [2])
    with pytest.raises(ValueError):
        objective(inst, [0, 0])


def test_feasible_fixture_has_no_violations():
    inst = make_instance([[0, 1], [1, 0]], [1, 1], [1, 1], [2, 2])
    assert check_feasible(inst, [0, 1]) == []


def test_capacity_violation():
    inst = make_instance([[0], [0]], [1], [1, 1], [1])
    (v,) = check_feasible(inst, [0, 0])
    assert (v.kind, v.subject, v.measured, v.bound) == ("capacity", 0, 2, 1)


def test_participation_violation():
    inst = make_instance([[0], [0], [0]], [1], [1, 1, 1], [10], T=3)
    (v,) = check_feasible(inst, [0, 0, None])
    assert v.kind == "participation" and (v.measured, v.bound) == (2, 3)


def test_linking_violations_with_explicit_placements():
    inst = make_instance([[0, 0]], [1, 1], [1], [5, 5])
    kinds = sorted(v.kind for v in check_feasible(inst, [0], placements=[False, True]))
    assert kinds == ["orphan_aggregator", "placement_consistency"]


# -- brute force ---------------------------------------------------------------

def test_brute_single():
    inst = make_instance([[0.0]], [1.0], [1], [2], l=2)
    sol = solve_brute_force(inst)
    assert sol.assignment == (0,) and sol.objective == 1 and sol.solver_kind == "brute_force"


def test_brute_infeasible():
    inst = make_instance([[0.0], [0.0]], [1.0], [1, 1], [1], T=2)
    sol = solve_brute_force(inst)
    assert sol.status == INFEASIBLE and sol.objective is None and not sol.feasible


def test_brute_tie_break():
    # costs 2 for (0,0), (0,1) and (1,1); lexicographic order picks (0,0)
    inst = make_instance([[0, 1], [1, 0]], [1, 1], [1, 1], [2, 2], l=1)
    assert naive_optimum(inst) == (2, (1, 1))
    sol = solve_brute_force(inst)
    assert sol.objective == 2 and sol.assignment == (0, 0)


def test_brute_size_limit():
    with pytest.raises(SolverLimitError):
        solve_brute_force(generate_uniform(11, 2, 0))


@given(small_instances(max_n=5, max_m=3))
def test_brute_matches_naive_enumeration(inst):
    sol = solve_brute_force(inst)
    ref = naive_optimum(inst)
    if ref is None:
        assert sol.status == INFEASIBLE
    else:
        assert Fraction(repr(sol.objective)) == ref[0]
        assert sol.assignment == tuple(None if c == 0 else c - 1 for c in ref[1])


# -- exact, uncapacitated, greedy ----------------------------------------------

def test_exact_all_zero_cost_on_one_edge():
    # every device is free on edge 1, which has room for all of them
    inst = make_instance([[1, 0, 1]] * 4, [1, 1, 1], [1] * 4, [10, 10, 10], l=2)
    sol = solve_exact(inst)
    assert sol.objective == 1 and sol.assignment == (1, 1, 1, 1)


def test_exact_distinct_home_edges():
    # two home edges with room; one unit-cost move never beats opening both
    inst = make_instance([[0, 1], [0, 1], [1, 0]], [1, 1], [1, 1, 1], [10, 10], l=2)
    assert solve_exact(inst).objective == 2


def test_exact_capacity_forces_unit_cost():
    inst = make_instance([[0, 1], [0, 1], [1, 0]], [1, 1], [2, 2, 1], [2, 10], l=2)
    sol = solve_exact(inst)
    assert sol.objective == 2 + 2 * 1
    assert check_feasible(inst, sol) == []


def test_uncapacitated_clustered_scenario():
    _, pts = bundled_sensor_points()
    scen = clustered_scenario(pts, seed=0)
    sol = solve_uncapacitated(scen.instance)
    assert sol.objective == 4
    assert sol.assignment == scen.cluster_of_device
    assert sol.solver_kind == "uncapacitated"


def test_uncapacitated_t_zero_empty():
    inst = make_instance([[1, 2], [3, 1]], [1, 1], [1, 1], [0, 0], T=0)
    sol = solve_uncapacitated(inst)
    assert sol.objective == 0 and sol.assignment == (None, None)


def test_exact_reports_infeasible():
    inst = make_instance([[0.0], [0.0]], [1.0], [1, 1], [1], T=2)
    assert solve_exact(inst).status == INFEASIBLE


def test_greedy_single_edge_is_optimal():
    inst = make_instance([[1], [2], [0]], [3], [1, 2, 3], [100], l=2)
    g, e = solve_greedy(inst), solve_exact(inst)
    assert g.objective == e.objective == 9


@pytest.mark.slow
def test_greedy_gap_diagnostic():
    gaps, missed = [], 0
    for seed in range(200):
        inst = generate_uniform(8, 3, seed, (1, 10), (8, 25))
        e, g = solve_exact(inst), solve_greedy(inst)
        if g.feasible:
            assert e.feasible and g.objective >= e.objective
            gaps.append(g.objective - e.objective)
        elif e.feasible:
            missed += 1  # the heuristic may fail to find a packing that exists
    gaps.sort()
    print(f"greedy gap over {len(gaps)} instances: median {gaps[len(gaps) // 2]}, max {gaps[-1]}; "
          f"{missed} feasible instances missed")


def test_time_limit_returns_incumbent_with_gap():
    inst = generate_uniform(3000, 40, 1, capacity_range=(300, 700))
    sol = solve_exact(inst, time_limit=0.001)
    assert sol.status in ("feasible", "optimal")
    assert sol.objective is not None and sol.gap >= 0
    assert check_feasible(inst, sol) == []


# -- documents -----------------------------------------------------------------

def test_solution_document_round_trip():
    inst = make_instance([[0, 1], [1, 0], [1, 1]], [1, 2], [1, 1, 1], [5, 5], T=2)
    sol = solve_exact(inst)
    buf = io.StringIO()
    save_solution(sol, inst, buf)
    text = buf.getvalue()
    for key in ("assignment", "placements", "objective", "solver_kind", "proven_optimal", "gap",
                "elapsed_ms", "nodes_explored"):
        assert f'"{key}"' in text
    back = load_solution(io.StringIO(text), inst)
    assert back == sol
    assert back.status == OPTIMAL


def test_solution_document_rejects_unknown_edge():
    inst = make_instance([[0.0]], [1.0], [1], [2])
    doc = '{"assignment": [{"device": 0, "edge": 9}]}'
    with pytest.raises(ValueError, match="assignment"):
        load_solution(io.StringIO(doc), inst)
