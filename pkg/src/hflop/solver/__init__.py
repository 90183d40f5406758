from .brute import solve_brute_force
from .cflp import CflpInstance, reduce_from_cflp, solve_cflp_brute_force
from .exact import solve_exact, solve_uncapacitated
from .greedy import solve_greedy
from .model import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    UNKNOWN,
    Solution,
    SolverLimitError,
    Violation,
    check_feasible,
    load_solution,
    objective,
    save_solution,
    solution_from_dict,
    solution_to_dict,
)

SOLVERS = {
    "exact": solve_exact,
    "greedy": solve_greedy,
    "uncap": solve_uncapacitated,
    "brute": solve_brute_force,
}
