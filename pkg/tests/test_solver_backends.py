import pytest

from solver_backends import (
    FEASIBLE, INFEASIBLE, IntegerProblem, available_backends, solve_problem,
)


def _sum_problem(total):
    problem = IntegerProblem("sum")
    x = problem.add_var("x", 0, 2)
    y = problem.add_var("y", 0, 2)
    problem.add_constraint({x: 1, y: 1}, "==", total)
    return problem


@pytest.mark.parametrize("backend", available_backends())
def test_backends_agree(backend):
    status, values, stats = solve_problem(_sum_problem(3), backend)
    assert status == FEASIBLE
    assert values["x"] + values["y"] == 3
    assert solve_problem(_sum_problem(5), backend)[0] == INFEASIBLE


@pytest.mark.parametrize("backend", available_backends())
def test_objective_is_minimized(backend):
    problem = _sum_problem(3)
    problem.minimize({"x": 1})
    status, values, _ = solve_problem(problem, backend)
    assert status == FEASIBLE
    assert values == {"x": 1, "y": 2}


def test_bounds_shortcut():
    status, _, stats = solve_problem(_sum_problem(7))
    assert status == INFEASIBLE
    assert stats["backend"] == "bounds"
    empty = IntegerProblem()
    assert solve_problem(empty)[0] == FEASIBLE


def test_problem_validation():
    problem = IntegerProblem()
    with pytest.raises(ValueError):
        problem.add_var("x", 3, 1)
    with pytest.raises(KeyError):
        problem.add_constraint({"z": 1}, "<=", 0)
    problem.add_var("x", 0, 1)
    with pytest.raises(ValueError):
        problem.add_constraint({"x": 1}, "<", 0)
    with pytest.raises(ValueError):
        solve_problem(_sum_problem(3), "GUROBI")
