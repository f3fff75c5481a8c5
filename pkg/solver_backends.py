"""
Integer feasibility backends for counting constraints.

Supports multiple solver backends:
- OR-Tools CP-SAT (default, exact integer search)
- PuLP with CBC (open-source MILP)
- PuLP with HiGHS (falls back to CBC when no HiGHS build is found)

Key features:
- Small declarative problem object (bounded integer variables, linear
  constraints, optional objective) shared by every caller
- Unified three-valued answer regardless of backend: feasible,
  infeasible or unknown (timeouts and backend failures)
- Every reported solution is re-checked against the constraints
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

# Conditional imports
try:
    from ortools.sat.python import cp_model
    ORTOOLS_AVAILABLE = True
except ImportError:
    ORTOOLS_AVAILABLE = False

try:
    import pulp as pl
    PULP_AVAILABLE = True
except ImportError:
    PULP_AVAILABLE = False

logger = logging.getLogger(__name__)

BACKENDS = ("OR_TOOLS_CP_SAT", "PULP_CBC_CMD", "HiGHS_CMD")
DEFAULT_SOLVER = "OR_TOOLS_CP_SAT"

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"

SENSES = ("<=", ">=", "==")


class SolverError(RuntimeError):
    """A backend could not decide a problem (timeout or missing backend)."""


@dataclass
class IntegerProblem:
    """Bounded integer variables with linear constraints."""
    name: str = "counting"
    bounds: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    constraints: List[Tuple[Dict[str, int], str, int]] = field(default_factory=list)
    objective: Dict[str, int] = field(default_factory=dict)

    def add_var(self, name: str, lo: int, hi: int) -> str:
        if lo > hi:
            raise ValueError(f"Empty domain for {name}: [{lo}, {hi}]")
        self.bounds[name] = (lo, hi)
        return name

    def add_constraint(self, coeffs: Dict[str, int], sense: str, rhs: int) -> None:
        if sense not in SENSES:
            raise ValueError(f"Unknown sense {sense!r}")
        unknown = [v for v in coeffs if v not in self.bounds]
        if unknown:
            raise KeyError(f"Undeclared variables {unknown}")
        self.constraints.append(({v: c for v, c in coeffs.items() if c}, sense, rhs))

    def minimize(self, coeffs: Dict[str, int]) -> None:
        self.objective = dict(coeffs)

    def check(self, values: Dict[str, int]) -> bool:
        for var, (lo, hi) in self.bounds.items():
            if not lo <= values.get(var, 0) <= hi:
                return False
        for coeffs, sense, rhs in self.constraints:
            lhs = sum(c * values.get(v, 0) for v, c in coeffs.items())
            if sense == "<=" and lhs > rhs or sense == ">=" and lhs < rhs or sense == "==" and lhs != rhs:
                return False
        return True

    def trivially_infeasible(self) -> bool:
        """Constraint whose bound range cannot reach its right-hand side."""
        for coeffs, sense, rhs in self.constraints:
            lo = sum(c * (self.bounds[v][0] if c > 0 else self.bounds[v][1]) for v, c in coeffs.items())
            hi = sum(c * (self.bounds[v][1] if c > 0 else self.bounds[v][0]) for v, c in coeffs.items())
            if sense == "<=" and lo > rhs or sense == ">=" and hi < rhs:
                return True
            if sense == "==" and not lo <= rhs <= hi:
                return True
        return False


def solve_problem(problem: IntegerProblem, solver: str = DEFAULT_SOLVER, time_limit: int = 60,
                  callback: Optional[Callable] = None) -> Tuple[str, Dict[str, int], Dict]:
    """
    Solve an integer problem.

    Returns:
        (status, values, stats) with status one of FEASIBLE, INFEASIBLE, UNKNOWN
    """
    start = time.time()
    if problem.trivially_infeasible():
        return INFEASIBLE, {}, {'backend': 'bounds', 'time': 0.0}
    if not problem.bounds:
        ok = problem.check({})
        return (FEASIBLE if ok else INFEASIBLE), {}, {'backend': 'constant', 'time': 0.0}

    status, values, stats = _solve_with_backend(problem, solver, time_limit, callback)
    if status == FEASIBLE and not problem.check(values):
        logger.warning("Backend %s returned a non-solution for %s", stats.get('backend'), problem.name)
        status = UNKNOWN
        stats['error'] = 'solution failed re-check'
    stats['time'] = time.time() - start
    stats['variables'] = len(problem.bounds)
    stats['constraints'] = len(problem.constraints)
    return status, values, stats


def _solve_with_backend(problem: IntegerProblem, solver: str, time_limit: int,
                        callback: Optional[Callable]) -> Tuple[str, Dict[str, int], Dict]:
    """Dispatch to appropriate solver backend."""
    if solver not in BACKENDS:
        raise ValueError(f"Unknown solver {solver!r}; expected one of {', '.join(BACKENDS)}")

    if solver == "OR_TOOLS_CP_SAT":
        if ORTOOLS_AVAILABLE:
            return _solve_cpsat(problem, time_limit)
        if not PULP_AVAILABLE:
            return UNKNOWN, {}, {'error': 'OR-Tools not installed'}
        _notify(callback, "⚠ OR-Tools not available, falling back to CBC")
        solver = "PULP_CBC_CMD"

    if not PULP_AVAILABLE:
        if ORTOOLS_AVAILABLE:
            _notify(callback, "⚠ PuLP not available, falling back to CP-SAT")
            return _solve_cpsat(problem, time_limit)
        return UNKNOWN, {}, {'error': 'PuLP not installed'}
    return _solve_pulp(problem, solver, time_limit, callback)


def _notify(callback: Optional[Callable], message: str) -> None:
    logger.warning(message)
    if callback:
        callback(message)


def _solve_cpsat(problem: IntegerProblem, time_limit: int) -> Tuple[str, Dict[str, int], Dict]:
    """Solve using OR-Tools CP-SAT."""
    model = cp_model.CpModel()
    X = {name: model.NewIntVar(lo, hi, name) for name, (lo, hi) in problem.bounds.items()}

    for coeffs, sense, rhs in problem.constraints:
        expr = sum(c * X[v] for v, c in coeffs.items())
        if not coeffs:
            continue
        if sense == "<=":
            model.Add(expr <= rhs)
        elif sense == ">=":
            model.Add(expr >= rhs)
        else:
            model.Add(expr == rhs)

    if problem.objective:
        model.Minimize(sum(c * X[v] for v, c in problem.objective.items()))

    solver = cp_model.CpSolver()
    solver.parameters.max_time_in_seconds = time_limit
    solver.parameters.num_workers = 1
    status = solver.Solve(model)

    stats = {'backend': 'OR_TOOLS_CP_SAT', 'raw_status': solver.StatusName(status)}
    if status in (cp_model.OPTIMAL, cp_model.FEASIBLE):
        values = {name: int(solver.Value(var)) for name, var in X.items()}
        stats['optimal'] = status == cp_model.OPTIMAL
        return FEASIBLE, values, stats
    if status == cp_model.INFEASIBLE:
        return INFEASIBLE, {}, stats
    stats['error'] = f'Solver status: {solver.StatusName(status)}'
    return UNKNOWN, {}, stats


def _select_pulp_solver(solver_name: str, time_limit: int, callback: Optional[Callable]):
    """HiGHS (CMD, then API) with a CBC fallback."""
    if solver_name == "HiGHS_CMD":
        try:
            test_solver = pl.HiGHS_CMD(msg=0)
            if test_solver.available():
                return pl.HiGHS_CMD(msg=0, timeLimit=time_limit), "HiGHS_CMD"
        except Exception:
            pass

        try:
            test_solver = pl.HiGHS(msg=0)
            if test_solver.available():
                return pl.HiGHS(msg=0, timeLimit=time_limit), "HiGHS"
        except Exception:
            pass

        _notify(callback, "⚠ HiGHS not available, falling back to CBC")
    return pl.PULP_CBC_CMD(msg=0, timeLimit=time_limit), "PULP_CBC_CMD"


def _solve_pulp(problem: IntegerProblem, solver_name: str, time_limit: int,
                callback: Optional[Callable]) -> Tuple[str, Dict[str, int], Dict]:
    """Solve using PuLP (CBC or HiGHS)."""
    model = pl.LpProblem(problem.name, pl.LpMinimize)
    X = {name: pl.LpVariable(name, lo, hi, cat="Integer") for name, (lo, hi) in problem.bounds.items()}

    model += pl.lpSum(c * X[v] for v, c in problem.objective.items()), "objective"
    for k, (coeffs, sense, rhs) in enumerate(problem.constraints):
        if not coeffs:
            continue
        expr = pl.lpSum(c * X[v] for v, c in coeffs.items())
        if sense == "<=":
            model += expr <= rhs, f"c{k}"
        elif sense == ">=":
            model += expr >= rhs, f"c{k}"
        else:
            model += expr == rhs, f"c{k}"

    solver, used = _select_pulp_solver(solver_name, time_limit, callback)
    status = model.solve(solver)
    stats = {'backend': used, 'raw_status': pl.LpStatus[status]}

    if status == pl.LpStatusOptimal:
        values = {name: int(round(pl.value(var) or 0)) for name, var in X.items()}
        return FEASIBLE, values, stats
    if status == pl.LpStatusInfeasible:
        return INFEASIBLE, {}, stats
    stats['error'] = f'Status: {pl.LpStatus[status]}'
    return UNKNOWN, {}, stats


def available_backends() -> List[str]:
    found = []
    if ORTOOLS_AVAILABLE:
        found.append("OR_TOOLS_CP_SAT")
    if PULP_AVAILABLE:
        found.append("PULP_CBC_CMD")
        try:
            if pl.HiGHS_CMD(msg=0).available() or pl.HiGHS(msg=0).available():
                found.append("HiGHS_CMD")
        except Exception:
            pass
    return found
