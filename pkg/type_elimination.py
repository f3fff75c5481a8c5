"""
Satisfiability and entailment by type elimination.

Key features:
- Hintikka types over a closure, enumerated as int bitsets
- Symbolic engine: greatest fixpoint over BDDs (dd) for the ungraded
  logics, with the nominal worlds and <U> witnesses as global parameters
- Explicit engine: elimination over enumerated types with integer
  counting feasibility (solver_backends) for graded modalities
- Memoizing SatOracle shared by the separator constructions

Internal formulas may use @ and <U> whatever the input logic is, since
case formulas are built with @.
"""

from __future__ import annotations

import itertools
import logging
import threading
from collections import OrderedDict, defaultdict
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

try:
    from dd.autoref import BDD
    DD_AVAILABLE = True
except ImportError:
    DD_AVAILABLE = False

from formulas import (
    AND, AT, ATLEAST, ATMOST, ATOMIC_KINDS, DIA, DIAU, NOM, NOT, PROP, TOP,
    Closure, FormulaId, LogicId, big_and, child, closure_of, conj, kind,
    neg, node, nom, print_formula, subformulas,
)
from solver_backends import DEFAULT_SOLVER, FEASIBLE, INFEASIBLE, IntegerProblem, SolverError, solve_problem

logger = logging.getLogger(__name__)

GRADED_KINDS = (ATLEAST, ATMOST)
DEFAULT_MEMO_SIZE = 50000


# ----------------------------------------------------------------------
# Types
# ----------------------------------------------------------------------

def _evaluation_order(closure: Closure) -> List[FormulaId]:
    """AND members, children before parents."""
    ands = {f for f in closure.members if kind(f) == AND}
    order: List[FormulaId] = []
    seen: Set[FormulaId] = set()
    for f in closure.members:
        for g in subformulas(f):
            if g in ands and g not in seen:
                seen.add(g)
                order.append(g)
    return order


def _graded_intervals_ok(closure: Closure, t: int) -> bool:
    """Per (R, χ): the literals on <R>χ, atleast/atmost n R χ admit some count."""
    bounds: Dict[Tuple[str, FormulaId], List[float]] = {}
    for f in closure.members:
        n = node(f)
        if n.kind not in (DIA, ATLEAST, ATMOST):
            continue
        key = (n.label, n.children[0])
        lo_hi = bounds.setdefault(key, [0, float("inf")])
        positive = closure.holds(t, f)
        grade = 1 if n.kind == DIA else n.grade
        if n.kind in (DIA, ATLEAST):
            if positive:
                lo_hi[0] = max(lo_hi[0], grade)
            else:
                lo_hi[1] = min(lo_hi[1], grade - 1)
        else:
            if positive:
                lo_hi[1] = min(lo_hi[1], grade)
            else:
                lo_hi[0] = max(lo_hi[0], grade + 1)
    return all(lo <= hi for lo, hi in bounds.values())


def is_hintikka(closure: Closure, t: int) -> bool:
    """Local consistency of a polarity assignment."""
    for f in closure.members:
        n = node(f)
        positive = closure.holds(t, f)
        if n.kind == TOP and not positive:
            return False
        if n.kind == AND:
            a, b = n.children
            if positive != (closure.holds(t, a) and closure.holds(t, b)):
                return False
        elif n.kind == AT:
            body = n.children[0]
            if node(body).kind == NOM and node(body).label == n.label and not positive:
                return False
            if closure.holds(t, nom(n.label)) and positive != closure.holds(t, body):
                return False
            inner = node(body)
            if inner.kind in (AT, DIAU) and body in closure and positive != closure.holds(t, body):
                return False
        elif n.kind == DIAU:
            body = n.children[0]
            if node(body).kind == NOM and not positive:
                return False
            if closure.holds(t, body) and not positive:
                return False
            if node(body).kind == AT and positive != closure.holds(t, body):
                return False
    return _graded_intervals_ok(closure, t)


def enumerate_types(closure: Closure, logic: Optional[LogicId] = None) -> List[int]:
    """All Hintikka-consistent types over the closure, in increasing bitset order."""
    atomic = [i for i, f in enumerate(closure.members) if kind(f) in ATOMIC_KINDS]
    top_bits = sum(1 << i for i, f in enumerate(closure.members) if kind(f) == TOP)
    ands = [(closure.index[f], node(f).children) for f in _evaluation_order(closure)]
    types: List[int] = []
    for bits in itertools.product((0, 1), repeat=len(atomic)):
        t = top_bits
        for i, b in zip(atomic, bits):
            if b:
                t |= 1 << i
        for i, (a, b) in ands:
            if closure.holds(t, a) and closure.holds(t, b):
                t |= 1 << i
        if is_hintikka(closure, t):
            types.append(t)
    types.sort()
    logger.debug("%d types over %d members", len(types), len(closure))
    return types


def type_formula(closure: Closure, t: int) -> FormulaId:
    """The conjunction of the atomic literals of t."""
    lits = [f if closure.holds(t, f) else neg(f)
            for f in closure.members if kind(f) in ATOMIC_KINDS]
    return big_and(lits)


# ----------------------------------------------------------------------
# Symbolic engine (ungraded)
# ----------------------------------------------------------------------

class _SymbolicElimination:
    def __init__(self, closure: Closure):
        if not DD_AVAILABLE:
            raise SolverError("dd is not installed; use engine='explicit'")
        self.closure = closure
        self.local = [f for f in closure.members if kind(f) in (PROP, NOM, DIA)]
        self.local_index = {f: j for j, f in enumerate(self.local)}
        self.globals_u = [f for f in closure.members if kind(f) == DIAU]
        self.u_index = {f: k for k, f in enumerate(self.globals_u)}
        self.noms = list(closure.nom0)
        self.bdd = BDD()
        names = []
        for j in range(len(self.local)):
            names += [f"x{j}", f"y{j}"]
        for a_i in range(len(self.noms)):
            names += [f"g{a_i}_{j}" for j in range(len(self.local))]
        names += [f"u{k}" for k in range(len(self.globals_u))]
        if names:
            self.bdd.declare(*names)
        self._cache: Dict[Tuple[FormulaId, str], object] = {}

    def var(self, loc: str, j: int):
        return self.bdd.var(f"{loc}{j}" if loc in ("x", "y") else f"{loc}_{j}")

    def eval(self, f: FormulaId, loc: str):
        key = (f, loc)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n = node(f)
        if n.kind == TOP:
            r = self.bdd.true
        elif n.kind in (PROP, NOM, DIA):
            r = self.var(loc, self.local_index[f])
        elif n.kind == NOT:
            r = ~self.eval(n.children[0], loc)
        elif n.kind == AND:
            r = self.eval(n.children[0], loc) & self.eval(n.children[1], loc)
        elif n.kind == AT:
            r = self.eval(n.children[0], f"g{self.noms.index(n.label)}")
        elif n.kind == DIAU:
            r = self.bdd.var(f"u{self.u_index[f]}")
        else:
            raise SolverError(f"graded formula {print_formula(f)} needs the explicit engine")
        self._cache[key] = r
        return r

    def initial(self):
        b = self.bdd
        T = b.true
        for a_i, a in enumerate(self.noms):
            j_a = self.local_index[nom(a)]
            same = b.true
            for j in range(len(self.local)):
                same &= b.apply('<=>', self.var("x", j), self.var(f"g{a_i}", j))
            T &= b.apply('->', self.var("x", j_a), same)
            T &= self.var(f"g{a_i}", j_a)
        for k, f in enumerate(self.globals_u):
            T &= b.apply('->', self.eval(child(f), "x"), b.var(f"u{k}"))
        return T

    def step(self, T):
        b = self.bdd
        xs = [f"x{j}" for j in range(len(self.local))]
        ys = [f"y{j}" for j in range(len(self.local))]
        T_y = b.let(dict(zip(xs, ys)), T)
        coherence: Dict[str, object] = {}
        dias = [f for f in self.local if kind(f) == DIA]
        for f in dias:
            rel = node(f).label
            if rel not in coherence:
                coh = b.true
                for g in dias:
                    if node(g).label == rel:
                        coh &= b.apply('->', self.eval(child(g), "y"), self.var("x", self.local_index[g]))
                coherence[rel] = coh
        D = b.true
        for f in dias:
            succ = b.exist(ys, T_y & self.eval(child(f), "y") & coherence[node(f).label])
            D &= b.apply('->', self.var("x", self.local_index[f]), succ)
        E = b.true
        for a in self.noms:
            E &= b.exist(xs, T & self.var("x", self.local_index[nom(a)]))
        for k, f in enumerate(self.globals_u):
            E &= b.apply('->', b.var(f"u{k}"), b.exist(xs, T & self.eval(child(f), "x")))
        return T & D & E

    def fixpoint(self):
        T = self.initial()
        rounds = 0
        while True:
            rounds += 1
            nxt = self.step(T)
            if nxt == T:
                logger.debug("Symbolic elimination stable after %d rounds", rounds)
                return T
            T = nxt

    def satisfiable(self, f: FormulaId) -> bool:
        T = self.fixpoint()
        return (T & self.eval(f, "x")) != self.bdd.false


# ----------------------------------------------------------------------
# Explicit engine (graded and cross-check)
# ----------------------------------------------------------------------

class _ExplicitElimination:
    def __init__(self, closure: Closure, solver: str = DEFAULT_SOLVER):
        self.closure = closure
        self.solver = solver
        self.types = enumerate_types(closure)
        self.kappa = max((node(f).grade for f in closure.members if kind(f) in GRADED_KINDS), default=0)
        self.global_mask = sum(closure.bit(f) for f in closure.members if kind(f) in (AT, DIAU))
        self.modal = defaultdict(list)
        for f in closure.members:
            if kind(f) in (DIA, ATLEAST, ATMOST):
                self.modal[node(f).label].append(f)
        self._memo: Dict[Tuple[int, str, FrozenSet[int]], bool] = {}
        self.solver_calls = 0

    def is_nominal(self, t: int) -> bool:
        return bool(self.closure.nominal_in(t))

    def coherent(self, rel: str, t: int, s: int) -> bool:
        """No false <R>θ of t is contradicted by s."""
        for f in self.modal[rel]:
            if kind(f) == DIA and not self.closure.holds(t, f) and self.closure.holds(s, child(f)):
                return False
        return True

    def successors_feasible(self, t: int, rel: str, alive: FrozenSet[int]) -> bool:
        key = (t, rel, alive)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        members = self.modal[rel]
        if all(kind(f) == DIA for f in members):
            result = all(
                any(self.closure.holds(s, child(f)) and self.coherent(rel, t, s) for s in alive)
                for f in members if self.closure.holds(t, f)
            )
        else:
            result = self._counting_feasible(t, members, alive)
        self._memo[key] = result
        return result

    def _counting_feasible(self, t: int, members: List[FormulaId], alive: FrozenSet[int]) -> bool:
        cl = self.closure
        problem = IntegerProblem(name="successors")
        X = {}
        for s in sorted(alive):
            X[s] = problem.add_var(f"x_{s}", 0, 1 if self.is_nominal(s) else self.kappa + 1)
        for f in members:
            n = node(f)
            coeffs = {X[s]: 1 for s in alive if cl.holds(s, n.children[0])}
            positive = cl.holds(t, f)
            if n.kind == DIA:
                problem.add_constraint(coeffs, ">=" if positive else "<=", 1 if positive else 0)
            elif n.kind == ATLEAST:
                problem.add_constraint(coeffs, ">=" if positive else "<=", n.grade if positive else n.grade - 1)
            else:
                problem.add_constraint(coeffs, "<=" if positive else ">=", n.grade if positive else n.grade + 1)
        self.solver_calls += 1
        status, _, stats = solve_problem(problem, solver=self.solver)
        if status not in (FEASIBLE, INFEASIBLE):
            raise SolverError(f"counting problem undecided: {stats.get('error')}")
        return status == FEASIBLE

    def eliminate(self, alive: Set[int]) -> Set[int]:
        alive = set(alive)
        changed = True
        while changed:
            changed = False
            frozen = frozenset(alive)
            for t in sorted(alive):
                if not all(self.successors_feasible(t, rel, frozen) for rel in self.modal):
                    alive.discard(t)
                    changed = True
        return alive

    def consistent_with_profile(self, t: int, profile: int) -> bool:
        """A nominal type agrees with the profile on every @a member."""
        cl = self.closure
        for a in cl.nominal_in(t):
            for f in cl.members:
                n = node(f)
                if n.kind == AT and n.label == a and bool(profile & cl.bit(f)) != cl.holds(t, n.children[0]):
                    return False
        return True

    def survivors(self) -> List[Set[int]]:
        """Every surviving type set, one per global profile and nominal choice."""
        cl = self.closure
        groups: Dict[int, List[int]] = defaultdict(list)
        for t in self.types:
            groups[t & self.global_mask].append(t)
        results = []
        for profile, members in sorted(groups.items()):
            members = [t for t in members if self.consistent_with_profile(t, profile)]
            over = self.eliminate(set(members))
            candidates = [[t for t in sorted(over) if cl.holds(t, nom(a))] for a in cl.nom0]
            if any(not c for c in candidates):
                continue
            for choice in itertools.product(*candidates):
                named = dict(zip(cl.nom0, choice))
                if any(named[b] != t for t in choice for b in cl.nominal_in(t)):
                    continue
                start = {t for t in over if all(named[a] == t for a in cl.nominal_in(t))}
                alive = self.eliminate(start)
                if not set(choice) <= alive:
                    continue
                if not self._u_witnessed(profile, alive):
                    continue
                results.append(alive)
        return results

    def _u_witnessed(self, profile: int, alive: Set[int]) -> bool:
        cl = self.closure
        for f in cl.members:
            if kind(f) == DIAU and profile & cl.bit(f):
                if not any(cl.holds(t, child(f)) for t in alive):
                    return False
        return True

    def satisfiable(self, f: FormulaId) -> bool:
        return any(self.closure.holds(t, f) for alive in self.survivors() for t in alive)


# ----------------------------------------------------------------------
# Public API
# ----------------------------------------------------------------------

def is_graded(f: FormulaId) -> bool:
    return any(kind(g) in GRADED_KINDS for g in subformulas(f))


def _decide(f: FormulaId, engine: str, solver: str) -> bool:
    closure = closure_of([f])
    if engine == "auto":
        engine = "explicit" if is_graded(f) or not DD_AVAILABLE else "bdd"
    if engine == "bdd":
        return _SymbolicElimination(closure).satisfiable(f)
    if engine == "explicit":
        return _ExplicitElimination(closure, solver).satisfiable(f)
    raise ValueError(f"Unknown engine {engine!r}")


class SatOracle:
    """Memoizing satisfiability front end; the memo is an LRU of `memo_size` verdicts."""

    def __init__(self, engine: str = "auto", solver: str = DEFAULT_SOLVER, memo_size: int = DEFAULT_MEMO_SIZE):
        if memo_size < 1:
            raise ValueError("memo_size must be positive")
        self.engine = engine
        self.solver = solver
        self.memo_size = memo_size
        self._memo: "OrderedDict[FormulaId, bool]" = OrderedDict()
        self._lock = threading.Lock()
        self.calls = 0
        self.hits = 0
        self.evictions = 0

    def satisfiable(self, f: FormulaId) -> bool:
        with self._lock:
            self.calls += 1
            hit = self._memo.get(f)
            if hit is not None:
                self._memo.move_to_end(f)
                self.hits += 1
                return hit
        result = _decide(f, self.engine, self.solver)
        with self._lock:
            if len(self._memo) >= self.memo_size:
                self._memo.popitem(last=False)
                self.evictions += 1
            self._memo[f] = result
        return result

    def entails(self, f: FormulaId, g: FormulaId) -> bool:
        return not self.satisfiable(conj(f, neg(g)))

    def equivalent(self, f: FormulaId, g: FormulaId) -> bool:
        return self.entails(f, g) and self.entails(g, f)

    def stats(self) -> Dict[str, int]:
        return {'calls': self.calls, 'hits': self.hits, 'distinct': len(self._memo),
                'evictions': self.evictions}


DEFAULT_ORACLE = SatOracle()


def _check_logic(f: FormulaId, logic: Optional[LogicId]) -> None:
    if logic is not None and not logic.admits([f]):
        raise ValueError(f"{print_formula(f)} uses connectives outside {logic}")


def satisfiable(f: FormulaId, logic: Optional[LogicId] = None, engine: str = "auto",
                solver: str = DEFAULT_SOLVER) -> bool:
    """
    Decide satisfiability of f.

    With `logic`, f must stay inside it (ValueError otherwise); the verdict
    itself does not depend on the logic.
    """
    _check_logic(f, logic)
    if engine == "auto" and solver == DEFAULT_SOLVER:
        return DEFAULT_ORACLE.satisfiable(f)
    return _decide(f, engine, solver)


def entails(f: FormulaId, g: FormulaId, logic: Optional[LogicId] = None, engine: str = "auto",
            solver: str = DEFAULT_SOLVER) -> bool:
    _check_logic(f, logic)
    _check_logic(g, logic)
    return not satisfiable(conj(f, neg(g)), None, engine, solver)


def surviving_type_sets(f: FormulaId, solver: str = DEFAULT_SOLVER) -> Tuple[Closure, List[Set[int]]]:
    """Closure of f and the explicit engine's surviving type sets (for audits)."""
    closure = closure_of([f])
    return closure, _ExplicitElimination(closure, solver).survivors()
