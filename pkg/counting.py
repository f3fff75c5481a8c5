"""
Counting functions for graded hypermosaics.

An R-counting function F(t, i, m', s) says how many copies of type s from
side i of mosaic m' a point of type t in m_i has as R-successors. Witness
checks for the graded logics reduce to the existence of such a function:

- strong mode: column sums per m' agree exactly across every type of m
- weak mode: column sums agree up to the threshold λ (x =λ y iff both are
  at most λ and equal, or both exceed λ)

Existence is decided as an integer problem (solver_backends) over the
finite codomains {0..λ·|Type|} (strong) and {0..λ} (weak); the same model,
extended with one 0/1 variable per candidate mosaic, selects minimal
witness pools for the graded hypermosaic search.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from formulas import ATLEAST, ATMOST, DIA, FormulaId, atleast, atmost, big_and, conj, kind, node
from mosaics import Mosaic, TypeSpace, canonical, extends, ungraded_witness
from solver_backends import DEFAULT_SOLVER, FEASIBLE, INFEASIBLE, IntegerProblem, SolverError, solve_problem

logger = logging.getLogger(__name__)

INF = math.inf
STRONG = "strong"
WEAK = "weak"

CountKey = Tuple[int, int, Mosaic, int]


@dataclass(frozen=True)
class Lambda:
    """κ (largest grade, at least 1 once a modality occurs) and λ = κ·|Type|."""
    kappa: int
    types: int

    @property
    def value(self) -> int:
        return self.kappa * self.types

    @classmethod
    def of_space(cls, space: TypeSpace) -> "Lambda":
        return cls(space.kappa, len(space.types))


def lambda_equal(x: float, y: float, lam: int) -> bool:
    return (x <= lam and y <= lam and x == y) or (x > lam and y > lam)


@dataclass
class CountingFunction:
    rel: str
    mode: str
    entries: Dict[CountKey, float] = field(default_factory=dict)

    def get(self, t: int, i: int, mp: Mosaic, s: int) -> float:
        return self.entries.get((t, i, mp, s), 0)

    def row_sum(self, t: int, i: int, mp: Mosaic) -> float:
        return sum(self.get(t, i, mp, s) for s in mp.side(i))

    def max_value(self) -> float:
        return max(self.entries.values(), default=0)

    def to_json(self) -> Dict:
        """Sparse form; mosaics as pairs of sorted type lists, ∞ as the string "inf"."""
        return {
            "rel": self.rel,
            "mode": self.mode,
            "entries": [
                [t, i, [list(k) for k in mp.key()], s, "inf" if v == INF else int(v)]
                for (t, i, mp, s), v in sorted(self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1],
                                                                                   kv[0][2].key(), kv[0][3]))
            ],
        }

    @classmethod
    def from_json(cls, data: Dict) -> "CountingFunction":
        entries = {}
        for t, i, (m1, m2), s, v in data["entries"]:
            entries[(t, i, Mosaic.of(m1, m2), s)] = INF if v == "inf" else int(v)
        return cls(data["rel"], data["mode"], entries)


def _members(space: TypeSpace, rel: str) -> List[FormulaId]:
    return [f for f in space.closure.members if kind(f) in (DIA, ATLEAST, ATMOST) and node(f).label == rel]


def _requirement(space: TypeSpace, t: int, f: FormulaId) -> Tuple[str, int]:
    """The (sense, bound) a type imposes on the χ-successor count through member f."""
    n = node(f)
    positive = space.holds(t, f)
    if n.kind == DIA:
        return (">=", 1) if positive else ("<=", 0)
    if n.kind == ATLEAST:
        return (">=", n.grade) if positive else ("<=", n.grade - 1)
    return ("<=", n.grade) if positive else (">=", n.grade + 1)


def check_counting(rel: str, m: Mosaic, Hp: Iterable[Mosaic], F: CountingFunction, space: TypeSpace,
                   mode: str = STRONG) -> Tuple[bool, Optional[str]]:
    """Conditions (i)-(iv) of an R-counting function; returns the first failing one."""
    Hp = set(Hp)
    lam = space.lam
    for (t, i, mp, s), v in F.entries.items():
        if v == 0:
            continue
        if v < 0 or (v != INF and int(v) != v):
            return False, f"(i) entry {v} for {hex(t)} -> {hex(s)} is not a count"
        if t not in m.side(i) or mp not in Hp or s not in mp.side(i):
            return False, f"(i) support outside m and H' at {hex(t)} -> {hex(s)} in {mp.label()}"
        if space.nominals(s) and v > 1:
            return False, f"(ii) nominal type {hex(s)} copied {v} times"

    targets = canonical(Hp)
    for i in (1, 2):
        for t in sorted(m.side(i)):
            for f in _members(space, rel):
                body = node(f).children[0]
                total = sum(F.get(t, i, mp, s) for mp in targets for s in mp.side(i) if space.holds(s, body))
                sense, bound = _requirement(space, t, f)
                if (sense == ">=" and total < bound) or (sense == "<=" and total > bound):
                    return False, f"(iii) {kind(f)} member of {hex(t)} gets {total} successors"

    if rel in space.sigma.rels:
        rows = [(i, t) for i in (1, 2) for t in sorted(m.side(i))]
        for mp in targets:
            sums = [F.row_sum(t, i, mp) for i, t in rows]
            for x in sums[1:]:
                same = x == sums[0] if mode == STRONG else lambda_equal(x, sums[0], lam)
                if not same:
                    return False, f"(iv) column sums {sums} into {mp.label()} differ"
    return True, None


def _build(rel: str, m: Mosaic, targets: Sequence[Mosaic], space: TypeSpace, mode: str,
           pool: Sequence[Mosaic]) -> Tuple[IntegerProblem, Dict[CountKey, str], Dict[Mosaic, str]]:
    lam = space.lam
    bound = lam * len(space.types) if mode == STRONG else lam
    problem = IntegerProblem(name=f"counting_{rel}")
    X: Dict[CountKey, str] = {}
    use: Dict[Mosaic, str] = {}
    for k, mp in enumerate(targets):
        if mp in pool:
            use[mp] = problem.add_var(f"use_{k}", 0, 1)
        for i in (1, 2):
            for t in sorted(m.side(i)):
                for s in sorted(mp.side(i)):
                    name = problem.add_var(f"F_{i}_{t}_{k}_{s}", 0, 1 if space.nominals(s) else bound)
                    X[(t, i, mp, s)] = name
                    if mp in use:
                        problem.add_constraint({name: 1, use[mp]: -bound}, "<=", 0)

    for i in (1, 2):
        for t in sorted(m.side(i)):
            for f in _members(space, rel):
                body = node(f).children[0]
                coeffs = {X[(t, i, mp, s)]: 1 for mp in targets for s in mp.side(i) if space.holds(s, body)}
                sense, rhs = _requirement(space, t, f)
                problem.add_constraint(coeffs, sense, rhs)

    if rel in space.sigma.rels:
        rows = [(i, t) for i in (1, 2) for t in sorted(m.side(i))]
        big_m = bound * max(len(space.types), 1) + lam + 1
        for k, mp in enumerate(targets):
            if mode == STRONG:
                c = problem.add_var(f"col_{k}", 0, big_m)
            else:
                c = problem.add_var(f"col_{k}", 0, lam)
                over = problem.add_var(f"over_{k}", 0, 1)
            for i, t in rows:
                coeffs = {X[(t, i, mp, s)]: 1 for s in mp.side(i)}
                if mode == STRONG:
                    problem.add_constraint({**coeffs, c: -1}, "==", 0)
                else:
                    problem.add_constraint({**coeffs, c: -1, over: -big_m}, "<=", 0)
                    problem.add_constraint({**coeffs, c: -1, over: big_m}, ">=", 0)
                    problem.add_constraint({**coeffs, over: -(lam + 1)}, ">=", 0)
    return problem, X, use


def _solve(problem: IntegerProblem, solver: str) -> Optional[Dict[str, int]]:
    status, values, stats = solve_problem(problem, solver=solver)
    if status == FEASIBLE:
        return values
    if status == INFEASIBLE:
        return None
    raise SolverError(f"counting problem {problem.name} undecided: {stats.get('error')}")


def find_counting(rel: str, m: Mosaic, Hp: Iterable[Mosaic], space: TypeSpace, mode: str = WEAK,
                  solver: str = DEFAULT_SOLVER) -> Optional[CountingFunction]:
    """Some R-counting function from m into Hp over the finite codomain of the mode, or None."""
    targets = canonical(Hp)
    problem, X, _ = _build(rel, m, targets, space, mode, ())
    values = _solve(problem, solver)
    if values is None:
        return None
    F = CountingFunction(rel, mode, {key: values[name] for key, name in X.items() if values.get(name)})
    ok, why = check_counting(rel, m, targets, F, space, mode)
    if not ok:
        raise SolverError(f"solver returned an invalid counting function: {why}")
    return F


def select_witness_pool(rel: str, m: Mosaic, state: Iterable[Mosaic], pool: Sequence[Mosaic], space: TypeSpace,
                        nogoods: Sequence[FrozenSet[Mosaic]] = (),
                        solver: str = DEFAULT_SOLVER) -> Optional[FrozenSet[Mosaic]]:
    """
    Fewest pool mosaics that, added to `state`, admit a weak R-counting function for m.

    Every nogood excludes itself and all of its supersets.
    """
    state = list(state)
    extra = [p for p in pool if p not in set(state)]
    targets = canonical(state) + tuple(canonical(extra))
    problem, _, use = _build(rel, m, targets, space, WEAK, extra)
    for bad in nogoods:
        coeffs = {use[p]: 1 for p in bad if p in use}
        if len(coeffs) == len(bad):
            problem.add_constraint(coeffs, "<=", len(bad) - 1)
    problem.minimize({v: 1 for v in use.values()})
    values = _solve(problem, solver)
    if values is None:
        return None
    return frozenset(p for p, v in use.items() if values.get(v))


def strong_weak_equivalent(rel: str, m: Mosaic, Hp: Iterable[Mosaic], space: TypeSpace,
                       solver: str = DEFAULT_SOLVER) -> bool:
    """Whether a strong R-counting function exists exactly when a weak one does."""
    Hp = list(Hp)
    strong = find_counting(rel, m, Hp, space, STRONG, solver)
    weak = find_counting(rel, m, Hp, space, WEAK, solver)
    return (strong is None) == (weak is None)


def graded_is_witness(Hp: Iterable[Mosaic], m: Mosaic, H: Iterable[Mosaic], space: TypeSpace,
                      solver: str = DEFAULT_SOLVER) -> Tuple[bool, Optional[str]]:
    """Hp extends H, is an R-witness for m for every relation, and covers @/U obligations."""
    Hp = list(Hp)
    if not extends(Hp, H):
        return False, "extension"
    for rel in space.rels:
        if find_counting(rel, m, Hp, space, WEAK, solver) is None:
            return False, rel
    ok, failing = ungraded_witness(space, Hp, m, H)
    if not ok:
        return False, failing.label()
    return True, None


# ----------------------------------------------------------------------
# Star types
# ----------------------------------------------------------------------

def exact_count(n: int, rel: str, f: FormulaId, lam: int) -> FormulaId:
    """Exactly n below the threshold, at least n from λ on."""
    if n < lam:
        return conj(atmost(n, rel, f), atleast(n, rel, f))
    return atleast(n, rel, f)


def graded_star_types(sep_types: Sequence[FormulaId], sigma_rels: Sequence[str], lam: int,
                      keep: Optional[Callable[[FormulaId], bool]] = None) -> Iterator[FormulaId]:
    """
    d ∧ ⋀_{R, d'} <=f_R(d') R> d' for every Sep-type d and every count map f_R into 0..λ.

    `keep` prunes partial conjunctions (a satisfiability test, typically).
    """
    slots = [(r, d) for r in sigma_rels for d in sep_types]

    def extend(prefix: List[FormulaId], k: int) -> Iterator[FormulaId]:
        if k == len(slots):
            yield big_and(prefix)
            return
        rel, d = slots[k]
        for n in range(lam + 1):
            part = prefix + [exact_count(n, rel, d, lam)]
            if keep is not None and not keep(big_and(part)):
                continue
            yield from extend(part, k + 1)

    for d in sep_types:
        if keep is not None and not keep(d):
            continue
        yield from extend([d], 0)
