"""
Separators when the signature contains every nominal.

Key features:
- Basic nominal cases: one type per nominal and side, kept only when the
  case formula is satisfiable
- Singleton-mosaic elimination per case, with the @- and U-variants of
  coherence and witnesses for the richer logics
- Lazy, memoized per-case separators built from the elimination trace
- Assembly over all cases and all initial type pairs, verified by the
  satisfiability oracle
- First-order export: non-σ nominals become quantified variables
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd

from formulas import (
    AND, AT, ATLEAST, ATMOST, DIA, DIAU, NOM, NOT, PROP, TOP, FormulaId, LogicId, Signature,
    at, at_in, big_and, big_or, bottom, child, conj, dag_size, dia, dia_u, kind, neg, node, nom,
    print_formula, rename, signature_of, top, uses_u_or_at,
)
from hypermosaic import build_space
from mosaics import UNIVERSAL, TypeSpace
from type_elimination import DEFAULT_ORACLE, SatOracle, type_formula

logger = logging.getLogger(__name__)

SingletonMosaic = Tuple[int, int]
Assignment = Tuple[Tuple[str, int], ...]   # nominal -> type, sorted by nominal

BASE_UNSAT_1 = "unsatisfiable on side 1"
BASE_UNSAT_2 = "unsatisfiable on side 2"
BASE_SIGMA = "σ-inconsistent"


class PreconditionError(ValueError):
    """Inputs outside the fragment an operation is defined for."""


class VerificationError(AssertionError):
    """A constructed separator failed its own entailment check."""


# ----------------------------------------------------------------------
# Nominal cases
# ----------------------------------------------------------------------

def case_formula(assignment: Assignment, space: TypeSpace) -> FormulaId:
    """⋀ over the nominals of @a t(a); ⊤ for an empty assignment."""
    return big_and(at_in(space.logic, a, type_formula(space.closure, t)) for a, t in assignment)


def side_assignments(space: TypeSpace, oracle: Optional[SatOracle] = None) -> List[Assignment]:
    """Every map from the closure's nominals to types whose case formula is satisfiable."""
    oracle = oracle or DEFAULT_ORACLE
    noms = list(space.closure.nom0)
    found: List[Assignment] = []

    def consistent(partial: List[Tuple[str, int]]) -> bool:
        chosen = dict(partial)
        for a, t in partial:
            for b in space.nominals(t):
                if b in chosen and chosen[b] != t:
                    return False
        if space.logic.has_at or space.logic.has_u:
            if len({space.global_bits(t) for _, t in partial}) > 1:
                return False
        return True

    def grow(k: int, partial: List[Tuple[str, int]]) -> None:
        if k == len(noms):
            assignment = tuple(partial)
            if oracle.satisfiable(case_formula(assignment, space)):
                found.append(assignment)
            return
        a = noms[k]
        for t in space.types:
            if a not in space.nominals(t):
                continue
            nxt = partial + [(a, t)]
            if consistent(nxt):
                grow(k + 1, nxt)

    grow(0, [])
    return found


@dataclass(frozen=True)
class BasicNominalCase:
    c1: Assignment
    c2: Assignment

    def side(self, i: int) -> Assignment:
        return self.c1 if i == 1 else self.c2

    def label(self) -> str:
        fmt = lambda c: ",".join(f"{a}:{hex(t)}" for a, t in c) or "-"
        return f"[{fmt(self.c1)} | {fmt(self.c2)}]"


# ----------------------------------------------------------------------
# Elimination for one case
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class _Obligation:
    side: int
    formula: FormulaId
    kind: str        # "dia" (σ relation), "dia_u" (other relation under U), "u" or "at"

    def label(self) -> str:
        return f"{print_formula(self.formula)} on side {self.side}"


def _obligations(space: TypeSpace, m: SingletonMosaic) -> List[_Obligation]:
    out: List[_Obligation] = []
    for i, t in ((1, m[0]), (2, m[1])):
        for f in space.closure.members:
            if not space.holds(t, f):
                continue
            k = kind(f)
            if k == DIA:
                if node(f).label in space.sigma.rels:
                    out.append(_Obligation(i, f, "dia"))
                elif space.logic.has_u:
                    out.append(_Obligation(i, f, "dia_u"))
            elif k == AT and space.logic.has_at:
                out.append(_Obligation(i, f, "at"))
            elif k == DIAU and space.logic.has_u:
                out.append(_Obligation(i, f, "u"))
    return out


def _witness_sets(space: TypeSpace, m: SingletonMosaic, o: _Obligation) -> Tuple[List[int], List[int]]:
    """(W1, W2): every witness for o lies in W1 × W2."""
    own, other = (m[0], m[1]) if o.side == 1 else (m[1], m[0])
    body = child(o.formula)
    types = space.types
    if o.kind == "at":
        a = node(o.formula).label
        head = [s for s in types if space.holds(s, nom(a)) and space.holds(s, body) and space.equivalent(own, s)]
        rest = [s for s in types if space.equivalent(other, s)]
    elif o.kind == "u":
        head = [s for s in types if space.holds(s, body) and space.coherent(UNIVERSAL, own, s)]
        rest = [s for s in types if space.coherent(UNIVERSAL, other, s)]
    else:
        rel = node(o.formula).label
        head = [s for s in types if space.holds(s, body) and space.coherent(rel, own, s)]
        if o.kind == "dia":
            rest = [s for s in types if space.coherent(rel, other, s)]
        else:
            rest = [s for s in types if space.equivalent(other, s)]
    return (head, rest) if o.side == 1 else (rest, head)


def _wrap(o: _Obligation, body: FormulaId) -> FormulaId:
    if body == bottom():
        return body
    if o.kind == "at":
        return at(node(o.formula).label, body)
    if o.kind == "dia":
        return dia(node(o.formula).label, body)
    return dia_u(body)


@dataclass
class CaseElimination:
    """Elimination of singleton mosaics under one basic nominal case."""
    space: TypeSpace
    case: BasicNominalCase
    compatible: Dict[int, frozenset]
    alive: set = field(default_factory=set)
    eliminated: Dict[SingletonMosaic, Tuple[int, object]] = field(default_factory=dict)
    rounds: int = 0
    _memo: Dict[SingletonMosaic, FormulaId] = field(default_factory=dict, init=False, repr=False)

    def survives(self, m: SingletonMosaic) -> bool:
        return m in self.alive

    def survivors(self) -> List[SingletonMosaic]:
        return sorted(self.alive)

    def base_reason(self, m: SingletonMosaic) -> Optional[str]:
        if m[0] not in self.compatible[1]:
            return BASE_UNSAT_1
        if m[1] not in self.compatible[2]:
            return BASE_UNSAT_2
        if self.space.profile(m[0]) != self.space.profile(m[1]):
            return BASE_SIGMA
        return None

    def reason(self, m: SingletonMosaic) -> Tuple[int, object]:
        hit = self.eliminated.get(m)
        if hit is not None:
            return hit
        base = self.base_reason(m)
        if base is None:
            raise PreconditionError(f"mosaic ({hex(m[0])}, {hex(m[1])}) survives under {self.case.label()}")
        return 0, base

    def trace_rows(self) -> List[Dict]:
        rows = []
        for (t1, t2), (round_, why) in sorted(self.eliminated.items(), key=lambda kv: (kv[1][0], kv[0])):
            rows.append({"case": self.case.label(), "t1": hex(t1), "t2": hex(t2), "round": round_,
                         "reason": why.label() if isinstance(why, _Obligation) else why})
        return rows

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace_rows(), columns=["case", "t1", "t2", "round", "reason"])

    def separator(self, m: SingletonMosaic) -> FormulaId:
        return sep_case(self, m)


def eliminate_singleton(space: TypeSpace, case: BasicNominalCase,
                        oracle: Optional[SatOracle] = None) -> CaseElimination:
    """Greatest fixpoint of the witness condition over singleton mosaics under `case`."""
    oracle = oracle or DEFAULT_ORACLE
    compatible = {}
    for i in (1, 2):
        cf = case_formula(case.side(i), space)
        compatible[i] = frozenset(t for t in space.types
                                  if oracle.satisfiable(conj(type_formula(space.closure, t), cf)))
    state = CaseElimination(space, case, compatible)
    alive = {(t1, t2) for t1 in compatible[1] for t2 in compatible[2]
             if space.profile(t1) == space.profile(t2)}
    obligations = {m: _obligations(space, m) for m in alive}
    witnesses = {m: [_witness_sets(space, m, o) for o in obligations[m]] for m in alive}
    round_ = 0
    while True:
        round_ += 1
        dropped = []
        for m in alive:
            for o, (w1, w2) in zip(obligations[m], witnesses[m]):
                if not any((s1, s2) in alive for s1 in w1 for s2 in w2):
                    dropped.append((m, o))
                    break
        if not dropped:
            break
        for m, o in dropped:
            alive.discard(m)
            state.eliminated[m] = (round_, o)
    state.alive = alive
    state.rounds = round_ - 1
    logger.debug("Case %s: %d survivors after %d rounds", case.label(), len(alive), state.rounds)
    return state


def _sigma_symbol(space: TypeSpace, m: SingletonMosaic) -> Tuple[FormulaId, bool]:
    """A σ-atom on which the two types differ, and whether it holds in m1."""
    for f in space.closure.members:
        k = kind(f)
        if k not in (PROP, NOM):
            continue
        label = node(f).label
        if label not in (space.sigma.props if k == PROP else space.sigma.noms):
            continue
        left, right = space.holds(m[0], f), space.holds(m[1], f)
        if left != right:
            return f, left
    raise PreconditionError("mosaic is σ-consistent")


def sep_case(elim: CaseElimination, m: SingletonMosaic) -> FormulaId:
    """
    σ-formula entailed by m1 ∧ case(c1) and refuted by m2 ∧ case(c2).

    Built from the round and obligation that eliminated m; raises
    PreconditionError when m survives.
    """
    hit = elim._memo.get(m)
    if hit is not None:
        return hit
    round_, why = elim.reason(m)
    space = elim.space
    if why == BASE_UNSAT_1:
        out = bottom()
    elif why == BASE_UNSAT_2:
        out = top()
    elif why == BASE_SIGMA:
        f, in_first = _sigma_symbol(space, m)
        out = f if in_first else neg(f)
    else:
        o: _Obligation = why
        w1, w2 = _witness_sets(space, m, o)
        if o.side == 1:
            body = big_or(big_and(sep_case(elim, (t, s)) for s in w2) for t in w1)
            out = _wrap(o, body)
        else:
            body = big_or(big_and(neg(sep_case(elim, (t, s))) for t in w1) for s in w2)
            out = neg(_wrap(o, body))
    elim._memo[m] = out
    return out


# ----------------------------------------------------------------------
# Assembly
# ----------------------------------------------------------------------

class SharedNominalSeparator:
    """Separator construction for inputs whose nominals all lie in σ."""

    def __init__(self, f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                 oracle: Optional[SatOracle] = None, callback: Optional[Callable] = None):
        if logic.graded:
            raise PreconditionError(f"{logic} is graded; use the hypermosaic construction")
        missing = signature_of(f1, f2).noms - sigma.noms
        if missing:
            raise PreconditionError(f"nominals outside σ: {', '.join(sorted(missing))}")
        self.f1, self.f2, self.sigma, self.logic = f1, f2, sigma, logic
        self.oracle = oracle or DEFAULT_ORACLE
        self.callback = callback
        self.space = build_space(f1, f2, sigma, logic, oracle=self.oracle)
        self.assignments = side_assignments(self.space, self.oracle)
        self._cases: Dict[Tuple[int, int], CaseElimination] = {}
        self.S1 = [t for t in self.space.types if self.space.holds(t, f1)]
        self.S2 = [t for t in self.space.types if self.space.holds(t, f2)]

    def log(self, msg: str) -> None:
        logger.info(msg)
        if self.callback:
            self.callback(msg)

    def case(self, k1: int, k2: int) -> CaseElimination:
        key = (k1, k2)
        if key not in self._cases:
            c = BasicNominalCase(self.assignments[k1], self.assignments[k2])
            self._cases[key] = eliminate_singleton(self.space, c, self.oracle)
        return self._cases[key]

    def all_cases(self) -> List[CaseElimination]:
        n = len(self.assignments)
        return [self.case(k1, k2) for k1 in range(n) for k2 in range(n)]

    def surviving_pair(self) -> Optional[Tuple[SingletonMosaic, CaseElimination]]:
        """An initial pair that survives some case, i.e. a joint-consistency witness."""
        for elim in self.all_cases():
            for t1 in self.S1:
                for t2 in self.S2:
                    if elim.survives((t1, t2)):
                        return (t1, t2), elim
        return None

    def separator_for(self, m: SingletonMosaic) -> FormulaId:
        """⋁ over c1 of ⋀ over c2 of the per-case separators of m."""
        n = len(self.assignments)
        return big_or(big_and(sep_case(self.case(k1, k2), m) for k2 in range(n)) for k1 in range(n))

    def construct(self) -> Optional[FormulaId]:
        self.log("=" * 50)
        self.log(f"SHARED-NOMINAL SEPARATOR ({self.logic}): {len(self.space.types)} types, "
                 f"{len(self.assignments)} nominal assignments per side")
        self.log("=" * 50)
        hit = self.surviving_pair()
        if hit is not None:
            (t1, t2), elim = hit
            self.log(f"Pair ({hex(t1)}, {hex(t2)}) survives under {elim.case.label()}: no separator")
            return None
        out = big_or(big_and(self.separator_for((t1, t2)) for t2 in self.S2) for t1 in self.S1)
        self.log(f"Separator assembled, DAG size {dag_size(out)}")
        return out

    def verify(self, sep: FormulaId) -> None:
        if not signature_of(sep).issubset(self.sigma):
            raise VerificationError(f"separator leaves σ: {signature_of(sep).to_text()}")
        if not self.logic.has_at and uses_u_or_at(sep):
            raise VerificationError("separator for H uses @ or <U>")
        if not self.oracle.entails(self.f1, sep):
            raise VerificationError("first input does not entail the separator")
        if self.oracle.satisfiable(conj(self.f2, sep)):
            raise VerificationError("second input is consistent with the separator")

    def trace_frame(self) -> pd.DataFrame:
        rows = [row for elim in self._cases.values() for row in elim.trace_rows()]
        return pd.DataFrame(rows, columns=["case", "t1", "t2", "round", "reason"])


def separator_shared_nominals(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                              oracle: Optional[SatOracle] = None, verify: bool = True,
                              callback: Optional[Callable] = None) -> Optional[FormulaId]:
    """L(σ)-separator of f1, f2 or None when they are jointly L(σ)-consistent."""
    builder = SharedNominalSeparator(f1, f2, sigma, logic, oracle, callback)
    sep = builder.construct()
    if sep is not None and verify:
        builder.verify(sep)
    return sep


# ----------------------------------------------------------------------
# First-order export
# ----------------------------------------------------------------------

def _fresh(name: str, taken: set) -> str:
    candidate, k = f"{name}_2", 2
    while candidate in taken:
        k += 1
        candidate = f"{name}_{k}"
    taken.add(candidate)
    return candidate


class _Translator:
    """Standard translation with a variable chain x0, x1, ..."""

    def __init__(self):
        self._memo: Dict[Tuple[FormulaId, str, int], str] = {}

    def run(self, f: FormulaId, term: str, depth: int) -> str:
        key = (f, term, depth)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._render(f, term, depth)
            self._memo[key] = hit
        return hit

    def _render(self, f: FormulaId, term: str, depth: int) -> str:
        n = node(f)
        if n.kind == TOP:
            return "true"
        if n.kind == PROP:
            return f"{n.label}({term})"
        if n.kind == NOM:
            return f"{term} = {n.label}"
        if n.kind == NOT:
            if n.children[0] == top():
                return "false"
            return f"~{self.run(n.children[0], term, depth)}"
        if n.kind == AND:
            return f"({self.run(n.children[0], term, depth)} & {self.run(n.children[1], term, depth)})"
        if n.kind == AT:
            return self.run(n.children[0], n.label, depth)
        nxt = f"x{depth + 1}"
        if n.kind == DIA:
            return f"exists {nxt} ({n.label}({term},{nxt}) & {self.run(n.children[0], nxt, depth + 1)})"
        if n.kind == DIAU:
            return f"exists {nxt} ({self.run(n.children[0], nxt, depth + 1)})"
        if n.kind == ATLEAST:
            return self._atleast(n.grade, n.label, n.children[0], term, depth)
        if n.kind == ATMOST:
            return f"~{self._atleast(n.grade + 1, n.label, n.children[0], term, depth)}"
        raise ValueError(f"no translation for {n.kind}")

    def _atleast(self, k: int, rel: str, body: FormulaId, term: str, depth: int) -> str:
        if k == 0:
            return "true"
        names = [f"x{depth + j}" for j in range(1, k + 1)]
        parts = [f"{rel}({term},{y}) & {self.run(body, y, depth + k)}" for y in names]
        parts += [f"~{y} = {z}" for j, y in enumerate(names) for z in names[j + 1:]]
        return f"exists {','.join(names)} ({' & '.join(parts)})"


def standard_translation(f: FormulaId, var: str = "x0") -> str:
    return _Translator().run(f, var, int(var[1:]) if var[1:].isdigit() else 0)


def fo_separator(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                 oracle: Optional[SatOracle] = None, callback: Optional[Callable] = None) -> Optional[str]:
    """
    FO(σ)-separator `exists n1. forall n2. T_x0(χ)` or None.

    Nominals outside σ are renamed apart (n1 from f1, n2 from f2) and added
    to σ; χ is the shared-nominal separator over the extended signature.
    """
    sig1, sig2 = signature_of(f1), signature_of(f2)
    taken = sig1.names() | sig2.names() | sigma.names()
    mapping = {("nom", a): _fresh(a, taken) for a in sorted((sig1.noms & sig2.noms) - sigma.noms)}
    g2 = rename(f2, mapping)
    n1 = sorted(sig1.noms - sigma.noms)
    n2 = sorted(signature_of(g2).noms - sigma.noms)
    extended = Signature(sigma.rels, sigma.props, sigma.noms | frozenset(n1) | frozenset(n2), sigma.includes_U)
    chi = separator_shared_nominals(f1, g2, extended, logic, oracle=oracle, callback=callback)
    if chi is None:
        return None
    prefix = (f"exists {','.join(n1)}. " if n1 else "") + (f"forall {','.join(n2)}. " if n2 else "")
    return prefix + standard_translation(chi)
