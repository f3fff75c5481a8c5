"""
Hyperseparators and separator construction for all six logics.

A hyperseparator is an exhaustive case distinction on the nominals plus,
per case, side and type, a σ-formula that follows from the type in that
case. It separates a hypermosaic when every case finds some mosaic whose
consequences are jointly unsatisfiable.

Key features:
- Base construction: nominals mapped to types, types to their σ-literals
- Refinement rounds: cases split by the Sep-type of every nominal, values
  replaced by the disjunction of consistent star-types (∇ form, exact
  counts for graded logics, plus @ and <U> parts for the richer logics)
- Compilation of a separated type pair into a separator, assembly over
  all initial pairs, verification and a JSON certificate
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from counting import graded_star_types
from formulas import (
    NOM, PROP, FormulaId, LogicId, Signature, at_in, big_and, big_or, box, conj, dag_size, dia,
    kind, neg, node, parse, print_formula, resolve_sigma, signature_of, uses_u_or_at,
)
from hypermosaic import SEARCH, build_space, decide
from mosaics import UNIVERSAL, BudgetExceeded, Mosaic, TypeSpace
from shared_nominals import PreconditionError, VerificationError, side_assignments
from solver_backends import DEFAULT_SOLVER
from type_elimination import DEFAULT_ORACLE, SatOracle, type_formula

logger = logging.getLogger(__name__)

Entries = Tuple[Tuple[str, FormulaId], ...]   # nominal -> formula, in closure order

DEFAULT_MAX_ROUNDS = 3
DEFAULT_WORK_BUDGET = 5000   # oracle calls spent on refinement and compilation
DEFAULT_MAX_QUERY = 100      # DAG size of the largest formula handed to the oracle during refinement


class RoundCapExceeded(RuntimeError):
    """Refinement stopped at the round cap before every initial pair was separated."""

    def __init__(self, message: str, rounds: int, pending: int):
        super().__init__(message)
        self.rounds = rounds
        self.pending = pending


class WorkMeter:
    """Oracle front end charging every satisfiability call against a work budget."""

    def __init__(self, oracle: SatOracle, budget: int = DEFAULT_WORK_BUDGET, max_query: int = DEFAULT_MAX_QUERY):
        if budget < 1 or max_query < 1:
            raise ValueError("work budget and query size must be positive")
        self.oracle = oracle
        self.budget = budget
        self.max_query = max_query
        self.used = 0

    def charge(self, what: str = "oracle call") -> None:
        if self.used >= self.budget:
            raise BudgetExceeded(f"separator construction ran out of work budget ({self.budget}) during {what}",
                                 {"work": self.used, "work_budget": self.budget})
        self.used += 1

    def satisfiable(self, f: FormulaId) -> bool:
        self.charge()
        size = dag_size(f)
        if size > self.max_query:
            raise BudgetExceeded(f"oracle query of DAG size {size} exceeds {self.max_query}",
                                 {"work": self.used, "query_size": size})
        return self.oracle.satisfiable(f)

    def entails(self, f: FormulaId, g: FormulaId) -> bool:
        return not self.satisfiable(conj(f, neg(g)))


Oracle = Union[SatOracle, WorkMeter]


def s_bound(n: int) -> int:
    """2^n · 2^(2^n): rounds after which the elimination is stable."""
    return 2 ** n * 2 ** (2 ** n)


def _s_bound_text(n: int):
    return s_bound(n) if n <= 5 else f"2^{n}*2^(2^{n})"


# ----------------------------------------------------------------------
# Cases
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class NominalCase:
    c1: Entries
    c2: Entries

    def side(self, i: int) -> Entries:
        return self.c1 if i == 1 else self.c2


def case_formula(entries: Entries, logic: LogicId) -> FormulaId:
    return big_and(at_in(logic, a, f) for a, f in entries)


@dataclass
class Hyperseparator:
    space: TypeSpace
    cases: List[NominalCase]
    sep: Dict[Tuple[int, int, int], FormulaId]     # (case index, side, type) -> σ-formula
    round: int = 0
    history: List[int] = field(default_factory=list)

    def value(self, k: int, i: int, t: int) -> FormulaId:
        return self.sep[(k, i, t)]

    def sep_set(self, k: int) -> List[FormulaId]:
        """Sep_c: the image of both sides, deduplicated by node identity."""
        found = {self.sep[(k, i, t)] for i in (1, 2) for t in self.space.types}
        return sorted(found)

    def max_dag_size(self) -> int:
        return max((dag_size(f) for f in self.sep.values()), default=0)

    def to_json(self) -> Dict:
        return {"round": self.round, "cases": len(self.cases), "cases_per_round": list(self.history),
                "entries": len(self.sep), "max_dag_size": self.max_dag_size()}


def sigma_literals(space: TypeSpace, t: int) -> FormulaId:
    """⋀ of the σ-propositions and σ-nominals of t, each with its polarity."""
    lits = []
    for f in space.closure.members:
        k = kind(f)
        if k == PROP and node(f).label in space.sigma.props or k == NOM and node(f).label in space.sigma.noms:
            lits.append(f if space.holds(t, f) else neg(f))
    return big_and(lits)


def base_hyperseparator(space: TypeSpace, oracle: Optional[Oracle] = None) -> Hyperseparator:
    """Nominals mapped to types; every value is the σ-literal part of its type."""
    oracle = oracle or DEFAULT_ORACLE
    closure = space.closure
    entries = [tuple((a, type_formula(closure, t)) for a, t in assignment)
               for assignment in side_assignments(space, oracle)]
    cases = [NominalCase(e1, e2) for e1 in entries for e2 in entries]
    literal = {t: sigma_literals(space, t) for t in space.types}
    sep = {(k, i, t): literal[t] for k in range(len(cases)) for i in (1, 2) for t in space.types}
    return Hyperseparator(space, cases, sep, 0, [len(cases)])


# ----------------------------------------------------------------------
# Sep-types and star-types
# ----------------------------------------------------------------------

def sep_types(formulas: Sequence[FormulaId], oracle: Optional[Oracle] = None) -> List[FormulaId]:
    """Satisfiable polarity combinations of the formulas (mutually exclusive)."""
    oracle = oracle or DEFAULT_ORACLE
    out: Dict[FormulaId, None] = {}

    def grow(k: int, prefix: List[FormulaId]) -> None:
        if k == len(formulas):
            out.setdefault(big_and(prefix), None)
            return
        for lit in (formulas[k], neg(formulas[k])):
            part = prefix + [lit]
            if oracle.satisfiable(big_and(part)):
                grow(k + 1, part)

    grow(0, [])
    return list(out)


def nabla(rel: str, D: Sequence[FormulaId]) -> FormulaId:
    """⋀ <R> d for d in D together with [R] ⋁ D."""
    return big_and([dia(rel, d) for d in D] + [box(rel, big_or(D))])


def _subsets(items: Sequence[FormulaId]) -> Iterator[Tuple[FormulaId, ...]]:
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


def star_types(space: TypeSpace, types: Sequence[FormulaId],
               keep: Optional[Callable[[FormulaId], bool]] = None) -> Iterator[FormulaId]:
    """
    Star-types over the given Sep-types, pruned by `keep` on partial conjunctions.

    Ungraded: d ∧ ⋀_{R∈σ} ∇^R D^R. Graded: exact successor counts per σ-relation
    and Sep-type. With @ each σ-nominal gets a Sep-type, with U a ∇^U part.
    """
    ok = keep or (lambda f: True)
    logic = space.logic
    at_noms = [a for a in space.closure.nom0 if a in space.sigma.noms] if logic.has_at else []
    nabla_rels = ([] if space.graded else list(space.sigma_rels)) + ([UNIVERSAL] if logic.has_u else [])

    slots: List[Tuple[str, str]] = [("nabla", r) for r in nabla_rels]
    slots += [("at", a) for a in at_noms]

    def extend(prefix: List[FormulaId], k: int) -> Iterator[FormulaId]:
        if k == len(slots):
            yield big_and(prefix)
            return
        what, label = slots[k]
        if what == "at":
            for d in types:
                part = prefix + [at_in(logic, label, d)]
                if ok(big_and(part)):
                    yield from extend(part, k + 1)
            return
        candidates = [d for d in types if ok(big_and(prefix + [dia(label, d)]))]
        for D in _subsets(candidates):
            part = prefix + [nabla(label, D)]
            if ok(big_and(part)):
                yield from extend(part, k + 1)

    if space.graded:
        cores = graded_star_types(types, space.sigma_rels, space.lam, ok)
    else:
        cores = (d for d in types if ok(d))
    for core in cores:
        yield from extend([core], 0)


# ----------------------------------------------------------------------
# Refinement
# ----------------------------------------------------------------------

def _refinements(entries: Entries, d_types: Sequence[FormulaId], logic: LogicId,
                 oracle: Oracle) -> List[Entries]:
    """entries ⊗ f for every f: Nom0 -> Sep-types with a satisfiable case formula."""
    out: List[Entries] = []

    def grow(k: int, prefix: List[Tuple[str, FormulaId]]) -> None:
        if k == len(entries):
            out.append(tuple(prefix))
            return
        a, f = entries[k]
        for d in d_types:
            part = prefix + [(a, big_and([f, d]))]
            if oracle.satisfiable(case_formula(tuple(part), logic)):
                grow(k + 1, part)

    grow(0, [])
    return out


def _case_separates(hs: Hyperseparator, k: int, t1: int, t2: int, oracle: Oracle) -> bool:
    return not oracle.satisfiable(conj(hs.value(k, 1, t1), hs.value(k, 2, t2)))


def refine_round(hs: Hyperseparator, oracle: Optional[Oracle] = None,
                 pending: Optional[Sequence[Tuple[int, int]]] = None) -> Hyperseparator:
    """
    One refinement round: split cases and recompute their values from star-types.

    With `pending`, only cases that leave one of those type pairs unseparated
    are split; the others are carried over unchanged, which keeps the case
    distinction exhaustive and every value sound.
    """
    oracle = oracle or DEFAULT_ORACLE
    space = hs.space
    logic = space.logic
    cases: List[NominalCase] = []
    sep: Dict[Tuple[int, int, int], FormulaId] = {}
    type_f = {t: type_formula(space.closure, t) for t in space.types}
    rows: Dict[Tuple[Entries, Tuple[FormulaId, ...]], Dict[int, FormulaId]] = {}
    split = 0

    def row_for(entries: Entries, d_types: List[FormulaId]) -> Dict[int, FormulaId]:
        key = (entries, tuple(d_types))
        if key not in rows:
            cf = case_formula(entries, logic)
            row = {}
            for t in space.types:
                context = conj(cf, type_f[t])
                keep = lambda f, context=context: oracle.satisfiable(conj(context, f))
                row[t] = big_or(star_types(space, d_types, keep))
            rows[key] = row
        return rows[key]

    for k, c in enumerate(hs.cases):
        if pending is not None and all(_case_separates(hs, k, t1, t2, oracle) for t1, t2 in pending):
            idx = len(cases)
            cases.append(c)
            for i in (1, 2):
                for t in space.types:
                    sep[(idx, i, t)] = hs.value(k, i, t)
            continue
        split += 1
        d_types = sep_types(hs.sep_set(k), oracle)
        options = {i: _refinements(c.side(i), d_types, logic, oracle) for i in (1, 2)}
        for e1 in options[1]:
            for e2 in options[2]:
                idx = len(cases)
                cases.append(NominalCase(e1, e2))
                row1, row2 = row_for(e1, d_types), row_for(e2, d_types)
                for t in space.types:
                    sep[(idx, 1, t)] = row1[t]
                    sep[(idx, 2, t)] = row2[t]
    out = Hyperseparator(space, cases, sep, hs.round + 1, hs.history + [len(cases)])
    logger.debug("Round %d: split %d of %d cases, now %d; largest value has DAG size %d",
                 out.round, split, len(hs.cases), len(cases), out.max_dag_size())
    return out


def check_soundness(hs: Hyperseparator, oracle: Optional[Oracle] = None) -> List[Tuple[int, int, int]]:
    """Entries where t ∧ case(c_i) does not entail the stored value."""
    oracle = oracle or DEFAULT_ORACLE
    bad = []
    for (k, i, t), f in sorted(hs.sep.items()):
        context = conj(case_formula(hs.cases[k].side(i), hs.space.logic), type_formula(hs.space.closure, t))
        if not oracle.entails(context, f):
            bad.append((k, i, t))
    return bad


# ----------------------------------------------------------------------
# Separation and compilation
# ----------------------------------------------------------------------

def separates(hs: Hyperseparator, H, oracle: Optional[Oracle] = None) -> bool:
    """Every case has a mosaic of H whose consequences are jointly unsatisfiable."""
    oracle = oracle or DEFAULT_ORACLE
    H = list(H)
    for k in range(len(hs.cases)):
        if not any(not oracle.satisfiable(big_and([hs.value(k, 1, t) for t in m.m1]
                                                  + [hs.value(k, 2, t) for t in m.m2]))
                   for m in H):
            return False
    return True


def _pair(t1: int, t2: int) -> List[Mosaic]:
    return [Mosaic.of([t1], [t2])]


def _satisfiable_subsets(components: List[Entries], logic: LogicId,
                         oracle: Oracle) -> List[Tuple[bool, ...]]:
    """Membership vectors S over the components with χ_S satisfiable."""
    out: List[Tuple[bool, ...]] = []
    formulas = [case_formula(c, logic) for c in components]

    def grow(k: int, chosen: List[bool], prefix: List[FormulaId]) -> None:
        if k == len(components):
            out.append(tuple(chosen))
            return
        for member in (True, False):
            part = prefix + [formulas[k] if member else neg(formulas[k])]
            if oracle.satisfiable(big_and(part)):
                grow(k + 1, chosen + [member], part)

    grow(0, [], [])
    return out


def side_separator(hs: Hyperseparator, i: int, t: int, oracle: Optional[Oracle] = None) -> FormulaId:
    """ψ_i: the disjunction over satisfiable case subsets S of ⋀ sep_i(c, t) for c_i ∈ S."""
    oracle = oracle or DEFAULT_ORACLE
    components = list(dict.fromkeys(c.side(i) for c in hs.cases))
    position = {c: j for j, c in enumerate(components)}
    disjuncts = []
    for S in _satisfiable_subsets(components, hs.space.logic, oracle):
        disjuncts.append(big_and(hs.value(k, i, t) for k, c in enumerate(hs.cases) if S[position[c.side(i)]]))
    return big_or(disjuncts)


def hypersep_to_separator(hs: Hyperseparator, t1: int, t2: int,
                          oracle: Optional[Oracle] = None) -> FormulaId:
    """Separator of the types t1, t2 from a hyperseparator that separates {({t1},{t2})}."""
    oracle = oracle or DEFAULT_ORACLE
    if not separates(hs, _pair(t1, t2), oracle):
        raise PreconditionError(f"hyperseparator does not separate ({hex(t1)}, {hex(t2)})")
    return side_separator(hs, 1, t1, oracle)


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------

@dataclass
class Construction:
    separator: Optional[FormulaId]
    certificate: Dict
    hyperseparator: Optional[Hyperseparator] = None


def _verify(f1: FormulaId, f2: FormulaId, sep: FormulaId, sigma: Signature, logic: LogicId,
            oracle: Oracle) -> Dict[str, bool]:
    result = {
        "signature": signature_of(sep).issubset(sigma)
        and (logic.has_at or not uses_u_or_at(sep)),
        "first_entails": oracle.entails(f1, sep),
        "second_refuted": not oracle.satisfiable(conj(f2, sep)),
    }
    return result


def construct(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
              max_rounds: int = DEFAULT_MAX_ROUNDS, mode: str = SEARCH, budget: int = 20000,
              audit: bool = False, solver: str = DEFAULT_SOLVER, oracle: Optional[SatOracle] = None,
              callback: Optional[Callable] = None, work_budget: int = DEFAULT_WORK_BUDGET) -> Construction:
    """
    Separator with certificate, or a certificate recording that none exists.

    Raises BudgetExceeded when existence is undecided within `budget` search
    nodes or when refinement and compilation spend more than `work_budget`
    oracle calls, RoundCapExceeded when the round cap is hit first, and
    VerificationError when the output fails its checks.
    """
    def log(msg):
        logger.info(msg)
        if callback:
            callback(msg)

    oracle = oracle or DEFAULT_ORACLE
    n = dag_size(f1) + dag_size(f2)
    cert: Dict = {
        "f1": print_formula(f1, "dag"), "f2": print_formula(f2, "dag"), "sigma": sigma.to_text(),
        "logic": logic.name, "n": n, "s_bound": _s_bound_text(n), "audit": audit,
    }
    space = build_space(f1, f2, sigma, logic, oracle=oracle)
    log("=" * 50)
    log(f"SEPARATOR CONSTRUCTION ({logic}): {len(space.types)} types, n = {n}")
    log("=" * 50)
    decision = decide(f1, f2, sigma, logic, mode, budget, solver=solver, space=space, callback=callback)
    if decision.separator_exists is None:
        raise BudgetExceeded(f"separator existence undecided within {budget} search nodes",
                             {"nodes": decision.nodes, "pairs": decision.pairs_checked})
    cert["separator_exists"] = decision.separator_exists
    if not decision.separator_exists:
        log("Inputs are jointly consistent: no separator")
        cert["separator"] = None
        return Construction(None, cert)

    S1 = [t for t in space.types if space.holds(t, f1)]
    S2 = [t for t in space.types if space.holds(t, f2)]
    pairs = [(t1, t2) for t1 in S1 for t2 in S2]
    cap = max_rounds if n > 5 else min(max_rounds, s_bound(n))
    meter = WorkMeter(oracle, work_budget)
    hs = base_hyperseparator(space, meter)
    audit_log: List[Dict] = []
    while True:
        pending = [p for p in pairs if not separates(hs, _pair(*p), meter)]
        log(f"  round {hs.round}: {len(hs.cases)} cases, {len(pending)} of {len(pairs)} pairs pending, "
            f"work {meter.used}/{work_budget}")
        if audit:
            bad = check_soundness(hs, oracle)
            audit_log.append({"round": hs.round, "unsound_entries": len(bad), "pending": len(pending)})
            if bad:
                raise VerificationError(f"round {hs.round}: {len(bad)} entries not entailed")
        if not pending:
            break
        if hs.round >= cap:
            raise RoundCapExceeded(f"{len(pending)} pairs unseparated after {hs.round} rounds",
                                   hs.round, len(pending))
        hs = refine_round(hs, meter, pending)

    pieces = {p: hypersep_to_separator(hs, p[0], p[1], meter) for p in pairs}
    sep = big_or(big_and(pieces[(t1, t2)] for t2 in S2) for t1 in S1)
    checks = _verify(f1, f2, sep, sigma, logic, oracle)
    cert.update({
        "separator": print_formula(sep, "dag"), "rounds": hs.round, "dag_size": dag_size(sep),
        "verification": checks, "cases_per_round": hs.history,
        "work": meter.used, "work_budget": work_budget,
    })
    if audit:
        cert["audit_rounds"] = audit_log
    if not all(checks.values()):
        raise VerificationError(f"separator failed verification: {checks}")
    log(f"Separator after {hs.round} rounds, DAG size {dag_size(sep)}")
    return Construction(sep, cert, hs)


def construct_separator(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                        max_rounds: int = DEFAULT_MAX_ROUNDS, **kwargs) -> Optional[FormulaId]:
    """Verified L(σ)-separator of f1 and f2, or None when none exists."""
    return construct(f1, f2, sigma, logic, max_rounds, **kwargs).separator


def verify_certificate(cert: Dict, oracle: Optional[Oracle] = None, budget: int = 20000) -> Dict[str, bool]:
    """Re-check a certificate from its own texts; returns the individual verdicts."""
    oracle = oracle or DEFAULT_ORACLE
    logic = LogicId.parse(cert["logic"])
    f1, f2 = parse(cert["f1"], logic), parse(cert["f2"], logic)
    sigma = resolve_sigma(cert["sigma"], f1, f2)
    if cert.get("separator") is None:
        exists = decide(f1, f2, sigma, logic, SEARCH, budget).separator_exists
        return {"no_separator": exists is False, "valid": exists is False}
    sep = parse(cert["separator"], logic)
    checks = _verify(f1, f2, sep, sigma, logic, oracle)
    checks["valid"] = all(checks.values())
    return checks


def load_certificate(path: str) -> Dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_certificate(cert: Dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cert, fh, indent=2)
