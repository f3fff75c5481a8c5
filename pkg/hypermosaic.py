"""
Hypermosaic elimination and separator-existence decision.

Supports two engines:
- reference: enumerates every legal hypermosaic over a (small) mosaic
  universe and runs the elimination rounds literally, recording the round
  each hypermosaic is dropped at and the obligation that failed
- search: depth-first construction of a self-witnessing hypermosaic
  extending the input; each step adds a minimal witness mosaic and
  normalizes (merging mosaics that share a nominal type, dropping
  dominated mosaics). Graded logics pick minimal witness pools with a
  counting model (counting.select_witness_pool).

A separator exists iff no {({t1}, {t2})} with f1 ∈ t1, f2 ∈ t2 survives.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

import pandas as pd

from counting import WEAK, find_counting, select_witness_pool
from formulas import FormulaId, LogicId, Signature, child, closure_of, nom, node
from mosaics import (
    BudgetExceeded, Hypermosaic, Mosaic, Obligation, TypeSpace, canonical, extends, hyper_label, legal,
    mosaic_shape_ok, mosaic_universe, nominal_clean, at_consistent, u_consistent,
)
from solver_backends import DEFAULT_SOLVER
from type_elimination import DEFAULT_ORACLE, SatOracle, enumerate_types, type_formula

logger = logging.getLogger(__name__)

REFERENCE = "reference"
SEARCH = "search"
MODES = (REFERENCE, SEARCH)

YES = "yes"
NO = "no"
UNKNOWN = "unknown"

# beyond this many candidate mosaics the graded pool is cut to small sides
POOL_LIMIT = 400


def build_space(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                prune: bool = True, oracle: Optional[SatOracle] = None) -> TypeSpace:
    """Type space over sub(f1, f2); with prune, unsatisfiable candidate types are dropped."""
    closure = closure_of([f1, f2], logic)
    types = enumerate_types(closure, logic)
    if prune:
        oracle = oracle or DEFAULT_ORACLE
        types = [t for t in types if oracle.satisfiable(type_formula(closure, t))]
    logger.debug("Type space: %d members, %d types", len(closure), len(types))
    return TypeSpace(closure, sigma, logic, types)


def initial_pairs(f1: FormulaId, f2: FormulaId, space: TypeSpace) -> List[Tuple[int, int]]:
    """σ-compatible type pairs (t1, t2) with f1 ∈ t1 and f2 ∈ t2."""
    left = [t for t in space.types if space.holds(t, f1)]
    right = [t for t in space.types if space.holds(t, f2)]
    return [(t1, t2) for t1 in left for t2 in right if space.profile(t1) == space.profile(t2)]


# ----------------------------------------------------------------------
# Witnesses
# ----------------------------------------------------------------------

def _obligation_met_in(space: TypeSpace, m: Mosaic, o: Obligation, Hp: Sequence[Mosaic],
                       solver: str) -> bool:
    if o.kind == "count":
        return find_counting(o.rel, m, Hp, space, WEAK, solver) is not None
    return any(space.obligation_met(m, o, mp) for mp in Hp)


def is_witness(Hp, m: Mosaic, H, space: TypeSpace,
               solver: str = DEFAULT_SOLVER) -> Tuple[bool, Optional[str]]:
    """Hp extends H and discharges every obligation of m; otherwise the first unmet one."""
    Hp = canonical(Hp)
    if not extends(Hp, H):
        return False, "extension"
    for o in space.obligations(m):
        if not _obligation_met_in(space, m, o, Hp, solver):
            return False, o.label()
    return True, None


def self_witnessing(H, space: TypeSpace, solver: str = DEFAULT_SOLVER) -> Tuple[bool, Optional[str]]:
    """H is legal and a witness for each of its own mosaics."""
    H = canonical(H)
    if not legal(H, space):
        return False, "not legal"
    for m in H:
        ok, failing = is_witness(H, m, H, space, solver)
        if not ok:
            return False, f"{m.label()}: {failing}"
    return True, None


# ----------------------------------------------------------------------
# Reference engine
# ----------------------------------------------------------------------

@dataclass
class EliminationState:
    """Outcome of the literal elimination over an enumerated universe."""
    space: TypeSpace
    universe: List[Mosaic]
    hypermosaics: List[Hypermosaic]
    eliminated_at: Dict[Hypermosaic, int] = field(default_factory=dict)
    rounds: int = 0
    trace: List[Dict] = field(default_factory=list)
    _members: Set[Hypermosaic] = field(default_factory=set, init=False, repr=False)

    def __post_init__(self):
        self._members = set(self.hypermosaics)

    def alive(self, H) -> bool:
        H = frozenset(H)
        return H in self._members and H not in self.eliminated_at

    def survivors(self) -> List[Hypermosaic]:
        return [H for H in self.hypermosaics if H not in self.eliminated_at]

    def eliminated_by(self, round_: int) -> List[Hypermosaic]:
        return [H for H in self.hypermosaics if self.eliminated_at.get(H, round_ + 1) <= round_]

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=["round", "hypermosaic", "mosaic", "obligation"])

    def to_json(self) -> Dict:
        return {
            "rounds": self.rounds,
            "universe": len(self.universe),
            "hypermosaics": len(self.hypermosaics),
            "survivors": len(self.survivors()),
            "eliminated": self.trace,
        }


def _bits(mask: int) -> Iterator[int]:
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def _enumerate_legal(universe: List[Mosaic], space: TypeSpace, budget: int) -> List[int]:
    """Bitmasks of every legal hypermosaic over the universe."""
    found: List[int] = []

    def grow(start: int, chosen: List[Mosaic], mask: int) -> None:
        for k in range(start, len(universe)):
            cand = chosen + [universe[k]]
            if not nominal_clean(cand, space):
                continue
            if space.logic.has_at and not at_consistent(cand, space):
                continue
            if space.logic.has_u and not u_consistent(cand, space):
                continue
            found.append(mask | 1 << k)
            if len(found) > budget:
                raise BudgetExceeded(f"more than {budget} legal hypermosaics",
                                     {"mosaics": len(universe), "hypermosaics": len(found)})
            grow(k + 1, cand, mask | 1 << k)

    grow(0, [], 0)
    return found


def eliminate_reference(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                        max_side: Optional[int] = None, budget: int = 4096, reduced: bool = True,
                        space: Optional[TypeSpace] = None, solver: str = DEFAULT_SOLVER,
                        callback: Optional[Callable] = None) -> EliminationState:
    """Greatest fixpoint over every legal hypermosaic of the mosaic universe."""
    def log(msg):
        logger.info(msg)
        if callback:
            callback(msg)

    space = space or build_space(f1, f2, sigma, logic, prune=reduced)
    universe = mosaic_universe(space, max_side, limit=budget)
    log("=" * 50)
    log(f"REFERENCE ELIMINATION ({logic}): {len(space.types)} types, {len(universe)} mosaics")
    log("=" * 50)
    masks = _enumerate_legal(universe, space, budget)
    hypers = [frozenset(universe[k] for k in _bits(mask)) for mask in masks]
    log(f"  {len(hypers)} legal hypermosaics")

    cover = [sum(1 << j for j, mp in enumerate(universe) if m.covered_by(mp)) for m in universe]
    extenders: List[List[int]] = []
    for mask in masks:
        members = list(_bits(mask))
        extenders.append([x for x, other in enumerate(masks) if all(other & cover[k] for k in members)])

    graded = space.graded
    witness_masks: List[List[int]] = []
    if not graded:
        for m in universe:
            witness_masks.append([
                sum(1 << j for j, mp in enumerate(universe) if space.obligation_met(m, o, mp))
                for o in space.obligations(m)
            ])

    state = EliminationState(space, universe, hypers)
    alive = [True] * len(masks)
    round_ = 0
    while True:
        round_ += 1
        dropped = []
        for x, mask in enumerate(masks):
            if not alive[x]:
                continue
            live = [masks[y] for y in extenders[x] if alive[y]]
            for k in _bits(mask):
                m = universe[k]
                if graded:
                    has = any(is_witness(hypers[y], m, hypers[x], space, solver)[0]
                              for y in extenders[x] if alive[y])
                    failing = "no graded witness"
                else:
                    needs = witness_masks[k]
                    has = any(all(other & w for w in needs) for other in live)
                    failing = _first_missing(space, m, needs, live)
                if not has:
                    dropped.append((x, m, failing))
                    break
        if not dropped:
            break
        for x, m, failing in dropped:
            alive[x] = False
            state.eliminated_at[hypers[x]] = round_
            state.trace.append({"round": round_, "hypermosaic": hyper_label(hypers[x]),
                                "mosaic": m.label(), "obligation": failing})
        log(f"  round {round_}: eliminated {len(dropped)}")
    state.rounds = round_ - 1
    log(f"Stable after {state.rounds} rounds, {len(state.survivors())} survivors")
    return state


def _first_missing(space: TypeSpace, m: Mosaic, needs: List[int], live: List[int]) -> str:
    """Label of the first obligation of m no live extension discharges."""
    for o, w in zip(space.obligations(m), needs):
        if not any(other & w for other in live):
            return o.label()
    return "no single extension discharges every obligation"


# ----------------------------------------------------------------------
# Search engine
# ----------------------------------------------------------------------

class SearchOutcome(NamedTuple):
    status: str                      # yes / no / unknown
    witness: Optional[Hypermosaic]
    nodes: int


class _OutOfBudget(Exception):
    pass


def normalize(mosaics, space: TypeSpace, max_side: Optional[int] = None) -> Optional[Hypermosaic]:
    """
    Merge mosaics sharing a nominal type, check legality and drop dominated mosaics.

    None when no legal hypermosaic can extend the input.
    """
    ms = list(dict.fromkeys(mosaics))
    merged = True
    while merged:
        merged = False
        owner: Dict[Tuple[int, str], Tuple[int, int]] = {}
        for idx, m in enumerate(ms):
            for i in (1, 2):
                for t in m.side(i):
                    for a in space.nominals(t):
                        prev = owner.get((i, a))
                        if prev is None:
                            owner[(i, a)] = (t, idx)
                            continue
                        if prev[0] != t:
                            return None
                        if prev[1] != idx:
                            a_idx, b_idx = prev[1], idx
                            ms[a_idx] = ms[a_idx].union(ms[b_idx])
                            del ms[b_idx]
                            merged = True
                            break
                    if merged:
                        break
                if merged:
                    break
            if merged:
                break
    for m in ms:
        if not mosaic_shape_ok(m, space, max_side):
            return None
    if not legal(ms, space, max_side):
        return None
    kept = [m for m in ms if not any(m != o and m.covered_by(o) for o in ms)]
    return frozenset(kept)


def _side_bits(state: Sequence[Mosaic], space: TypeSpace) -> Dict[int, Optional[int]]:
    bits: Dict[int, Optional[int]] = {}
    for i in (1, 2):
        values = {space.global_bits(t) for m in state for t in m.side(i)}
        bits[i] = next(iter(values)) if values else None
    return bits


class HypermosaicSearch:
    """Shared memo of dead hypermosaics for repeated survival queries over one space."""

    def __init__(self, space: TypeSpace, budget: int = 20000, max_side: Optional[int] = None,
                 solver: str = DEFAULT_SOLVER):
        self.space = space
        self.budget = budget
        self.max_side = max_side
        self.solver = solver
        self.dead: List[Hypermosaic] = []
        self.nodes = 0
        self.incomplete = False
        self._pool: Optional[List[Mosaic]] = None
        self._limit = budget

    # -- candidates ----------------------------------------------------

    def _allowed(self, s: int, i: int, profile: int, bits: Dict[int, Optional[int]]) -> bool:
        sp = self.space
        return sp.profile(s) == profile and (bits[i] is None or sp.global_bits(s) == bits[i])

    def _pair_if_needed(self, sides: Dict[int, Set[int]], profile: int,
                        bits: Dict[int, Optional[int]]) -> Iterator[Mosaic]:
        m = Mosaic(frozenset(sides[1]), frozenset(sides[2]))
        if mosaic_shape_ok(m, self.space, self.max_side):
            yield m
            return
        for j in (1, 2):
            if sides[j]:
                continue
            for s in self.space.types:
                if self._allowed(s, j, profile, bits):
                    cand = Mosaic(frozenset(sides[1] | ({s} if j == 1 else set())),
                                  frozenset(sides[2] | ({s} if j == 2 else set())))
                    if mosaic_shape_ok(cand, self.space, self.max_side):
                        yield cand

    def minimal_fixes(self, state: Sequence[Mosaic], m: Mosaic, o: Obligation) -> List[Mosaic]:
        """Smallest mosaics that discharge o; every witness mosaic covers one of them."""
        sp = self.space
        bits = _side_bits(state, sp)
        i = o.side
        found: Dict[Mosaic, None] = {}
        if o.kind == "at":
            n = node(o.formula)
            heads = [t for t in sp.types if sp.holds(t, nom(n.label)) and sp.holds(t, n.children[0])]
            coupled = False
        else:
            body = child(o.formula)
            heads = [t for t in sp.types if sp.holds(t, body) and sp.coherent(o.rel, o.t, t)]
            coupled = sp.in_sigma(o.rel)
        for head in heads:
            profile = sp.profile(head)
            if not self._allowed(head, i, profile, bits):
                continue
            if not coupled:
                sides = {1: set(), 2: set()}
                sides[i].add(head)
                for cand in self._pair_if_needed(sides, profile, bits):
                    found.setdefault(cand, None)
                continue
            others = [(j, s) for j in (1, 2) for s in sorted(m.side(j)) if not (j == i and s == o.t)]
            if o.kind == "u":
                # ≡_U successors: one type per non-empty side serves every type there
                others = [(j, min(m.side(j))) for j in (1, 2) if m.side(j) and j != i]
            choices = []
            for j, s in others:
                succ = [x for x in sp.types if sp.coherent(o.rel, s, x) and self._allowed(x, j, profile, bits)]
                if not succ:
                    choices = None
                    break
                choices.append([(j, x) for x in succ])
            if choices is None:
                continue
            for combo in itertools.product(*choices):
                sides = {1: set(), 2: set()}
                sides[i].add(head)
                for j, x in combo:
                    sides[j].add(x)
                for cand in self._pair_if_needed(sides, profile, bits):
                    found.setdefault(cand, None)
        return sorted(found, key=Mosaic.key)

    def _graded_pool(self, state: Sequence[Mosaic]) -> List[Mosaic]:
        if self._pool is None:
            sp = self.space
            side_cap = self.max_side
            estimate = sum(2 ** sum(1 for t in sp.types if sp.profile(t) == p)
                           for p in {sp.profile(t) for t in sp.types}) ** 2
            if estimate > POOL_LIMIT:
                side_cap = 1 if side_cap is None else min(side_cap, 1)
                self.incomplete = True
            self._pool = mosaic_universe(sp, side_cap)
        bits = _side_bits(state, self.space)
        return [p for p in self._pool
                if all(bits[i] is None or self.space.global_bits(s) == bits[i] for i in (1, 2) for s in p.side(i))]

    # -- search ---------------------------------------------------------

    def first_unmet(self, state: Sequence[Mosaic]) -> Optional[Tuple[Mosaic, Obligation]]:
        for m in state:
            for o in self.space.obligations(m):
                if not _obligation_met_in(self.space, m, o, state, self.solver):
                    return m, o
        return None

    def _is_dead(self, state: Hypermosaic) -> bool:
        return any(extends(state, d) for d in self.dead)

    def _dfs(self, state: Hypermosaic) -> Optional[Hypermosaic]:
        self.nodes += 1
        if self.nodes > self._limit:
            raise _OutOfBudget()
        if self._is_dead(state):
            return None
        ordered = canonical(state)
        unmet = self.first_unmet(ordered)
        if unmet is None:
            return state
        m, o = unmet
        if o.kind == "count":
            found = self._graded_step(ordered, m, o)
        else:
            found = None
            for fix in self.minimal_fixes(ordered, m, o):
                nxt = normalize(ordered + (fix,), self.space, self.max_side)
                if nxt is None or nxt == state:
                    continue
                found = self._dfs(nxt)
                if found is not None:
                    break
        if found is None:
            self.dead.append(state)
        return found

    def _graded_step(self, ordered: Tuple[Mosaic, ...], m: Mosaic, o: Obligation) -> Optional[Hypermosaic]:
        pool = self._graded_pool(ordered)
        nogoods: List[FrozenSet[Mosaic]] = []
        while True:
            used = select_witness_pool(o.rel, m, ordered, pool, self.space, nogoods, self.solver)
            if not used:
                return None
            nxt = normalize(ordered + tuple(canonical(used)), self.space, self.max_side)
            if nxt is not None and nxt != frozenset(ordered):
                found = self._dfs(nxt)
                if found is not None:
                    return found
            nogoods.append(used)

    def survives(self, H) -> SearchOutcome:
        start = normalize(H, self.space, self.max_side)
        if start is None:
            return SearchOutcome(NO, None, 0)
        before = self.nodes
        self._limit = before + self.budget
        try:
            found = self._dfs(start)
        except _OutOfBudget:
            logger.info("Search budget of %d nodes exhausted", self.budget)
            self.nodes = before
            return SearchOutcome(UNKNOWN, None, self.budget)
        if found is None:
            return SearchOutcome(UNKNOWN if self.incomplete else NO, None, self.nodes - before)
        return SearchOutcome(YES, found, self.nodes - before)


def survives_search(H, space: TypeSpace, budget: int = 20000, max_side: Optional[int] = None,
                    solver: str = DEFAULT_SOLVER) -> SearchOutcome:
    """yes(H*) with H* self-witnessing and extending H, no, or unknown on budget exhaustion."""
    return HypermosaicSearch(space, budget, max_side, solver).survives(H)


# ----------------------------------------------------------------------
# Decision
# ----------------------------------------------------------------------

@dataclass
class Decision:
    separator_exists: Optional[bool]     # None when undecided within the budget
    mode: str
    pair: Optional[Tuple[int, int]] = None
    witness: Optional[Hypermosaic] = None
    nodes: int = 0
    pairs_checked: int = 0

    def to_json(self) -> Dict:
        out = {"separator_exists": self.separator_exists, "mode": self.mode,
               "nodes": self.nodes, "pairs_checked": self.pairs_checked}
        if self.pair is not None:
            out["pair"] = [hex(t) for t in self.pair]
        if self.witness is not None:
            out["witness"] = hyper_label(self.witness)
        return out


def decide(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId, mode: str = SEARCH,
           budget: int = 20000, max_side: Optional[int] = None, solver: str = DEFAULT_SOLVER,
           space: Optional[TypeSpace] = None, callback: Optional[Callable] = None) -> Decision:
    """Look for a surviving {({t1}, {t2})}; a survivor means no separator exists."""
    if mode not in MODES:
        raise ValueError(f"Unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    space = space or build_space(f1, f2, sigma, logic)
    pairs = initial_pairs(f1, f2, space)
    if callback:
        callback(f"Deciding over {len(pairs)} initial type pairs ({mode})")
    if mode == REFERENCE:
        state = eliminate_reference(f1, f2, sigma, logic, max_side=max_side, budget=budget,
                                    space=space, solver=solver, callback=callback)
        for t1, t2 in pairs:
            H = frozenset({Mosaic.of([t1], [t2])})
            if state.alive(H):
                return Decision(False, mode, (t1, t2), H, pairs_checked=len(pairs))
        return Decision(True, mode, pairs_checked=len(pairs))

    search = HypermosaicSearch(space, budget, max_side, solver)
    undecided = False
    for k, (t1, t2) in enumerate(pairs, 1):
        outcome = search.survives(frozenset({Mosaic.of([t1], [t2])}))
        if outcome.status == YES:
            logger.info("Pair (%s, %s) survives after %d nodes", hex(t1), hex(t2), search.nodes)
            return Decision(False, mode, (t1, t2), outcome.witness, search.nodes, k)
        if outcome.status == UNKNOWN:
            undecided = True
    return Decision(None if undecided else True, mode, nodes=search.nodes, pairs_checked=len(pairs))


def decide_separator_existence(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                               mode: str = SEARCH, budget: int = 20000, max_side: Optional[int] = None,
                               solver: str = DEFAULT_SOLVER) -> bool:
    """True iff an L(σ)-separator of f1 and f2 exists."""
    result = decide(f1, f2, sigma, logic, mode, budget, max_side, solver)
    if result.separator_exists is None:
        raise BudgetExceeded(f"separator existence undecided within {budget} search nodes",
                             {"nodes": result.nodes, "pairs": result.pairs_checked})
    return result.separator_exists
