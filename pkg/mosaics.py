"""
Mosaics and hypermosaics over a type space.

A mosaic is a pair (m1, m2) of type sets meant to be realized at mutually
bisimilar points of two models; a hypermosaic is a set of mosaics realized
by one common bisimulation. This module holds the shared vocabulary used by
the warm-up, the hypermosaic engines, the counting functions and the model
realization:

- TypeSpace: closure, candidate types, σ-profile masks and cached coherence
- legality predicates (σ-consistency, nominal cleanliness, @/U consistency)
- extension, obligations and ungraded witness checks
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from formulas import (
    AT, ATLEAST, ATMOST, DIA, DIAU, NOM, PROP, Closure, FormulaId, LogicId, Signature,
    child, kind, node, nom, print_formula,
)
from type_elimination import enumerate_types

logger = logging.getLogger(__name__)

UNIVERSAL = "U"


class BudgetExceeded(RuntimeError):
    """An enumeration outgrew its configured budget."""

    def __init__(self, message: str, counts: Optional[Dict[str, int]] = None):
        super().__init__(message)
        self.counts = counts or {}


class Mosaic(NamedTuple):
    m1: FrozenSet[int]
    m2: FrozenSet[int]

    @classmethod
    def of(cls, m1: Iterable[int] = (), m2: Iterable[int] = ()) -> "Mosaic":
        return cls(frozenset(m1), frozenset(m2))

    def side(self, i: int) -> FrozenSet[int]:
        return self.m1 if i == 1 else self.m2

    def types(self) -> FrozenSet[int]:
        return self.m1 | self.m2

    def covered_by(self, other: "Mosaic") -> bool:
        return self.m1 <= other.m1 and self.m2 <= other.m2

    def union(self, other: "Mosaic") -> "Mosaic":
        return Mosaic(self.m1 | other.m1, self.m2 | other.m2)

    def key(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return (tuple(sorted(self.m1)), tuple(sorted(self.m2)))

    def label(self) -> str:
        fmt = lambda side: "{" + ",".join(hex(t) for t in sorted(side)) + "}"
        return f"({fmt(self.m1)}|{fmt(self.m2)})"


Hypermosaic = FrozenSet[Mosaic]


def hypermosaic(*mosaics: Mosaic) -> Hypermosaic:
    return frozenset(mosaics)


def canonical(H: Iterable[Mosaic]) -> Tuple[Mosaic, ...]:
    return tuple(sorted(H, key=Mosaic.key))


def hyper_label(H: Iterable[Mosaic]) -> str:
    return "{" + " ".join(m.label() for m in canonical(H)) + "}"


@dataclass(frozen=True)
class Obligation:
    """Something a witness must supply for a mosaic."""
    kind: str          # "dia", "at", "u" or "count"
    side: int = 0
    t: int = -1
    formula: int = -1
    rel: str = ""

    def label(self) -> str:
        if self.kind == "count":
            return f"counting for {self.rel}"
        return f"{print_formula(self.formula)} in type {hex(self.t)} on side {self.side}"


class TypeSpace:
    """Types over a closure, with the masks and relations every engine needs."""

    def __init__(self, closure: Closure, sigma: Signature, logic: LogicId,
                 types: Optional[Sequence[int]] = None):
        self.closure = closure
        self.sigma = sigma
        self.logic = logic
        self.types: List[int] = list(types) if types is not None else enumerate_types(closure, logic)
        bit = closure.bit
        self.sigma_mask = sum(bit(f) for f in closure.members
                              if (kind(f) == PROP and node(f).label in sigma.props)
                              or (kind(f) == NOM and node(f).label in sigma.noms))
        self.at_mask = sum(bit(f) for f in closure.members if kind(f) == AT)
        self.u_mask = sum(bit(f) for f in closure.members if kind(f) == DIAU)
        self.rels = sorted({node(f).label for f in closure.members if kind(f) in (DIA, ATLEAST, ATMOST)})
        self.sigma_rels = [r for r in self.rels if r in sigma.rels]
        self.graded = logic.graded
        grades = [node(f).grade for f in closure.members if kind(f) in (ATLEAST, ATMOST)]
        self.kappa = max(grades + ([1] if self.rels else []), default=0)
        self.lam = self.kappa * len(self.types)
        self._dias: Dict[str, List[FormulaId]] = {
            r: [f for f in closure.members if kind(f) == DIA and node(f).label == r] for r in self.rels
        }
        self._coherent: Dict[Tuple[str, int, int], bool] = {}
        self._noms: Dict[int, Tuple[str, ...]] = {}

    # -- type-level helpers ------------------------------------------------

    def holds(self, t: int, f: FormulaId) -> bool:
        return self.closure.holds(t, f)

    def nominals(self, t: int) -> Tuple[str, ...]:
        hit = self._noms.get(t)
        if hit is None:
            hit = tuple(self.closure.nominal_in(t))
            self._noms[t] = hit
        return hit

    def sigma_nominals(self, t: int) -> Tuple[str, ...]:
        return tuple(a for a in self.nominals(t) if a in self.sigma.noms)

    def profile(self, t: int) -> int:
        return t & self.sigma_mask

    def global_bits(self, t: int) -> int:
        return t & (self.at_mask | self.u_mask)

    def equivalent(self, t: int, s: int) -> bool:
        """t ≡ s on the @ members (and on the <U> members with U)."""
        if self.logic.has_u:
            return t & self.u_mask == s & self.u_mask
        if self.logic.has_at:
            return t & self.at_mask == s & self.at_mask
        return True

    def coherent(self, rel: str, t: int, s: int) -> bool:
        """t ⤳_R s, including the @/U agreement of the richer logics."""
        key = (rel, t, s)
        hit = self._coherent.get(key)
        if hit is not None:
            return hit
        if rel == UNIVERSAL:
            ok = t & self.u_mask == s & self.u_mask
        else:
            ok = self.equivalent(t, s) and all(
                self.holds(t, f) or not self.holds(s, child(f)) for f in self._dias.get(rel, ())
            )
        self._coherent[key] = ok
        return ok

    def mosaic_coherent(self, rel: str, m: Mosaic, mp: Mosaic) -> bool:
        """m ⤳_R m′: every type on each side has a coherent type on that side of m′."""
        return all(any(self.coherent(rel, t, s) for s in mp.side(i))
                   for i in (1, 2) for t in m.side(i))

    def in_sigma(self, rel: str) -> bool:
        return rel == UNIVERSAL or rel in self.sigma.rels

    # -- obligations and witnesses -----------------------------------------

    def obligations(self, m: Mosaic) -> List[Obligation]:
        """Every obligation of m, in a fixed order."""
        out: List[Obligation] = []
        if self.graded:
            out.extend(Obligation("count", rel=r) for r in self.rels)
        for i in (1, 2):
            for t in sorted(m.side(i)):
                for f in self.closure.members:
                    k = kind(f)
                    if k == DIA and not self.graded and self.holds(t, f):
                        out.append(Obligation("dia", i, t, f, node(f).label))
                    elif k == AT and self.holds(t, f):
                        out.append(Obligation("at", i, t, f))
                    elif k == DIAU and self.holds(t, f):
                        out.append(Obligation("u", i, t, f, UNIVERSAL))
        return out

    def obligation_met(self, m: Mosaic, o: Obligation, mp: Mosaic) -> bool:
        """Whether mosaic mp discharges the (ungraded) obligation o of m."""
        side = mp.side(o.side)
        if o.kind == "dia":
            body = child(o.formula)
            if not any(self.holds(s, body) and self.coherent(o.rel, o.t, s) for s in side):
                return False
            return not self.in_sigma(o.rel) or self.mosaic_coherent(o.rel, m, mp)
        if o.kind == "at":
            n = node(o.formula)
            return any(self.holds(s, nom(n.label)) and self.holds(s, n.children[0]) for s in side)
        if o.kind == "u":
            body = child(o.formula)
            if not any(self.holds(s, body) for s in side):
                return False
            return self.mosaic_coherent(UNIVERSAL, m, mp)
        raise ValueError(f"obligation kind {o.kind!r} is not checked mosaic by mosaic")


# ----------------------------------------------------------------------
# Legality
# ----------------------------------------------------------------------

def _as_mosaics(x) -> List[Mosaic]:
    return [x] if isinstance(x, Mosaic) else list(x)


def sigma_consistent(x, space: TypeSpace) -> bool:
    """All types of each mosaic agree on σ-propositions and σ-nominals."""
    for m in _as_mosaics(x):
        profiles = {space.profile(t) for t in m.types()}
        if len(profiles) > 1:
            return False
    return True


def nominal_clean(H: Iterable[Mosaic], space: TypeSpace) -> bool:
    """Per side and nominal: one a-type at most, in one mosaic at most."""
    seen: Dict[Tuple[int, str], Tuple[int, Mosaic]] = {}
    for m in H:
        for i in (1, 2):
            for t in m.side(i):
                for a in space.nominals(t):
                    prev = seen.get((i, a))
                    if prev is not None and prev != (t, m):
                        return False
                    seen[(i, a)] = (t, m)
    return True


def _side_agrees(H: Iterable[Mosaic], mask: int) -> bool:
    if not mask:
        return True
    H = list(H)
    for i in (1, 2):
        values = {t & mask for m in H for t in m.side(i)}
        if len(values) > 1:
            return False
    return True


def at_consistent(H: Iterable[Mosaic], space: TypeSpace) -> bool:
    """Per side, all types of H agree on every @a χ member."""
    return _side_agrees(H, space.at_mask)


def u_consistent(H: Iterable[Mosaic], space: TypeSpace) -> bool:
    """Per side, all types of H agree on every <U> χ member."""
    return _side_agrees(H, space.u_mask)


def mosaic_shape_ok(m: Mosaic, space: TypeSpace, max_side: Optional[int] = None) -> bool:
    if not m.m1 and not m.m2:
        return False
    if max_side is not None and (len(m.m1) > max_side or len(m.m2) > max_side):
        return False
    both = bool(m.m1) and bool(m.m2)
    if space.logic.has_u and not both:
        return False
    # an @-logic links the two points named by a σ-nominal, so they share a mosaic
    if space.logic.has_at and not both and any(space.sigma_nominals(t) for t in m.types()):
        return False
    return sigma_consistent(m, space)


def legal(H: Iterable[Mosaic], space: TypeSpace, max_side: Optional[int] = None) -> bool:
    """Membership in the initial set of the elimination."""
    H = list(H)
    if not H:
        return False
    if not all(mosaic_shape_ok(m, space, max_side) for m in H):
        return False
    if not nominal_clean(H, space):
        return False
    if space.logic.has_at and not at_consistent(H, space):
        return False
    if space.logic.has_u and not u_consistent(H, space):
        return False
    return True


def extends(Hp: Iterable[Mosaic], H: Iterable[Mosaic]) -> bool:
    """Every mosaic of H is covered side-wise by some mosaic of Hp."""
    Hp = list(Hp)
    return all(any(m.covered_by(mp) for mp in Hp) for m in H)


def ungraded_witness(space: TypeSpace, Hp: Iterable[Mosaic], m: Mosaic,
                     H: Iterable[Mosaic]) -> Tuple[bool, Optional[Obligation]]:
    """Hp extends H and discharges every dia/@/U obligation of m."""
    Hp = list(Hp)
    if not extends(Hp, H):
        return False, Obligation("extension")
    for o in space.obligations(m):
        if o.kind == "count":
            continue
        if not any(space.obligation_met(m, o, mp) for mp in Hp):
            return False, o
    return True, None


# ----------------------------------------------------------------------
# Universe
# ----------------------------------------------------------------------

def _subsets(items: Sequence[int], max_size: int) -> Iterator[FrozenSet[int]]:
    for k in range(0, max_size + 1):
        for combo in itertools.combinations(items, k):
            yield frozenset(combo)


def mosaic_universe(space: TypeSpace, max_side: Optional[int] = None,
                    types: Optional[Sequence[int]] = None, limit: Optional[int] = None) -> List[Mosaic]:
    """All mosaics that can occur in a legal hypermosaic, canonically ordered."""
    pool = list(types) if types is not None else space.types
    bound = max_side if max_side is not None else len(pool)
    by_profile: Dict[int, List[int]] = {}
    for t in pool:
        by_profile.setdefault(space.profile(t), []).append(t)
    out: List[Mosaic] = []
    for profile in sorted(by_profile):
        group = sorted(by_profile[profile])
        if limit is not None:
            per_side = sum(math.comb(len(group), k) for k in range(min(bound, len(group)) + 1))
            if per_side * per_side > limit:
                raise BudgetExceeded(f"mosaic universe exceeds {limit}",
                                     {"types": len(pool), "side_subsets": per_side})
        sides = [s for s in _subsets(group, bound)
                 if nominal_clean([Mosaic(s, frozenset())], space)
                 and at_consistent([Mosaic(s, frozenset())], space)
                 and u_consistent([Mosaic(s, frozenset())], space)]
        for s1 in sides:
            for s2 in sides:
                m = Mosaic(s1, s2)
                if mosaic_shape_ok(m, space, max_side):
                    out.append(m)
    out.sort(key=Mosaic.key)
    logger.debug("Mosaic universe: %d mosaics over %d types", len(out), len(pool))
    return out
