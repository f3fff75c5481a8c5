"""
Finite Kripke models for the hybrid and graded logics.

Key features:
- Model with JSON load/save and σ-reducts
- Bottom-up model checking (graded clauses count successors exactly)
- σ-bisimulation checks for all six logics; the graded clauses use
  bipartite maximum matching (networkx), the @ clause links named points
  and U demands a total, surjective relation
- Greatest bisimulation by clause-violation removal
- Canonical small-model enumeration, a bounded joint-consistency oracle
  and the realization of self-witnessing hypermosaics as model pairs
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import bipartite

from formulas import (
    AND, AT, ATLEAST, ATMOST, DIA, DIAU, NOM, NOT, PROP, TOP,
    FormulaId, LogicId, Signature, node, print_formula, prop, signature_of, subformulas,
)
from counting import STRONG, find_counting
from hypermosaic import self_witnessing
from mosaics import Hypermosaic, Mosaic, TypeSpace, canonical

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class ModelError(ValueError):
    """Malformed model, or a formula mentioning an unassigned nominal."""


class RealizationError(ValueError):
    """A hypermosaic handed to the realization misses a precondition."""


@dataclass
class Model:
    worlds: int
    rel: Dict[str, Set[Pair]] = field(default_factory=dict)
    val: Dict[str, Set[int]] = field(default_factory=dict)
    nom: Dict[str, int] = field(default_factory=dict)
    _ext: Dict[FormulaId, FrozenSet[int]] = field(default_factory=dict, repr=False, compare=False)
    _succ: Dict[str, List[List[int]]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.rel = {r: set(map(tuple, pairs)) for r, pairs in self.rel.items()}
        self.val = {p: set(ws) for p, ws in self.val.items()}
        self.validate()

    def validate(self) -> None:
        if self.worlds < 1:
            raise ModelError("a model needs at least one world")
        in_range = range(self.worlds)
        for r, pairs in self.rel.items():
            if r == "U":
                raise ModelError("U is implicit and cannot be stored")
            for a, b in pairs:
                if a not in in_range or b not in in_range:
                    raise ModelError(f"edge ({a}, {b}) of {r} is outside 0..{self.worlds - 1}")
        for p, ws in self.val.items():
            if any(w not in in_range for w in ws):
                raise ModelError(f"valuation of {p} is outside 0..{self.worlds - 1}")
        for a, w in self.nom.items():
            if w not in in_range:
                raise ModelError(f"nominal {a} names a missing world {w}")

    def successors(self, rel: str, w: int) -> List[int]:
        table = self._succ.get(rel)
        if table is None:
            table = [[] for _ in range(self.worlds)]
            for a, b in sorted(self.rel.get(rel, ())):
                table[a].append(b)
            self._succ[rel] = table
        return table[w]

    def restrict(self, sigma: Signature) -> "Model":
        """The σ-reduct."""
        return Model(self.worlds,
                     {r: set(e) for r, e in self.rel.items() if r in sigma.rels},
                     {p: set(ws) for p, ws in self.val.items() if p in sigma.props},
                     {a: w for a, w in self.nom.items() if a in sigma.noms})

    def to_dict(self) -> Dict:
        return {
            "worlds": self.worlds,
            "rel": {r: sorted([a, b] for a, b in pairs) for r, pairs in sorted(self.rel.items())},
            "val": {p: sorted(ws) for p, ws in sorted(self.val.items())},
            "nom": dict(sorted(self.nom.items())),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Model":
        try:
            return cls(int(data["worlds"]),
                       {r: {(int(a), int(b)) for a, b in pairs} for r, pairs in data.get("rel", {}).items()},
                       {p: {int(w) for w in ws} for p, ws in data.get("val", {}).items()},
                       {a: int(w) for a, w in data.get("nom", {}).items()})
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed model: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Model":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ModelError(f"model is not valid JSON: {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "Model":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


# ----------------------------------------------------------------------
# Model checking
# ----------------------------------------------------------------------

def extension(M: Model, f: FormulaId) -> FrozenSet[int]:
    """The set of worlds of M where f holds."""
    hit = M._ext.get(f)
    if hit is not None:
        return hit
    everything = frozenset(range(M.worlds))
    for g in subformulas(f):
        if g in M._ext:
            continue
        n = node(g)
        k = n.kind
        if k == TOP:
            ext = everything
        elif k == PROP:
            ext = frozenset(M.val.get(n.label, ()))
        elif k == NOM:
            if n.label not in M.nom:
                raise ModelError(f"nominal {n.label} is not assigned")
            ext = frozenset((M.nom[n.label],))
        elif k == NOT:
            ext = everything - M._ext[n.children[0]]
        elif k == AND:
            ext = M._ext[n.children[0]] & M._ext[n.children[1]]
        elif k == DIA:
            inner = M._ext[n.children[0]]
            ext = frozenset(w for w in everything if any(v in inner for v in M.successors(n.label, w)))
        elif k == DIAU:
            ext = everything if M._ext[n.children[0]] else frozenset()
        elif k == AT:
            if n.label not in M.nom:
                raise ModelError(f"nominal {n.label} is not assigned")
            ext = everything if M.nom[n.label] in M._ext[n.children[0]] else frozenset()
        elif k in (ATLEAST, ATMOST):
            inner = M._ext[n.children[0]]
            counts = [sum(1 for v in M.successors(n.label, w) if v in inner) for w in range(M.worlds)]
            if k == ATLEAST:
                ext = frozenset(w for w in everything if counts[w] >= n.grade)
            else:
                ext = frozenset(w for w in everything if counts[w] <= n.grade)
        else:
            raise ModelError(f"unknown connective {k}")
        M._ext[g] = ext
    return M._ext[f]


def model_check(M: Model, w: int, f: FormulaId) -> bool:
    if not 0 <= w < M.worlds:
        raise ModelError(f"world {w} is outside 0..{M.worlds - 1}")
    return w in extension(M, f)


# ----------------------------------------------------------------------
# Bisimulations
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    clause: str           # atom, nom, forth, back, gforth, gback, at, U-forth, U-back
    pair: Optional[Pair]
    detail: str = ""

    def __str__(self) -> str:
        where = f" at {self.pair}" if self.pair is not None else ""
        return f"({self.clause}){where}: {self.detail}"


def _local_ok(w: int, v: int, M1: Model, M2: Model, sigma: Signature) -> Optional[Violation]:
    for p in sorted(sigma.props):
        if (w in M1.val.get(p, ())) != (v in M2.val.get(p, ())):
            return Violation("atom", (w, v), f"{p} differs")
    for a in sorted(sigma.noms):
        if (M1.nom.get(a) == w) != (M2.nom.get(a) == v):
            return Violation("nom", (w, v), f"'{a} differs")
    return None


def _matching_size(left: List[int], right: List[int], Z: FrozenSet[Pair]) -> int:
    G = nx.Graph()
    top = [("l", x) for x in left]
    G.add_nodes_from(top)
    G.add_nodes_from(("r", y) for y in right)
    G.add_edges_from((("l", x), ("r", y)) for x in left for y in right if (x, y) in Z)
    matching = bipartite.hopcroft_karp_matching(G, top_nodes=top)
    return sum(1 for k in matching if k[0] == "l")


def _step_ok(w: int, v: int, M1: Model, M2: Model, sigma: Signature, logic: LogicId,
             Z: FrozenSet[Pair]) -> Optional[Violation]:
    for r in sorted(sigma.rels):
        s1, s2 = M1.successors(r, w), M2.successors(r, v)
        if logic.graded:
            size = _matching_size(s1, s2, Z)
            if size < len(s1):
                return Violation("gforth", (w, v), f"{r}-successors of {w} cannot be matched injectively")
            if size < len(s2):
                return Violation("gback", (w, v), f"{r}-successors of {v} cannot be matched injectively")
            continue
        for x in s1:
            if not any((x, y) in Z for y in s2):
                return Violation("forth", (w, v), f"{r}-successor {x} has no partner")
        for y in s2:
            if not any((x, y) in Z for x in s1):
                return Violation("back", (w, v), f"{r}-successor {y} has no partner")
    return None


def _global_ok(Z: FrozenSet[Pair], M1: Model, M2: Model, sigma: Signature,
               logic: LogicId) -> Optional[Violation]:
    if logic.has_at:
        for a in sorted(sigma.noms):
            if a in M1.nom and a in M2.nom and (M1.nom[a], M2.nom[a]) not in Z:
                return Violation("at", (M1.nom[a], M2.nom[a]), f"points named '{a} are not linked")
    if logic.has_u or sigma.includes_U:
        left = {w for w, _ in Z}
        right = {v for _, v in Z}
        for w in range(M1.worlds):
            if w not in left:
                return Violation("U-forth", None, f"world {w} of the first model is unlinked")
        for v in range(M2.worlds):
            if v not in right:
                return Violation("U-back", None, f"world {v} of the second model is unlinked")
    return None


def is_bisimulation(Z, M1: Model, M2: Model, sigma: Signature,
                    logic: LogicId) -> Tuple[bool, Optional[Violation]]:
    """Check every clause of the logic's σ-bisimulation; report the first violation."""
    Z = frozenset(Z)
    for w, v in sorted(Z):
        if not (0 <= w < M1.worlds and 0 <= v < M2.worlds):
            return False, Violation("domain", (w, v), "pair outside the models")
        bad = _local_ok(w, v, M1, M2, sigma) or _step_ok(w, v, M1, M2, sigma, logic, Z)
        if bad:
            return False, bad
    bad = _global_ok(Z, M1, M2, sigma, logic)
    if bad:
        return False, bad
    return True, None


def greatest_bisimulation(M1: Model, M2: Model, sigma: Signature, logic: LogicId) -> FrozenSet[Pair]:
    """Largest σ-bisimulation (empty when none satisfies the global clauses)."""
    Z = {(w, v) for w in range(M1.worlds) for v in range(M2.worlds)
         if _local_ok(w, v, M1, M2, sigma) is None}
    changed = True
    while changed:
        changed = False
        frozen = frozenset(Z)
        for pair in sorted(frozen):
            if _step_ok(pair[0], pair[1], M1, M2, sigma, logic, frozen) is not None:
                Z.discard(pair)
                changed = True
    result = frozenset(Z)
    if _global_ok(result, M1, M2, sigma, logic) is not None:
        return frozenset()
    return result


# ----------------------------------------------------------------------
# Small-model enumeration and oracles
# ----------------------------------------------------------------------

def _permute_encoding(n: int, rels: Tuple[int, ...], props: Tuple[int, ...], noms: Tuple[int, ...],
                      perm: Tuple[int, ...]) -> Tuple:
    def edges(mask: int) -> int:
        out = 0
        for a in range(n):
            for b in range(n):
                if mask >> (a * n + b) & 1:
                    out |= 1 << (perm[a] * n + perm[b])
        return out

    def worlds(mask: int) -> int:
        return sum(1 << perm[w] for w in range(n) if mask >> w & 1)

    return (tuple(edges(m) for m in rels), tuple(worlds(m) for m in props), tuple(perm[w] for w in noms))


def enumerate_models(signature: Signature, max_worlds: int, min_worlds: int = 1) -> Iterator[Model]:
    """Models over the signature up to isomorphism, by size then encoding."""
    rel_names = sorted(signature.rels)
    prop_names = sorted(signature.props)
    nom_names = sorted(signature.noms)
    for n in range(max(1, min_worlds), max_worlds + 1):
        perms = [p for p in itertools.permutations(range(n)) if p != tuple(range(n))]
        for rels in itertools.product(range(1 << (n * n)), repeat=len(rel_names)):
            for props in itertools.product(range(1 << n), repeat=len(prop_names)):
                for noms in itertools.product(range(n), repeat=len(nom_names)):
                    own = (rels, props, noms)
                    if any(_permute_encoding(n, rels, props, noms, p) < own for p in perms):
                        continue
                    yield Model(
                        n,
                        {r: {(a, b) for a in range(n) for b in range(n) if m >> (a * n + b) & 1}
                         for r, m in zip(rel_names, rels)},
                        {p: {w for w in range(n) if m >> w & 1} for p, m in zip(prop_names, props)},
                        dict(zip(nom_names, noms)),
                    )


def find_model(f: FormulaId, logic: Optional[LogicId] = None,
               max_worlds: int = 3) -> Optional[Tuple[Model, int]]:
    """First pointed model of f in canonical order, or None up to the bound."""
    for M in enumerate_models(signature_of(f), max_worlds):
        ext = extension(M, f)
        if ext:
            return M, min(ext)
    return None


@dataclass
class Witness:
    """Pointed models of f1 and f2 linked by a σ-bisimulation."""
    m1: Model
    w1: int
    m2: Model
    w2: int
    z: FrozenSet[Pair]

    def to_dict(self) -> Dict:
        return {"m1": self.m1.to_dict(), "w1": self.w1, "m2": self.m2.to_dict(), "w2": self.w2,
                "z": sorted([a, b] for a, b in self.z)}


def joint_consistency_oracle(f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
                             max_worlds: int = 3, seed: int = 0) -> Optional[Witness]:
    """
    Search pointed models of f1 and f2 with σ-bisimilar points.

    None means no witness up to `max_worlds` worlds per side; it is not a
    proof of joint inconsistency. Seed 0 pairs models in canonical order; any
    other seed shuffles the pairing order reproducibly, so a different
    witness may come back but the verdict is the same.
    """
    # σ-symbols of the other side must vary on both sides as well
    shared = sigma & signature_of(f1, f2)
    sat1 = [(M, extension(M, f1)) for M in enumerate_models(signature_of(f1) | shared, max_worlds)]
    sat1 = [(M, ext) for M, ext in sat1 if ext]
    sat2 = [(M, extension(M, f2)) for M in enumerate_models(signature_of(f2) | shared, max_worlds)]
    sat2 = [(M, ext) for M, ext in sat2 if ext]
    if seed:
        rng = np.random.default_rng(seed)
        sat1 = [sat1[j] for j in rng.permutation(len(sat1))]
        sat2 = [sat2[j] for j in rng.permutation(len(sat2))]
    logger.debug("Oracle: %d models of f1, %d models of f2", len(sat1), len(sat2))
    for M1, ext1 in sat1:
        for M2, ext2 in sat2:
            Z = greatest_bisimulation(M1, M2, sigma, logic)
            for w1, w2 in sorted(Z):
                if w1 in ext1 and w2 in ext2:
                    ok, why = is_bisimulation(Z, M1, M2, sigma, logic)
                    if not ok:
                        raise AssertionError(f"greatest bisimulation failed its own check: {why}")
                    return Witness(M1, w1, M2, w2, Z)
    return None


# ----------------------------------------------------------------------
# Realization of hypermosaics
# ----------------------------------------------------------------------

@dataclass
class Realization:
    """Models and bisimulation realizing a hypermosaic; points[(i, t, m)] is a world of M_i."""
    m1: Model
    m2: Model
    z: FrozenSet[Pair]
    points: Dict[Tuple[int, int, Mosaic], int]

    def model(self, i: int) -> Model:
        return self.m1 if i == 1 else self.m2


def _nominal_world(space: TypeSpace, side_points: Dict[Tuple[int, Mosaic], List[int]],
                   a: str) -> Optional[int]:
    for (t, _), copies in side_points.items():
        if a in space.nominals(t):
            return copies[0]
    return None


def realize_hypermosaic(H_star: Hypermosaic, space: TypeSpace,
                        counting: Optional[Dict[Tuple[Mosaic, str], "object"]] = None) -> Realization:
    """
    Build M1, M2 and Z with (t, m) realized at points Z-linked across m.

    Ungraded logics use one point per (t, m). Graded logics need a strong
    counting function per mosaic and relation; missing ones are searched
    with the counting module.
    """
    mosaics = canonical(H_star)
    ok, failing = self_witnessing(H_star, space)
    if not ok:
        raise RealizationError(f"hypermosaic is not self-witnessing: {failing}")

    tables: Dict[Tuple[Mosaic, str], Dict] = {}
    copies = 1
    if space.graded:
        counting = dict(counting or {})
        for m in mosaics:
            for r in space.rels:
                F = counting.get((m, r))
                if F is None:
                    F = find_counting(r, m, H_star, space, STRONG)
                if F is None:
                    raise RealizationError(f"no {r}-counting function for mosaic {m.label()}")
                tables[(m, r)] = F.entries
                copies = max([copies] + [int(v) for v in F.entries.values()])

    models = []
    points: Dict[Tuple[int, int, Mosaic], int] = {}
    side_worlds: List[Dict[Tuple[int, Mosaic], List[int]]] = []
    for i in (1, 2):
        placed: Dict[Tuple[int, Mosaic], List[int]] = {}
        n = 0
        for m in mosaics:
            for t in sorted(m.side(i)):
                k = 1 if space.nominals(t) else copies
                placed[(t, m)] = list(range(n, n + k))
                points[(i, t, m)] = n
                n += k
        extra = {}
        for a in space.closure.nom0:
            if _nominal_world(space, placed, a) is None:
                extra[a] = n
                n += 1
        if n == 0:
            raise RealizationError(f"side {i} of the hypermosaic is empty")
        val: Dict[str, Set[int]] = {}
        for p in sorted({node(f).label for f in space.closure.members if node(f).kind == PROP}):
            val[p] = {w for (t, _), ws in placed.items() if space.holds(t, prop(p)) for w in ws}
        noms = {a: (extra[a] if a in extra else _nominal_world(space, placed, a)) for a in space.closure.nom0}
        rel: Dict[str, Set[Pair]] = {r: set() for r in space.rels}
        for (t, m), ws in placed.items():
            for r in space.rels:
                if space.graded:
                    for (t0, i0, mp, s), count in sorted(tables[(m, r)].items(), key=_entry_key):
                        if t0 != t or i0 != i or not count:
                            continue
                        targets = placed[(s, mp)][:int(count)]
                        rel[r].update((w, x) for w in ws for x in targets)
                else:
                    for mp in mosaics:
                        if space.in_sigma(r) and not space.mosaic_coherent(r, m, mp):
                            continue
                        for s in mp.side(i):
                            if space.coherent(r, t, s):
                                rel[r].update((w, x) for w in ws for x in placed[(s, mp)])
        models.append(Model(n, rel, val, noms))
        side_worlds.append(placed)

    Z = set()
    for m in mosaics:
        for t in m.m1:
            for s in m.m2:
                Z.update((w, v) for w in side_worlds[0][(t, m)] for v in side_worlds[1][(s, m)])
    logger.debug("Realized %d mosaics in models of %d and %d worlds",
                 len(mosaics), models[0].worlds, models[1].worlds)
    return Realization(models[0], models[1], frozenset(Z), points)


def _entry_key(item):
    (t, i, mp, s), _ = item
    return (t, i, mp.key(), s)


def truth_lemma_failures(real: Realization, space: TypeSpace) -> List[str]:
    """Closure members whose model-checked truth disagrees with the type at its point."""
    failures = []
    for (i, t, m), w in sorted(real.points.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].key())):
        M = real.model(i)
        for f in space.closure.members:
            if model_check(M, w, f) != space.holds(t, f):
                failures.append(f"side {i}, type {hex(t)} in {m.label()}: {print_formula(f)}")
    return failures
