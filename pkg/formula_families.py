"""
Formula families for benchmarks, stress tests and worked instances.

Key features:
- Power-tower family phi_n (DAG-shared box towers)
- Motivation pair built from psi_a, psi_R, psi_S; candidate instantiations
  are checked with the joint-consistency oracle and the separator
  decision before one is emitted
- Size lower-bound pair for H@U / G@U with an explicit counter encoding
  (position bits, S-depth register, carry and expected-bit registers)
- Parity pair phi_even / chi_n over E, S, min
- Seeded random pairs (numpy) within a closure-size budget
- Emission of formula files, a manifest JSON and a DAG-size growth CSV

Lower-bound encoding, per reachable point:
    c_k   position inside the current R-segment, mod 2^n (increments along R)
    d_k   S-depth of the spine point the R-part hangs off (copied along R)
    low   all r-bits at earlier positions of the segment are set
    exp   expected value of bit d of the next segment (r xor low at c = d)
    armed at least one full segment boundary lies behind this point
    far   S-depth is 2^n or more; no counter checks below such points
Property (1) is the check r <-> exp at c = d once armed; property (2)
forbids a segment whose bits are all set.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from formulas import (
    AND, DIA, NOT, STORE, FormulaId, LogicId, Node, Signature, atleast, atmost, big_and, big_or, bottom,
    box, box_power, box_u, closure_of, conj, dag_size, dia, dia_u, disj, iff, implies, modal_depth,
    neg, node, nom, print_formula, prop, signature_of, subformulas, top, translate_graded, tree_size,
    at,
)
from hypermosaic import SEARCH, decide
from kripke import joint_consistency_oracle
from type_elimination import satisfiable

logger = logging.getLogger(__name__)

PHI_N = "phi_n"
MOTIVATION = "motivation"
LOWER_BOUND = "lower_bound"
PHI_EVEN = "phi_even"
CHI_N = "chi_n"
RANDOM = "random"
FAMILIES = (PHI_N, MOTIVATION, LOWER_BOUND, PHI_EVEN, CHI_N, RANDOM)

FILE_SUFFIX = ".hml"


class GeneratorError(ValueError):
    """Invalid family parameters or a rejected instantiation."""


# ----------------------------------------------------------------------
# Family instances
# ----------------------------------------------------------------------

@dataclass
class FamilyInstance:
    """Named formulas of one generated instance (roles f1/f2 for pairs)."""
    family: str
    params: Dict
    logic: LogicId
    formulas: Dict[str, FormulaId]
    sigma: Optional[Signature] = None
    notes: Dict = field(default_factory=dict)

    def pair(self) -> Tuple[FormulaId, FormulaId, Signature]:
        if self.sigma is None or "f1" not in self.formulas:
            raise GeneratorError(f"{self.family} does not produce a separation pair")
        return self.formulas["f1"], self.formulas["f2"], self.sigma

    def stats_rows(self) -> List[Dict]:
        return [{"family": self.family, "n": self.params.get("n"), "role": role,
                 "dag_size": dag_size(f), "tree_size": tree_size(f), "modal_depth": modal_depth(f)}
                for role, f in self.formulas.items()]


# ----------------------------------------------------------------------
# phi_n
# ----------------------------------------------------------------------

def gen_phi_n(n: int) -> FormulaId:
    """[R]a & [S]a & /\\_{1<=i<n} [R]^i [S]false & [R]^n false & [S][S]false."""
    if n < 2:
        raise GeneratorError(f"phi_n needs n >= 2, got {n}")
    a = nom("a")
    parts = [box("R", a), box("S", a)]
    parts += [box_power("R", i, box("S", bottom())) for i in range(1, n)]
    parts += [box_power("R", n, bottom()), box_power("S", 2, bottom())]
    return big_and(parts)


# ----------------------------------------------------------------------
# Motivation pair
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MotivationChoice:
    sigma: Signature
    psi_a: FormulaId
    psi_r: FormulaId
    psi_s: FormulaId
    label: str


def _motivation_choices() -> List[MotivationChoice]:
    p = prop("p")
    a = nom("a")
    default = MotivationChoice(
        Signature.of(rels=("R", "S"), props=("p", "q")),
        big_and([a, dia("R", p), dia("S", p)]),
        box("S", neg(p)),
        big_and([box("R", neg(p)), dia("R", top()), dia("S", top())]),
        "default",
    )
    fallback = MotivationChoice(Signature.of(rels=("R", "S"), props=("p",)), a, p, neg(p), "fallback")
    return [default, fallback]


def motivation_pair(choice: MotivationChoice) -> Tuple[FormulaId, FormulaId]:
    f1 = conj(dia("R", dia("R", choice.psi_a)), dia("S", dia("S", choice.psi_a)))
    f2 = conj(box("R", box("R", choice.psi_r)), box("S", box("S", choice.psi_s)))
    return f1, f2


def check_motivation(choice: MotivationChoice, max_worlds: int = 2,
                     budget: int = 20000) -> Tuple[bool, str, Dict]:
    """
    Check the side conditions of a motivation instantiation.

    psi_a must be jointly consistent with psi_R and with psi_S but not with
    psi_R & psi_S (all three decided), psi_a must have a as a conjunct and
    a must be the only nominal, outside sigma. Bounded oracle witnesses for
    the consistent pairs are recorded as evidence.
    """
    evidence: Dict = {}
    if nom("a") not in _conjuncts(choice.psi_a):
        return False, "psi_a is not of the form psi' & a", evidence
    if "a" in choice.sigma.noms:
        return False, "a must not be in sigma", evidence
    noms = signature_of(choice.psi_a, choice.psi_r, choice.psi_s).noms
    if noms - {"a"}:
        return False, f"unexpected nominals {sorted(noms - {'a'})}", evidence
    logic = LogicId("H")
    for label, psi in (("R", choice.psi_r), ("S", choice.psi_s)):
        verdict = decide(choice.psi_a, psi, choice.sigma, logic, SEARCH, budget).separator_exists
        if verdict is not False:
            return False, f"psi_a, psi_{label} not shown jointly consistent ({verdict})", evidence
        witness = joint_consistency_oracle(choice.psi_a, psi, choice.sigma, logic, max_worlds)
        evidence[f"witness_{label}"] = witness.to_dict() if witness is not None else None
    both = decide(choice.psi_a, conj(choice.psi_r, choice.psi_s), choice.sigma, logic, SEARCH, budget)
    if both.separator_exists is not True:
        return False, "psi_a and psi_R & psi_S are not shown jointly inconsistent", evidence
    return True, "ok", evidence


def _conjuncts(f: FormulaId) -> List[FormulaId]:
    out, stack = [], [f]
    while stack:
        g = stack.pop()
        n = node(g)
        if n.kind == AND:
            stack.extend(n.children)
        else:
            out.append(g)
    return out


def gen_motivation(seed: int = 0, max_worlds: int = 2, budget: int = 20000,
                   callback: Optional[Callable] = None) -> FamilyInstance:
    """
    First verified instantiation, starting from candidate `seed` (mod count).

    Raises GeneratorError when no candidate passes.
    """
    choices = _motivation_choices()
    start = seed % len(choices)
    rejected = {}
    for choice in choices[start:] + choices[:start]:
        ok, why, evidence = check_motivation(choice, max_worlds, budget)
        if not ok:
            logger.info("Motivation candidate %s rejected: %s", choice.label, why)
            if callback:
                callback(f"Candidate {choice.label} rejected: {why}")
            rejected[choice.label] = why
            continue
        f1, f2 = motivation_pair(choice)
        return FamilyInstance(
            MOTIVATION, {"seed": seed}, LogicId("H"),
            {"f1": f1, "f2": f2, "psi_a": choice.psi_a, "psi_R": choice.psi_r, "psi_S": choice.psi_s},
            choice.sigma, {"candidate": choice.label, "rejected": rejected, "evidence": evidence},
        )
    raise GeneratorError(f"no motivation candidate verified: {rejected}")


# ----------------------------------------------------------------------
# Lower-bound pair
# ----------------------------------------------------------------------

def _xor(f: FormulaId, g: FormulaId) -> FormulaId:
    return neg(iff(f, g))


def _increment(bits: Sequence[FormulaId], rel: str) -> List[FormulaId]:
    rules = []
    for k, b in enumerate(bits):
        flip = _xor(b, big_and(bits[:k]))
        rules.append(implies(flip, box(rel, b)))
        rules.append(implies(neg(flip), box(rel, neg(b))))
    return rules


def _copy_along(bits: Sequence[FormulaId], rel: str) -> List[FormulaId]:
    return [r for b in bits for r in (implies(b, box(rel, b)), implies(neg(b), box(rel, neg(b))))]


def _split_relation(f: FormulaId, rel: str, parts: Tuple[str, str]) -> FormulaId:
    """Replace <rel> by the union of the two relations in `parts`."""
    memo: Dict[FormulaId, FormulaId] = {}
    for g in subformulas(f):
        n = node(g)
        kids = tuple(memo[c] for c in n.children)
        if n.kind == DIA and n.label == rel:
            memo[g] = disj(dia(parts[0], kids[0]), dia(parts[1], kids[0]))
        elif n.kind == NOT:
            memo[g] = neg(kids[0])
        else:
            memo[g] = STORE.intern(Node(n.kind, n.label, n.grade, kids))
    return memo[f]


def lower_bound_parts(n: int) -> Tuple[FormulaId, FormulaId]:
    """(psi1, psi2) with psi1 describing the root and psi2 every reachable point."""
    c = [prop(f"c{k}") for k in range(n)]
    d = [prop(f"d{k}") for k in range(n)]
    r, spine, rpart, far = prop("r"), prop("spine"), prop("rpart"), prop("far")
    low, exp, armed = prop("low"), prop("exp"), prop("armed")
    zero_c = big_and(neg(b) for b in c)
    last = big_and(c)
    eq = big_and(iff(x, y) for x, y in zip(c, d))

    rules = [
        dia("R", top()),
        implies(spine, big_and([zero_c, neg(armed), box("S", spine), dia("S", spine), box("R", rpart)])),
        implies(rpart, big_and([box("S", bottom()), neg(spine), box("R", rpart)])),
    ]
    rules += _increment(c, "R")
    rules += _copy_along(d, "R")
    rules += [implies(spine, rule) for rule in _increment(d, "S")]
    rules += [
        implies(conj(spine, big_and(d)), box("S", far)),
        implies(big_and([spine, neg(far), neg(big_and(d))]), box("S", neg(far))),
        implies(far, conj(box("S", far), box("R", far))),
        implies(neg(far), box("R", neg(far))),
        # low: every earlier bit of the segment is set
        implies(zero_c, low),
        implies(big_and([neg(last), low, r]), box("R", low)),
        implies(conj(neg(last), neg(conj(low, r))), box("R", neg(low))),
        # expected bit of the next segment
        implies(eq, box("R", armed)),
        implies(big_and([armed, neg(eq)]), box("R", armed)),
        implies(big_and([neg(armed), neg(eq)]), box("R", neg(armed))),
        implies(conj(eq, _xor(r, low)), box("R", exp)),
        implies(conj(eq, neg(_xor(r, low))), box("R", neg(exp))),
        implies(conj(neg(eq), exp), box("R", exp)),
        implies(conj(neg(eq), neg(exp)), box("R", neg(exp))),
        implies(big_and([neg(far), eq, armed]), iff(r, exp)),
        implies(neg(far), neg(big_and([last, low, r]))),
    ]
    psi1 = big_and([spine, neg(far)] + [neg(b) for b in d])
    return psi1, big_and(rules)


def gen_lower_bound(n: int, logic: LogicId = LogicId("H_atU"), split_r: bool = False) -> FamilyInstance:
    """
    f1 = psi1 & s & [U](s -> (psi2 & [R]s & [S]s)), f2 = a & [S]a, sigma = {R, S, r}.

    With split_r, R is replaced by the union of R1 and R2 in f1 (f2 is
    unchanged) and sigma becomes {R1, R2, S, r}.
    """
    if n < 1:
        raise GeneratorError(f"lower_bound needs n >= 1, got {n}")
    if not logic.has_u:
        raise GeneratorError(f"lower_bound needs H@U or G@U, got {logic}")
    psi1, psi2 = lower_bound_parts(n)
    s = prop("s")
    f1 = big_and([psi1, s, box_u(implies(s, big_and([psi2, box("R", s), box("S", s)])))])
    a = nom("a")
    f2 = conj(a, box("S", a))
    rels = ("R", "S")
    if split_r:
        f1 = _split_relation(f1, "R", ("R1", "R2"))
        rels = ("R1", "R2", "S")
    if logic.graded:
        f1 = translate_graded(f1, True)
    sigma = Signature.of(rels=rels, props=("r",))
    return FamilyInstance(LOWER_BOUND, {"n": n, "split_r": split_r}, logic, {"f1": f1, "f2": f2}, sigma,
                          {"period": 2 ** n})


def lower_bound_self_test(n: int = 1, logic: LogicId = LogicId("H_atU"), budget: int = 20000,
                          max_closure: int = 24) -> Dict:
    """
    Satisfiability of f1 and the separator decision at size n.

    The decision is attempted only when the joint closure has at most
    `max_closure` members; otherwise, like an exhausted budget, it is
    reported as None (unknown).
    """
    inst = gen_lower_bound(n, logic)
    f1, f2, sigma = inst.pair()
    size = len(closure_of([f1, f2], logic))
    out = {"n": n, "logic": logic.name, "closure": size, "satisfiable": satisfiable(f1),
           "separator_exists": None, "nodes": 0}
    if size > max_closure:
        logger.warning("Lower-bound decision skipped: closure %d > %d", size, max_closure)
        return out
    decision = decide(f1, f2, sigma, logic, SEARCH, budget)
    out.update(separator_exists=decision.separator_exists, nodes=decision.nodes)
    return out


# ----------------------------------------------------------------------
# Parity pair
# ----------------------------------------------------------------------

def gen_phi_even() -> FormulaId:
    even, mn = prop("even"), prop("min")
    return big_and([
        dia("E", conj(mn, even)),
        box("E", implies(even, box("S", neg(even)))),
        box("E", implies(neg(even), box("S", even))),
        box("E", implies(box("S", bottom()), neg(even))),
        box("E", box("S", neg(mn))),
    ])


def gen_chi_n(n: int) -> FormulaId:
    """The line a_0 S a_1 ... S a_n seen through E, with min at a_0."""
    if n < 0:
        raise GeneratorError(f"chi_n needs n >= 0, got {n}")
    a = [nom(f"a{i}") for i in range(n + 1)]
    parts = [dia("E", conj(prop("min"), a[0]))]
    parts += [dia("E", a[i]) for i in range(1, n + 1)]
    parts.append(box("E", big_or(a)))
    if n:
        parts.append(box("E", big_and(neg(conj(a[i], a[j])) for i in range(n + 1) for j in range(n + 1) if i != j)))
        parts.append(box("E", big_and(implies(a[i], dia("S", a[i + 1])) for i in range(n))))
        parts.append(box("E", big_and(implies(a[i], box("S", a[i + 1])) for i in range(n))))
    parts.append(box("E", implies(a[n], box("S", bottom()))))
    return big_and(parts)


# ----------------------------------------------------------------------
# Random pairs
# ----------------------------------------------------------------------

@dataclass
class RandomSpec:
    seed: int = 0
    depth: int = 2
    props: int = 2
    rels: int = 1
    noms: int = 1
    max_grade: int = 2
    logic: LogicId = LogicId("H")
    closure_budget: int = 12
    attempts: int = 200

    def __post_init__(self):
        if self.depth < 0 or self.props < 0 or self.rels < 0 or self.noms < 0:
            raise GeneratorError("random sizes must be non-negative")
        if self.closure_budget < 1 or self.attempts < 1:
            raise GeneratorError("closure budget and attempts must be positive")
        if self.props + self.noms == 0:
            raise GeneratorError("random formulas need at least one atom")


class _RandomFormulas:
    def __init__(self, spec: RandomSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.atoms = [prop(f"p{i}") for i in range(spec.props)] + [nom(f"a{i}") for i in range(spec.noms)]
        self.rels = [f"R{i}" if spec.rels > 1 else "R" for i in range(spec.rels)]
        ops = ["not", "and", "or"]
        if self.rels:
            ops += ["atleast", "atmost"] if spec.logic.graded else ["dia", "box"]
        if spec.logic.has_at and spec.noms:
            ops.append("at")
        if spec.logic.has_u:
            ops += ["diau", "boxu"]
        self.ops = ops

    def pick(self, items):
        return items[int(self.rng.integers(len(items)))]

    def formula(self, depth: int) -> FormulaId:
        if depth == 0 or self.rng.random() < 0.25:
            return self.pick(self.atoms + [top()])
        op = self.pick(self.ops)
        if op == "not":
            return neg(self.formula(depth - 1))
        if op in ("and", "or"):
            f, g = self.formula(depth - 1), self.formula(depth - 1)
            return conj(f, g) if op == "and" else disj(f, g)
        body = self.formula(depth - 1)
        if op == "dia":
            return dia(self.pick(self.rels), body)
        if op == "box":
            return box(self.pick(self.rels), body)
        if op in ("atleast", "atmost"):
            grade = int(self.rng.integers(self.spec.max_grade + 1))
            rel = self.pick(self.rels)
            return atleast(grade, rel, body) if op == "atleast" else atmost(grade, rel, body)
        if op == "at":
            return at(f"a{int(self.rng.integers(self.spec.noms))}", body)
        return dia_u(body) if op == "diau" else box_u(body)

    def sigma(self, f1: FormulaId, f2: FormulaId) -> Signature:
        sig = signature_of(f1, f2)

        def keep(names):
            return [x for x in sorted(names) if self.rng.random() < 0.5]

        return Signature.of(keep(sig.rels), keep(sig.props), keep(sig.noms), self.spec.logic.has_u)


def gen_random(spec: RandomSpec) -> Tuple[FormulaId, FormulaId, Signature]:
    """Reproducible pair for `spec.seed`; the joint closure stays within the budget."""
    rng = np.random.default_rng(spec.seed)
    gen = _RandomFormulas(spec, rng)
    for _ in range(spec.attempts):
        f1, f2 = gen.formula(spec.depth), gen.formula(spec.depth)
        if len(closure_of([f1, f2], spec.logic)) <= spec.closure_budget:
            return f1, f2, gen.sigma(f1, f2)
    raise GeneratorError(f"no pair within closure budget {spec.closure_budget} "
                         f"after {spec.attempts} attempts (seed {spec.seed})")


def random_corpus(count: int, base: Optional[RandomSpec] = None) -> List[Tuple[int, FormulaId, FormulaId, Signature]]:
    """`count` pairs with seeds base.seed, base.seed + 1, ...; over-budget seeds are skipped."""
    base = base or RandomSpec()
    out = []
    seed = base.seed
    while len(out) < count and seed < base.seed + 50 * count:
        spec = RandomSpec(seed, base.depth, base.props, base.rels, base.noms, base.max_grade,
                          base.logic, base.closure_budget, base.attempts)
        try:
            out.append((seed, *gen_random(spec)))
        except GeneratorError:
            logger.debug("Seed %d skipped", seed)
        seed += 1
    return out


# ----------------------------------------------------------------------
# Family specs and emission
# ----------------------------------------------------------------------

@dataclass
class FamilySpec:
    family: str
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GeneratorError(f"Unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        n = self.params.get("n")
        if self.family in (PHI_N, LOWER_BOUND, CHI_N) and n is None:
            raise GeneratorError(f"{self.family} needs parameter n")
        minimum = {PHI_N: 2, LOWER_BOUND: 1, CHI_N: 0}.get(self.family)
        if minimum is not None and int(n) < minimum:
            raise GeneratorError(f"{self.family} needs n >= {minimum}, got {n}")
        if "logic" in self.params and isinstance(self.params["logic"], str):
            try:
                self.params["logic"] = LogicId.parse(self.params["logic"])
            except ValueError as exc:
                raise GeneratorError(str(exc)) from exc

    def generate(self) -> FamilyInstance:
        p = self.params
        if self.family == PHI_N:
            return FamilyInstance(PHI_N, {"n": p["n"]}, LogicId("H"), {"phi": gen_phi_n(int(p["n"]))})
        if self.family == MOTIVATION:
            return gen_motivation(int(p.get("seed", 0)))
        if self.family == LOWER_BOUND:
            return gen_lower_bound(int(p["n"]), p.get("logic", LogicId("H_atU")), bool(p.get("split_r", False)))
        if self.family == PHI_EVEN:
            return FamilyInstance(PHI_EVEN, {}, LogicId("H"), {"phi_even": gen_phi_even()})
        if self.family == CHI_N:
            n = int(p["n"])
            phi_even = gen_phi_even()
            return FamilyInstance(CHI_N, {"n": n}, LogicId("H"),
                                  {"chi": gen_chi_n(n), "phi_even": phi_even},
                                  notes={"phi_even_entails_not_chi": n % 2 == 0})
        spec = RandomSpec(seed=int(p.get("seed", 0)), depth=int(p.get("depth", 2)),
                          logic=p.get("logic", LogicId("H")),
                          closure_budget=int(p.get("closure_budget", 12)))
        f1, f2, sigma = gen_random(spec)
        return FamilyInstance(RANDOM, {"seed": spec.seed, "depth": spec.depth}, spec.logic,
                              {"f1": f1, "f2": f2}, sigma)


def _stem(inst: FamilyInstance) -> str:
    tag = "_".join(f"{k}{int(v) if isinstance(v, bool) else v}" for k, v in sorted(inst.params.items()))
    return f"{inst.family}_{tag}" if tag else inst.family


def emit_family(spec: FamilySpec, out_dir: str, callback: Optional[Callable] = None) -> Dict:
    """Write one formula file per role plus manifest.json; returns the manifest entry."""
    inst = spec.generate()
    os.makedirs(out_dir, exist_ok=True)
    stem = _stem(inst)
    files = {}
    for role, f in inst.formulas.items():
        name = f"{stem}_{role}{FILE_SUFFIX}"
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(print_formula(f, "dag") + "\n")
        files[role] = name
    entry = {
        "family": inst.family,
        "params": inst.params,
        "logic": inst.logic.name,
        "sigma": inst.sigma.to_text() if inst.sigma is not None else None,
        "files": files,
        "stats": inst.stats_rows(),
        "notes": inst.notes,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest = {"instances": []}
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    manifest["instances"] = [e for e in manifest["instances"] if e.get("files") != files] + [entry]
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    logger.info("Emitted %s to %s", stem, out_dir)
    if callback:
        callback(f"Emitted {stem}: {', '.join(files.values())}")
    return entry


def dag_growth_table(family: str, ns: Sequence[int], **params) -> pd.DataFrame:
    """Sizes of every role of `family` for each n in `ns`."""
    rows = []
    for n in ns:
        rows.extend(FamilySpec(family, {**params, "n": n}).generate().stats_rows())
    return pd.DataFrame(rows, columns=["family", "n", "role", "dag_size", "tree_size", "modal_depth"])


def emit_growth_csv(family: str, ns: Sequence[int], out_dir: str, **params) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{family}_growth.csv")
    dag_growth_table(family, ns, **params).to_csv(path, index=False)
    return path
