"""
Hybrid modal formulas: interning, parsing, printing and closures.

Key features:
- Hash-consed formula store (structurally equal nodes share one id)
- Parser for the ASCII grammar, with derived connectives and `let` bindings
- Tree and DAG printers (DAG mode let-binds every shared node)
- Signatures, logic identifiers and subformula closures sub(f1, f2)
- Renaming apart for the interpolant -> separator reduction
"""

from __future__ import annotations

import logging
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

logger = logging.getLogger(__name__)

FormulaId = int

TOP = "top"
PROP = "prop"
NOM = "nom"
NOT = "not"
AND = "and"
DIA = "dia"
DIAU = "diau"
AT = "at"
ATLEAST = "atleast"
ATMOST = "atmost"

# Members of a closure that are not boolean combinations
ATOMIC_KINDS = (PROP, NOM, DIA, DIAU, AT, ATLEAST, ATMOST)
KEYWORDS = {"true", "false", "atleast", "atmost", "exactly", "let", "in"}
UNIVERSAL = "U"


class ParseError(ValueError):
    """Syntax error in a formula text."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnsupportedConnective(ParseError):
    """A connective outside the declared logic."""


class Node(NamedTuple):
    kind: str
    label: str = ""
    grade: int = 0
    children: Tuple[int, ...] = ()


class FormulaStore:
    """Append-only interner. Reads are lock-free, writes take the lock."""

    def __init__(self) -> None:
        self._nodes: List[Node] = []
        self._ids: Dict[Node, FormulaId] = {}
        self._lock = threading.Lock()
        self._text_cache: Dict[FormulaId, str] = {}

    def intern(self, node: Node) -> FormulaId:
        fid = self._ids.get(node)
        if fid is not None:
            return fid
        with self._lock:
            fid = self._ids.get(node)
            if fid is None:
                fid = len(self._nodes)
                self._nodes.append(node)
                self._ids[node] = fid
        return fid

    def node(self, fid: FormulaId) -> Node:
        return self._nodes[fid]

    def __len__(self) -> int:
        return len(self._nodes)


STORE = FormulaStore()


def node(f: FormulaId) -> Node:
    return STORE.node(f)


def kind(f: FormulaId) -> str:
    return STORE.node(f).kind


def child(f: FormulaId) -> FormulaId:
    return STORE.node(f).children[0]


# ----------------------------------------------------------------------
# Logics and signatures
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LogicId:
    base: str = "H"  # one of "H", "H_at", "H_atU"
    graded: bool = False

    _NAMES = {
        ("H", False): "H", ("H_at", False): "H@", ("H_atU", False): "H@U",
        ("H", True): "G", ("H_at", True): "G@", ("H_atU", True): "G@U",
    }

    def __post_init__(self):
        if self.base not in ("H", "H_at", "H_atU"):
            raise ValueError(f"Unknown logic base: {self.base}")

    @property
    def has_at(self) -> bool:
        return self.base in ("H_at", "H_atU")

    @property
    def has_u(self) -> bool:
        return self.base == "H_atU"

    @property
    def name(self) -> str:
        return self._NAMES[(self.base, self.graded)]

    def __str__(self) -> str:
        return self.name

    def ungraded(self) -> "LogicId":
        return LogicId(self.base, False)

    @classmethod
    def parse(cls, name: str) -> "LogicId":
        for (base, graded), text in cls._NAMES.items():
            if text == name.strip():
                return cls(base, graded)
        raise ValueError(f"Unknown logic: {name!r} (expected one of H, H@, H@U, G, G@, G@U)")

    def admits(self, formulas: Iterable[FormulaId]) -> bool:
        """Every connective of the formulas belongs to this logic."""
        least = LogicId.for_formulas(formulas)
        order = ("H", "H_at", "H_atU")
        return order.index(least.base) <= order.index(self.base) and (self.graded or not least.graded)

    @classmethod
    def for_formulas(cls, formulas: Iterable[FormulaId]) -> "LogicId":
        """Least logic containing every connective used by the formulas."""
        kinds = set()
        for f in formulas:
            kinds.update(node(g).kind for g in subformulas(f))
        base = "H_atU" if DIAU in kinds else ("H_at" if AT in kinds else "H")
        return cls(base, bool(kinds & {ATLEAST, ATMOST}))


H = LogicId("H")
H_AT = LogicId("H_at")
H_ATU = LogicId("H_atU")
G = LogicId("H", True)
G_AT = LogicId("H_at", True)
G_ATU = LogicId("H_atU", True)
ALL_LOGICS = (H, H_AT, H_ATU, G, G_AT, G_ATU)


@dataclass(frozen=True)
class Signature:
    rels: FrozenSet[str] = frozenset()
    props: FrozenSet[str] = frozenset()
    noms: FrozenSet[str] = frozenset()
    includes_U: bool = False

    @classmethod
    def of(cls, rels=(), props=(), noms=(), includes_U: bool = False) -> "Signature":
        return cls(frozenset(rels), frozenset(props), frozenset(noms), includes_U)

    def __and__(self, other: "Signature") -> "Signature":
        return Signature(self.rels & other.rels, self.props & other.props,
                         self.noms & other.noms, self.includes_U and other.includes_U)

    def __or__(self, other: "Signature") -> "Signature":
        return Signature(self.rels | other.rels, self.props | other.props,
                         self.noms | other.noms, self.includes_U or other.includes_U)

    def issubset(self, other: "Signature") -> bool:
        return (self.rels <= other.rels and self.props <= other.props
                and self.noms <= other.noms)

    def names(self) -> Set[str]:
        return set(self.rels) | set(self.props) | set(self.noms)

    def is_empty(self) -> bool:
        return not (self.rels or self.props or self.noms or self.includes_U)

    def to_text(self) -> str:
        items = sorted(self.rels) + sorted(self.props) + [f"'{a}" for a in sorted(self.noms)]
        if self.includes_U:
            items.append(UNIVERSAL)
        return ",".join(items)

    def to_dict(self) -> Dict:
        return {"rels": sorted(self.rels), "props": sorted(self.props),
                "noms": sorted(self.noms), "includes_U": self.includes_U}


# ----------------------------------------------------------------------
# Constructors
# ----------------------------------------------------------------------

def top() -> FormulaId:
    return STORE.intern(Node(TOP))


def bottom() -> FormulaId:
    return neg(top())


def prop(name: str) -> FormulaId:
    return STORE.intern(Node(PROP, name))


def nom(name: str) -> FormulaId:
    return STORE.intern(Node(NOM, name))


def neg(f: FormulaId) -> FormulaId:
    n = node(f)
    if n.kind == NOT:
        return n.children[0]
    return STORE.intern(Node(NOT, children=(f,)))


def conj(f: FormulaId, g: FormulaId) -> FormulaId:
    return STORE.intern(Node(AND, children=(f, g)))


def disj(f: FormulaId, g: FormulaId) -> FormulaId:
    return neg(conj(neg(f), neg(g)))


def implies(f: FormulaId, g: FormulaId) -> FormulaId:
    return neg(conj(f, neg(g)))


def iff(f: FormulaId, g: FormulaId) -> FormulaId:
    return conj(implies(f, g), implies(g, f))


def dia(rel: str, f: FormulaId) -> FormulaId:
    if rel == UNIVERSAL:
        return dia_u(f)
    return STORE.intern(Node(DIA, rel, children=(f,)))


def box(rel: str, f: FormulaId) -> FormulaId:
    return neg(dia(rel, neg(f)))


def dia_u(f: FormulaId) -> FormulaId:
    return STORE.intern(Node(DIAU, children=(f,)))


def box_u(f: FormulaId) -> FormulaId:
    return neg(dia_u(neg(f)))


def at(a: str, f: FormulaId) -> FormulaId:
    return STORE.intern(Node(AT, a, children=(f,)))


def at_in(logic: Optional[LogicId], a: str, f: FormulaId) -> FormulaId:
    """@a f as it is written in the given logic (an abbreviation in H@U)."""
    if logic is not None and logic.has_u:
        return dia_u(conj(nom(a), f))
    return at(a, f)


def atleast(n: int, rel: str, f: FormulaId) -> FormulaId:
    if n < 0:
        raise ValueError("grades must be non-negative")
    return STORE.intern(Node(ATLEAST, rel, n, (f,)))


def atmost(n: int, rel: str, f: FormulaId) -> FormulaId:
    if n < 0:
        raise ValueError("grades must be non-negative")
    return STORE.intern(Node(ATMOST, rel, n, (f,)))


def exactly(n: int, rel: str, f: FormulaId) -> FormulaId:
    return conj(atmost(n, rel, f), atleast(n, rel, f))


def box_power(rel: str, k: int, f: FormulaId) -> FormulaId:
    for _ in range(k):
        f = box(rel, f)
    return f


def big_and(formulas: Iterable[FormulaId]) -> FormulaId:
    """Conjunction with ⊤ dropped, ⊥ absorbing, duplicates and f/~f pairs collapsed."""
    t, b = top(), bottom()
    items: List[FormulaId] = []
    seen: Set[FormulaId] = set()
    for f in formulas:
        if f == t or f in seen:
            continue
        if f == b or neg(f) in seen:
            return b
        seen.add(f)
        items.append(f)
    if not items:
        return t
    result = items[0]
    for g in items[1:]:
        result = conj(result, g)
    return result


def big_or(formulas: Iterable[FormulaId]) -> FormulaId:
    return neg(big_and(neg(f) for f in formulas))


# ----------------------------------------------------------------------
# Traversals
# ----------------------------------------------------------------------

def subformulas(f: FormulaId) -> List[FormulaId]:
    """Distinct subformulae of f in post-order (children first)."""
    order: List[FormulaId] = []
    seen: Set[FormulaId] = set()
    stack: List[Tuple[FormulaId, bool]] = [(f, False)]
    while stack:
        g, expanded = stack.pop()
        if expanded:
            order.append(g)
            continue
        if g in seen:
            continue
        seen.add(g)
        stack.append((g, True))
        for c in reversed(node(g).children):
            if c not in seen:
                stack.append((c, False))
    return order


def dag_size(f: FormulaId) -> int:
    return len(subformulas(f))


def tree_size(f: FormulaId) -> int:
    sizes: Dict[FormulaId, int] = {}
    for g in subformulas(f):
        sizes[g] = 1 + sum(sizes[c] for c in node(g).children)
    return sizes[f]


def modal_depth(f: FormulaId) -> int:
    depth: Dict[FormulaId, int] = {}
    for g in subformulas(f):
        n = node(g)
        inner = max((depth[c] for c in n.children), default=0)
        depth[g] = inner + (1 if n.kind in (DIA, DIAU, ATLEAST, ATMOST) else 0)
    return depth[f]


def signature_of(*formulas: FormulaId) -> Signature:
    rels: Set[str] = set()
    props: Set[str] = set()
    noms: Set[str] = set()
    for f in formulas:
        for g in subformulas(f):
            n = node(g)
            if n.kind == PROP:
                props.add(n.label)
            elif n.kind == NOM:
                noms.add(n.label)
            elif n.kind in (DIA, ATLEAST, ATMOST):
                rels.add(n.label)
            elif n.kind == AT:
                noms.add(n.label)
    return Signature(frozenset(rels), frozenset(props), frozenset(noms), False)


def uses_u_or_at(f: FormulaId) -> bool:
    return any(node(g).kind in (AT, DIAU) for g in subformulas(f))


def rename(f: FormulaId, mapping: Dict[Tuple[str, str], str]) -> FormulaId:
    """Rename symbols; mapping keys are ("prop"|"nom"|"rel", old name)."""
    if not mapping:
        return f
    memo: Dict[FormulaId, FormulaId] = {}
    for g in subformulas(f):
        n = node(g)
        kids = tuple(memo[c] for c in n.children)
        label = n.label
        if n.kind == PROP:
            label = mapping.get(("prop", label), label)
        elif n.kind in (NOM, AT):
            label = mapping.get(("nom", label), label)
        elif n.kind in (DIA, ATLEAST, ATMOST):
            label = mapping.get(("rel", label), label)
        if n.kind == NOT:
            memo[g] = neg(kids[0])
        else:
            memo[g] = STORE.intern(Node(n.kind, label, n.grade, kids))
    return memo[f]


def translate_graded(f: FormulaId, to_graded: bool) -> FormulaId:
    """Swap <R> and `atleast 1 R` (grades 0/1 only when translating back)."""
    memo: Dict[FormulaId, FormulaId] = {}
    for g in subformulas(f):
        n = node(g)
        kids = tuple(memo[c] for c in n.children)
        if to_graded and n.kind == DIA:
            memo[g] = atleast(1, n.label, kids[0])
        elif not to_graded and n.kind == ATLEAST and n.grade <= 1:
            memo[g] = dia(n.label, kids[0]) if n.grade == 1 else top()
        elif not to_graded and n.kind == ATMOST and n.grade == 0:
            memo[g] = neg(dia(n.label, kids[0]))
        elif not to_graded and n.kind in (ATLEAST, ATMOST):
            raise ValueError(f"grade {n.grade} has no ungraded counterpart")
        elif n.kind == NOT:
            memo[g] = neg(kids[0])
        else:
            memo[g] = STORE.intern(Node(n.kind, n.label, n.grade, kids))
    return memo[f]


def max_grade(*formulas: FormulaId) -> int:
    grades = [node(g).grade for f in formulas for g in subformulas(f)
              if node(g).kind in (ATLEAST, ATMOST)]
    return max(grades, default=0)


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<nat>\d+)|(?P<nom>'[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[()<>\[\]~&|@=]))"
)


class _Token(NamedTuple):
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        while text[pos].isspace():
            pos += 1
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"Unexpected character {text[pos]!r}", pos)
        kind_ = m.lastgroup
        value = m.group(kind_)
        start = m.start(kind_)
        if kind_ == "nom":
            value = value[1:]
        elif kind_ == "arrow":
            kind_ = "sym"
        tokens.append(_Token(kind_, value, start))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, logic: Optional[LogicId]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.logic = logic
        self.env: Dict[str, FormulaId] = {}

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> _Token:
        tok = self.advance()
        if tok.value != value or tok.kind == "eof":
            raise ParseError(f"Expected {value!r}, found {tok.value or 'end of input'!r}", tok.pos)
        return tok

    def ident(self) -> _Token:
        tok = self.advance()
        if tok.kind != "ident" or tok.value in KEYWORDS:
            raise ParseError(f"Expected a name, found {tok.value or 'end of input'!r}", tok.pos)
        return tok

    def require(self, ok: bool, what: str, tok: _Token):
        if self.logic is not None and not ok:
            raise UnsupportedConnective(f"{what} is not available in logic {self.logic}", tok.pos)

    def parse(self) -> FormulaId:
        f = self.chain()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"Unexpected token {tok.value!r}", tok.pos)
        return f

    def chain(self) -> FormulaId:
        left = self.unary()
        op = None
        while self.peek().kind == "sym" and self.peek().value in ("&", "|", "->"):
            tok = self.advance()
            if op is not None and (tok.value != op or op == "->"):
                raise ParseError("Mixed or chained implication operators need parentheses", tok.pos)
            op = tok.value
            right = self.unary()
            if op == "&":
                left = conj(left, right)
            elif op == "|":
                left = disj(left, right)
            else:
                left = implies(left, right)
        return left

    def unary(self) -> FormulaId:
        tok = self.advance()
        if tok.kind == "eof":
            raise ParseError("Unexpected end of input", tok.pos)
        if tok.kind == "nom":
            return nom(tok.value)
        if tok.kind == "nat":
            raise ParseError(f"Unexpected number {tok.value}", tok.pos)
        if tok.kind == "sym":
            if tok.value == "(":
                f = self.chain()
                self.expect(")")
                return f
            if tok.value == "~":
                return neg(self.unary())
            if tok.value in ("<", "["):
                rel = self.ident().value
                self.expect(">" if tok.value == "<" else "]")
                body = self.unary()
                if rel == UNIVERSAL:
                    self.require(self.logic is not None and self.logic.has_u, "The universal modality", tok)
                    return dia_u(body) if tok.value == "<" else box_u(body)
                return dia(rel, body) if tok.value == "<" else box(rel, body)
            if tok.value == "@":
                name_tok = self.advance()
                if name_tok.kind not in ("ident", "nom") or name_tok.value in KEYWORDS:
                    raise ParseError("Expected a nominal after '@'", name_tok.pos)
                self.require(self.logic is not None and self.logic.has_at, "The @ operator", tok)
                body = self.unary()
                return at_in(self.logic, name_tok.value, body)
            raise ParseError(f"Unexpected symbol {tok.value!r}", tok.pos)
        # identifiers and keywords
        word = tok.value
        if word == "true":
            return top()
        if word == "false":
            return bottom()
        if word in ("atleast", "atmost", "exactly"):
            self.require(self.logic is not None and self.logic.graded, "Graded modalities", tok)
            grade_tok = self.advance()
            if grade_tok.kind != "nat":
                raise ParseError("Expected a grade", grade_tok.pos)
            rel_tok = self.ident()
            if rel_tok.value == UNIVERSAL:
                raise UnsupportedConnective("Graded use of U is not supported", rel_tok.pos)
            body = self.unary()
            n = int(grade_tok.value)
            if word == "atleast":
                return atleast(n, rel_tok.value, body)
            if word == "atmost":
                return atmost(n, rel_tok.value, body)
            return exactly(n, rel_tok.value, body)
        if word == "let":
            name = self.ident().value
            self.expect("=")
            value = self.chain()
            in_tok = self.advance()
            if in_tok.value != "in":
                raise ParseError("Expected 'in'", in_tok.pos)
            saved = self.env.get(name)
            self.env[name] = value
            body = self.chain()
            if saved is None:
                del self.env[name]
            else:
                self.env[name] = saved
            return body
        if word in KEYWORDS:
            raise ParseError(f"Unexpected keyword {word!r}", tok.pos)
        if word in self.env:
            return self.env[word]
        return prop(word)


def parse(text: str, logic: Optional[LogicId] = None) -> FormulaId:
    """Parse a formula; with a logic given, connectives outside it are rejected."""
    return _Parser(text, logic).parse()


# ----------------------------------------------------------------------
# Printing
# ----------------------------------------------------------------------

def _left_spine(f: FormulaId, stop: Callable[[FormulaId], bool]) -> List[FormulaId]:
    parts: List[FormulaId] = []
    cur = f
    while True:
        n = node(cur)
        parts.append(n.children[1])
        left = n.children[0]
        if node(left).kind != AND or stop(left):
            parts.append(left)
            break
        cur = left
    parts.reverse()
    return parts


class _Printer:
    def __init__(self, names: Optional[Dict[FormulaId, str]] = None):
        self.names = names or {}
        self.memo: Dict[FormulaId, str] = {}

    def ref(self, f: FormulaId) -> str:
        if f in self.names:
            return self.names[f]
        text = self.memo.get(f)
        if text is None:
            text = self.render(f)
            self.memo[f] = text
        return text

    def render(self, f: FormulaId) -> str:
        n = node(f)
        k = n.kind
        if k == TOP:
            return "true"
        if k == PROP:
            return n.label
        if k == NOM:
            return f"'{n.label}"
        if k == DIA:
            return f"<{n.label}> {self.ref(n.children[0])}"
        if k == DIAU:
            return f"<U> {self.ref(n.children[0])}"
        if k == AT:
            return f"@{n.label} {self.ref(n.children[0])}"
        if k in (ATLEAST, ATMOST):
            return f"{k} {n.grade} {n.label} {self.ref(n.children[0])}"
        if k == AND:
            a, b = n.children
            na, nb = node(a), node(b)
            if (na.kind == ATMOST and nb.kind == ATLEAST and na.label == nb.label
                    and na.grade == nb.grade and na.children == nb.children
                    and a not in self.names and b not in self.names):
                return f"exactly {na.grade} {na.label} {self.ref(na.children[0])}"
            parts = _left_spine(f, lambda g: g in self.names)
            return "(" + " & ".join(self.ref(p) for p in parts) + ")"
        # NOT
        c = n.children[0]
        if c in self.names:
            return f"~{self.names[c]}"
        cn = node(c)
        if cn.kind == TOP:
            return "false"
        if cn.kind == DIA:
            return f"[{cn.label}] {self.ref(neg(cn.children[0]))}"
        if cn.kind == DIAU:
            return f"[U] {self.ref(neg(cn.children[0]))}"
        if cn.kind == AND:
            parts = _left_spine(c, lambda g: g in self.names)
            if all(node(p).kind == NOT for p in parts):
                return "(" + " | ".join(self.ref(neg(p)) for p in parts) + ")"
            left, right = cn.children
            if node(right).kind == NOT:
                return f"({self.ref(left)} -> {self.ref(neg(right))})"
        return f"~{self.ref(c)}"


def _fresh_names(avoid: Set[str]) -> Iterable[str]:
    k = 1
    while True:
        name = f"x{k}"
        if name not in avoid:
            yield name
        k += 1


def print_formula(f: FormulaId, mode: str = "tree") -> str:
    """Render f; mode "dag" emits `let` bindings for every shared node."""
    if mode == "tree":
        cached = STORE._text_cache.get(f)
        if cached is None:
            cached = _Printer().ref(f)
            STORE._text_cache[f] = cached
        return cached
    if mode != "dag":
        raise ValueError(f"Unknown print mode: {mode}")
    order = subformulas(f)
    refs: Counter = Counter()
    for g in order:
        for c in node(g).children:
            refs[c] += 1
    fresh = _fresh_names(signature_of(f).names() | KEYWORDS)
    names: Dict[FormulaId, str] = {}
    bindings: List[str] = []
    for g in order:
        if refs[g] >= 2 and g != f:
            text = _Printer(names).render(g)
            names[g] = next(fresh)
            bindings.append(f"let {names[g]} = {text} in ")
    return "".join(bindings) + _Printer(names).render(f)


def canonical_key(f: FormulaId) -> str:
    """Sort key for closures: the tree printing, compared lexicographically."""
    return print_formula(f)


# ----------------------------------------------------------------------
# Closures
# ----------------------------------------------------------------------

@dataclass
class Closure:
    """Ordered non-negated subformulae; types are int bitsets over `members`."""
    members: Tuple[FormulaId, ...]
    nom0: Tuple[str, ...]
    index: Dict[FormulaId, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {f: i for i, f in enumerate(self.members)}

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, f: FormulaId) -> bool:
        return f in self.index

    def bit(self, f: FormulaId) -> int:
        return 1 << self.index[f]

    def holds(self, t: int, f: FormulaId) -> bool:
        """Truth of f in type t; f must be a boolean combination of members."""
        i = self.index.get(f)
        if i is not None:
            return bool(t >> i & 1)
        n = node(f)
        if n.kind == NOT:
            return not self.holds(t, n.children[0])
        if n.kind == AND:
            return self.holds(t, n.children[0]) and self.holds(t, n.children[1])
        raise KeyError(f"{print_formula(f)} is not over the closure")

    def literals(self, t: int) -> List[FormulaId]:
        return [f if t >> i & 1 else neg(f) for i, f in enumerate(self.members)]

    def members_of_kind(self, *kinds: str) -> List[FormulaId]:
        return [f for f in self.members if node(f).kind in kinds]

    def nominal_in(self, t: int) -> List[str]:
        return [a for a in self.nom0 if self.holds(t, nom(a))]


def closure_of(formulas: Sequence[FormulaId], logic: Optional[LogicId] = None) -> Closure:
    """sub(formulas) plus ⊤; with an @-logic adds @aa, with U adds <U>a."""
    found: Set[FormulaId] = {top()}
    for f in formulas:
        for g in subformulas(f):
            n = node(g)
            if n.kind != NOT:
                found.add(g)
            if n.kind == AT:
                found.add(nom(n.label))
    noms = sorted({node(g).label for g in found if node(g).kind == NOM})
    if logic is not None and logic.has_u:
        for a in noms:
            found.add(dia_u(nom(a)))
    elif logic is not None and logic.has_at:
        for a in noms:
            found.add(at(a, nom(a)))
    members = tuple(sorted(found, key=canonical_key))
    return Closure(members, tuple(noms))


def resolve_sigma(text: str, f1: FormulaId, f2: FormulaId) -> Signature:
    """'shared' -> sig(f1) ∩ sig(f2); otherwise a comma list of symbols."""
    text = (text or "").strip()
    if text == "shared":
        return signature_of(f1) & signature_of(f2)
    known = signature_of(f1, f2)
    rels: Set[str] = set()
    props: Set[str] = set()
    noms: Set[str] = set()
    includes_u = False
    for item in filter(None, (s.strip() for s in text.split(","))):
        if item.startswith("'"):
            noms.add(item[1:])
        elif item == UNIVERSAL:
            includes_u = True
        elif item in known.noms and item not in known.rels and item not in known.props:
            noms.add(item)
        else:
            if item in known.rels:
                rels.add(item)
            if item in known.props or item not in known.rels:
                props.add(item)
    return Signature(frozenset(rels), frozenset(props), frozenset(noms), includes_u)


def _rename_apart(sig: Signature, sigma: Signature, suffix: str,
                  taken: Set[str]) -> Dict[Tuple[str, str], str]:
    """Every non-σ symbol of sig gets name+suffix, bumped to name+suffix_k while taken."""
    mapping: Dict[Tuple[str, str], str] = {}
    for space, names, shared in (("rel", sig.rels, sigma.rels), ("prop", sig.props, sigma.props),
                                 ("nom", sig.noms, sigma.noms)):
        for name in sorted(names - shared):
            candidate, k = f"{name}{suffix}", 1
            while candidate in taken:
                k += 1
                candidate = f"{name}{suffix}_{k}"
            taken.add(candidate)
            mapping[(space, name)] = candidate
    return mapping


def craig_to_separator(f1: FormulaId, f2: FormulaId) -> Tuple[FormulaId, FormulaId, Signature]:
    """
    Interpolation problem f1 -> f2 as the separation problem (f1', ~f2', σ).

    σ is sig(f1) ∩ sig(f2). Symbols outside σ are renamed apart per side,
    q -> q1 on the left and r -> r2 on the right, so both sides share σ only.
    """
    sig1, sig2 = signature_of(f1), signature_of(f2)
    sigma = sig1 & sig2
    taken = sig1.names() | sig2.names()
    m1 = _rename_apart(sig1, sigma, "1", taken)
    m2 = _rename_apart(sig2, sigma, "2", taken)
    if m1 or m2:
        logger.debug("Renamed apart: %s %s", m1, m2)
    return rename(f1, m1), neg(rename(f2, m2)), sigma
