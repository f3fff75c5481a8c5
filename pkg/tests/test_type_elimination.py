import pytest
from hypothesis import given, settings, strategies as st

from formulas import G, H, H_AT, H_ATU, atleast, atmost, closure_of, conj, dia, neg, nom, parse, prop
from kripke import find_model
from type_elimination import (
    DD_AVAILABLE, SatOracle, entails, enumerate_types, is_hintikka, satisfiable, type_formula,
)


@pytest.mark.parametrize("text, expected", [
    ("p & ~p", False),
    ("p | ~p", True),
    ("<R> p & [R] ~p", False),
    ("<R> p & <R> ~p", True),
    ("'a & <R> ('a & p) & ~p", False),
    ("'a & <R> 'a & [R] [R] false", False),
    ("'a & <R> ~'a", True),
])
def test_ungraded_satisfiability(text, expected):
    assert satisfiable(parse(text)) is expected


@pytest.mark.parametrize("text, expected", [
    ("atleast 2 R p & atmost 1 R true", False),
    ("atleast 2 R p & atmost 2 R true & [R] p", True),
    ("atleast 1 R 'a & atleast 2 R 'a", False),
    ("exactly 3 R true & atmost 1 R p & atmost 1 R ~p", False),
])
def test_graded_satisfiability(text, expected):
    assert satisfiable(parse(text, G)) is expected


def test_hybrid_operators():
    assert not satisfiable(parse("@a p & @a ~p", H_AT))
    assert satisfiable(parse("@a p & ~p", H_AT))
    assert not satisfiable(parse("[U] ~p & <R> p", H_ATU))
    assert not satisfiable(parse("'a & p & <U> ('a & ~p)", H_ATU))


def test_entailment():
    assert entails(parse("[R] 'a", G), parse("atmost 1 R true", G))
    assert entails(parse("p & q"), parse("p | r"))
    assert not entails(parse("p"), parse("q"))
    assert entails(parse("'a & p"), parse("[R] ('a -> p)"))
    assert entails(parse("'a & p", H_AT), parse("@a p", H_AT))


def test_types_are_hintikka_and_render():
    closure = closure_of([parse("p & <R> q")])
    types = enumerate_types(closure)
    assert types and all(is_hintikka(closure, t) for t in types)
    assert all(satisfiable(type_formula(closure, t)) for t in types)
    assert not is_hintikka(closure, 0)


def test_oracle_memoizes():
    oracle = SatOracle()
    f = parse("<R> p & [R] q")
    assert oracle.satisfiable(f)
    assert oracle.satisfiable(f)
    stats = oracle.stats()
    assert stats["calls"] == 2 and stats["hits"] == 1 and stats["distinct"] == 1


def test_oracle_memo_is_bounded():
    oracle = SatOracle(memo_size=2)
    p, q, r = parse("p"), parse("<R> q"), parse("[R] r")
    for f in (p, q, r):
        assert oracle.satisfiable(f)
    stats = oracle.stats()
    assert stats["distinct"] == 2 and stats["evictions"] == 1
    # p was least recently used and is decided again
    assert oracle.satisfiable(p)
    assert oracle.stats()["hits"] == 0
    assert oracle.satisfiable(p)
    assert oracle.stats()["hits"] == 1
    with pytest.raises(ValueError):
        SatOracle(memo_size=0)


def test_logic_argument_is_enforced():
    graded = parse("atleast 2 R p", G)
    assert satisfiable(graded, G)
    with pytest.raises(ValueError):
        satisfiable(graded, H)
    with pytest.raises(ValueError):
        entails(parse("@a p", H_AT), parse("p"), H)
    assert entails(parse("@a p", H_AT), parse("@a p | q", H_AT), H_ATU)
    assert not satisfiable(parse("[U] ~p & <U> p", H_ATU), H_ATU)


atoms = st.sampled_from([prop("p"), prop("q"), nom("a")])


def _extend(children):
    return st.one_of(
        children.map(neg),
        st.tuples(children, children).map(lambda fg: conj(*fg)),
        children.map(lambda f: dia("R", f)),
    )


small = st.recursive(atoms, _extend, max_leaves=6)


@given(small)
@settings(max_examples=60, deadline=None)
def test_small_models_imply_satisfiable(f):
    if find_model(f, max_worlds=2) is not None:
        assert satisfiable(f)


@given(small)
@settings(max_examples=60, deadline=None)
def test_unsatisfiable_has_no_small_model(f):
    if not satisfiable(f):
        assert find_model(f, max_worlds=2) is None


@pytest.mark.skipif(not DD_AVAILABLE, reason="dd is not installed")
@given(small)
@settings(max_examples=60, deadline=None)
def test_engines_agree(f):
    assert satisfiable(f, engine="bdd") == satisfiable(f, engine="explicit")


@given(st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_graded_bounds(lo, hi):
    p = prop("p")
    assert satisfiable(conj(atleast(lo, "R", p), atmost(hi, "R", p))) == (lo <= hi)
