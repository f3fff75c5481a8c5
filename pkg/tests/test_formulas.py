import pytest
from hypothesis import given, settings, strategies as st

from formulas import (
    G, G_AT, H, H_AT, H_ATU, LogicId, ParseError, Signature, UnsupportedConnective, atleast, atmost, big_and,
    big_or, bottom, box, closure_of, conj, craig_to_separator, dag_size, dia, dia_u, disj, implies, modal_depth,
    neg, nom, parse, print_formula, prop, rename, resolve_sigma, signature_of, subformulas, top,
    translate_graded, tree_size,
)

atoms = st.sampled_from([prop("p"), prop("q"), nom("a"), top()])


def _extend(children):
    rel = st.sampled_from(["R", "S"])
    return st.one_of(
        children.map(neg),
        st.tuples(children, children).map(lambda fg: conj(*fg)),
        st.tuples(children, children).map(lambda fg: disj(*fg)),
        st.tuples(children, children).map(lambda fg: implies(*fg)),
        st.tuples(rel, children).map(lambda rf: dia(*rf)),
        st.tuples(rel, children).map(lambda rf: box(*rf)),
        st.tuples(st.integers(0, 2), rel, children).map(lambda x: atleast(*x)),
        st.tuples(st.integers(0, 2), rel, children).map(lambda x: atmost(*x)),
        children.map(dia_u),
    )


formulas = st.recursive(atoms, _extend, max_leaves=12)


def test_interning_shares_equal_nodes():
    assert parse("p & <R> q") == conj(prop("p"), dia("R", prop("q")))
    assert neg(neg(prop("p"))) == prop("p")
    assert parse("[R] p") == box("R", prop("p"))


@given(formulas)
@settings(max_examples=200, deadline=None)
def test_print_parse_round_trip(f):
    assert parse(print_formula(f)) == f


@given(formulas)
@settings(max_examples=100, deadline=None)
def test_dag_print_round_trip(f):
    assert parse(print_formula(f, "dag")) == f


def test_derived_connectives():
    p, q = prop("p"), prop("q")
    assert parse("p | q") == disj(p, q)
    assert parse("p -> q") == implies(p, q)
    assert parse("false") == bottom()
    assert parse("exactly 2 R p") == conj(atmost(2, "R", p), atleast(2, "R", p))
    assert parse("let x = <R> p in x & ~x") == conj(dia("R", p), neg(dia("R", p)))


def test_mixed_operators_need_parentheses():
    with pytest.raises(ParseError):
        parse("p & q | r")
    assert parse("(p & q) | r") == disj(conj(prop("p"), prop("q")), prop("r"))


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse("p & $")
    assert info.value.position == 4


def test_logic_restricts_connectives():
    with pytest.raises(UnsupportedConnective):
        parse("@a p", H)
    with pytest.raises(UnsupportedConnective):
        parse("<U> p", H_AT)
    with pytest.raises(UnsupportedConnective):
        parse("atleast 2 R p", H)
    assert parse("<U> p", H_ATU) == dia_u(prop("p"))
    assert parse("atmost 1 R true", G) == atmost(1, "R", top())


def test_at_is_abbreviated_with_u():
    assert parse("@a p", H_ATU) == dia_u(conj(nom("a"), prop("p")))


def test_logic_names():
    for name in ("H", "H@", "H@U", "G", "G@", "G@U"):
        assert LogicId.parse(name).name == name
    with pytest.raises(ValueError):
        LogicId.parse("K")
    assert LogicId.for_formulas([parse("<U> p"), parse("atleast 2 R q")]).name == "G@U"


def test_big_and_simplifies():
    p = prop("p")
    assert big_and([]) == top()
    assert big_and([p, top(), p]) == p
    assert big_and([p, neg(p)]) == bottom()
    assert big_or([]) == bottom()


def test_sizes():
    f = parse("<R> p & [R] <R> p")
    assert dag_size(f) < tree_size(f)
    assert modal_depth(f) == 2
    assert subformulas(f)[-1] == f


def test_signature_and_sigma():
    f1, f2 = parse("<R> p & 'a"), parse("[S] p & q")
    sig = signature_of(f1)
    assert sig.rels == {"R"} and sig.props == {"p"} and sig.noms == {"a"}
    assert resolve_sigma("shared", f1, f2) == Signature.of(props=("p",))
    assert resolve_sigma("R,p,'a", f1, f2) == Signature.of(("R",), ("p",), ("a",))
    assert resolve_sigma("", f1, f2).is_empty()


def test_closure_adds_nominal_members():
    f = parse("'a & p")
    assert nom("a") in closure_of([f], H)
    assert dia_u(nom("a")) in closure_of([f], H_ATU)
    assert top() in closure_of([f])


def test_rename_and_graded_translation():
    f = parse("<R> p & 'a")
    g = rename(f, {("rel", "R"): "S", ("nom", "a"): "b"})
    assert g == parse("<S> p & 'b")
    assert translate_graded(parse("<R> p"), True) == atleast(1, "R", prop("p"))
    assert translate_graded(atleast(1, "R", prop("p")), False) == dia("R", prop("p"))
    with pytest.raises(ValueError):
        translate_graded(atleast(2, "R", prop("p")), False)


def test_craig_to_separator_renames_apart():
    f1, f2, sigma = craig_to_separator(parse("p & q"), parse("p | r"))
    assert sigma == Signature.of(props=("p",))
    assert f1 == parse("p & q1")
    assert f2 == neg(parse("p | r2"))


def test_craig_to_separator_keeps_shared_and_bumps_taken_names():
    f1, f2, sigma = craig_to_separator(parse("'a & <R> 'a"), parse("'b -> <R> 'b"))
    assert sigma == Signature.of(rels=("R",))
    assert f1 == parse("'a1 & <R> 'a1")
    assert f2 == neg(parse("'b2 -> <R> 'b2"))
    f1, f2, _ = craig_to_separator(parse("q & q1 & p"), parse("p"))
    assert signature_of(f1).props == {"p", "q1_2", "q11"}
    p = parse("p")
    assert craig_to_separator(p, p) == (p, neg(p), Signature.of(props=("p",)))


@given(formulas, formulas)
@settings(max_examples=100, deadline=None)
def test_craig_renaming_invariants(f, g):
    f1, f2, sigma = craig_to_separator(f, g)
    s1, s2 = signature_of(f1), signature_of(f2)
    assert sigma == signature_of(f) & signature_of(g)
    assert (s1 & s2).names() == sigma.names()
    # shared symbols stay, each side keeps as many symbols as it had
    for before, after in ((signature_of(f), s1), (signature_of(g), s2)):
        assert (before & sigma) == (after & sigma)
        assert len(after.props) == len(before.props)
        assert len(after.noms) == len(before.noms)
        assert len(after.rels) == len(before.rels)
    again = craig_to_separator(f1, neg(f2))
    assert again[2] == sigma
    assert (signature_of(again[0]) & sigma) == (s1 & sigma)
    assert (signature_of(again[1]) & sigma) == (s2 & sigma)


def test_closure_members_sorted_by_printing():
    f = parse("<R> (p & q) & @a r & atleast 2 R q", G_AT)
    members = closure_of([f], G_AT).members
    texts = [print_formula(m) for m in members]
    assert texts == sorted(texts)
