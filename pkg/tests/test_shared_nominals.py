import pytest

from formulas import G, H, H_AT, Signature, conj, parse, signature_of
from shared_nominals import (
    PreconditionError, SharedNominalSeparator, VerificationError, fo_separator, sep_case,
    separator_shared_nominals, standard_translation,
)
from type_elimination import entails, satisfiable


def test_propositional_separator_is_verified():
    f1, f2 = parse("p"), parse("~p")
    sep = separator_shared_nominals(f1, f2, Signature.of([], ["p"]), H)
    assert sep is not None
    assert entails(f1, sep)
    assert not satisfiable(conj(f2, sep))


def test_jointly_consistent_inputs_have_no_separator():
    builder = SharedNominalSeparator(parse("p"), parse("p"), Signature.of([], ["p"]), H)
    assert builder.construct() is None
    m, elim = builder.surviving_pair()
    with pytest.raises(PreconditionError):
        sep_case(elim, m)


@pytest.mark.parametrize("logic", [H, H_AT])
def test_named_loop_against_irreflexive_name(logic):
    f1, f2 = parse("'a & <R> 'a"), parse("'b & [R] ~'b")
    sigma = Signature.of(["R"], [], ["a", "b"])
    builder = SharedNominalSeparator(f1, f2, sigma, logic)
    sep = builder.construct()
    assert sep is not None
    builder.verify(sep)
    assert signature_of(sep).issubset(sigma)
    frame = builder.trace_frame()
    assert list(frame.columns) == ["case", "t1", "t2", "round", "reason"]
    assert len(frame) > 0


def test_preconditions():
    with pytest.raises(PreconditionError):
        SharedNominalSeparator(parse("'a"), parse("~'a"), Signature.of(), H)
    with pytest.raises(PreconditionError):
        SharedNominalSeparator(parse("p", G), parse("~p", G), Signature.of([], ["p"]), G)


def test_verify_rejects_a_wrong_separator():
    builder = SharedNominalSeparator(parse("p & q"), parse("~p"), Signature.of([], ["p", "q"]), H)
    with pytest.raises(VerificationError):
        builder.verify(parse("q"))
    with pytest.raises(VerificationError):
        builder.verify(parse("r"))


def test_standard_translation():
    assert standard_translation(parse("<R> p")) == "exists x1 (R(x0,x1) & p(x1))"
    assert standard_translation(parse("@a p", H_AT)) == "p(a)"
    assert standard_translation(parse("'a")) == "x0 = a"


def test_fo_separator_quantifies_private_nominals():
    out = fo_separator(parse("'a & p"), parse("'a & ~p"), Signature.of([], ["p"]), H)
    assert out is not None
    assert out.startswith("exists a. forall a_2. ")
    assert fo_separator(parse("p"), parse("p"), Signature.of([], ["p"]), H) is None
