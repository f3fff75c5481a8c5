import pytest

from formulas import G, H, H_AT, H_ATU, Signature, parse
from hypermosaic import build_space, decide
from kripke import (
    Model, ModelError, enumerate_models, extension, find_model, greatest_bisimulation, is_bisimulation,
    joint_consistency_oracle, model_check, realize_hypermosaic, truth_lemma_failures,
)


@pytest.fixture
def chain():
    # 0 -R-> 1 -R-> 2, p at 1, 'a names 2
    return Model(3, {"R": {(0, 1), (1, 2)}}, {"p": {1}}, {"a": 2})


def test_model_check_basic(chain):
    assert model_check(chain, 0, parse("<R> p"))
    assert not model_check(chain, 1, parse("<R> p"))
    assert model_check(chain, 0, parse("<R> <R> 'a"))
    assert model_check(chain, 2, parse("[R] false"))
    assert extension(chain, parse("p | 'a")) == frozenset({1, 2})


def test_model_check_hybrid_and_graded(chain):
    assert model_check(chain, 0, parse("@a [R] false", H_AT))
    assert model_check(chain, 2, parse("<U> p", H_ATU))
    assert model_check(chain, 0, parse("exactly 1 R p", G))
    assert not model_check(chain, 0, parse("atleast 2 R true", G))


def test_unassigned_nominal_is_an_error(chain):
    with pytest.raises(ModelError):
        model_check(chain, 0, parse("'b"))
    with pytest.raises(ModelError):
        model_check(chain, 5, parse("p"))


def test_model_validation_and_json(tmp_path, chain):
    with pytest.raises(ModelError):
        Model(2, {"R": {(0, 3)}})
    with pytest.raises(ModelError):
        Model.from_json('{"worlds": 2, "rel": {"R": [[0]]}}')
    path = tmp_path / "m.json"
    chain.save(str(path))
    again = Model.load(str(path))
    assert again.to_dict() == chain.to_dict()


def test_restrict_drops_symbols(chain):
    reduct = chain.restrict(Signature.of(rels=("R",)))
    assert reduct.val == {} and reduct.nom == {}
    assert reduct.rel == {"R": {(0, 1), (1, 2)}}


def test_bisimulation_of_loop_and_line():
    loop = Model(1, {"R": {(0, 0)}}, {"p": {0}})
    line = Model(2, {"R": {(0, 1), (1, 1)}}, {"p": {0, 1}})
    sigma = Signature.of(("R",), ("p",))
    Z = greatest_bisimulation(loop, line, sigma, H)
    assert Z == frozenset({(0, 0), (0, 1)})
    ok, why = is_bisimulation(Z, loop, line, sigma, H)
    assert ok and why is None


def test_graded_bisimulation_counts_successors():
    one = Model(2, {"R": {(0, 1)}})
    two = Model(3, {"R": {(0, 1), (0, 2)}})
    sigma = Signature.of(rels=("R",))
    assert (0, 0) in greatest_bisimulation(one, two, sigma, H)
    assert (0, 0) not in greatest_bisimulation(one, two, sigma, G)
    ok, why = is_bisimulation({(0, 0), (1, 1), (1, 2)}, one, two, sigma, G)
    assert not ok and why.clause in ("gforth", "gback")


def test_enumeration_is_up_to_isomorphism():
    models = list(enumerate_models(Signature.of(props=("p",)), 2))
    # one world: p or not; two worlds: none, one or both
    assert len(models) == 5


def test_find_model():
    found = find_model(parse("<R> p & [R] ~q"))
    assert found is not None
    M, w = found
    assert model_check(M, w, parse("<R> p & [R] ~q"))
    assert find_model(parse("p & ~p")) is None


def test_oracle_finds_witness_for_unrelated_atoms():
    witness = joint_consistency_oracle(parse("p"), parse("q"), Signature(), H, 3)
    assert witness is not None
    assert model_check(witness.m1, witness.w1, parse("p"))
    assert model_check(witness.m2, witness.w2, parse("q"))


def test_oracle_uses_sigma_symbols_absent_from_one_side():
    assert joint_consistency_oracle(parse("'a"), parse("p"), Signature.of(props=("p",)), H, 1) is not None


def test_oracle_none_for_contradiction():
    assert joint_consistency_oracle(parse("p"), parse("~p"), Signature.of(props=("p",)), H, 2) is None


@pytest.mark.parametrize("f1, f2, sigma", [
    ("p", "p", Signature.of(props=("p",))),
    ("<R> p", "<R> p", Signature.of(("R",), ("p",))),
    ("p & q", "p & ~q", Signature.of(props=("p",))),
])
def test_realized_survivor_is_bisimilar_and_truthful(f1, f2, sigma):
    f1, f2 = parse(f1), parse(f2)
    space = build_space(f1, f2, sigma, H)
    result = decide(f1, f2, sigma, H, space=space)
    assert result.separator_exists is False
    real = realize_hypermosaic(result.witness, space)
    ok, why = is_bisimulation(real.z, real.m1, real.m2, sigma, H)
    assert ok, why
    assert truth_lemma_failures(real, space) == []


def test_seeded_oracle_is_reproducible():
    f1, f2, sigma = parse("<R> p"), parse("<R> q"), Signature.of(["R"])
    first = joint_consistency_oracle(f1, f2, sigma, H, 2, seed=7)
    again = joint_consistency_oracle(f1, f2, sigma, H, 2, seed=7)
    assert first is not None
    assert first.to_dict() == again.to_dict()
    assert model_check(first.m1, first.w1, f1)
    assert model_check(first.m2, first.w2, f2)
    assert joint_consistency_oracle(parse("p"), parse("~p"), Signature.of(props=("p",)), H, 2, seed=7) is None
