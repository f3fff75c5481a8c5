import pytest

from formula_families import RandomSpec, random_corpus
from formulas import ALL_LOGICS, G, H, H_AT, Signature, parse
from hypermosaic import (
    REFERENCE, SEARCH, build_space, decide, decide_separator_existence, eliminate_reference, initial_pairs,
    normalize, self_witnessing, survives_search,
)
from kripke import joint_consistency_oracle
from mosaics import BudgetExceeded, Mosaic, extends, legal


def test_decide_curated(curated):
    for f1, f2, sigma, logic, exists in curated:
        result = decide(f1, f2, sigma, logic)
        assert result.separator_exists is exists
        if not exists:
            ok, why = self_witnessing(result.witness, build_space(f1, f2, sigma, logic))
            assert ok, why


def test_reference_agrees_with_search(curated):
    for f1, f2, sigma, logic, exists in curated[:2]:
        assert decide(f1, f2, sigma, logic, mode=REFERENCE).separator_exists is exists
    f1, f2 = parse("<R> true"), parse("[R] false")
    sigma = Signature.of(["R"])
    assert decide(f1, f2, sigma, H, mode=REFERENCE, max_side=1).separator_exists is True
    assert decide(f1, f2, sigma, H, mode=SEARCH).separator_exists is True


def test_reference_state_and_trace():
    f1, f2 = parse("<R> true"), parse("[R] false")
    state = eliminate_reference(f1, f2, Signature.of(["R"]), H, max_side=1)
    space = state.space
    for t1, t2 in initial_pairs(f1, f2, space):
        assert not state.alive({Mosaic.of([t1], [t2])})
    frame = state.trace_frame()
    assert list(frame.columns) == ["round", "hypermosaic", "mosaic", "obligation"]
    assert len(frame) == len(state.hypermosaics) - len(state.survivors())
    assert state.to_json()["rounds"] == state.rounds


def test_larger_sigma_keeps_separators():
    f1, f2 = parse("p & q"), parse("~p & r")
    assert decide(f1, f2, Signature.of([], ["p"]), H).separator_exists
    assert decide(f1, f2, Signature.of([], ["p", "q", "r"]), H).separator_exists
    assert not decide(f1, f2, Signature.of([], ["q", "r"]), H).separator_exists


def test_decision_json():
    f = parse("p")
    out = decide(f, f, Signature.of([], ["p"]), H).to_json()
    assert out["separator_exists"] is False
    assert out["mode"] == SEARCH
    assert "witness" in out and "pair" in out


def test_survives_search_on_initial_pair():
    f1, f2 = parse("<R> p"), parse("<R> q")
    space = build_space(f1, f2, Signature.of(["R"]), H)
    t1, t2 = initial_pairs(f1, f2, space)[0]
    outcome = survives_search({Mosaic.of([t1], [t2])}, space)
    assert outcome.status == "yes"
    assert legal(outcome.witness, space)
    assert any(Mosaic.of([t1], [t2]).covered_by(m) for m in outcome.witness)


def test_normalize_rejects_two_types_for_one_nominal():
    f = parse("'a & p")
    space = build_space(f, f, Signature.of(), H_AT)
    named = [t for t in space.types if space.holds(t, parse("'a"))]
    assert len(named) >= 2
    assert normalize([Mosaic.of([named[0]], [named[0]]), Mosaic.of([named[1]], [named[0]])], space) is None


def test_budget_and_mode_errors():
    f = parse("p")
    with pytest.raises(BudgetExceeded):
        decide_separator_existence(f, f, Signature.of([], ["p"]), H, budget=0)
    with pytest.raises(ValueError):
        decide(f, f, Signature.of(), H, mode="guess")


# ----------------------------------------------------------------------
# Reference and search over one reduced universe
# ----------------------------------------------------------------------

SMALL_UNIVERSES = [
    ("p", "p", Signature.of([], ["p"]), None),
    ("<R> true", "[R] false", Signature.of(["R"]), 1),
]


@pytest.mark.parametrize("left, right, sigma, max_side", SMALL_UNIVERSES)
def test_search_matches_reference_on_every_hypermosaic(left, right, sigma, max_side):
    f1, f2 = parse(left), parse(right)
    state = eliminate_reference(f1, f2, sigma, H, max_side=max_side)
    assert state.hypermosaics
    for hyper in state.hypermosaics:
        outcome = survives_search(hyper, state.space, max_side=max_side)
        assert outcome.status != "unknown"
        assert (outcome.status == "yes") is state.alive(hyper), sorted(m.label() for m in hyper)


@pytest.mark.parametrize("left, right, sigma, max_side", SMALL_UNIVERSES)
def test_survival_passes_down_to_extended_hypermosaics(left, right, sigma, max_side):
    f1, f2 = parse(left), parse(right)
    state = eliminate_reference(f1, f2, sigma, H, max_side=max_side)
    survivors = state.survivors()
    for hyper in state.hypermosaics:
        if any(extends(bigger, hyper) for bigger in survivors):
            assert state.alive(hyper)


# ----------------------------------------------------------------------
# Agreement with the model oracle
# ----------------------------------------------------------------------

def _oracle_agreement(logic, count, noms):
    corpus = random_corpus(count, RandomSpec(seed=0, depth=1, props=1, rels=1, noms=noms,
                                             logic=logic, closure_budget=8))
    witnessed = 0
    for seed, f1, f2, sigma in corpus:
        if joint_consistency_oracle(f1, f2, sigma, logic, max_worlds=2) is None:
            continue
        witnessed += 1
        decision = decide(f1, f2, sigma, logic, budget=5000)
        assert decision.separator_exists is not True, seed
    return witnessed


@pytest.mark.parametrize("logic", [H, G], ids=str)
def test_oracle_witness_rules_out_separator(logic):
    _oracle_agreement(logic, 8, noms=0)


def test_oracle_witness_on_shared_formula():
    f = parse("<R> p")
    assert joint_consistency_oracle(f, f, Signature.of(["R"], ["p"]), H, max_worlds=2) is not None
    assert decide(f, f, Signature.of(["R"], ["p"]), H).separator_exists is False


@pytest.mark.slow
@pytest.mark.parametrize("logic", ALL_LOGICS, ids=str)
def test_oracle_witness_rules_out_separator_at_scale(logic):
    assert _oracle_agreement(logic, 150, noms=1) > 0
