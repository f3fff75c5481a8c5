import pytest

from formula_families import RandomSpec, random_corpus
from formulas import (
    ALL_LOGICS, G, G_AT, G_ATU, H, H_AT, H_ATU, Signature, conj, parse, print_formula, signature_of,
)
from hypermosaic import build_space, eliminate_reference
from hyperseparator import (
    RoundCapExceeded, WorkMeter, base_hyperseparator, check_soundness, construct, construct_separator,
    hypersep_to_separator, load_certificate, refine_round, s_bound, save_certificate, separates,
    verify_certificate,
)
from mosaics import BudgetExceeded, Mosaic
from type_elimination import SatOracle, entails, satisfiable, type_formula


def test_s_bound():
    assert s_bound(1) == 8
    assert s_bound(2) == 64


def test_construct_curated(curated):
    for f1, f2, sigma, logic, exists in curated:
        result = construct(f1, f2, sigma, logic)
        assert result.certificate["separator_exists"] is exists
        assert (result.separator is not None) is exists
        if exists:
            assert all(result.certificate["verification"].values())
        assert verify_certificate(result.certificate)["valid"]


def test_one_round_separates_diamond_from_box():
    f1, f2 = parse("<R> p"), parse("[R] ~p")
    result = construct(f1, f2, Signature.of(["R"], ["p"]), H, audit=True)
    assert result.certificate["rounds"] == 1
    assert [r["unsound_entries"] for r in result.certificate["audit_rounds"]] == [0, 0]
    assert entails(f1, result.separator)


def test_round_cap():
    with pytest.raises(RoundCapExceeded) as info:
        construct(parse("<R> p"), parse("[R] ~p"), Signature.of(["R"], ["p"]), H, max_rounds=0)
    assert info.value.rounds == 0
    assert info.value.pending > 0


def test_graded_separator():
    f1, f2 = parse("atleast 2 R true", G), parse("atmost 1 R true", G)
    sep = construct_separator(f1, f2, Signature.of(["R"]), G)
    assert sep is not None
    assert entails(f1, sep)


def test_refinement_stays_sound():
    f1, f2 = parse("<R> p"), parse("[R] ~p")
    space = build_space(f1, f2, Signature.of(["R"], ["p"]), H)
    hs = base_hyperseparator(space)
    assert check_soundness(hs) == []
    refined = refine_round(hs)
    assert refined.round == 1
    assert check_soundness(refined) == []


def test_certificate_file_and_tampering(tmp_path):
    f1, f2 = parse("<R> p"), parse("[R] ~p")
    cert = construct(f1, f2, Signature.of(["R"], ["p"]), H).certificate
    path = tmp_path / "cert.json"
    save_certificate(cert, str(path))
    loaded = load_certificate(str(path))
    assert verify_certificate(loaded)["valid"]
    loaded["separator"] = print_formula(parse("p"))
    checks = verify_certificate(loaded)
    assert not checks["valid"]
    assert not checks["first_entails"]


# ----------------------------------------------------------------------
# Work budget
# ----------------------------------------------------------------------

def test_work_meter_charges_every_call():
    meter = WorkMeter(SatOracle(), budget=2, max_query=10)
    assert meter.satisfiable(parse("p"))
    assert meter.satisfiable(parse("p & q"))
    with pytest.raises(BudgetExceeded) as info:
        meter.satisfiable(parse("q"))
    assert info.value.counts["work"] == 2
    assert meter.used == 2


def test_work_meter_refuses_oversized_queries():
    meter = WorkMeter(SatOracle(), budget=10, max_query=3)
    with pytest.raises(BudgetExceeded) as info:
        meter.entails(parse("<R> p"), parse("[R] q"))
    assert info.value.counts["query_size"] > 3
    with pytest.raises(ValueError):
        WorkMeter(SatOracle(), budget=0)


def test_work_budget_bounds_hybrid_universal_instance():
    f1 = parse("[U] 'a0 & <U> p0", H_ATU)
    f2 = parse("<R> ~p0", H_ATU)
    sigma = Signature.of(["R"], ["p0"], ["a0"], True)
    try:
        result = construct(f1, f2, sigma, H_ATU, max_rounds=2, work_budget=60)
    except (BudgetExceeded, RoundCapExceeded):
        return
    assert result.separator is not None
    assert result.certificate["work"] <= 60
    assert all(result.certificate["verification"].values())


def test_tiny_work_budget_raises():
    f1, f2 = parse("<R> p"), parse("[R] ~p")
    with pytest.raises(BudgetExceeded):
        construct(f1, f2, Signature.of(["R"], ["p"]), H, work_budget=1)


def test_refinement_carries_separated_cases_over():
    f1, f2 = parse("<R> p"), parse("[R] ~p")
    space = build_space(f1, f2, Signature.of(["R"], ["p"]), H)
    hs = base_hyperseparator(space)
    kept = refine_round(hs, pending=[])
    assert kept.round == 1
    assert kept.cases == hs.cases
    assert kept.sep == hs.sep
    pairs = [(t1, t2) for t1 in space.types if space.holds(t1, f1)
             for t2 in space.types if space.holds(t2, f2)]
    split = refine_round(hs, pending=pairs)
    assert split.round == 1
    assert all(separates(split, [Mosaic.of([t1], [t2])]) for t1, t2 in pairs)


# ----------------------------------------------------------------------
# One construction per logic
# ----------------------------------------------------------------------

PER_LOGIC = [
    (H, "<R> p", "[R] ~p", Signature.of(["R"], ["p"])),
    (H_AT, "@a p", "@a ~p", Signature.of([], ["p"], ["a"])),
    (H_ATU, "<U> p", "[U] ~p", Signature.of([], ["p"], [], True)),
    (G, "atleast 2 R true", "atmost 1 R true", Signature.of(["R"])),
    (G_AT, "@a atleast 2 R true", "@a atmost 1 R true", Signature.of(["R"], [], ["a"])),
    (G_ATU, "<U> atleast 2 R true", "[U] atmost 1 R true", Signature.of(["R"], [], [], True)),
]


@pytest.mark.parametrize("logic, left, right, sigma", PER_LOGIC, ids=[str(row[0]) for row in PER_LOGIC])
def test_construction_in_each_logic(logic, left, right, sigma):
    f1, f2 = parse(left, logic), parse(right, logic)
    try:
        result = construct(f1, f2, sigma, logic, max_rounds=2, work_budget=2000)
    except (BudgetExceeded, RoundCapExceeded):
        return
    assert result.separator is not None
    assert result.certificate["work"] <= 2000
    assert _separates_inputs(f1, f2, result.separator, sigma)


def _separates_inputs(f1, f2, sep, sigma):
    return (signature_of(sep).issubset(sigma) and entails(f1, sep)
            and not satisfiable(conj(f2, sep)))


# ----------------------------------------------------------------------
# Compilation and pacing
# ----------------------------------------------------------------------

@pytest.mark.parametrize("left, right, sigma", [
    ("<R> p", "[R] ~p", Signature.of(["R"], ["p"])),
    ("p & q", "~p & r", Signature.of([], ["p"])),
    ("p", "~p", Signature.of([], ["p"])),
])
def test_compiled_pairs_follow_from_types(left, right, sigma):
    f1, f2 = parse(left), parse(right)
    result = construct(f1, f2, sigma, H)
    hs = result.hyperseparator
    space = hs.space
    for t1 in (t for t in space.types if space.holds(t, f1)):
        for t2 in (t for t in space.types if space.holds(t, f2)):
            psi = hypersep_to_separator(hs, t1, t2)
            assert entails(type_formula(space.closure, t1), psi)
            assert not satisfiable(conj(type_formula(space.closure, t2), psi))


@pytest.mark.parametrize("left, right, sigma, max_side, drops", [
    ("p", "p", Signature.of([], ["p"]), None, False),
    ("<R> true", "[R] false", Signature.of(["R"]), 1, True),
])
def test_round_separates_what_elimination_dropped(left, right, sigma, max_side, drops):
    f1, f2 = parse(left), parse(right)
    space = build_space(f1, f2, sigma, H)
    state = eliminate_reference(f1, f2, sigma, H, max_side=max_side, space=space)
    assert bool(state.eliminated_by(state.rounds)) is drops
    hs = base_hyperseparator(space)
    for round_ in range(state.rounds + 1):
        assert hs.round == round_
        for dropped in state.eliminated_by(round_):
            assert separates(hs, dropped)
        hs = refine_round(hs)


# ----------------------------------------------------------------------
# Random soundness
# ----------------------------------------------------------------------

def _random_soundness(logic, count, depth, work_budget):
    corpus = random_corpus(count, RandomSpec(seed=0, depth=depth, props=1, rels=1, noms=1,
                                             logic=logic, closure_budget=8))
    built = 0
    for seed, f1, f2, sigma in corpus:
        try:
            result = construct(f1, f2, sigma, logic, max_rounds=2, budget=5000, work_budget=work_budget)
        except (BudgetExceeded, RoundCapExceeded):
            continue
        if result.separator is None:
            continue
        built += 1
        assert _separates_inputs(f1, f2, result.separator, sigma), seed
    return len(corpus), built


@pytest.mark.parametrize("logic", ALL_LOGICS, ids=str)
def test_random_separators_are_sound(logic):
    total, _ = _random_soundness(logic, 4, 1, 300)
    assert total == 4


@pytest.mark.slow
@pytest.mark.parametrize("logic", ALL_LOGICS, ids=str)
def test_random_separators_are_sound_at_scale(logic):
    total, _ = _random_soundness(logic, 500, 2, 2000)
    assert total == 500
