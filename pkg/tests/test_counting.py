import numpy as np
import pytest

from counting import (
    INF, STRONG, WEAK, CountingFunction, Lambda, check_counting, exact_count, find_counting, lambda_equal,
    strong_weak_equivalent,
)
from formula_families import RandomSpec, random_corpus
from formulas import G, H, Signature, atleast, atmost, conj, parse, prop, translate_graded
from hypermosaic import build_space, decide, initial_pairs
from mosaics import Mosaic, mosaic_universe


@pytest.mark.parametrize("x, y, lam, expected", [
    (3, 3, 5, True),
    (3, 4, 5, False),
    (6, 9, 5, True),
    (5, 6, 5, False),
    (7, INF, 5, True),
    (0, 0, 0, True),
])
def test_lambda_equal(x, y, lam, expected):
    assert lambda_equal(x, y, lam) is expected
    assert lambda_equal(y, x, lam) is expected


def test_lambda_value():
    assert Lambda(2, 5).value == 10


def test_exact_count_switches_at_threshold():
    p = prop("p")
    assert exact_count(1, "R", p, 3) == conj(atmost(1, "R", p), atleast(1, "R", p))
    assert exact_count(3, "R", p, 3) == atleast(3, "R", p)


def _space(f1, f2, sigma):
    return build_space(f1, f2, sigma, G)


def test_no_counting_function_across_conflicting_grades():
    f1, f2 = parse("atleast 2 R true", G), parse("atmost 1 R true", G)
    space = _space(f1, f2, Signature.of(["R"]))
    assert space.lam >= 2
    pool = mosaic_universe(space, max_side=1)
    pairs = initial_pairs(f1, f2, space)
    assert pairs
    for t1, t2 in pairs:
        m = Mosaic.of([t1], [t2])
        assert find_counting("R", m, pool, space, WEAK) is None
        assert strong_weak_equivalent("R", m, pool, space)


def test_counting_function_for_matching_grades():
    f = parse("atleast 2 R p", G)
    space = _space(f, f, Signature.of(["R"], ["p"]))
    pool = mosaic_universe(space, max_side=1)
    t = next(t1 for t1, t2 in initial_pairs(f, f, space) if t1 == t2)
    m = Mosaic.of([t], [t])
    F = find_counting("R", m, pool, space, STRONG)
    assert F is not None
    assert check_counting("R", m, pool, F, space, STRONG) == (True, None)
    assert sum(v for (_, i, _, _), v in F.entries.items() if i == 1) >= 2
    assert CountingFunction.from_json(F.to_json()).entries == F.entries


def test_check_counting_rejects_bad_entries():
    f = parse("atleast 2 R p", G)
    space = _space(f, f, Signature.of(["R"], ["p"]))
    pool = mosaic_universe(space, max_side=1)
    t = next(t1 for t1, t2 in initial_pairs(f, f, space) if t1 == t2)
    m = Mosaic.of([t], [t])
    target = next(mp for mp in pool if mp.m1)
    s = next(iter(target.m1))
    ok, why = check_counting("R", m, pool, CountingFunction("R", WEAK, {(t, 1, target, s): -1}), space)
    assert not ok and why.startswith("(i)")
    # nothing at all: the <=2 R p> obligation of t is not met
    ok, why = check_counting("R", m, pool, CountingFunction("R", WEAK), space)
    assert not ok and why.startswith("(iii)")


def test_nominal_successor_is_counted_once():
    f = parse("atleast 2 R 'a", G)
    space = build_space(f, f, Signature.of(["R"]), G, prune=False)
    t = next(t for t in space.types if space.holds(t, f))
    s = next(s for s in space.types if space.holds(s, parse("'a")))
    m, Hp = Mosaic.of([t], [t]), [Mosaic.of([s], [s])]
    assert find_counting("R", m, Hp, space, STRONG) is None
    assert find_counting("R", m, Hp, space, WEAK) is None
    assert strong_weak_equivalent("R", m, Hp, space)


# ----------------------------------------------------------------------
# Strong and weak counting on random small instances
# ----------------------------------------------------------------------

def _small_spaces(count):
    spaces = [_space(parse("atleast 2 R true", G), parse("atmost 1 R true", G), Signature.of(["R"]))]
    corpus = random_corpus(count, RandomSpec(seed=0, depth=1, props=1, rels=1, noms=0, max_grade=2,
                                             logic=G, closure_budget=6))
    for _, f1, f2, sigma in corpus:
        if "R" not in sigma.rels:
            continue
        space = _space(f1, f2, sigma)
        if len(space.types) <= 3 and space.kappa <= 2:
            spaces.append(space)
    return spaces


def _strong_weak_instances(spaces, per_space, seed=0):
    rng = np.random.default_rng(seed)
    checked = 0
    for space in spaces:
        universe = mosaic_universe(space, max_side=2)
        for _ in range(per_space):
            m = universe[int(rng.integers(len(universe)))]
            Hp = [mp for mp in universe if rng.random() < 0.4]
            assert strong_weak_equivalent("R", m, Hp, space)
            strong = find_counting("R", m, Hp, space, STRONG)
            weak = find_counting("R", m, Hp, space, WEAK)
            if strong is not None:
                assert strong.max_value() <= space.lam * len(space.types)
            if weak is not None:
                assert weak.max_value() <= space.lam
            checked += 1
    return checked


def test_strong_and_weak_counting_agree():
    assert _strong_weak_instances(_small_spaces(6), 10) >= 10


@pytest.mark.slow
def test_strong_and_weak_counting_agree_at_scale():
    spaces = _small_spaces(60)
    per_space = -(-1000 // len(spaces))
    assert _strong_weak_instances(spaces, per_space, seed=1) >= 1000


# ----------------------------------------------------------------------
# Graded reading of ungraded inputs
# ----------------------------------------------------------------------

def _coherence(count):
    corpus = random_corpus(count, RandomSpec(seed=0, depth=1, props=1, rels=1, noms=0, logic=H,
                                             closure_budget=8))
    compared = 0
    for seed, f1, f2, sigma in corpus:
        plain = decide(f1, f2, sigma, H, budget=5000).separator_exists
        graded = decide(translate_graded(f1, True), translate_graded(f2, True), sigma, G,
                        budget=5000).separator_exists
        if plain is None or graded is None:
            continue
        assert plain is graded, seed
        compared += 1
    return compared


def test_graded_reading_keeps_separator_existence():
    _coherence(10)


@pytest.mark.slow
def test_graded_reading_keeps_separator_existence_at_scale():
    assert _coherence(200) > 0
