import random

import pytest
from hypothesis import given, settings, strategies as st

from aileen.errors import OracleSizeError
from aileen.randcase import random_case, random_pair, random_weighted
from aileen.relfact import Const, Entity, Fact, GenEnt, Skolem, entities_of, parse_case, parse_fact, rename
from aileen.sme import WeightedCase, candidate_inferences, map_cases, map_cases_oracle

from conftest import EXAMPLE_A, EXAMPLE_B, QUERY_SCENE
from oracles import best_entity_map_score


def test_worked_pair():
    m = map_cases(WeightedCase.from_case(parse_case(EXAMPLE_A)), parse_case(EXAMPLE_B))
    assert {(str(c.base_fact), str(c.target_fact)) for c in m.correspondences} == {
        ("(isa o2 CVRed)", "(isa o3 CVRed)"), ("(isa o2 RRed)", "(isa o3 RRed)")}
    assert m.entity_map == {Entity("o2"): Entity("o3")}
    assert m.similarity == pytest.approx(2 / 3)
    assert m.candidate_inferences == {parse_fact("(isa o3 CVCylinder)")}


def test_generalization_against_scene():
    ge = GenEnt(0, 0, "RRedMt")
    base = WeightedCase({Fact("isa", (ge, Const(c))): 1.0 for c in ("RRed", "CVRed")}, "RRedMt")
    m = map_cases(base, parse_case(QUERY_SCENE), norm_exclude=("RRed",))
    assert m.entity_map == {ge: Entity("o4")}
    assert m.similarity == 1.0
    assert m.candidate_inferences == {parse_fact("(isa o4 RRed)")}


def test_disjoint_vocabularies():
    m = map_cases(WeightedCase.from_case(parse_case("(p o1)")), parse_case("(q o2)"))
    assert m.similarity == 0 and not m.correspondences and not m.entity_map


def test_self_match_has_no_inferences():
    c = parse_case(EXAMPLE_A)
    m = map_cases(WeightedCase.from_case(c), c)
    assert m.similarity == 1.0 and len(m.correspondences) == 3
    assert candidate_inferences(WeightedCase.from_case(c), c, m.entity_map) == frozenset()


def test_skolems_for_unmapped_entities():
    base = WeightedCase.from_case(parse_case("(e o1 o2) (held o1) (p o3)"))
    m = map_cases(base, parse_case("(e o5 o6)"))
    ci = m.candidate_inferences
    assert parse_fact("(held o5)") in ci
    assert any(isinstance(next(entities_of(f)), Skolem) for f in ci if f.pred == "p")
    again = candidate_inferences(base, parse_case("(e o5 o6)"), m.entity_map, m.correspondences)
    assert again == ci


def test_nested_facts_align_under_the_same_map():
    base = WeightedCase.from_case(parse_case("(holdsIn T0 (e o1 o2)) (after T1 T0) (holdsIn T1 (held o1))"))
    target = parse_case("(holdsIn T5 (e o7 o8))")
    m = map_cases(base, target)
    assert m.entity_map == {Entity("T0"): Entity("T5"), Entity("o1"): Entity("o7"), Entity("o2"): Entity("o8")}
    inferred = {str(f) for f in m.candidate_inferences}
    assert "(holdsIn (:skolem T1) (held o7))" in inferred
    assert "(after (:skolem T1) T5)" in inferred


def test_pinned_assignment_is_respected():
    base = WeightedCase.from_case(parse_case("(p o1) (p o2) (q o2)"))
    target = parse_case("(p a1) (p a2) (q a2)")
    free = map_cases(base, target)
    assert free.raw_score == 3
    pinned = map_cases(base, target, pinned={Entity("o2"): Entity("a1")})
    assert pinned.entity_map[Entity("o2")] == Entity("a1")
    assert pinned.raw_score == 2


def test_oracle_size_limit():
    big = random_weighted(random.Random(1), 9, 3)
    with pytest.raises(OracleSizeError):
        map_cases_oracle(big, parse_case("(p o1)"))


def test_oracle_worked_pair():
    base = WeightedCase.from_case(parse_case(EXAMPLE_A))
    assert map_cases_oracle(base, parse_case(EXAMPLE_B)).raw_score == 2


def test_greedy_regime_on_large_bases_is_consistent():
    rng = random.Random(7)
    for _ in range(20):
        base = random_weighted(rng, 20, 9)
        target = random_case(rng, 20, 9, "c")
        m = map_cases(base, target)
        _check_invariants(base, target, m)


# ---------------------------------------------------------------- properties


def _check_invariants(base, target, m):
    images = list(m.entity_map.values())
    assert len(images) == len(set(images))
    bfs = [c.base_fact for c in m.correspondences]
    tfs = [c.target_fact for c in m.correspondences]
    assert len(bfs) == len(set(bfs)) and len(tfs) == len(set(tfs))
    for c in m.correspondences:
        assert rename(c.base_fact, m.entity_map) == c.target_fact
    assert 0.0 <= m.similarity <= 1.0
    assert m.raw_score == pytest.approx(sum(base.facts[f] for f in bfs))


pairs = st.builds(lambda seed: random_pair(random.Random(seed)), st.integers(0, 2**32 - 1))


@settings(max_examples=150, deadline=None)
@given(pairs)
def test_injectivity_and_consistency(pair):
    base, target = pair
    _check_invariants(base, target, map_cases(base, target))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_self_similarity(seed):
    case = random_case(random.Random(seed), 6, 4)
    assert map_cases(WeightedCase.from_case(case), case).similarity == 1.0


@settings(max_examples=100, deadline=None)
@given(pairs, st.integers(0, 7))
def test_removing_target_fact_never_increases_score(pair, k):
    base, target = pair
    m = map_cases(base, target)
    if not m.correspondences:
        return
    drop = sorted(m.correspondences, key=lambda c: str(c.target_fact))[k % len(m.correspondences)].target_fact
    smaller = [f for f in target if f != drop]
    assert map_cases(base, smaller).raw_score <= m.raw_score + 1e-12


@settings(max_examples=200, deadline=None)
@given(pairs)
def test_matches_both_oracles(pair):
    base, target = pair
    expected = best_entity_map_score(base, target)
    assert map_cases(base, target).raw_score == pytest.approx(expected, abs=1e-9)
    assert map_cases_oracle(base, target).raw_score == pytest.approx(expected, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(pairs)
def test_skolem_stability(pair):
    base, target = pair
    m = map_cases(base, target)
    one = candidate_inferences(base, target, m.entity_map, m.correspondences)
    two = candidate_inferences(base, target, m.entity_map, m.correspondences)
    assert one == two == m.candidate_inferences


def test_explain_mentions_every_correspondence():
    m = map_cases(WeightedCase.from_case(parse_case(EXAMPLE_A)), parse_case(EXAMPLE_B))
    text = m.explain()
    assert "(isa o3 CVRed)" in text and "similarity" in text
