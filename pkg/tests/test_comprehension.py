import pytest
from hypothesis import given, settings, strategies as st

from aileen.comprehension import (
    ActRef,
    GroundingResult,
    Impasse,
    ObjRef,
    ParseResult,
    RelRef,
    SemanticMap,
    action_symbol,
    compose,
    comprehend,
    concept_symbol,
    ground_object_ref,
    ground_relation_ref,
    parse,
    tokenize,
)
from aileen.errors import TemplateMismatchError
from aileen.qsr import ConstraintSet
from aileen.relfact import Entity, parse_case
from aileen.sage import ConceptMemory
from aileen.world import reset_scene, snapshot

O1, O2, O3 = Entity("o1"), Entity("o2"), Entity("o3")
CONE_CYLINDER = snapshot(reset_scene([("cone", "blue", (0.3, 0.0)), ("cylinder", "red", (0.1, 0.0))]))


def test_symbols():
    assert concept_symbol("red") == "RRed"
    assert concept_symbol("left of") == "RLeftOf"
    assert action_symbol("move", "right of") == "RMove_RRightOf"


def test_semantic_map_bijection():
    m = SemanticMap({"red": "RRed"})
    m.add("red", "RRed")
    with pytest.raises(ValueError):
        m.add("red", "RCrimson")
    with pytest.raises(ValueError):
        m.add("crimson", "RRed")
    assert m.word("RRed") == "red" and m.concept("blue") is None
    assert m.copy() == m and m.copy() is not m


def test_parse_relational():
    p = parse("blue cone left of red cylinder")
    assert p == ParseResult((ObjRef("or1", ("blue", "cone")), ObjRef("or2", ("red", "cylinder"))),
                            rel_ref=RelRef("left of", "or1", "or2"))
    assert p.words() == ["blue", "cone", "red", "cylinder", "left of"]


def test_parse_object_only_and_articles():
    assert parse("the red cylinder") == ParseResult((ObjRef("or1", ("red", "cylinder")),))
    assert tokenize("Move the Red box to the left of a cone") == ["move", "red", "box", "left", "of", "cone"]


def test_parse_action():
    p = parse("move blue cone right of red cylinder")
    assert p.act_ref == ActRef("move", "or1", "or2", "right of")
    assert p.act_ref.key == "move right of"
    assert p.words()[-2:] == ["right of", "move right of"]


def test_parse_longest_relation_and_learned_relations():
    assert parse("box in front of ball").rel_ref.words == "in front of"
    smap = SemanticMap({"close by": "RCloseBy"})
    assert parse("box close by ball", smap).rel_ref.words == "close by"
    assert parse("box close by ball").rel_ref is None


@pytest.mark.parametrize("text", ["", "the", "move red box", "move left of ball"])
def test_parse_errors(text):
    with pytest.raises(TemplateMismatchError):
        parse(text)


def test_relation_at_edges_is_property_words():
    assert parse("left of box").rel_ref is None


# ---------------------------------------------------------------- grounding


def test_ground_object_ref_blue_cone(trained):
    memory, smap = trained
    assert ground_object_ref(ObjRef("or1", ("blue", "cone")), CONE_CYLINDER, smap, memory) == {O1}


def test_ground_unknown_word():
    r = ground_object_ref(ObjRef("or1", ("red",)), CONE_CYLINDER, SemanticMap(), ConceptMemory())
    assert isinstance(r, Impasse) and r.kind == "unknown-word" and r.detail == ("red",)


def test_two_red_cylinders(trained):
    memory, smap = trained
    scene = snapshot(reset_scene([("cylinder", "red", (0.2, 0.0)), ("cylinder", "red", (-0.2, 0.0)),
                                  ("box", "blue", (0.0, 0.2))]))
    assert ground_object_ref(ObjRef("or1", ("red", "cylinder")), scene, smap, memory) == {O1, O2}


def test_ground_relation(trained):
    memory, smap = trained
    assert ground_relation_ref("left of", memory, smap) == ConstraintSet.of("e", "dc")
    assert ground_relation_ref("right of", memory, smap) == ConstraintSet.of("w", "dc")
    r = ground_relation_ref("above", memory, smap)
    assert isinstance(r, Impasse) and r.kind == "unknown-word"


def test_compose_checks_relation():
    p = parse("blue cone left of red cylinder")
    cands = {"or1": {O1}, "or2": {O2}}
    ok = compose(p, cands, ConstraintSet.of("e", "dc"), CONE_CYLINDER)
    assert isinstance(ok, GroundingResult) and ok.assignments == {"or1": O1, "or2": O2}
    scene = parse_case("(isa o1 CVBlue) (w o1 o2) (dc o1 o2)")
    bad = compose(p, cands, ConstraintSet.of("e", "dc"), scene)
    assert isinstance(bad, Impasse) and bad.kind == "no-consistent-composition"


def test_compose_injective_and_least_assignment():
    p = parse("box left of box")
    r = compose(p, {"or1": {O1, O2}, "or2": {O1, O2}}, None, parse_case("(isa o1 CVBox) (isa o2 CVBox)"))
    assert r.assignments == {"or1": O1, "or2": O2}
    r = compose(p, {"or1": {O1}, "or2": {O1}}, None, parse_case("(isa o1 CVBox)"))
    assert isinstance(r, Impasse)


def test_compose_action_goal():
    p = parse("move blue cone right of red cylinder")
    goal = ConstraintSet.of("w", "dc")
    r = compose(p, {"or1": {O1}, "or2": {O2}}, goal, CONE_CYLINDER)
    assert r.goal == goal and r.assignments == {"or1": O1, "or2": O2}


# ---------------------------------------------------------------- comprehend


def test_comprehend_relational(trained):
    memory, smap = trained
    r = comprehend("blue cone left of red cylinder", CONE_CYLINDER, smap, memory)
    assert isinstance(r, GroundingResult)
    assert r.assignments == {"or1": O1, "or2": O2}
    assert r.concepts["left of"] == "RLeftOf"


def test_comprehend_action(trained):
    memory, smap = trained
    r = comprehend("move blue cone right of red cylinder", CONE_CYLINDER, smap, memory)
    assert isinstance(r, GroundingResult)
    assert r.goal.instantiate(O1, O2) == parse_case("(w o1 o2) (dc o1 o2)").facts


def test_comprehend_false_relation_is_composition_impasse(trained):
    memory, smap = trained
    r = comprehend("blue cone right of red cylinder", CONE_CYLINDER, smap, memory)
    assert isinstance(r, Impasse) and r.kind == "no-consistent-composition"


def test_green_cone_on_empty_memory():
    scene = snapshot(reset_scene([("cone", "green", (0.0, 0.0))]))
    r = comprehend("green cone", scene, SemanticMap(), ConceptMemory())
    assert r.kind == "unknown-word" and r.detail == ("green", "cone")


def test_purple_ball_absent(trained):
    memory, smap = trained
    r = comprehend("purple ball", CONE_CYLINDER, smap, memory)
    assert isinstance(r, Impasse) and r.kind == "ungroundable-ref"


def test_unknown_word_gathers_failing_known_words(red_memory):
    smap = SemanticMap({"red": "RRed"})
    scene = snapshot(reset_scene([("ball", "blue", (0.0, 0.0))]))
    r = comprehend("red ball", scene, smap, red_memory)
    assert r.kind == "unknown-word" and r.detail == ("red", "ball")
    scene = snapshot(reset_scene([("ball", "red", (0.0, 0.0))]))
    assert comprehend("red ball", scene, smap, red_memory).detail == ("ball",)


def test_unknown_relation_word(trained):
    memory, smap = trained
    memory = memory.clone()
    smap = smap.copy()
    smap.add("beside", "RBeside")
    r = comprehend("blue cone beside red cylinder", CONE_CYLINDER, smap, memory)
    assert r.kind == "unknown-word" and "beside" in r.detail


WORDS = st.lists(st.sampled_from(["red", "blue", "green", "box", "cone", "cylinder", "ball", "purple"]),
                 min_size=1, max_size=2)


@settings(max_examples=30, deadline=None)
@given(WORDS, st.sampled_from(["left of", "right of", "behind", "in front of"]), WORDS)
def test_comprehend_determinism_and_verify_soundness(trained, w1, rel, w2):
    memory, smap = trained
    text = " ".join(w1) + f" {rel} " + " ".join(w2)
    a = comprehend(text, CONE_CYLINDER, smap, memory)
    b = comprehend(text, CONE_CYLINDER, smap, memory)
    assert type(a) is type(b) and getattr(a, "assignments", None) == getattr(b, "assignments", None)
    if isinstance(a, GroundingResult):
        inst = a.constraints.instantiate(a.assignments["or1"], a.assignments["or2"])
        assert inst <= CONE_CYLINDER.facts
