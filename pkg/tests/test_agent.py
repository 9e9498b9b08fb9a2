import pytest
from hypothesis import given, settings, strategies as st

from aileen.agent import Agent, Demo, Lesson, Log, MODELS, plan_ids, replay
from aileen.comprehension import SemanticMap
from aileen.errors import PlanNotFoundError
from aileen.harness import CurriculumConfig, bootstrap
from aileen.qsr import ConstraintSet
from aileen.relfact import Entity, parse_case, parse_fact
from aileen.sage import ConceptMemory, render_memory
from aileen.world import PickUp, Place, reset_scene, snapshot, step

CONE_CYLINDER = (("cone", "blue", (0.3, 0.0)), ("cylinder", "red", (0.1, 0.0)))
RIGHT_OF = ConstraintSet.of("w", "dc")


@pytest.fixture(scope="module")
def visual_only():
    return bootstrap(CurriculumConfig(phase="spatial"), ("visual",))


def _agent(pair):
    memory, smap = pair
    return Agent(memory.clone(), smap.copy())


def test_lesson_validation():
    with pytest.raises(ValueError):
        Lesson((), "red", "ask")
    with pytest.raises(ValueError):
        Lesson((), "move red box left of cone", "react", Demo("o1", "o2", RIGHT_OF))


def test_first_visual_lesson_creates_and_stores():
    agent = Agent()
    r = agent.handle(Lesson((("cone", "green", (0.0, 0.0)),), "green cone", "inform"))
    assert r.success and (r.creates, r.stores) == (2, 2)
    for concept in ("RGreen", "RCone"):
        (example,) = agent.memory.context(concept).examples
        assert example.facts == parse_case(f"(isa o1 CVGreen) (isa o1 CVCone) (isa o1 {concept})").facts
    assert agent.smap.as_dict() == {"green": "RGreen", "cone": "RCone"}
    assert agent.log.lines[0] == "create RGreen"


def test_repeat_after_convergence_stores_nothing(trained):
    agent = _agent(trained)
    r = agent.handle(Lesson((("cone", "green", (0.0, 0.0)),), "green cone", "inform"))
    assert r.success and (r.creates, r.stores) == (0, 0)


def test_spatial_lesson_payload(visual_only):
    agent = _agent(visual_only)
    r = agent.handle(Lesson(CONE_CYLINDER, "blue cone left of red cylinder", "inform"))
    assert (r.creates, r.stores) == (1, 1)
    (example,) = agent.memory.context("RLeftOf").examples
    assert example.facts == parse_case(
        "(isa o1 CVBlue) (isa o1 CVCone) (isa o2 CVRed) (isa o2 CVCylinder)"
        " (e o1 o2) (dc o1 o2) (w o2 o1) (dc o2 o1) (RLeftOf o1 o2)").facts


def test_action_lesson_payload(trained):
    memory, smap = trained
    copy = memory.clone()
    agent = Agent(ConceptMemory(), SemanticMap({w: c for w, c in smap.as_dict().items() if not w.startswith("move")}))
    for c, ctx in copy.contexts.items():
        if not c.startswith("RMove"):
            agent.memory.contexts[c] = ctx
    lesson = Lesson(CONE_CYLINDER, "move blue cone right of red cylinder", "inform", Demo("o1", "o2", RIGHT_OF))
    r = agent.handle(lesson)
    assert r.creates == 1 and r.stores == 1
    (example,) = agent.memory.context("RMove_RRightOf").examples
    assert parse_fact("(RMove_RRightOf o1 o2)") in example
    assert parse_fact("(holdsIn T1 (held o1))") in example
    assert parse_fact("(final T2 T1)") in example


def test_composition_impasse_reinforces_each_mentioned_concept(trained):
    agent = _agent(trained)
    r = agent.handle(Lesson(CONE_CYLINDER, "blue cone right of red cylinder", "inform"))
    assert r.success and r.creates == 0 and r.stores == 5
    assert "no-consistent-composition" in r.diagnostics[0]
    stored = [line.split()[1] for line in agent.log.lines if line.startswith("store")]
    assert stored == ["RBlue", "RCone", "RRed", "RCylinder", "RRightOf"]


def test_inform_always_success():
    agent = Agent()
    for content in ("red box", "red box left of blue ball", "red box"):
        scene = (("box", "red", (0.0, 0.0)), ("ball", "blue", (-0.2, 0.0)))
        assert agent.handle(Lesson(scene, content, "inform")).success


# ---------------------------------------------------------------- verify


def test_verify_generality_and_specificity(trained):
    agent = _agent(trained)
    assert agent.handle(Lesson(CONE_CYLINDER, "blue cone left of red cylinder", "verify")).success
    assert not agent.handle(Lesson(CONE_CYLINDER, "blue cone right of red cylinder", "verify")).success
    assert agent.handle(Lesson(CONE_CYLINDER, "red cylinder", "verify")).success
    assert not agent.handle(Lesson(CONE_CYLINDER, "green ball", "verify")).success


def test_verify_unknown_word_fails_without_storing():
    agent = Agent()
    r = agent.handle(Lesson(CONE_CYLINDER, "red cylinder", "verify"))
    assert not r.success and "unknown-word" in r.diagnostics[0]
    assert len(agent.memory.contexts) == 0 and len(agent.smap) == 0


def test_verify_action_demo(trained):
    agent = _agent(trained)
    good = Lesson(CONE_CYLINDER, "move blue cone right of red cylinder", "verify", Demo("o1", "o2", RIGHT_OF), 3)
    bad = Lesson(CONE_CYLINDER, "move blue cone right of red cylinder", "verify",
                 Demo("o1", "o2", ConstraintSet.of("n", "dc")), 3)
    assert agent.handle(good).success
    assert not agent.handle(bad).success


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["red cylinder", "blue cone left of red cylinder", "purple ball", "teal box",
                        "move blue cone behind red cylinder", "cone right of cylinder"]),
       st.integers(0, 100))
def test_verify_purity(trained, content, seed):
    memory, smap = trained
    before = render_memory(memory, smap.as_dict())
    demo = Demo("o1", "o2", RIGHT_OF) if content.startswith("move") else None
    Agent(memory, smap).handle(Lesson(CONE_CYLINDER, content, "verify", demo, seed))
    assert render_memory(memory, smap.as_dict()) == before


# ---------------------------------------------------------------- planning


def test_plan_pick_up():
    s = reset_scene(CONE_CYLINDER)
    assert plan_ids(s, {parse_fact("(held o1)")}) == [PickUp("o1")]


def test_plan_already_satisfied():
    s = reset_scene(CONE_CYLINDER)
    assert plan_ids(s, {parse_fact("(e o1 o2)")}) == []


def test_plan_place_from_held():
    s = step(reset_scene(CONE_CYLINDER), PickUp("o1"))
    goal = {parse_fact("(w o1 o2)"), parse_fact("(dc o1 o2)")}
    (action,) = plan_ids(s, goal, MODELS, rng_seed=2)
    assert isinstance(action, Place)
    assert goal <= snapshot(step(s, action)).facts


def test_plan_two_steps_and_not_found():
    s = reset_scene(CONE_CYLINDER)
    goal = {parse_fact("(w o1 o2)"), parse_fact("(dc o1 o2)")}
    plan = plan_ids(s, goal)
    assert [type(a) for a in plan] == [PickUp, Place]
    with pytest.raises(PlanNotFoundError):
        plan_ids(s, goal, depth_limit=1)
    with pytest.raises(PlanNotFoundError):
        plan_ids(s, {parse_fact("(held o9)")})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["w", "e", "n", "s"]))
def test_plan_validity(seed, rel):
    s = reset_scene((("ball", "blue", (0.0, 0.0)), ("box", "red"), ("cone", "green")), seed)
    goal = ConstraintSet.of(rel, "dc").instantiate(Entity("o2"), Entity("o1"))
    plan = plan_ids(s, goal, rng_seed=seed)
    for a in plan:
        s = step(s, a)
    assert goal <= snapshot(s).facts


# ---------------------------------------------------------------- react


def test_react_move_red_cylinder_right_of_blue_box(trained):
    agent = _agent(trained)
    scene = (("cylinder", "red", (-0.15, 0.05)), ("box", "blue", (0.05, 0.0)), ("ball", "yellow", (0.3, -0.1)))
    r = agent.handle(Lesson(scene, "move the red cylinder right of the blue box", "react", seed=1))
    assert r.success, r.diagnostics
    assert r.projections == 2
    assert [type(a) for a in r.actions] == [PickUp, Place]
    assert RIGHT_OF.instantiate(Entity("o1"), Entity("o2")) <= snapshot(r.state).facts


def test_react_goal_already_holds(trained):
    agent = _agent(trained)
    scene = (("cylinder", "red", (-0.2, 0.0)), ("box", "blue", (0.05, 0.0)))
    r = agent.handle(Lesson(scene, "move the red cylinder right of the blue box", "react", seed=2))
    assert r.success and [type(a) for a in r.actions] == [PickUp, Place]


def test_react_untrained_action(visual_only):
    memory, smap = visual_only
    agent = Agent(memory.clone(), smap.copy())
    agent.smap.add("move right of", "RMove_RRightOf")
    agent.memory.create("RMove_RRightOf")
    agent.smap.add("right of", "RRightOf")
    agent.memory.create("RRightOf")
    agent.memory.store(parse_case("(isa o1 CVRed) (isa o2 CVBlue) (w o1 o2) (dc o1 o2) (RRightOf o1 o2)"),
                       "RRightOf")
    r = agent.handle(Lesson(CONE_CYLINDER, "move blue cone right of red cylinder", "react"))
    assert not r.success
    assert any(d.startswith("projection-below-threshold") for d in r.diagnostics)


def test_react_needs_action(trained):
    r = _agent(trained).handle(Lesson(CONE_CYLINDER, "red cylinder", "react"))
    assert not r.success and "action utterance" in r.diagnostics[0]


# ---------------------------------------------------------------- log


def test_log_replay_reproduces_memory(visual_only):
    lines = []
    agent = Agent(log=Log(lines.append))
    rng_scenes = [(("cone", "green", (0.0, 0.0)),), (("box", "green", (0.1, 0.0)),), (("cone", "red", (0.0, 0.1)),)]
    for scene, text in zip(rng_scenes, ("green cone", "green box", "red cone")):
        agent.handle(Lesson(scene, text, "inform"))
    fresh = ConceptMemory()
    replay(lines, fresh)
    assert fresh == agent.memory


def test_monotonicity_after_convergence(trained):
    memory, smap = trained
    agent = Agent(memory.clone(), smap.copy())
    lessons = [Lesson(CONE_CYLINDER, c, "inform") for c in
               ("blue cone", "red cylinder", "blue cone left of red cylinder", "red cylinder right of blue cone")]
    first = [agent.handle(l).stores for l in lessons]
    assert first == [0, 0, 0, 0]
    assert agent.memory == memory
