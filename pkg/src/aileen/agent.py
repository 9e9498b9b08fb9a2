"""Lesson handling: learn on impasses, recognize on verify, act on react."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .comprehension import (
    GroundingResult,
    Impasse,
    SemanticMap,
    action_symbol,
    comprehend,
    concept_symbol,
)
from .errors import (
    BelowThresholdError,
    NoNextStateError,
    PlanNotFoundError,
    PreconditionViolation,
    UnsatisfiableError,
)
from .qsr import QSR_PREDICATES, Atom, ConstraintSet, solve_region
from .relfact import Case, Const, Entity, Fact, Var
from .sage import ConceptMemory
from .sme import natural_key
from .world import (
    HALF_EXTENT,
    EpisodicTrace,
    PickUp,
    Place,
    WorldState,
    action_text,
    apply,
    check,
    demonstrate_move,
    episode_facts,
    reset_scene,
    snapshot,
    trace_to_case,
)

DEPTH_LIMIT = 3


@dataclass(frozen=True)
class Demo:
    """Trainer demonstration request: move ``mover`` so ``goal`` holds against ``anchor``."""

    mover: str
    anchor: str
    goal: ConstraintSet


@dataclass(frozen=True)
class Lesson:
    scene: tuple
    content: str
    signal: str  # inform | verify | react
    demo: Demo | None = None
    seed: int = 0

    def __post_init__(self):
        if self.signal not in ("inform", "verify", "react"):
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.signal == "react" and self.demo is not None:
            raise ValueError("react lessons carry no demonstration")


@dataclass
class LessonResult:
    status: str
    creates: int = 0
    stores: int = 0
    actions: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    projections: int = 0
    grounding: GroundingResult | None = None
    state: WorldState | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"


@dataclass(frozen=True)
class ActionModel:
    precondition: Callable
    effect: Callable


MODELS = {
    "pick_up": ActionModel(check, apply),
    "place": ActionModel(check, apply),
    "point": ActionModel(check, apply),
}


class Log:
    """Replayable execution log, one line per memory command or primitive action."""

    def __init__(self, sink: Callable[[str], None] | None = None):
        self.lines: list[str] = []
        self.sink = sink

    def __call__(self, line: str) -> None:
        self.lines.append(line)
        if self.sink:
            self.sink(line)


def replay(lines: Sequence[str], memory: ConceptMemory) -> None:
    """Re-apply the create/store lines of a log to a memory."""
    from .relfact import parse_facts

    for line in lines:
        head, _, rest = line.partition(" ")
        if head == "create":
            memory.create(rest.strip())
        elif head == "store":
            concept, _, payload = rest.partition(" ")
            memory.store(Case(parse_facts(payload)), concept)


# ---------------------------------------------------------------- scenario


def realize(lesson: Lesson, color_fn_factory: Callable | None = None):
    """The lesson's world: (start state, start scene, demo trace, end state)."""
    state = reset_scene(lesson.scene, lesson.seed)
    color_fn = color_fn_factory(state) if color_fn_factory else None
    scene = snapshot(state, color_fn)
    trace, end = None, state
    if lesson.demo is not None:
        trace, end = demonstrate_move(state, lesson.demo.mover, lesson.demo.anchor,
                                      lesson.demo.goal, lesson.seed)
    return state, scene, trace, end


# ---------------------------------------------------------------- inform


def _referents(parsed, candidates: dict, scene: Case, demo: Demo | None) -> dict:
    """Entity per reference: grounded where possible, then remaining objects in order."""
    if demo is not None and len(parsed.obj_refs) == 2:
        return {parsed.obj_refs[0].id: Entity(demo.mover), parsed.obj_refs[1].id: Entity(demo.anchor)}
    objects = sorted((e for e in scene.entities() if isinstance(e, Entity)), key=natural_key)
    out = {}
    for ref in parsed.obj_refs:
        if ref.id in candidates:
            pick = next((e for e in sorted(candidates[ref.id], key=natural_key) if e not in out.values()), None)
            if pick is not None:
                out[ref.id] = pick
    rest = [e for e in objects if e not in out.values()]
    for ref in parsed.obj_refs:
        if ref.id not in out and rest:
            out[ref.id] = rest.pop(0)
    return out


def _payload(word: str, concept: str, parsed, refs: dict, scene: Case, end_scene: Case,
             trace: EpisodicTrace | None) -> Case | None:
    act = parsed.act_ref
    if act is not None and word == act.key:
        if trace is None:
            return None
        m, a = refs[act.arg1], refs[act.arg2]
        return trace_to_case(trace).with_fact(Fact(concept, (m, a)))
    rel_words = parsed.rel_ref.words if parsed.rel_ref else act.relation if act else None
    if word == rel_words:
        first, second = (parsed.rel_ref or act).arg1, (parsed.rel_ref or act).arg2
        x, y = refs[first], refs[second]
        source = end_scene if act else scene
        return source.about(x, y).with_fact(Fact(concept, (x, y)))
    for ref in parsed.obj_refs:
        if word in ref.words and ref.id in refs:
            e = refs[ref.id]
            return scene.about(e).with_fact(Fact("isa", (e, Const(concept))))
    return None


def _concept_for(word: str, parsed) -> str:
    act = parsed.act_ref
    if act is not None and word == act.key:
        return action_symbol(act.verb, act.relation)
    return concept_symbol(word)


def handle_inform(lesson: Lesson, smap: SemanticMap, memory: ConceptMemory, log: Log | None = None,
                  color_fn_factory: Callable | None = None) -> LessonResult:
    log = log or Log()
    state, scene, trace, end = realize(lesson, color_fn_factory)
    end_scene = snapshot(end) if trace is not None else scene
    g = comprehend(lesson.content, scene, smap, memory)
    result = LessonResult("success", state=end)
    if isinstance(g, GroundingResult):
        result.grounding = g
        result.diagnostics.append("comprehended; nothing to learn")
        return result
    result.diagnostics.append(str(g))
    parsed = g.parse
    if g.kind == "unknown-word":
        words = list(g.detail)
        for w in words:
            if smap.concept(w) is None:
                smap.add(w, _concept_for(w, parsed))
            concept = smap.concept(w)
            if concept not in memory:
                memory.create(concept)
                log(f"create {concept}")
                result.creates += 1
    else:
        words = [w for w in parsed.words() if smap.concept(w) in memory]
    refs = _referents(parsed, g.candidates, scene, lesson.demo)
    for w in words:
        concept = smap.concept(w)
        example = _payload(w, concept, parsed, refs, scene, end_scene, trace)
        if example is None:
            result.diagnostics.append(f"no example available for {w!r}")
            continue
        outcome = memory.store(example, concept)
        log(f"store {concept} {' '.join(str(f) for f in example)}")
        result.diagnostics.append(f"{concept}: {outcome.value}")
        result.stores += 1
    return result


# ---------------------------------------------------------------- verify


def handle_verify(lesson: Lesson, smap: SemanticMap, memory: ConceptMemory, log: Log | None = None,
                  color_fn_factory: Callable | None = None) -> LessonResult:
    state, scene, trace, end = realize(lesson, color_fn_factory)
    g = comprehend(lesson.content, scene, smap, memory)
    if isinstance(g, Impasse):
        diag = [str(g)]
        if g.similarity is not None:
            diag.append(f"best similarity {g.similarity:.4f}")
        return LessonResult("failure", diagnostics=diag, state=end)
    act = g.parse.act_ref
    if act is not None and trace is not None:
        concept = g.concepts[act.key]
        m, a = g.assignments[act.arg1], g.assignments[act.arg2]
        r = memory.query(trace_to_case(trace), Fact(concept, (Var("x"), Var("y"))), concept)
        if not r.success or r.binding != {Var("x"): m, Var("y"): a}:
            return LessonResult("failure", diagnostics=[f"demonstration not recognized as {concept}",
                                                        f"similarity {r.similarity:.4f}"], grounding=g, state=end)
        if not g.goal.instantiate(m, a) <= snapshot(end).facts:
            return LessonResult("failure", diagnostics=[f"demonstration does not reach {g.goal}"],
                                grounding=g, state=end)
    return LessonResult("success", grounding=g, state=end)


# ---------------------------------------------------------------- planning


def _place_targets(state: WorldState, goal: frozenset, rng_seed: int) -> list:
    held = state.held_id
    if held is None:
        return []
    h = Entity(held)
    by_anchor: dict = {}
    for f in goal:
        if f.pred in QSR_PREDICATES and len(f.args) == 2 and h in f.args:
            other = f.args[1] if f.args[0] == h else f.args[0]
            first = "a1" if f.args[0] == h else "a2"
            by_anchor.setdefault(other, []).append(Atom(f.pred, first, "a2" if first == "a1" else "a1"))
    out = []
    for anchor in sorted(by_anchor, key=natural_key):
        try:
            box = state.get(anchor.name).bbox
        except KeyError:
            continue
        avoid = [o.bbox for o in state.placed() if o.id != anchor.name]
        try:
            x, y = solve_region(ConstraintSet(by_anchor[anchor]), box, (HALF_EXTENT, HALF_EXTENT),
                                state.table, rng_seed, avoid=avoid)
        except UnsatisfiableError:
            continue
        out.append(Place(x, y))
    return out


def _successors(state: WorldState, goal: frozenset, rng_seed: int) -> list:
    # point never changes the state, so it cannot shorten a plan
    acts = [PickUp(o.id) for o in sorted(state.placed(), key=lambda o: natural_key(Entity(o.id)))]
    acts.extend(_place_targets(state, goal, rng_seed))
    out = []
    for a in acts:
        try:
            check(state, a)
        except PreconditionViolation:
            continue
        out.append(a)
    return out


def plan_ids(state: WorldState, goal_facts, models: dict | None = None, depth_limit: int = DEPTH_LIMIT,
             rng_seed: int = 0) -> list:
    """Shortest primitive-action sequence whose end state entails every goal fact."""
    goal = frozenset(goal_facts)
    models = models or MODELS

    def satisfied(s):
        return goal <= snapshot(s).facts

    def dfs(s, depth, path):
        if satisfied(s):
            return path
        if depth == 0:
            return None
        for a in _successors(s, goal, rng_seed):
            name = "place" if isinstance(a, Place) else "pick_up" if isinstance(a, PickUp) else "point"
            found = dfs(models[name].effect(s, a), depth - 1, path + [a])
            if found is not None:
                return found
        return None

    for limit in range(depth_limit + 1):
        plan = dfs(state, limit, [])
        if plan is not None:
            return plan
    raise PlanNotFoundError(f"no plan of length <= {depth_limit} reaches {sorted(map(str, goal))}")


# ---------------------------------------------------------------- react


def handle_react(lesson: Lesson, smap: SemanticMap, memory: ConceptMemory, log: Log | None = None,
                 color_fn_factory: Callable | None = None, depth_limit: int = DEPTH_LIMIT) -> LessonResult:
    log = log or Log()
    state, scene, _, _ = realize(lesson, color_fn_factory)
    g = comprehend(lesson.content, scene, smap, memory)
    if isinstance(g, Impasse):
        diag = [str(g)]
        if g.similarity is not None:
            diag.append(f"projection-below-threshold: {g.similarity:.4f}")
        return LessonResult("failure", diagnostics=diag, state=state)
    act = g.parse.act_ref
    if act is None:
        return LessonResult("failure", diagnostics=["react needs an action utterance"], grounding=g, state=state)
    concept = g.concepts[act.key]
    mover, anchor = g.assignments[act.arg1], g.assignments[act.arg2]
    result = LessonResult("failure", grounding=g, state=state)
    trace = EpisodicTrace()
    trace.append(episode_facts(state, mover.name, anchor.name).facts)
    final_facts = None
    for _ in range(len(trace.episodes) + 3):
        try:
            p = memory.project(trace_to_case(trace, tag_current=True), concept)
        except BelowThresholdError as err:
            result.diagnostics.append(f"projection-below-threshold: {err.similarity:.4f}")
            return result
        except NoNextStateError:
            break
        result.projections += 1
        log(f"project {concept} -> {' '.join(sorted(map(str, p.next_state_facts)))}"
            f"{' final' if p.is_final else ''} sim={p.similarity:.4f}")
        try:
            plan = plan_ids(state, p.next_state_facts, depth_limit=depth_limit, rng_seed=lesson.seed)
        except PlanNotFoundError as err:
            result.diagnostics.append(f"plan-not-found: {err}")
            return result
        for a in plan:
            try:
                check(state, a)
            except PreconditionViolation as err:
                result.diagnostics.append(f"precondition-violation: {err}")
                return result
            state = apply(state, a)
            result.actions.append(a)
            log(action_text(a))
        trace.append(episode_facts(state, mover.name, anchor.name).facts)
        result.state = state
        if p.is_final:
            final_facts = p.next_state_facts
            break
    if final_facts is not None and final_facts <= snapshot(state).facts:
        result.status = "success"
    elif final_facts is None:
        result.diagnostics.append("no final state was projected")
    return result


# ---------------------------------------------------------------- session


class Agent:
    """One trainer session: concept memory, semantic map, and a log."""

    def __init__(self, memory: ConceptMemory | None = None, smap: SemanticMap | None = None,
                 log: Log | None = None, color_fn_factory: Callable | None = None):
        self.memory = memory if memory is not None else ConceptMemory()
        self.smap = smap if smap is not None else SemanticMap()
        self.log = log or Log()
        self.color_fn_factory = color_fn_factory

    def handle(self, lesson: Lesson) -> LessonResult:
        handler = {"inform": handle_inform, "verify": handle_verify, "react": handle_react}[lesson.signal]
        return handler(lesson, self.smap, self.memory, self.log, self.color_fn_factory)

    def set_explain(self, on: bool) -> None:
        self.memory.explain = self.log if on else None
