"""Deterministic tabletop world: objects, primitive actions, traces."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PlacementError, PreconditionViolation
from .qsr import BBox, ConstraintSet, TableBounds, describe_scene, rcc8, solve_region
from .relfact import Case, Const, Entity, Fact
from .sage import CURRENT_MARKER, START_MARKER

SHAPES = ("box", "cone", "ball", "cylinder")
COLORS = ("green", "blue", "red", "yellow", "purple")
SHAPE_PERCEPTS = {"box": "CVBox", "cone": "CVCone", "ball": "CVSphere", "cylinder": "CVCylinder"}
COLOR_PERCEPTS = {c: "CV" + c.capitalize() for c in COLORS}
HALF_EXTENT = 0.035
TABLE = TableBounds()
TABLE_Z = 0.0


@dataclass(frozen=True)
class WorldObject:
    id: str
    shape: str
    color: str
    bbox: BBox | None
    held: bool = False

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")


@dataclass(frozen=True)
class WorldState:
    objects: tuple
    table: TableBounds = TABLE
    held_id: str | None = None
    tick: int = 0

    def get(self, oid: str) -> WorldObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def placed(self) -> list:
        return [o for o in self.objects if not o.held]

    def replace(self, obj: WorldObject, **changes) -> tuple:
        return tuple(dataclasses.replace(o, **changes) if o.id == obj.id else o for o in self.objects)


@dataclass(frozen=True)
class Point:
    target: str


@dataclass(frozen=True)
class PickUp:
    target: str


@dataclass(frozen=True)
class Place:
    x: float
    y: float
    z: float = TABLE_Z


PrimitiveAction = Point | PickUp | Place


def action_text(action) -> str:
    if isinstance(action, Place):
        return f"place [{action.x:.4f}, {action.y:.4f}, {action.z:.4f}]"
    return f"{'pick_up' if isinstance(action, PickUp) else 'point'} {action.target}"


def _placeable(state: WorldState, box: BBox, ignore: str | None = None) -> bool:
    if not state.table.contains(box):
        return False
    return all(rcc8(box, o.bbox) in ("dc", "ec") for o in state.placed() if o.id != ignore)


def reset_scene(spec: Sequence[tuple], rng_seed: int = 0, table: TableBounds = TABLE,
                max_samples: int = 10000) -> WorldState:
    """Place objects from (shape, color[, (x, y)]) entries; ids are o1, o2, ...

    Omitted poses are sampled so the object stays disconnected from the rest.
    """
    rng = np.random.default_rng(rng_seed)
    state = WorldState((), table)
    for i, entry in enumerate(spec, start=1):
        shape, color = entry[0], entry[1]
        pose = entry[2] if len(entry) > 2 else None
        if pose is not None:
            box = BBox(float(pose[0]), float(pose[1]), HALF_EXTENT, HALF_EXTENT)
            if not _placeable(state, box):
                raise PlacementError(f"object {i} at {pose} overlaps or leaves the table")
        else:
            box = _sample_free(state, rng, max_samples)
        state = dataclasses.replace(state, objects=state.objects + (WorldObject(f"o{i}", shape, color, box),))
    return state


def _sample_free(state: WorldState, rng, max_samples: int) -> BBox:
    t = state.table
    for _ in range(max_samples):
        x = rng.uniform(t.xmin + HALF_EXTENT, t.xmax - HALF_EXTENT)
        y = rng.uniform(t.ymin + HALF_EXTENT, t.ymax - HALF_EXTENT)
        box = BBox(float(x), float(y), HALF_EXTENT, HALF_EXTENT)
        if all(rcc8(box, o.bbox) == "dc" for o in state.placed()):
            return box
    raise PlacementError(f"no free pose after {max_samples} samples")


def percepts(obj: WorldObject, color_fn: Callable | None = None) -> list:
    e = Entity(obj.id)
    color = color_fn(obj) if color_fn else COLOR_PERCEPTS[obj.color]
    return [Fact("isa", (e, Const(SHAPE_PERCEPTS[obj.shape]))), Fact("isa", (e, Const(color)))]


def snapshot(state: WorldState, color_fn: Callable | None = None) -> Case:
    """Percept facts for every object, qsr facts among placed ones, held marker."""
    facts = []
    for o in state.objects:
        facts.extend(percepts(o, color_fn))
        if o.held:
            facts.append(Fact("held", (Entity(o.id),)))
    facts.extend(describe_scene([(o.id, o.bbox) for o in state.placed()]).facts)
    return Case(facts)


def check(state: WorldState, action) -> None:
    """Raise PreconditionViolation naming the first failed condition."""
    if isinstance(action, (Point, PickUp)):
        try:
            obj = state.get(action.target)
        except KeyError:
            raise PreconditionViolation(f"object {action.target} exists") from None
        if isinstance(action, PickUp):
            if state.held_id is not None:
                raise PreconditionViolation("hand is empty")
            if obj.held:
                raise PreconditionViolation(f"{obj.id} is on the table")
    elif isinstance(action, Place):
        if state.held_id is None:
            raise PreconditionViolation("an object is held")
        held = state.get(state.held_id)
        box = BBox(action.x, action.y, HALF_EXTENT, HALF_EXTENT)
        if not state.table.contains(box):
            raise PreconditionViolation("place point within table bounds")
        if not _placeable(state, box, ignore=held.id):
            raise PreconditionViolation("place point free of other objects")
    else:
        raise TypeError(f"not a primitive action: {action!r}")


def apply(state: WorldState, action) -> WorldState:
    """Action model effect, assuming preconditions hold."""
    tick = state.tick + 1
    if isinstance(action, PickUp):
        obj = state.get(action.target)
        return dataclasses.replace(state, objects=state.replace(obj, held=True, bbox=None),
                                   held_id=obj.id, tick=tick)
    if isinstance(action, Place):
        obj = state.get(state.held_id)
        box = BBox(action.x, action.y, HALF_EXTENT, HALF_EXTENT)
        return dataclasses.replace(state, objects=state.replace(obj, held=False, bbox=box),
                                   held_id=None, tick=tick)
    return dataclasses.replace(state, tick=tick)


def step(state: WorldState, action) -> WorldState:
    check(state, action)
    return apply(state, action)


# ---------------------------------------------------------------- traces


@dataclass
class EpisodicTrace:
    """Linear chain of episodes T0, T1, ...; ``complete`` adds the final marker."""

    episodes: list = field(default_factory=list)
    complete: bool = False

    def append(self, facts) -> Entity:
        episode = Entity(f"T{len(self.episodes)}")
        self.episodes.append((episode, Case(facts)))
        return episode

    @property
    def current(self) -> Entity:
        return self.episodes[-1][0]


def episode_facts(state: WorldState, mover: str, anchor: str, color_fn: Callable | None = None) -> Case:
    """Facts relating the mover to the anchor, plus whether the mover is held."""
    m, a = Entity(mover), Entity(anchor)
    snap = snapshot(state, color_fn)
    return Case(f for f in snap.facts if f.args == (m, a) or (f.pred == "held" and f.args == (m,)))


def trace_to_case(trace: EpisodicTrace, tag_current: bool = False) -> Case:
    facts = []
    for ep, case in trace.episodes:
        facts.extend(Fact("holdsIn", (ep, f)) for f in case.facts)
    eps = [ep for ep, _ in trace.episodes]
    for prev, nxt in zip(eps, eps[1:]):
        facts.append(Fact("after", (nxt, prev)))
    if eps:
        facts.append(Fact("isa", (eps[0], Const(START_MARKER))))
        if trace.complete and len(eps) > 1:
            facts.append(Fact("final", (eps[-1], eps[-2])))
        if tag_current:
            facts.append(Fact("isa", (eps[-1], Const(CURRENT_MARKER))))
    return Case(facts)


def demonstrate_move(state: WorldState, mover: str, anchor: str, goal: ConstraintSet,
                     rng_seed: int = 0) -> tuple[EpisodicTrace, WorldState]:
    """Trainer demonstration: pick up the mover, place it in the goal region.

    Always three episodes, even when the goal already holds at the start.
    """
    trace = EpisodicTrace()
    trace.append(episode_facts(state, mover, anchor).facts)
    anchor_box = state.get(anchor).bbox
    others = [o.bbox for o in state.placed() if o.id not in (mover, anchor)]
    x, y = solve_region(goal, anchor_box, (HALF_EXTENT, HALF_EXTENT), state.table, rng_seed, avoid=others)
    state = step(state, PickUp(mover))
    trace.append(episode_facts(state, mover, anchor).facts)
    state = step(state, Place(x, y))
    trace.append(episode_facts(state, mover, anchor).facts)
    trace.complete = True
    return trace, state
