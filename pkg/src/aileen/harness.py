"""Curricula, trials with frozen exams, learning-curve metrics, lesson files."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .agent import Agent, Demo, Lesson
from .comprehension import SemanticMap
from .errors import ConfigError, RaggedInputError, UnsatisfiableError
from .qsr import BBox, ConstraintSet, TableBounds, rcc8, solve_region
from .sage import ConceptMemory, Thresholds, load_memory, save_memory
from .world import COLORS, HALF_EXTENT, SHAPES

PHASES = ("visual", "spatial", "action")
TRAINER_TRUTH = {
    "left of": ConstraintSet.of("e", "dc"),
    "right of": ConstraintSet.of("w", "dc"),
    "behind": ConstraintSet.of("n", "dc"),
    "in front of": ConstraintSet.of("s", "dc"),
}
RELATIONS = tuple(TRAINER_TRUTH)
OBJECT_TYPES = tuple((c, s) for c in COLORS for s in SHAPES)
CSV_COLUMNS = ("trial", "lesson", "creates", "stores", "generality", "specificity", "ms")
ANCHOR_REGION = (-0.2, 0.2, -0.1, 0.1)


@dataclass
class CurriculumConfig:
    phase: str = "visual"
    lessons: int | None = None
    trials: int | None = None
    exam_size: int = 5
    max_distractors: int = 3
    seed: int = 0
    shape_only_rate: float = 0.1
    workers: int = 1
    wall_time: bool = True
    pixel_color: bool = False
    memory: str | None = None
    bootstrap_seed: int = 1000
    bootstrap_passes: int = 10
    assimilation: float = 0.01
    probability: float = 0.6
    match: float = 0.75

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ConfigError(f"phase must be one of {', '.join(PHASES)}")
        if self.lessons is None:
            self.lessons = 25 if self.phase == "action" else 20
        if self.trials is None:
            self.trials = 5 if self.phase == "action" else 10
        if self.lessons < 1 or self.trials < 1 or self.exam_size < 0 or self.workers < 1:
            raise ConfigError("lessons, trials and workers must be positive")
        if not 0 <= self.max_distractors <= 3:
            raise ConfigError("max_distractors must lie in 0..3")
        if not 0.0 <= self.shape_only_rate <= 1.0:
            raise ConfigError("shape_only_rate must lie in [0, 1]")
        try:
            Thresholds(self.assimilation, self.probability, self.match)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.assimilation, self.probability, self.match)


_PHASE_ALIASES = {"v": "visual", "s": "spatial", "a": "action"}


def parse_config(text: str, **overrides) -> CurriculumConfig:
    """Line-oriented ``key = value`` config; ``#`` starts a comment."""
    kinds = {f.name: f.type for f in fields(CurriculumConfig)}
    values: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (p.strip() for p in line.partition("="))
        if not sep or key not in kinds:
            raise ConfigError(f"line {n}: expected a known 'key = value', got {raw!r}")
        values[key] = _coerce(key, value, kinds[key], n)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "phase" in values:
        values["phase"] = _PHASE_ALIASES.get(values["phase"], values["phase"])
    return CurriculumConfig(**values)


def _coerce(key: str, value: str, kind: str, line: int):
    try:
        if "bool" in kind:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes", "on")
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"line {line}: bad value for {key}: {value!r}") from None


def load_config(path, **overrides) -> CurriculumConfig:
    return parse_config(Path(path).read_text() if path else "", **overrides)


# ---------------------------------------------------------------- scenes


def _r6(v: float) -> float:
    return round(float(v), 6)


class SceneBuilder:
    """Samples non-touching object poses on the table."""

    def __init__(self, rng, table: TableBounds = TableBounds()):
        self.rng = rng
        self.table = table
        self.boxes: list[BBox] = []

    def free(self, box: BBox) -> bool:
        return self.table.contains(box) and all(rcc8(box, b) == "dc" for b in self.boxes)

    def add(self, box: BBox) -> tuple:
        self.boxes.append(box)
        return (box.x, box.y)

    def sample(self, region=None, tries: int = 10000) -> tuple:
        t = self.table
        x0, x1, y0, y1 = region or (t.xmin + HALF_EXTENT, t.xmax - HALF_EXTENT,
                                    t.ymin + HALF_EXTENT, t.ymax - HALF_EXTENT)
        for _ in range(tries):
            box = BBox(_r6(self.rng.uniform(x0, x1)), _r6(self.rng.uniform(y0, y1)), HALF_EXTENT, HALF_EXTENT)
            if self.free(box):
                return self.add(box)
        raise UnsatisfiableError("no free pose for another object")

    def relative(self, goal: ConstraintSet, anchor: tuple) -> tuple:
        abox = BBox(anchor[0], anchor[1], HALF_EXTENT, HALF_EXTENT)
        for _ in range(100):
            x, y = solve_region(goal, abox, (HALF_EXTENT, HALF_EXTENT), self.table,
                                int(self.rng.integers(2**31)), avoid=self.boxes)
            box = BBox(_r6(x), _r6(y), HALF_EXTENT, HALF_EXTENT)
            if self.free(box) and goal.holds(box, abox):
                return self.add(box)
        raise UnsatisfiableError(f"cannot place an object with {goal}")


def _words(t: tuple) -> str:
    return f"{t[0]} {t[1]}"


def _distractor_types(rng, exclude, k: int) -> list:
    pool = [t for t in OBJECT_TYPES if t not in exclude]
    idx = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in idx]


def _visual_ref(rng, t: tuple, shape_only_rate: float) -> str:
    return t[1] if rng.random() < shape_only_rate else _words(t)


def _matches(ref: str, t: tuple) -> bool:
    words = ref.split()
    return t[1] == words[-1] and (len(words) == 1 or t[0] == words[0])


def _spec(types: Sequence[tuple], poses: Sequence[tuple]) -> tuple:
    return tuple((s, c, p) for (c, s), p in zip(types, poses))


def visual_lesson(rng, t: tuple, signal: str, config: CurriculumConfig, distractors: int = 0,
                  present: bool = True) -> Lesson:
    ref = _visual_ref(rng, t, config.shape_only_rate)
    if present:
        types = [t] + _distractor_types(rng, {t}, distractors)
    else:
        pool = [u for u in OBJECT_TYPES if not _matches(ref, u)]
        types = [pool[int(i)] for i in rng.choice(len(pool), size=distractors + 1, replace=False)]
    order = rng.permutation(len(types)) if len(types) > 1 else [0]
    types = [types[int(i)] for i in order]
    sb = SceneBuilder(rng)
    poses = [sb.sample() for _ in types]
    return Lesson(_spec(types, poses), ref, signal, seed=int(rng.integers(2**31)))


def _pair_scene(rng, pair: tuple, goal: ConstraintSet, distractors: int):
    sb = SceneBuilder(rng)
    anchor = sb.sample(ANCHOR_REGION)
    mover = sb.relative(goal, anchor)
    others = _distractor_types(rng, set(pair), distractors)
    return [pair[0], pair[1]] + others, [mover, anchor] + [sb.sample() for _ in others]


def _free_pair_scene(rng, pair: tuple, distractors: int):
    sb = SceneBuilder(rng)
    anchor = sb.sample(ANCHOR_REGION)
    mover = sb.sample()
    others = _distractor_types(rng, set(pair), distractors)
    return [pair[0], pair[1]] + others, [mover, anchor] + [sb.sample() for _ in others]


def _other_relation(rng, rel: str) -> str:
    rest = [r for r in RELATIONS if r != rel]
    return rest[int(rng.integers(len(rest)))]


def spatial_lesson(rng, rel: str, signal: str, distractors: int = 0, present: bool = True) -> Lesson:
    pair = tuple(OBJECT_TYPES[int(i)] for i in rng.choice(len(OBJECT_TYPES), size=2, replace=False))
    shown = rel if present else _other_relation(rng, rel)
    types, poses = _pair_scene(rng, pair, TRAINER_TRUTH[shown], distractors)
    content = f"{_words(pair[0])} {rel} {_words(pair[1])}"
    return Lesson(_spec(types, poses), content, signal, seed=int(rng.integers(2**31)))


def action_lesson(rng, rel: str, signal: str, distractors: int = 0, present: bool = True) -> Lesson:
    pair = tuple(OBJECT_TYPES[int(i)] for i in rng.choice(len(OBJECT_TYPES), size=2, replace=False))
    shown = rel if present else _other_relation(rng, rel)
    types, poses = _free_pair_scene(rng, pair, distractors)
    content = f"move {_words(pair[0])} {rel} {_words(pair[1])}"
    demo = Demo("o1", "o2", TRAINER_TRUTH[shown])
    return Lesson(_spec(types, poses), content, signal, demo, seed=int(rng.integers(2**31)))


@dataclass
class Trial:
    index: int
    seed: int
    lessons: list
    generality: list
    specificity: list


def _blocks(rng, items: Sequence, n: int) -> list:
    """``n`` items drawn as consecutive random permutations of ``items``."""
    out: list = []
    while len(out) < n:
        out.extend(items[int(i)] for i in rng.permutation(len(items)))
    return out[:n]


def generate_trial(config: CurriculumConfig, seed: int, index: int = 0) -> Trial:
    rng = np.random.default_rng(seed)
    phase = config.phase
    if phase == "visual":
        lessons = [visual_lesson(rng, t, "inform", config) for t in _blocks(rng, OBJECT_TYPES, config.lessons)]
    elif phase == "spatial":
        lessons = [spatial_lesson(rng, r, "inform") for r in _blocks(rng, RELATIONS, config.lessons)]
    else:
        lessons = [action_lesson(rng, r, "inform") for r in _blocks(rng, RELATIONS, config.lessons)]
    exams = {True: [], False: []}
    for present in (True, False):
        for _ in range(config.exam_size):
            k = int(rng.integers(config.max_distractors + 1))
            if phase == "visual":
                t = OBJECT_TYPES[int(rng.integers(len(OBJECT_TYPES)))]
                exams[present].append(visual_lesson(rng, t, "verify", config, k, present))
            else:
                rel = RELATIONS[int(rng.integers(len(RELATIONS)))]
                make = spatial_lesson if phase == "spatial" else action_lesson
                exams[present].append(make(rng, rel, "verify", k, present))
    return Trial(index, seed, lessons, exams[True], exams[False])


def generate_trials(config: CurriculumConfig) -> list:
    return [generate_trial(config, config.seed + i, i) for i in range(config.trials)]


# ---------------------------------------------------------------- running


@dataclass(frozen=True)
class MetricsRow:
    trial: int
    lesson: int
    creates: int
    stores: int
    generality: int
    specificity: int
    ms: int = 0

    def as_list(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class TrialOutcome:
    rows: list
    memory: ConceptMemory
    smap: SemanticMap
    final_exams: tuple = field(default=(0, 0))


def color_factory(config: CurriculumConfig):
    if not config.pixel_color:
        return None
    from .percept import ColorModel, pixel_color_fn

    return lambda state: pixel_color_fn(state, ColorModel())


def run_exams(agent: Agent, trial: Trial) -> tuple[int, int]:
    gen = sum(agent.handle(lesson).success for lesson in trial.generality)
    spec = sum(not agent.handle(lesson).success for lesson in trial.specificity)
    return gen, spec


def run_trial(trial: Trial, agent: Agent, wall_time: bool = True) -> TrialOutcome:
    rows = []
    scores = (0, 0)
    for i, lesson in enumerate(trial.lessons):
        start = time.perf_counter()
        try:
            r = agent.handle(lesson)
            scores = run_exams(agent, trial)
        except Exception as err:
            raise RuntimeError(f"trial {trial.index} lesson {i}: {err}") from err
        ms = int(round((time.perf_counter() - start) * 1000)) if wall_time else 0
        rows.append(MetricsRow(trial.index, i, r.creates, r.stores, scores[0], scores[1], ms))
    return TrialOutcome(rows, agent.memory, agent.smap, scores)


def prerequisite_phases(phase: str) -> tuple:
    return PHASES[:PHASES.index(phase)]


def bootstrap(config: CurriculumConfig, phases: Sequence[str] | None = None) -> tuple[ConceptMemory, SemanticMap]:
    """Memory trained on ``phases`` (default: those before the configured one).

    Each phase repeats inform passes until a whole pass stores nothing. A
    configured memory file replaces training.
    """
    if config.memory:
        return load_memory(config.memory)
    phases = prerequisite_phases(config.phase) if phases is None else phases
    agent = Agent(ConceptMemory(config.thresholds), SemanticMap(), color_fn_factory=color_factory(config))
    for phase in phases:
        sub = replace(config, phase=phase, lessons=None, trials=None, shape_only_rate=0.5)
        rng = np.random.default_rng(config.bootstrap_seed + PHASES.index(phase))
        items = OBJECT_TYPES if phase == "visual" else RELATIONS
        for _ in range(config.bootstrap_passes):
            stores = 0
            for item in _blocks(rng, items, len(items) * (1 if phase == "visual" else 3)):
                if phase == "visual":
                    lesson = visual_lesson(rng, item, "inform", sub)
                elif phase == "spatial":
                    lesson = spatial_lesson(rng, item, "inform")
                else:
                    lesson = action_lesson(rng, item, "inform")
                stores += agent.handle(lesson).stores
            if stores == 0:
                break
    return agent.memory, agent.smap


def _run_one(args) -> TrialOutcome:
    config, trial, memory, smap = args
    agent = Agent(memory.clone(), smap.copy(), color_fn_factory=color_factory(config))
    return run_trial(trial, agent, config.wall_time)


def run_phase(config: CurriculumConfig, trials: Sequence[Trial] | None = None) -> list:
    trials = list(trials) if trials is not None else generate_trials(config)
    memory, smap = bootstrap(config) if config.phase != "visual" or config.memory else (
        ConceptMemory(config.thresholds), SemanticMap())
    jobs = [(config, t, memory, smap) for t in trials]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class CurvePoint:
    lesson: int
    commands: float
    generality: float
    specificity: float


def aggregate(trials_rows: Sequence[Sequence[MetricsRow]]) -> list:
    """Per-lesson means over trials of creates+stores and both exam scores."""
    if not trials_rows:
        return []
    n = len(trials_rows[0])
    if any(len(rows) != n for rows in trials_rows):
        raise RaggedInputError("trials have different lengths")
    k = len(trials_rows)
    out = []
    for i in range(n):
        col = [rows[i] for rows in trials_rows]
        out.append(CurvePoint(i, sum(r.creates + r.stores for r in col) / k,
                              sum(r.generality for r in col) / k,
                              sum(r.specificity for r in col) / k))
    return out


def rows_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def curve_csv(curve: Sequence[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("lesson", "commands", "generality", "specificity"))
    for p in curve:
        w.writerow((p.lesson, f"{p.commands:.4f}", f"{p.generality:.4f}", f"{p.specificity:.4f}"))
    return buf.getvalue()


def write_outputs(out_dir, config: CurriculumConfig, trials: Sequence[Trial], outcomes: Sequence[TrialOutcome]) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r for o in outcomes for r in o.rows]
    paths = {
        "metrics": out / f"{config.phase}_metrics.csv",
        "curve": out / f"{config.phase}_curve.csv",
        "memory": out / f"{config.phase}_memory.cm",
        "exams": out / f"{config.phase}_exams.lessons",
    }
    paths["metrics"].write_text(rows_csv(rows))
    paths["curve"].write_text(curve_csv(aggregate([o.rows for o in outcomes])))
    save_memory(paths["memory"], outcomes[0].memory, outcomes[0].smap.as_dict())
    paths["exams"].write_text(render_lessons(trials[0].generality + trials[0].specificity))
    return paths


# ---------------------------------------------------------------- lesson files


def render_lessons(lessons: Sequence[Lesson]) -> str:
    blocks = []
    for lesson in lessons:
        lines = []
        for shape, color, *pose in lesson.scene:
            p = pose[0] if pose and pose[0] is not None else None
            lines.append(f"({shape} {color} {p[0]!r} {p[1]!r})" if p else f"({shape} {color})")
        lines.append(f"content: {lesson.content}")
        lines.append(f"signal: {lesson.signal}")
        if lesson.demo is not None:
            atoms = " ".join(a.relation for a in sorted(lesson.demo.goal))
            lines.append(f"demo: {lesson.demo.mover} {lesson.demo.anchor} {atoms}")
        lines.append(f"seed: {lesson.seed}")
        blocks.append("\n".join(lines))
    return "\n---\n".join(blocks) + "\n"


def parse_lessons(text: str) -> list:
    """Blocks separated by ``---`` lines: scene lines, then ``key: value`` lines.

    ``demo:`` takes a mover, an anchor, and either relation atoms (``w dc``) or
    trainer relation words (``right of``).
    """
    lessons = []
    block: list = []
    for n, raw in enumerate(text.splitlines() + ["---"], start=1):
        line = raw.split(";", 1)[0].strip()
        if line == "---":
            if block:
                lessons.append(_lesson_from(block))
            block = []
        elif line and not line.startswith("#"):
            block.append((n, line))
    return lessons


def _lesson_from(block: list) -> Lesson:
    scene, keys = [], {}
    for n, line in block:
        if line.startswith("("):
            if not line.endswith(")"):
                raise ConfigError(f"line {n}: unterminated object {line!r}")
            parts = line[1:-1].split()
            if len(parts) not in (2, 4):
                raise ConfigError(f"line {n}: objects are (shape color [x y])")
            pose = (float(parts[2]), float(parts[3])) if len(parts) == 4 else None
            scene.append((parts[0], parts[1], pose) if pose else (parts[0], parts[1]))
        else:
            key, sep, value = line.partition(":")
            if not sep:
                raise ConfigError(f"line {n}: expected 'key: value'")
            keys[key.strip()] = value.strip()
    if "content" not in keys:
        raise ConfigError(f"lesson near line {block[0][0]} has no content")
    demo = None
    if "demo" in keys:
        mover, anchor, *rel = keys["demo"].split()
        words = " ".join(rel)
        goal = TRAINER_TRUTH[words] if words in TRAINER_TRUTH else ConstraintSet.of(*rel)
        demo = Demo(mover, anchor, goal)
    try:
        return Lesson(tuple(scene), keys["content"], keys.get("signal", "verify"), demo,
                      int(keys.get("seed", 0)))
    except ValueError as err:
        raise ConfigError(str(err)) from None


def load_lessons(path) -> list:
    return parse_lessons(Path(path).read_text())
