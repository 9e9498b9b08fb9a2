"""Concept memory: per-concept generalization contexts and the four commands.

Each concept owns a context of generalizations (probability-weighted fact
sets over abstract entities) and isolated examples. ``store`` routes a new
example into the most similar generalization or example, ``query`` and
``project`` read candidate inferences off the best match.
"""

from __future__ import annotations

import copy
import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .errors import (BelowThresholdError, CorruptMemoryError, DuplicateConceptError,
                     FactParseError, InvalidExampleError, NoNextStateError, SchemaVersionError,
                     UnknownConceptError)
from .relfact import (Case, Const, Entity, Fact, GenEnt, Skolem, entities_of, mentions,
                      parse_fact, pattern_match, rename)
from .sme import MatchResult, WeightedCase, map_cases, natural_key

FILE_HEADER = "aileen-cm v1"
START_MARKER = "start"
CURRENT_MARKER = "AileenStartTime"
_EPS = 1e-12


@dataclass(frozen=True)
class Thresholds:
    assimilation: float = 0.01
    probability: float = 0.6
    match: float = 0.75

    def __post_init__(self):
        for name in ("assimilation", "probability", "match"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} threshold must lie in [0, 1]")


class StoreOutcome(enum.Enum):
    ASSIMILATED = "assimilated-into-generalization"
    MERGED = "merged-two-examples"
    ISOLATED = "stored-isolated"


class Generalization:
    """Facts over abstract entities with support counts out of ``n`` examples."""

    def __init__(self, gen_id: int, context: str, n: int, entries: dict, n_skolems: int):
        self.gen_id = gen_id
        self.context = context
        self.n = n
        self.entries = entries
        self.n_skolems = n_skolems

    def probability(self, f: Fact) -> float:
        return self.entries[f] / self.n

    def new_skolem(self) -> GenEnt:
        g = GenEnt(self.gen_id, self.n_skolems, self.context)
        self.n_skolems += 1
        return g

    @property
    def skolems(self) -> list:
        return [GenEnt(self.gen_id, i, self.context) for i in range(self.n_skolems)]

    def weighted(self, min_probability: float = 0.0) -> WeightedCase:
        return WeightedCase({f: c / self.n for f, c in self.entries.items()
                             if c / self.n >= min_probability - _EPS}, self.context)

    def table(self) -> list:
        """(fact, probability) rows, most probable first."""
        return sorted(((f, c / self.n) for f, c in self.entries.items()), key=lambda r: (-r[1], str(r[0])))


@dataclass
class GeneralizationContext:
    concept: str
    generalizations: list = field(default_factory=list)
    examples: list = field(default_factory=list)
    next_gen: int = 0

    @property
    def name(self) -> str:
        return self.concept + "Mt"


@dataclass
class QueryResult:
    status: str
    binding: dict | None
    similarity: float
    source: tuple | None = None
    match: MatchResult | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"


@dataclass
class ProjectionResult:
    next_state_facts: frozenset
    is_final: bool
    similarity: float
    episode: Entity
    source: tuple | None = None
    match: MatchResult | None = None


def _concept_facts_present(case: Case, concept: str) -> bool:
    return any(mentions(f, concept) for f in case.facts)


def start_episode(facts: Iterable[Fact], marker: str = START_MARKER):
    """The episode tagged ``(isa T marker)``; ``(isa marker T)`` is accepted."""
    found = []
    for f in facts:
        if f.pred != "isa" or len(f.args) != 2:
            continue
        a, b = f.args
        if b == Const(marker) and not isinstance(a, (Const, Fact)):
            found.append(a)
        elif a == Const(marker) and not isinstance(b, (Const, Fact)):
            found.append(b)
    return found


def episodes_of(facts: Iterable[Fact]) -> set:
    out = set()
    for f in facts:
        if f.pred == "holdsIn":
            out.add(f.args[0])
        elif f.pred in ("after", "final"):
            out.update(a for a in f.args if not isinstance(a, (Const, Fact)))
    return out


def latest_episode(trace: Case):
    eps = {e for e in episodes_of(trace.facts) if isinstance(e, Entity)}
    has_successor = {f.args[1] for f in trace.facts
                     if f.pred == "after" and isinstance(f.args[0], Entity)}
    tail = sorted((e for e in eps if e not in has_successor), key=natural_key)
    if len(tail) != 1:
        raise ValueError(f"trace must have exactly one latest episode, found {[str(t) for t in tail]}")
    return tail[0]


class ConceptMemory:
    """The four-command concept memory.

    ``explain``, when set, receives a text dump of every match made by
    ``query`` and ``project``.
    """

    def __init__(self, thresholds: Thresholds | None = None):
        self.thresholds = thresholds or Thresholds()
        self.contexts: dict[str, GeneralizationContext] = {}
        self.explain: Callable[[str], None] | None = None

    def __contains__(self, concept: str) -> bool:
        return concept in self.contexts

    def __eq__(self, other) -> bool:
        return isinstance(other, ConceptMemory) and render_memory(self) == render_memory(other)

    def clone(self) -> "ConceptMemory":
        explain, self.explain = self.explain, None
        try:
            dup = copy.deepcopy(self)
        finally:
            self.explain = explain
        return dup

    def context(self, concept: str) -> GeneralizationContext:
        try:
            return self.contexts[concept]
        except KeyError:
            raise UnknownConceptError(concept) from None

    # ---------------------------------------------------------- commands

    def create(self, concept: str) -> GeneralizationContext:
        if concept in self.contexts:
            raise DuplicateConceptError(f"concept {concept} already exists")
        ctx = GeneralizationContext(concept)
        self.contexts[concept] = ctx
        return ctx

    def store(self, example: Case, concept: str) -> StoreOutcome:
        ctx = self.context(concept)
        if not example.facts:
            raise InvalidExampleError("cannot store an empty example")
        if not _concept_facts_present(example, concept):
            raise InvalidExampleError(f"example has no fact mentioning {concept}")
        best = None
        for i, g in enumerate(ctx.generalizations):
            m = map_cases(g.weighted(), example)
            if best is None or m.similarity > best[0] + _EPS:
                best = (m.similarity, "generalization", i, m)
        for i, e in enumerate(ctx.examples):
            m = map_cases(WeightedCase.from_case(e, ctx.name), example)
            if best is None or m.similarity > best[0] + _EPS:
                best = (m.similarity, "example", i, m)
        if best is None or best[0] < self.thresholds.assimilation:
            ctx.examples.append(Case(example.facts, concept))
            return StoreOutcome.ISOLATED
        _, kind, idx, m = best
        if kind == "generalization":
            _assimilate(ctx.generalizations[idx], m, example)
            return StoreOutcome.ASSIMILATED
        base = ctx.examples.pop(idx)
        ctx.generalizations.append(_merge(ctx, base, m, example))
        return StoreOutcome.MERGED

    def bases(self, concept: str, eligible: bool = True) -> Iterator[tuple]:
        """(source, weighted base) pairs: generalizations first, then examples."""
        ctx = self.context(concept)
        floor = self.thresholds.probability if eligible else 0.0
        for i, g in enumerate(ctx.generalizations):
            base = g.weighted(floor)
            if base.facts:
                yield ("generalization", i), base
        for i, e in enumerate(ctx.examples):
            yield ("example", i), WeightedCase.from_case(e, ctx.name)

    def query(self, scene: Case, pattern: Fact, concept: str) -> QueryResult:
        if not mentions(pattern, concept):
            raise ValueError(f"pattern {pattern} does not mention {concept}")
        best_sim = 0.0
        best: QueryResult | None = None
        for source, base in self.bases(concept):
            m = map_cases(base, scene, norm_exclude=(concept,))
            self._explain(f"query {concept} {source[0]} {source[1]}", m)
            best_sim = max(best_sim, m.similarity)
            if m.similarity < self.thresholds.match:
                continue
            hits = [(str(f), b) for f in m.candidate_inferences
                    if (b := pattern_match(pattern, f)) is not None]
            if not hits:
                continue
            if best is None or m.similarity > best.similarity + _EPS:
                best = QueryResult("success", min(hits, key=lambda h: h[0])[1], m.similarity, source, m)
        return best or QueryResult("failure", None, best_sim)

    def project(self, trace: Case, concept: str) -> ProjectionResult:
        self.context(concept)
        current = start_episode(trace.facts, CURRENT_MARKER)
        if len(current) != 1:
            raise ValueError("trace must tag exactly one episode as the current start")
        latest = latest_episode(trace)
        trace_start = start_episode(trace.facts)
        best = None
        for source, base in self.bases(concept):
            base_start = start_episode(base.facts)
            pinned = {base_start[0]: trace_start[0]} if base_start and trace_start else None
            m = map_cases(base, trace, norm_exclude=(concept,), pinned=pinned)
            sim = temporal_similarity(base, m, concept)
            self._explain(f"project {concept} {source[0]} {source[1]} temporal {sim:.4f}", m)
            if best is None or sim > best[0] + _EPS:
                best = (sim, source, m)
        if best is None or best[0] < self.thresholds.match:
            sim = best[0] if best else 0.0
            raise BelowThresholdError(f"projection similarity {sim:.3f} below threshold", sim)
        sim, source, m = best
        nexts = sorted({f.args[0] for f in m.candidate_inferences
                        if f.pred == "after" and isinstance(f.args[0], Skolem) and f.args[1] == latest},
                       key=str)
        if not nexts:
            raise NoNextStateError("no inferred episode follows the current one", sim)
        step = nexts[0]
        facts = frozenset(f.args[1] for f in m.candidate_inferences
                          if f.pred == "holdsIn" and f.args[0] == step and isinstance(f.args[1], Fact)
                          and not any(isinstance(e, Skolem) for e in entities_of(f.args[1])))
        if not facts:
            raise NoNextStateError("inferred next episode has no concrete facts", sim)
        is_final = any(f.pred == "final" and f.args[0] == step for f in m.candidate_inferences)
        episode = _fresh_episode(trace)
        return ProjectionResult(facts, is_final, sim, episode, source, m)

    def _explain(self, header: str, m: MatchResult) -> None:
        if self.explain is not None:
            self.explain(header + "\n" + m.explain())


def temporal_similarity(base: WeightedCase, m: MatchResult, concept: str) -> float:
    """Similarity over the part of the base the trace has already lived through.

    Facts tied to base episodes without a counterpart in the trace describe
    the future and do not count against the match.
    """
    future = episodes_of(base.facts) - set(m.entity_map)
    aligned = {c.base_fact for c in m.correspondences}
    norm = score = 0.0
    for f, w in base.facts.items():
        if mentions(f, concept) or any(e in future for e in entities_of(f)):
            continue
        norm += w
        if f in aligned:
            score += w
    return min(1.0, score / norm) if norm > 0 else 0.0


def _fresh_episode(trace: Case) -> Entity:
    nums = [int(e.name[1:]) for e in trace.entities()
            if isinstance(e, Entity) and re.fullmatch(r"T\d+", e.name)]
    return Entity(f"T{max(nums, default=-1) + 1}")


def _assimilate(g: Generalization, m: MatchResult, example: Case) -> None:
    inverse = {t: b for b, t in m.entity_map.items()}
    for c in m.correspondences:
        g.entries[c.base_fact] += 1
    for e in sorted(example.entities() - set(inverse), key=natural_key):
        inverse[e] = g.new_skolem()
    g.n += 1
    matched = {c.target_fact for c in m.correspondences}
    for f in example.facts:
        if f not in matched:
            key = rename(f, inverse)
            g.entries[key] = min(g.n, g.entries.get(key, 0) + 1)


def _merge(ctx: GeneralizationContext, base: Case, m: MatchResult, example: Case) -> Generalization:
    g = Generalization(ctx.next_gen, ctx.name, 2, {}, 0)
    ctx.next_gen += 1
    base_map = {e: g.new_skolem() for e in sorted(base.entities(), key=natural_key)}
    target_map = {t: base_map[b] for b, t in m.entity_map.items()}
    for e in sorted(example.entities() - set(target_map), key=natural_key):
        target_map[e] = g.new_skolem()
    matched_base = {c.base_fact for c in m.correspondences}
    matched_target = {c.target_fact for c in m.correspondences}
    for f in base.facts:
        g.entries[rename(f, base_map)] = 2 if f in matched_base else 1
    for f in example.facts:
        if f not in matched_target:
            key = rename(f, target_map)
            g.entries[key] = min(2, g.entries.get(key, 0) + 1)
    return g


# ---------------------------------------------------------------- persistence


def render_memory(memory: ConceptMemory, lexicon: dict | None = None) -> str:
    """Canonical text form; ``lexicon`` maps word strings to concept symbols."""
    t = memory.thresholds
    lines = [FILE_HEADER, f"thresholds {t.assimilation!r} {t.probability!r} {t.match!r}"]
    for words, concept in sorted((lexicon or {}).items(), key=lambda kv: (kv[1], kv[0])):
        lines.append(f"map {concept} {words}")
    for concept in sorted(memory.contexts):
        ctx = memory.contexts[concept]
        lines.append(f"concept {concept} next={ctx.next_gen}")
        for g in ctx.generalizations:
            lines.append(f"generalization id={g.gen_id} n={g.n} skolems={g.n_skolems}")
            for f, c in sorted(g.entries.items(), key=lambda kv: str(kv[0])):
                lines.append(f"entry c={c} {f}")
        for e in ctx.examples:
            lines.append("example")
            lines.extend(sorted(str(f) for f in e.facts))
    return "\n".join(lines) + "\n"


def save_memory(path, memory: ConceptMemory, lexicon: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_memory(memory, lexicon))


def load_memory(path) -> tuple[ConceptMemory, dict]:
    with open(path, encoding="utf-8") as fh:
        return parse_memory(fh.read())


_KV = re.compile(r"(\w+)=(\S+)")


def parse_memory(text: str) -> tuple[ConceptMemory, dict]:
    lines = [ln.rstrip() for ln in text.splitlines()]
    if not lines or not lines[0].startswith("aileen-cm"):
        raise CorruptMemoryError("missing aileen-cm header")
    if lines[0].strip() != FILE_HEADER:
        raise SchemaVersionError(f"unsupported memory file version: {lines[0]!r}")
    memory = ConceptMemory()
    lexicon: dict = {}
    ctx = gen = None
    example: list | None = None

    def close_example():
        nonlocal example
        if example is not None:
            if not example:
                raise CorruptMemoryError("empty example block")
            ctx.examples.append(Case(example, ctx.concept))
            example = None

    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            head, _, rest = line.partition(" ")
            if line.startswith("("):
                if example is None:
                    raise CorruptMemoryError("fact outside an example block")
                example.append(parse_fact(line))
                continue
            close_example()
            if head == "thresholds":
                a, p, mt = (float(x) for x in rest.split())
                memory.thresholds = Thresholds(a, p, mt)
            elif head == "map":
                concept, _, words = rest.partition(" ")
                lexicon[words] = concept
            elif head == "concept":
                name, _, kv = rest.partition(" ")
                ctx = memory.create(name)
                ctx.next_gen = int(dict(_KV.findall(kv)).get("next", 0))
                gen = None
            elif head == "generalization":
                kv = dict(_KV.findall(rest))
                gen = Generalization(int(kv["id"]), ctx.name, int(kv["n"]), {}, int(kv["skolems"]))
                if gen.n < 2:
                    raise CorruptMemoryError("generalization needs n >= 2")
                ctx.generalizations.append(gen)
            elif head == "entry":
                kv, _, fact_text = rest.partition(" ")
                count = int(kv.split("=", 1)[1])
                if not 1 <= count <= gen.n:
                    raise CorruptMemoryError(f"probability {count}/{gen.n} outside (0, 1]")
                f = parse_fact(fact_text)
                for e in entities_of(f):
                    if isinstance(e, GenEnt) and (e.gen != gen.gen_id or e.index >= gen.n_skolems
                                                  or e.context != ctx.name):
                        raise CorruptMemoryError(f"unregistered skolem {e}")
                gen.entries[f] = count
            elif head == "example":
                if ctx is None:
                    raise CorruptMemoryError("example outside a concept")
                example = []
            else:
                raise CorruptMemoryError(f"unknown directive {head!r}")
        except CorruptMemoryError as exc:
            raise CorruptMemoryError(f"line {lineno}: {exc}") from None
        except (FactParseError, ValueError, KeyError, AttributeError, DuplicateConceptError) as exc:
            raise CorruptMemoryError(f"line {lineno}: {exc}") from None
    close_example()
    return memory, lexicon
