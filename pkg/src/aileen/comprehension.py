"""Template parsing and indexical grounding of utterances against a scene."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import ProjectionError, BelowThresholdError, TemplateMismatchError
from .qsr import QSR_PREDICATES, Atom, ConstraintSet
from .relfact import Case, Const, Entity, Fact, Var
from .sage import CURRENT_MARKER, START_MARKER, ConceptMemory
from .sme import natural_key

ARTICLES = frozenset({"the", "a", "an", "to"})
RELATION_LEXICON = ("left of", "right of", "behind", "in front of")
VERBS = ("move",)


def concept_symbol(words: str) -> str:
    """``red`` -> ``RRed``, ``left of`` -> ``RLeftOf``."""
    return "R" + "".join(w.capitalize() for w in words.split())


def action_symbol(verb: str, relation: str) -> str:
    return f"{concept_symbol(verb)}_{concept_symbol(relation)}"


def action_key(verb: str, relation: str) -> str:
    return f"{verb} {relation}"


class SemanticMap:
    """Bidirectional word <-> concept map."""

    def __init__(self, entries: dict | None = None):
        self._w2c: dict[str, str] = {}
        self._c2w: dict[str, str] = {}
        for word, concept in (entries or {}).items():
            self.add(word, concept)

    def add(self, word: str, concept: str) -> None:
        if self._w2c.get(word, concept) != concept or self._c2w.get(concept, word) != word:
            raise ValueError(f"mapping {word!r} -> {concept} breaks the bijection")
        self._w2c[word] = concept
        self._c2w[concept] = word

    def concept(self, word: str) -> str | None:
        return self._w2c.get(word)

    def word(self, concept: str) -> str | None:
        return self._c2w.get(concept)

    def __contains__(self, word: str) -> bool:
        return word in self._w2c

    def __len__(self) -> int:
        return len(self._w2c)

    def __eq__(self, other) -> bool:
        return isinstance(other, SemanticMap) and self._w2c == other._w2c

    def as_dict(self) -> dict:
        return dict(self._w2c)

    def copy(self) -> "SemanticMap":
        return SemanticMap(self._w2c)

    def relation_words(self) -> list:
        extra = [w for w in self._w2c if " " in w and not w.startswith(VERBS)]
        return sorted(set(RELATION_LEXICON) | set(extra), key=lambda w: (-len(w.split()), w))


# ---------------------------------------------------------------- parsing


@dataclass(frozen=True)
class ObjRef:
    id: str
    words: tuple


@dataclass(frozen=True)
class RelRef:
    words: str
    arg1: str
    arg2: str


@dataclass(frozen=True)
class ActRef:
    verb: str
    arg1: str
    arg2: str
    relation: str

    @property
    def key(self) -> str:
        return action_key(self.verb, self.relation)


@dataclass(frozen=True)
class ParseResult:
    obj_refs: tuple
    rel_ref: RelRef | None = None
    act_ref: ActRef | None = None

    def words(self) -> list:
        """Every lexical item whose concept the utterance relies on, in order."""
        out = [w for r in self.obj_refs for w in r.words]
        if self.rel_ref:
            out.append(self.rel_ref.words)
        if self.act_ref:
            out.append(self.act_ref.relation)
            out.append(self.act_ref.key)
        return list(dict.fromkeys(out))


def tokenize(utterance) -> list:
    words = utterance.split() if isinstance(utterance, str) else list(utterance)
    return [w.lower() for w in words if w.lower() not in ARTICLES]


def parse(utterance, smap: SemanticMap | None = None) -> ParseResult:
    words = tokenize(utterance)
    if not words:
        raise TemplateMismatchError("empty utterance")
    verb = words[0] if words[0] in VERBS else None
    body = words[1:] if verb else words
    relations = (smap or SemanticMap()).relation_words()
    span = None
    for i in range(1, len(body)):
        for rel in relations:
            n = len(rel.split())
            if " ".join(body[i:i + n]) == rel and i + n < len(body):
                span = (i, n, rel)
                break
        if span:
            break
    if span is None:
        if verb:
            raise TemplateMismatchError(f"no relation in action utterance {' '.join(words)!r}")
        return ParseResult((ObjRef("or1", tuple(body)),))
    i, n, rel = span
    left, right = ObjRef("or1", tuple(body[:i])), ObjRef("or2", tuple(body[i + n:]))
    if verb:
        return ParseResult((left, right), act_ref=ActRef(verb, "or1", "or2", rel))
    return ParseResult((left, right), rel_ref=RelRef(rel, "or1", "or2"))


# ---------------------------------------------------------------- grounding


@dataclass
class Impasse:
    kind: str  # unknown-word | ungroundable-ref | no-consistent-composition
    detail: tuple
    parse: ParseResult | None = None
    candidates: dict = field(default_factory=dict)
    similarity: float | None = None

    def __str__(self) -> str:
        return f"impasse {self.kind}: {', '.join(self.detail)}"


@dataclass
class GroundingResult:
    assignments: dict
    parse: ParseResult
    goal: ConstraintSet | None = None
    concepts: dict = field(default_factory=dict)
    constraints: ConstraintSet | None = None


def object_pattern(concept: str) -> Fact:
    return Fact("isa", (Var("o"), Const(concept)))


def word_extension(word: str, scene: Case, smap: SemanticMap, memory: ConceptMemory) -> frozenset | None:
    """Scene entities the word's concept recognizes; None when the word is unknown."""
    concept = smap.concept(word)
    if concept is None or concept not in memory:
        return None
    pattern = object_pattern(concept)
    out = set()
    for e in sorted(scene.entities(), key=natural_key):
        if not isinstance(e, Entity) or e.name.startswith("T"):
            continue
        r = memory.query(scene.about(e), pattern, concept)
        if r.success and r.binding.get(Var("o")) == e:
            out.add(e)
    return frozenset(out)


def ground_object_ref(ref: ObjRef, scene: Case, smap: SemanticMap, memory: ConceptMemory):
    """Candidate entities for a reference, or an Impasse."""
    sets = {w: word_extension(w, scene, smap, memory) for w in ref.words}
    unknown = tuple(w for w, s in sets.items() if s is None)
    if unknown:
        return Impasse("unknown-word", unknown)
    failing = tuple(w for w, s in sets.items() if not s)
    cands = frozenset.intersection(*sets.values()) if sets else frozenset()
    if not cands:
        return Impasse("ungroundable-ref", (ref.id,) + failing)
    return cands


def relation_constraints(concept: str, memory: ConceptMemory) -> ConstraintSet:
    """Qsr atoms that characterize a learned relation, oriented by its annotation fact."""
    ctx = memory.context(concept)
    if ctx.generalizations:
        g = max(ctx.generalizations, key=lambda g: g.n)
        facts = g.weighted(memory.thresholds.probability).facts
    elif ctx.examples:
        facts = ctx.examples[-1].facts
    else:
        return ConstraintSet()
    notes = [f for f in facts if f.pred == concept and len(f.args) == 2]
    if not notes:
        return ConstraintSet()
    x, y = notes[0].args
    roles = {x: "a1", y: "a2"}
    atoms = [Atom(f.pred, roles[f.args[0]], roles[f.args[1]]) for f in facts
             if f.pred in QSR_PREDICATES and len(f.args) == 2
             and f.args[0] != f.args[1] and set(f.args) <= {x, y}]
    return ConstraintSet(atoms)


def ground_relation_ref(words: str, memory: ConceptMemory, smap: SemanticMap):
    concept = smap.concept(words)
    if concept is None or concept not in memory:
        return Impasse("unknown-word", (words,))
    constraints = relation_constraints(concept, memory)
    if not constraints:
        return Impasse("unknown-word", (words,))
    return constraints


def compose(parsed: ParseResult, candidates: dict, constraints: ConstraintSet | None, scene: Case):
    """First injective assignment in entity order satisfying the relation, if any."""
    refs = [r.id for r in parsed.obj_refs]
    pools = [sorted(candidates[r], key=natural_key) for r in refs]
    present = scene.facts
    for combo in itertools.product(*pools):
        if len(set(combo)) != len(combo):
            continue
        assign = dict(zip(refs, combo))
        if parsed.rel_ref and constraints is not None:
            inst = constraints.instantiate(assign[parsed.rel_ref.arg1], assign[parsed.rel_ref.arg2])
            if not inst <= present:
                continue
        goal = constraints if parsed.act_ref else None
        return GroundingResult(assign, parsed, goal, constraints=constraints)
    return Impasse("no-consistent-composition", tuple(refs), parsed, dict(candidates))


def start_trace(scene: Case, mover: Entity, anchor: Entity) -> Case:
    """Single-episode trace of the mover/anchor facts, tagged as the current start."""
    t0 = Entity("T0")
    inner = [f for f in scene.facts
             if f.args == (mover, anchor) or (f.pred == "held" and f.args == (mover,))]
    facts = [Fact("holdsIn", (t0, f)) for f in inner]
    facts.append(Fact("isa", (t0, Const(START_MARKER))))
    facts.append(Fact("isa", (t0, Const(CURRENT_MARKER))))
    return Case(facts)


def action_applicable(concept: str, scene: Case, mover: Entity, anchor: Entity,
                      memory: ConceptMemory) -> tuple[bool, float]:
    """Whether the action concept projects from the scene with enough similarity."""
    try:
        r = memory.project(start_trace(scene, mover, anchor), concept)
        return True, r.similarity
    except BelowThresholdError as err:
        return False, err.similarity
    except ProjectionError as err:
        return True, err.similarity


def comprehend(utterance, scene: Case, smap: SemanticMap, memory: ConceptMemory):
    """Parse, ground each reference, compose; a GroundingResult or an Impasse.

    Unknown words are gathered across the whole utterance. Words whose concept
    recognizes nothing in the scene join them when the utterance has at least one
    unmapped word, so a single lesson can teach every concept it needs.
    """
    parsed = parse(utterance, smap)
    concepts = {w: smap.concept(w) for w in parsed.words()}
    unmapped = [w for w in parsed.words() if concepts[w] is None or concepts[w] not in memory]
    candidates, failing, ungroundable = {}, [], []
    for ref in parsed.obj_refs:
        sets = {w: word_extension(w, scene, smap, memory) for w in ref.words}
        failing.extend(w for w, s in sets.items() if s is not None and not s)
        known = [s for s in sets.values() if s is not None]
        if len(known) == len(sets):
            cands = frozenset.intersection(*known) if known else frozenset()
            if cands:
                candidates[ref.id] = cands
            else:
                ungroundable.append(ref.id)
    constraints = None
    rel_words = parsed.rel_ref.words if parsed.rel_ref else parsed.act_ref.relation if parsed.act_ref else None
    if rel_words and rel_words not in unmapped:
        constraints = ground_relation_ref(rel_words, memory, smap)
        if isinstance(constraints, Impasse):
            unmapped.append(rel_words)
            constraints = None
    if unmapped:
        words = tuple(dict.fromkeys(w for w in parsed.words() if w in unmapped or w in failing))
        return Impasse("unknown-word", words, parsed, candidates)
    if ungroundable:
        return Impasse("ungroundable-ref", tuple(ungroundable) + tuple(dict.fromkeys(failing)),
                       parsed, candidates)
    result = compose(parsed, candidates, constraints, scene)
    if isinstance(result, Impasse):
        return result
    result.concepts = concepts
    if parsed.act_ref:
        concept = concepts[parsed.act_ref.key]
        ok, sim = action_applicable(concept, scene, result.assignments[parsed.act_ref.arg1],
                                    result.assignments[parsed.act_ref.arg2], memory)
        if not ok:
            return Impasse("unknown-word", (parsed.act_ref.key,), parsed, candidates, sim)
    return result
