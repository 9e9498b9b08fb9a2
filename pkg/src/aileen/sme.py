"""Structure mapping between a weighted base case and a target case.

A mapping pairs base entities one-to-one with target entities. A base fact
corresponds to a target fact when they share predicate, constants and
nesting shape and their entity slots agree under the mapping (nested facts
therefore only align when their inner facts align under the same map).
The raw score is the summed weight of corresponding base facts; similarity
normalizes it by the base's own score.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import kernel
from ._kernel_py import bound as _py_bound
from .errors import OracleSizeError
from .relfact import Case, EntityLike, Fact, Skolem, entities_of, mentions, rename

EXACT_ENTITY_LIMIT = 6
ORACLE_MAX_FACTS = 8
ORACLE_MAX_ENTITIES = 5


class WeightedCase:
    """Facts with weights in (0, 1]; a plain example has every weight 1."""

    __slots__ = ("facts", "context_name")

    def __init__(self, facts: Mapping[Fact, float], context_name: str = "Example"):
        for f, w in facts.items():
            if not 0.0 < w <= 1.0:
                raise ValueError(f"weight {w} of {f} outside (0, 1]")
        self.facts = dict(facts)
        self.context_name = context_name

    @classmethod
    def from_case(cls, case: Case | Iterable[Fact], context_name: str = "Example") -> "WeightedCase":
        facts = case.facts if isinstance(case, Case) else case
        return cls({f: 1.0 for f in facts}, context_name)

    def self_score(self, exclude: Iterable[str] = ()) -> float:
        exclude = tuple(exclude)
        return sum(w for f, w in self.facts.items() if not any(mentions(f, s) for s in exclude))

    def entities(self) -> set:
        out = set()
        for f in self.facts:
            out.update(entities_of(f))
        return out

    def __len__(self) -> int:
        return len(self.facts)


@dataclass(frozen=True)
class Correspondence:
    base_fact: Fact
    target_fact: Fact


@dataclass
class MatchResult:
    correspondences: tuple
    entity_map: dict
    raw_score: float
    similarity: float
    candidate_inferences: frozenset = field(default_factory=frozenset)

    def explain(self) -> str:
        lines = [f"similarity {self.similarity:.4f} raw {self.raw_score:.4f}"]
        for b, t in sorted(self.entity_map.items(), key=lambda kv: str(kv[0])):
            lines.append(f"  map {b} -> {t}")
        for c in sorted(self.correspondences, key=lambda c: str(c.base_fact)):
            lines.append(f"  match {c.base_fact} <-> {c.target_fact}")
        for f in sorted(self.candidate_inferences, key=str):
            lines.append(f"  infer {f}")
        return "\n".join(lines)


def natural_key(term) -> tuple:
    """Sort key placing o2 before o10."""
    text = str(term)
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", text))


def _signature(term, slots: list):
    if isinstance(term, Fact):
        return (term.pred, tuple(_signature(a, slots) for a in term.args))
    if isinstance(term, EntityLike):
        slots.append(term)
        return None
    return str(term)


def _equality_pattern(slots: list) -> tuple:
    first = {}
    return tuple(first.setdefault(s, i) for i, s in enumerate(slots))


class _Encoding:
    """Flat integer view of a (base, target) pair for the kernels."""

    def __init__(self, base: WeightedCase, target_facts: Iterable[Fact]):
        self.base_facts = sorted(base.facts, key=str)
        self.target_facts = sorted(target_facts, key=str)
        sig_ids: dict = {}
        b_slots, b_sigs = [], []
        for f in self.base_facts:
            slots = []
            b_sigs.append(sig_ids.setdefault(_signature(f, slots), len(sig_ids)))
            b_slots.append(slots)
        t_slots, t_by_sig = [], {}
        for j, f in enumerate(self.target_facts):
            slots = []
            sig = _signature(f, slots)
            t_slots.append(slots)
            if sig in sig_ids:
                t_by_sig.setdefault(sig_ids[sig], []).append(j)

        weight_of = {}
        for f, slots in zip(self.base_facts, b_slots):
            for e in set(slots):
                weight_of[e] = weight_of.get(e, 0.0) + base.facts[f]
        self.base_ents = sorted(weight_of, key=lambda e: (-weight_of[e], natural_key(e)))
        self.target_ents = sorted({e for s in t_slots for e in s}, key=natural_key)
        b_index = {e: i for i, e in enumerate(self.base_ents)}
        t_index = {e: i for i, e in enumerate(self.target_ents)}

        self.fw = [base.facts[f] for f in self.base_facts]
        self.fslot_ptr, self.fslot_ent = [0], []
        self.fcand_ptr, self.fcand_tf = [0], []
        ecands = [set() for _ in self.base_ents]
        for i, slots in enumerate(b_slots):
            self.fslot_ent.extend(b_index[e] for e in slots)
            self.fslot_ptr.append(len(self.fslot_ent))
            pattern = _equality_pattern(slots)
            for j in t_by_sig.get(b_sigs[i], ()):
                if _equality_pattern(t_slots[j]) != pattern:
                    continue
                self.fcand_tf.append(j)
                for e, t in zip(slots, t_slots[j]):
                    ecands[b_index[e]].add(t_index[t])
            self.fcand_ptr.append(len(self.fcand_tf))
        self.tslot_ptr, self.tslot_ent = [0], []
        for slots in t_slots:
            self.tslot_ent.extend(t_index[e] for e in slots)
            self.tslot_ptr.append(len(self.tslot_ent))
        self.order = list(range(len(self.base_ents)))
        self.ecand_ptr, self.ecand_t = [0], []
        for cands in ecands:
            self.ecand_t.extend(sorted(cands))
            self.ecand_ptr.append(len(self.ecand_t))
        self.b_index, self.t_index = b_index, t_index

    def fixed(self, pinned: Mapping | None) -> list:
        out = [-2] * len(self.base_ents)
        for b, t in (pinned or {}).items():
            if b in self.b_index:
                out[self.b_index[b]] = self.t_index.get(t, -1)
        return out

    def kernel_args(self):
        return (self.fw, self.fslot_ptr, self.fslot_ent, self.fcand_ptr, self.fcand_tf,
                self.tslot_ptr, self.tslot_ent)


def _greedy(enc: _Encoding, fixed: list) -> list:
    """Seed-and-grow for large bases: commit each entity to its best-bound choice."""
    n_te = len(enc.target_ents)
    assign = list(fixed)
    used = [False] * max(n_te, 1)
    for t in assign:
        if t >= 0:
            used[t] = True
    args = enc.kernel_args()
    for e in enc.order:
        if assign[e] != -2:
            continue
        best_t, best_b = -1, -1.0
        options = [enc.ecand_t[c] for c in range(enc.ecand_ptr[e], enc.ecand_ptr[e + 1])] + [-1]
        for t in options:
            if t >= 0 and used[t]:
                continue
            assign[e] = t
            if t >= 0:
                used[t] = True
            b = _py_bound(*args, assign, used)
            if t >= 0:
                used[t] = False
            if b > best_b + 1e-12:
                best_t, best_b = t, b
        assign[e] = best_t
        if best_t >= 0:
            used[best_t] = True
    return assign


def _result_from_map(base: WeightedCase, target_facts, entity_map: dict, norm_exclude) -> MatchResult:
    """Build the MatchResult implied by a (possibly over-full) entity map."""
    target_set = set(target_facts)
    corr = []
    for f in sorted(base.facts, key=str):
        ents = set(entities_of(f))
        if not all(e in entity_map for e in ents):
            continue
        image = rename(f, entity_map)
        if image in target_set:
            corr.append(Correspondence(f, image))
    used = set()
    for c in corr:
        used.update(entities_of(c.base_fact))
    emap = {b: t for b, t in entity_map.items() if b in used}
    raw = sum(base.facts[c.base_fact] for c in corr)
    norm = base.self_score(norm_exclude)
    scored = sum(base.facts[c.base_fact] for c in corr
                 if not any(mentions(c.base_fact, s) for s in norm_exclude))
    sim = min(1.0, scored / norm) if norm > 0 else 0.0
    result = MatchResult(tuple(corr), emap, raw, sim)
    result.candidate_inferences = candidate_inferences(base, target_facts, emap, result.correspondences)
    return result


def map_cases(base: WeightedCase, target: Case | Iterable[Fact], *, norm_exclude: Iterable[str] = (),
              pinned: Mapping | None = None) -> MatchResult:
    """Best consistent mapping from ``base`` onto ``target``.

    ``norm_exclude`` lists symbols whose facts do not count toward the
    base's self score; ``pinned`` forces base entities onto target entities.
    """
    target_facts = target.facts if isinstance(target, Case) else frozenset(target)
    norm_exclude = tuple(norm_exclude)
    if not base.facts or not target_facts:
        return MatchResult((), {}, 0.0, 0.0, frozenset())
    enc = _Encoding(base, target_facts)
    fixed = enc.fixed(pinned)
    if len(enc.base_ents) <= EXACT_ENTITY_LIMIT:
        assign, _ = kernel.search(len(enc.target_ents), *enc.kernel_args(), enc.order,
                                  enc.ecand_ptr, enc.ecand_t, fixed)
    else:
        assign = _greedy(enc, fixed)
    entity_map = {enc.base_ents[i]: enc.target_ents[t] for i, t in enumerate(assign) if t >= 0}
    return _result_from_map(base, target_facts, entity_map, norm_exclude)


def candidate_inferences(base: WeightedCase, target, entity_map: Mapping,
                         correspondences: Iterable[Correspondence] | None = None) -> frozenset:
    """Unmatched base facts carried onto the target through ``entity_map``.

    Base entities outside the map become ``Skolem`` terms, one per base
    entity, so repeated calls yield identical skolems.
    """
    if correspondences is None:
        target_facts = target.facts if isinstance(target, Case) else set(target)
        matched = {f for f in base.facts
                   if all(e in entity_map for e in entities_of(f)) and rename(f, entity_map) in target_facts}
    else:
        matched = {c.base_fact for c in correspondences}
    out = set()
    for f in base.facts:
        if f in matched:
            continue
        mapping = {e: entity_map.get(e, Skolem(e)) for e in entities_of(f)}
        out.add(rename(f, mapping))
    return frozenset(out)


# ---------------------------------------------------------------- oracle


def _align(b, t, fwd: dict, inv: dict) -> bool:
    if isinstance(b, Fact):
        if not isinstance(t, Fact) or b.pred != t.pred or len(b.args) != len(t.args):
            return False
        return all(_align(x, y, fwd, inv) for x, y in zip(b.args, t.args))
    if isinstance(b, EntityLike):
        if not isinstance(t, EntityLike):
            return False
        if b in fwd:
            return fwd[b] == t
        if t in inv:
            return False
        fwd[b] = t
        inv[t] = b
        return True
    return not isinstance(t, EntityLike) and b == t


def map_cases_oracle(base: WeightedCase, target: Case | Iterable[Fact], *,
                     norm_exclude: Iterable[str] = ()) -> MatchResult:
    """Exhaustive search over fact alignments; only for small inputs."""
    target_facts = sorted(target.facts if isinstance(target, Case) else set(target), key=str)
    base_facts = sorted(base.facts, key=str)
    t_ents = {e for f in target_facts for e in entities_of(f)}
    if (len(base_facts) > ORACLE_MAX_FACTS or len(target_facts) > ORACLE_MAX_FACTS
            or len(base.entities()) > ORACLE_MAX_ENTITIES or len(t_ents) > ORACLE_MAX_ENTITIES):
        raise OracleSizeError("oracle limited to 8 facts and 5 entities per side")
    best = [-1.0, {}]
    used = [False] * len(target_facts)

    def rec(i, fwd, inv, score):
        remaining = sum(base.facts[f] for f in base_facts[i:])
        if score + remaining <= best[0] + 1e-12:
            return
        if i == len(base_facts):
            best[0], best[1] = score, dict(fwd)
            return
        f = base_facts[i]
        for j, t in enumerate(target_facts):
            if used[j]:
                continue
            f2, i2 = dict(fwd), dict(inv)
            if _align(f, t, f2, i2):
                used[j] = True
                rec(i + 1, f2, i2, score + base.facts[f])
                used[j] = False
        rec(i + 1, fwd, inv, score)

    rec(0, {}, {}, 0.0)
    result = _result_from_map(base, target_facts, best[1], tuple(norm_exclude))
    result.raw_score = best[0]
    return result
