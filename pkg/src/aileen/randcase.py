"""Random relational cases for property tests and benchmarks."""

from __future__ import annotations

import random

from .relfact import Case, Const, Entity, Fact
from .sme import WeightedCase

PREDICATES = {"p": 1, "q": 1, "r": 2, "s": 2, "t": 3}
TAGS = ("A", "B", "C")


def random_fact(rng: random.Random, entities: list, nest: float = 0.15) -> Fact:
    if rng.random() < nest:
        return Fact("holdsIn", (rng.choice(entities), random_fact(rng, entities, 0.0)))
    if rng.random() < 0.25:
        return Fact("isa", (rng.choice(entities), Const(rng.choice(TAGS))))
    pred = rng.choice(sorted(PREDICATES))
    return Fact(pred, tuple(rng.choice(entities) for _ in range(PREDICATES[pred])))


def random_case(rng: random.Random, n_facts: int, n_entities: int, prefix: str = "e") -> Case:
    entities = [Entity(f"{prefix}{i}") for i in range(n_entities)]
    facts = set()
    for _ in range(n_facts * 4):
        if len(facts) >= n_facts:
            break
        facts.add(random_fact(rng, entities))
    return Case(facts)


def random_weighted(rng: random.Random, n_facts: int, n_entities: int, prefix: str = "b",
                    weighted: bool = True) -> WeightedCase:
    case = random_case(rng, n_facts, n_entities, prefix)
    weights = [0.25, 0.5, 0.75, 1.0] if weighted else [1.0]
    return WeightedCase({f: rng.choice(weights) for f in case.facts}, "RandMt")


def random_pair(rng: random.Random, max_facts: int = 8, max_entities: int = 5,
                weighted: bool = True) -> tuple[WeightedCase, Case]:
    base = random_weighted(rng, rng.randint(1, max_facts), rng.randint(1, max_entities), "b", weighted)
    target = random_case(rng, rng.randint(1, max_facts), rng.randint(1, max_entities), "c")
    return base, target
