"""Qualitative spatial relations between axis-aligned boxes on the table.

World axes: +x is CDC east, +y is CDC north. ``cdc(a, b)`` names the
compass sector of a's centroid seen from b's; ``rcc8(a, b)`` the topological
relation of the two closed rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import UnsatisfiableError
from .relfact import Case, Entity, Fact

EPS_EQ = 1e-3
EPS_TOUCH = 1e-6

CDC = ("e", "ne", "n", "nw", "w", "sw", "s", "se")
CDC_RELATIONS = CDC + ("eqc",)
RCC8_RELATIONS = ("dc", "ec", "po", "tpp", "ntpp", "tppi", "ntppi", "eq8")
QSR_PREDICATES = frozenset(CDC_RELATIONS + RCC8_RELATIONS)

CONVERSE = {
    "e": "w", "w": "e", "n": "s", "s": "n",
    "ne": "sw", "sw": "ne", "nw": "se", "se": "nw", "eqc": "eqc",
    "dc": "dc", "ec": "ec", "po": "po", "eq8": "eq8",
    "tpp": "tppi", "tppi": "tpp", "ntpp": "ntppi", "ntppi": "ntpp",
}


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    hx: float
    hy: float

    def __post_init__(self):
        if self.hx <= 0 or self.hy <= 0:
            raise ValueError("half extents must be positive")

    @property
    def bounds(self) -> tuple:
        return (self.x - self.hx, self.x + self.hx, self.y - self.hy, self.y + self.hy)

    def moved(self, x: float, y: float) -> "BBox":
        return BBox(x, y, self.hx, self.hy)


@dataclass(frozen=True)
class TableBounds:
    xmin: float = -0.5
    xmax: float = 0.5
    ymin: float = -0.3
    ymax: float = 0.3

    def contains(self, box: BBox) -> bool:
        x0, x1, y0, y1 = box.bounds
        return (x0 >= self.xmin - EPS_TOUCH and x1 <= self.xmax + EPS_TOUCH
                and y0 >= self.ymin - EPS_TOUCH and y1 <= self.ymax + EPS_TOUCH)


def _sector(dx: float, dy: float) -> int:
    # half-open 45 degree sectors, [-22.5, 22.5) is east, counterclockwise
    angle = math.degrees(math.atan2(dy, dx))
    return int(math.floor((angle + 22.5) / 45.0)) % 8


def cdc(a: BBox, b: BBox) -> str:
    dx, dy = a.x - b.x, a.y - b.y
    if math.hypot(dx, dy) < EPS_EQ:
        return "eqc"
    # evaluate one orientation per unordered pair so converses agree exactly
    if dx > 0 or (dx == 0 and dy > 0):
        return CDC[_sector(dx, dy)]
    return CDC[(_sector(-dx, -dy) + 4) % 8]


def rcc8(a: BBox, b: BBox) -> str:
    ax0, ax1, ay0, ay1 = a.bounds
    bx0, bx1, by0, by1 = b.bounds
    sep = max(ax0 - bx1, bx0 - ax1, ay0 - by1, by0 - ay1)
    if sep > EPS_TOUCH:
        return "dc"
    if sep >= -EPS_TOUCH:
        return "ec"

    def close(u, v):
        return abs(u - v) <= EPS_TOUCH

    edges = [(ax0, bx0), (ax1, bx1), (ay0, by0), (ay1, by1)]
    if all(close(u, v) for u, v in edges):
        return "eq8"
    touching = any(close(u, v) for u, v in edges)
    a_in_b = (ax0 >= bx0 - EPS_TOUCH and ax1 <= bx1 + EPS_TOUCH
              and ay0 >= by0 - EPS_TOUCH and ay1 <= by1 + EPS_TOUCH)
    if a_in_b:
        return "tpp" if touching else "ntpp"
    b_in_a = (bx0 >= ax0 - EPS_TOUCH and bx1 <= ax1 + EPS_TOUCH
              and by0 >= ay0 - EPS_TOUCH and by1 <= ay1 + EPS_TOUCH)
    if b_in_a:
        return "tppi" if touching else "ntppi"
    return "po"


def relate(a: BBox, b: BBox) -> tuple[str, str]:
    return cdc(a, b), rcc8(a, b)


def describe_scene(objects: Sequence[tuple]) -> Case:
    """One CDC and one RCC8 fact for every ordered pair of distinct objects."""
    facts = []
    for i, (ida, a) in enumerate(objects):
        for j, (idb, b) in enumerate(objects):
            if i == j:
                continue
            ea = ida if isinstance(ida, Entity) else Entity(str(ida))
            eb = idb if isinstance(idb, Entity) else Entity(str(idb))
            c, r = relate(a, b)
            facts.append(Fact(c, (ea, eb)))
            facts.append(Fact(r, (ea, eb)))
    return Case(facts)


# ---------------------------------------------------------------- constraints


@dataclass(frozen=True, order=True)
class Atom:
    """A relation between roles, e.g. ``w(a1, a2)``."""

    relation: str
    first: str
    second: str

    def __post_init__(self):
        if self.relation not in QSR_PREDICATES:
            raise ValueError(f"unknown qsr relation {self.relation!r}")

    def canonical(self) -> "Atom":
        """Orient toward (a1, a2) using the converse table."""
        if (self.first, self.second) == ("a2", "a1"):
            return Atom(CONVERSE[self.relation], "a1", "a2")
        return self

    def __str__(self) -> str:
        return f"{self.relation}({self.first}, {self.second})"


class ConstraintSet(frozenset):
    """Conjunction of role atoms over {a1, a2}, stored in (a1, a2) orientation."""

    def __new__(cls, atoms: Iterable[Atom] = ()):
        return super().__new__(cls, (a.canonical() for a in atoms))

    @classmethod
    def of(cls, *relations: str) -> "ConstraintSet":
        return cls(Atom(r, "a1", "a2") for r in relations)

    def holds(self, mover: BBox, anchor: BBox) -> bool:
        c, r = relate(mover, anchor)
        return all(a.relation in (c, r) for a in self)

    def instantiate(self, a1: Entity, a2: Entity) -> frozenset:
        roles = {"a1": a1, "a2": a2}
        return frozenset(Fact(a.relation, (roles[a.first], roles[a.second])) for a in self)

    def __str__(self) -> str:
        return " & ".join(str(a) for a in sorted(self))


def solve_region(constraints: ConstraintSet, anchor: BBox, mover_extents: tuple[float, float],
                 table: TableBounds = TableBounds(), rng_seed: int = 0, max_samples: int = 10000,
                 avoid: Sequence[BBox] = ()) -> tuple[float, float]:
    """Sample a centroid for the mover satisfying every atom; rejection sampling.

    ``avoid`` lists boxes the mover may touch but not overlap.
    """
    hx, hy = mover_extents
    lo_x, hi_x = table.xmin + hx, table.xmax - hx
    lo_y, hi_y = table.ymin + hy, table.ymax - hy
    if lo_x > hi_x or lo_y > hi_y:
        raise UnsatisfiableError("mover does not fit on the table")
    rng = np.random.default_rng(rng_seed)
    batch = 256
    drawn = 0
    while drawn < max_samples:
        n = min(batch, max_samples - drawn)
        xs = rng.uniform(lo_x, hi_x, n)
        ys = rng.uniform(lo_y, hi_y, n)
        drawn += n
        for x, y in zip(xs.tolist(), ys.tolist()):
            box = BBox(x, y, hx, hy)
            if constraints.holds(box, anchor) and all(rcc8(box, o) in ("dc", "ec") for o in avoid):
                return x, y
    raise UnsatisfiableError(f"no point satisfies {constraints} after {max_samples} samples")
