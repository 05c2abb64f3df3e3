"""Entities, player views and paired partially-overlapping scenes.

Coordinates are view-local: the origin is the view center, y grows upward and
every entity lies inside a disk of radius ``VIEW_RADIUS``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

VIEW_RADIUS = 200.0
COLOR_LEVELS = 150  # grades 0..149, smaller is darker
SIZE_LEVELS = 6  # grades 0..5
ENTITIES_PER_VIEW = 7
SHARED_COUNTS = (4, 5, 6)
OFFSET_RANGE = (40.0, 160.0)
PLAYERS = ("A", "B")

ATTRIBUTES = ("x", "y", "color", "size")


@dataclass(frozen=True)
class Entity:
    id: int
    x: float
    y: float
    color: int
    size: int

    def to_dict(self) -> dict:
        return {"id": self.id, "x": self.x, "y": self.y, "color": self.color, "size": self.size}

    @classmethod
    def from_dict(cls, d: dict) -> "Entity":
        return cls(int(d["id"]), float(d["x"]), float(d["y"]), int(d["color"]), int(d["size"]))


@dataclass(frozen=True)
class View:
    player: str
    entities: tuple[Entity, ...]

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(sorted(self.entities, key=lambda e: e.id)))

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.entities)

    def entity(self, entity_id: int) -> Entity:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(f"entity {entity_id} not in view {self.player}")

    def select(self, ids: Iterable[int]) -> list[Entity]:
        """Entities of this view with the given ids, in id order."""
        wanted = set(ids)
        missing = wanted - set(self.ids)
        if missing:
            raise KeyError(f"entities {sorted(missing)} not in view {self.player}")
        return [e for e in self.entities if e.id in wanted]


@dataclass(frozen=True)
class ScenePair:
    scene_id: str
    view_a: View
    view_b: View
    shared_ids: frozenset[int]
    world_offset: tuple[float, float]

    def view(self, player: str) -> View:
        if player == "A":
            return self.view_a
        if player == "B":
            return self.view_b
        raise ValueError(f"unknown player {player!r}")

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "shared_ids": sorted(self.shared_ids),
            "world_offset": [self.world_offset[0], self.world_offset[1]],
            "views": {
                "A": [e.to_dict() for e in self.view_a.entities],
                "B": [e.to_dict() for e in self.view_b.entities],
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenePair":
        views = d["views"]
        return cls(
            scene_id=str(d["scene_id"]),
            view_a=View("A", tuple(Entity.from_dict(e) for e in views["A"])),
            view_b=View("B", tuple(Entity.from_dict(e) for e in views["B"])),
            shared_ids=frozenset(int(i) for i in d["shared_ids"]),
            world_offset=(float(d["world_offset"][0]), float(d["world_offset"][1])),
        )


def dumps_scene(pair: ScenePair) -> str:
    return json.dumps(pair.to_dict(), sort_keys=True)


def loads_scene(line: str) -> ScenePair:
    return ScenePair.from_dict(json.loads(line))


def check_scene_pair(pair: ScenePair, tol: float = 1e-9) -> list[str]:
    """Return human-readable invariant violations (empty when the pair is well formed)."""
    problems = []
    for view in (pair.view_a, pair.view_b):
        if len(view.entities) != ENTITIES_PER_VIEW:
            problems.append(f"view {view.player} has {len(view.entities)} entities")
        if len(set(view.ids)) != len(view.ids):
            problems.append(f"view {view.player} has duplicate ids")
        for e in view.entities:
            if e.x * e.x + e.y * e.y > VIEW_RADIUS**2 * (1 + tol):
                problems.append(f"entity {e.id} outside view {view.player}")
            if not 0 <= e.color < COLOR_LEVELS:
                problems.append(f"entity {e.id} color {e.color} out of range")
            if not 0 <= e.size < SIZE_LEVELS:
                problems.append(f"entity {e.id} size {e.size} out of range")
    if len(pair.shared_ids) not in SHARED_COUNTS:
        problems.append(f"{len(pair.shared_ids)} shared entities")
    ids_a, ids_b = set(pair.view_a.ids), set(pair.view_b.ids)
    if ids_a & ids_b != set(pair.shared_ids):
        problems.append("shared_ids differ from the ids present in both views")
    dx, dy = pair.world_offset
    for i in sorted(pair.shared_ids & ids_a & ids_b):
        a, b = pair.view_a.entity(i), pair.view_b.entity(i)
        if (a.color, a.size) != (b.color, b.size):
            problems.append(f"shared entity {i} changes attributes across views")
        if not (math.isclose(a.x + dx, b.x, abs_tol=tol) and math.isclose(a.y + dy, b.y, abs_tol=tol)):
            problems.append(f"shared entity {i} is not related by world_offset")
    return problems


def _point_in_disk(rng: np.random.Generator) -> tuple[float, float]:
    while True:
        x, y = rng.uniform(-VIEW_RADIUS, VIEW_RADIUS, size=2)
        if x * x + y * y <= VIEW_RADIUS**2:
            return float(x), float(y)


def _inside(x: float, y: float) -> bool:
    return x * x + y * y <= VIEW_RADIUS**2


def _sample_offset(rng: np.random.Generator) -> tuple[float, float]:
    magnitude = rng.uniform(*OFFSET_RANGE)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return float(magnitude * math.cos(angle)), float(magnitude * math.sin(angle))


def _exclusive_point(rng: np.random.Generator, dx: float, dy: float) -> tuple[float, float]:
    """A point of the local view that the partner view (shifted by dx, dy) cannot see."""
    while True:
        x, y = _point_in_disk(rng)
        if not _inside(x + dx, y + dy):
            return x, y


def _attributes(rng: np.random.Generator) -> tuple[int, int]:
    return int(rng.integers(0, COLOR_LEVELS)), int(rng.integers(0, SIZE_LEVELS))


def generate_scene_pair(seed: int, shared_count: int, scene_id: str | None = None) -> ScenePair:
    """Draw a random pair of overlapping views.

    The offset magnitude is uniform on ``OFFSET_RANGE``; shared entities are placed by
    rejection inside the lens both views can see, the rest inside each view's
    exclusive region.
    """
    if shared_count not in SHARED_COUNTS:
        raise ValueError(f"shared_count must be one of {SHARED_COUNTS}, got {shared_count}")
    rng = np.random.default_rng(seed)
    dx, dy = _sample_offset(rng)

    own = []
    while len(own) < shared_count:
        x, y = _point_in_disk(rng)
        if _inside(x + dx, y + dy):
            own.append((x, y, True))
    while len(own) < ENTITIES_PER_VIEW:
        x, y = _exclusive_point(rng, dx, dy)
        own.append((x, y, False))
    partner = [_exclusive_point(rng, -dx, -dy) for _ in range(ENTITIES_PER_VIEW - shared_count)]
    pair, _ = _assemble(
        rng, own, partner, (dx, dy), own_player="A",
        scene_id=scene_id if scene_id is not None else f"scene-{seed}-{shared_count}",
    )
    return pair


def _assemble(rng, own, partner, offset, own_player, scene_id, attributes=None):
    """Build a ScenePair from positions in the local frame of ``own_player``.

    ``own`` holds (x, y, shared) triples; ``partner`` holds the partner-exclusive
    positions already expressed in the partner frame; ``offset`` maps own-frame
    positions to partner-frame positions. Returns the pair and the ids given to
    ``own`` in input order.
    """
    dx, dy = offset
    n_total = len(own) + len(partner)
    ids = [int(i) for i in rng.permutation(n_total)]
    if attributes is None:
        attributes = [_attributes(rng) for _ in own]
    own_entities, partner_entities, shared = [], [], set()
    for (x, y, is_shared), (color, size) in zip(own, attributes):
        eid = ids.pop()
        if own_player == "B":
            # rebuild own coordinates from the A frame so that A + offset == B exactly
            ax, ay = x + dx, y + dy
            x, y = ax - dx, ay - dy
            partner_xy = (ax, ay)
        else:
            partner_xy = (x + dx, y + dy)
        own_entities.append(Entity(eid, x, y, color, size))
        if is_shared:
            shared.add(eid)
            partner_entities.append(Entity(eid, partner_xy[0], partner_xy[1], color, size))
    for x, y in partner:
        color, size = _attributes(rng)
        partner_entities.append(Entity(ids.pop(), x, y, color, size))

    own_ids = [e.id for e in own_entities]
    own_view = View(own_player, tuple(own_entities))
    other_player = "B" if own_player == "A" else "A"
    partner_view = View(other_player, tuple(partner_entities))
    if own_player == "A":
        return ScenePair(scene_id, own_view, partner_view, frozenset(shared), (dx, dy)), own_ids
    # own frame is B: the A->B offset is the negation of own->partner
    return ScenePair(scene_id, partner_view, own_view, frozenset(shared), (-dx, -dy)), own_ids


def scene_around_view(
    rng: np.random.Generator,
    positions: Sequence[tuple[float, float]],
    attributes: Sequence[tuple[int, int]],
    own_player: str,
    scene_id: str,
    max_tries: int = 2000,
) -> tuple[ScenePair, list[int]] | None:
    """Embed a fixed 7-entity view into a scene pair.

    Searches random partner placements until 4-6 of the given entities fall inside
    the partner view. Returns the pair and the id assigned to each input entity,
    or None when no placement is found.
    """
    for _ in range(max_tries):
        dx, dy = _sample_offset(rng)
        inside = [_inside(x + dx, y + dy) for x, y in positions]
        if sum(inside) in SHARED_COUNTS:
            break
    else:
        return None
    own = [(x, y, s) for (x, y), s in zip(positions, inside)]
    partner = [_exclusive_point(rng, -dx, -dy) for _ in range(ENTITIES_PER_VIEW - sum(inside))]
    return _assemble(rng, own, partner, (dx, dy), own_player, scene_id, attributes=list(attributes))


def _dist(a: Entity, b: Entity) -> float:
    dx, dy = a.x - b.x, a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def pairwise_mean_distance(entities: Sequence[Entity]) -> float:
    """Mean Euclidean distance over all unordered pairs."""
    if len(entities) < 2:
        raise ValueError("pairwise distance needs at least 2 entities")
    dists = [_dist(a, b) for a, b in combinations(entities, 2)]
    return sum(dists) / len(dists)


def mean_attribute(entities: Sequence[Entity], attribute: str) -> float:
    if attribute not in ATTRIBUTES:
        raise ValueError(f"unknown attribute {attribute!r}")
    if not entities:
        raise ValueError("mean of an empty entity list")
    return sum(getattr(e, attribute) for e in entities) / len(entities)
