"""Satisfy/valid tests for the 24 canonical relations.

Every test returns a ``TestResult``. ``valid`` states whether the referent sets
meet the relation's minimal argument requirements; ``satisfy`` additionally
requires the geometric or comparative condition and therefore implies ``valid``.

Thresholds are absolute in scene units: the view radius is 200, color grades
span 0..149 and size grades 0..5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

from .annotation import CanonicalRelation as R
from .scene import Entity

SLOPE_LOW = 1.0 / 3.0
SLOPE_HIGH = 3.0
CENTER_RADIUS = 120.0
SAME_COLOR_RANGE = 30.0
SAME_SIZE_RANGE = 1.2  # 30 * 6 / 150
INFINITE_SLOPE = math.inf


class TestResult(NamedTuple):
    __test__ = False  # keep pytest from collecting this

    satisfy: bool
    valid: bool


INVALID = TestResult(False, False)


@dataclass(frozen=True)
class RelationContext:
    subjects: tuple[Entity, ...]
    objects: tuple[Entity, ...]
    no_object: bool
    view_entities: tuple[Entity, ...]

    def __post_init__(self):
        # id order keeps every reduction in a fixed summation order
        for name in ("subjects", "objects", "view_entities"):
            object.__setattr__(self, name, tuple(sorted(getattr(self, name), key=lambda e: e.id)))
        if self.no_object and self.objects:
            raise ValueError("no_object context cannot carry objects")

    @property
    def all_referents(self) -> tuple[Entity, ...]:
        """S ∪ O, deduplicated, in id order."""
        merged = {e.id: e for e in (*self.subjects, *self.objects)}
        return tuple(merged[i] for i in sorted(merged))


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def _dist(a: Entity, b: Entity) -> float:
    dx, dy = a.x - b.x, a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def _mean_pairwise(entities: Sequence[Entity]) -> float:
    ordered = sorted(entities, key=lambda e: e.id)
    return _mean(_dist(a, b) for a, b in combinations(ordered, 2))


def fit_slope(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of y on x; ``INFINITE_SLOPE`` when all x coincide."""
    if len(points) < 2:
        raise ValueError("slope fit needs at least 2 points")
    xs = [float(p[0]) for p in points]
    ys = [float(p[1]) for p in points]
    if max(xs) == min(xs):
        return INFINITE_SLOPE
    mx, my = _mean(xs), _mean(ys)
    sxx = sum((x - mx) * (x - mx) for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    if sxx == 0.0:
        return INFINITE_SLOPE
    return sxy / sxx


_DIRECTION = {
    # kind: (attribute, sign) where sign=-1 means "smaller coordinate"
    R.LEFT: ("x", -1),
    R.RIGHT: ("x", 1),
    R.ABOVE: ("y", 1),
    R.BELOW: ("y", -1),
}


def test_direction_pair(kind: R, ctx: RelationContext) -> TestResult:
    attr, sign = _DIRECTION[R(kind)]
    if ctx.no_object:
        if not ctx.subjects:
            return INVALID
        mean_s = _mean(getattr(e, attr) for e in ctx.subjects)
        return TestResult(mean_s < 0 if sign < 0 else mean_s > 0, True)
    if not ctx.subjects or not ctx.objects:
        return INVALID
    mean_s = _mean(getattr(e, attr) for e in ctx.subjects)
    mean_o = _mean(getattr(e, attr) for e in ctx.objects)
    return TestResult(mean_s < mean_o if sign < 0 else mean_s > mean_o, True)


def test_axis_alignment(kind: R, ctx: RelationContext) -> TestResult:
    kind = R(kind)
    pool = ctx.all_referents
    if len(pool) < 2:
        return INVALID
    m = abs(fit_slope([(e.x, e.y) for e in pool]))
    if kind is R.HORIZONTAL:
        ok = m < SLOPE_LOW
    elif kind is R.VERTICAL:
        ok = m > SLOPE_HIGH
    elif kind is R.DIAGONAL:
        ok = SLOPE_LOW <= m <= SLOPE_HIGH
    else:
        raise ValueError(f"{kind} is not an axis-alignment relation")
    return TestResult(ok, True)


def test_proximity(kind: R, ctx: RelationContext) -> TestResult:
    kind = R(kind)
    view = ctx.view_entities
    if kind is R.NEAR:
        pool = ctx.all_referents
        if len(pool) < 2:
            return INVALID
        return TestResult(_mean_pairwise(pool) < _mean_pairwise(view), True)
    if kind is R.FAR:
        if not ctx.subjects:
            return INVALID
        if ctx.no_object:
            pool = ctx.subjects
        elif ctx.objects:
            pool = ctx.all_referents
        else:
            return INVALID
        if len(pool) < 2:
            # a single entity has no pairwise distance to compare
            return INVALID
        return TestResult(_mean_pairwise(pool) > _mean_pairwise(view), True)
    if kind is R.ALONE:
        if not ctx.subjects:
            return INVALID
        subject_ids = {e.id for e in ctx.subjects}
        others = [e for e in view if e.id not in subject_ids]
        if not others:
            return TestResult(False, True)
        nearest = min(_dist(s, o) for s in ctx.subjects for o in others)
        return TestResult(nearest > _mean_pairwise(view), True)
    raise ValueError(f"{kind} is not a proximity relation")


def _outside_box(s: Entity, objects: Sequence[Entity]) -> tuple[bool, bool]:
    xs = [o.x for o in objects]
    ys = [o.y for o in objects]
    out_x = s.x < min(xs) or max(xs) < s.x
    out_y = s.y < min(ys) or max(ys) < s.y
    return out_x, out_y


def test_region(kind: R, ctx: RelationContext) -> TestResult:
    kind = R(kind)
    if kind not in (R.INTERIOR, R.EXTERIOR):
        raise ValueError(f"{kind} is not a region relation")
    if ctx.no_object:
        if not ctx.subjects:
            return INVALID
        far = [math.sqrt(s.x * s.x + s.y * s.y) > CENTER_RADIUS for s in ctx.subjects]
        return TestResult(not any(far) if kind is R.INTERIOR else all(far), True)
    if not ctx.subjects or len(ctx.objects) < 2:
        return INVALID
    flags = [_outside_box(s, ctx.objects) for s in ctx.subjects]
    if kind is R.INTERIOR:
        return TestResult(not any(ox and oy for ox, oy in flags), True)
    return TestResult(all(ox or oy for ox, oy in flags), True)


# kind: (attribute, comparison) for the color and size categories
_COMPARISON = {
    R.LIGHTER: ("color", "greater"),
    R.DARKER: ("color", "less"),
    R.LIGHTEST: ("color", "greatest"),
    R.DARKEST: ("color", "least"),
    R.SAME_COLOR: ("color", "same"),
    R.DIFFERENT_COLOR: ("color", "different"),
    R.LARGER: ("size", "greater"),
    R.SMALLER: ("size", "less"),
    R.LARGEST: ("size", "greatest"),
    R.SMALLEST: ("size", "least"),
    R.SAME_SIZE: ("size", "same"),
    R.DIFFERENT_SIZE: ("size", "different"),
}
_RANGE = {"color": SAME_COLOR_RANGE, "size": SAME_SIZE_RANGE}


def _test_comparison(kind: R, ctx: RelationContext) -> TestResult:
    attr, op = _COMPARISON[kind]
    val = lambda entities: [getattr(e, attr) for e in entities]  # noqa: E731
    if op in ("same", "different"):
        pool = ctx.all_referents
        if len(pool) < 2:
            return INVALID
        spread = max(val(pool)) - min(val(pool))
        close = spread < _RANGE[attr]
        return TestResult(close if op == "same" else not close, True)
    if op in ("greater", "less"):
        if not ctx.subjects or not ctx.objects:
            return INVALID
        ms, mo = _mean(val(ctx.subjects)), _mean(val(ctx.objects))
        return TestResult(ms > mo if op == "greater" else ms < mo, True)
    # superlatives compare against the objects, or every other visible entity
    subject_ids = {e.id for e in ctx.subjects}
    pool = ctx.view_entities if ctx.no_object else ctx.objects
    rest = [e for e in pool if e.id not in subject_ids]
    if not ctx.subjects or not rest:
        return INVALID
    if op == "greatest":
        return TestResult(min(val(ctx.subjects)) > max(val(rest)), True)
    return TestResult(max(val(ctx.subjects)) < min(val(rest)), True)


def test_color_comparison(kind: R, ctx: RelationContext) -> TestResult:
    kind = R(kind)
    if _COMPARISON.get(kind, ("",))[0] != "color":
        raise ValueError(f"{kind} is not a color comparison")
    return _test_comparison(kind, ctx)


def test_size_comparison(kind: R, ctx: RelationContext) -> TestResult:
    kind = R(kind)
    if _COMPARISON.get(kind, ("",))[0] != "size":
        raise ValueError(f"{kind} is not a size comparison")
    return _test_comparison(kind, ctx)


_DISPATCH = {}
for _k in (R.LEFT, R.RIGHT, R.ABOVE, R.BELOW):
    _DISPATCH[_k] = test_direction_pair
for _k in (R.HORIZONTAL, R.VERTICAL, R.DIAGONAL):
    _DISPATCH[_k] = test_axis_alignment
for _k in (R.NEAR, R.FAR, R.ALONE):
    _DISPATCH[_k] = test_proximity
for _k in (R.INTERIOR, R.EXTERIOR):
    _DISPATCH[_k] = test_region
for _k in _COMPARISON:
    _DISPATCH[_k] = _test_comparison


def evaluate(relation: R | str, ctx: RelationContext) -> TestResult:
    relation = R(relation)
    return _DISPATCH[relation](relation, ctx)


# relations whose test has a form that ignores the objects entirely
NO_OBJECT_FORM = frozenset(R) - {R.LIGHTER, R.DARKER, R.SMALLER, R.LARGER}

for _fn in (test_direction_pair, test_axis_alignment, test_proximity, test_region,
            test_color_comparison, test_size_comparison):
    _fn.__test__ = False  # named like tests, but they are not
