import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ent, make_ctx
from spatialprobe.annotation import CanonicalRelation as R
from spatialprobe.batch import random_contexts
from spatialprobe.relations import (
    INFINITE_SLOPE,
    RelationContext,
    TestResult,
    evaluate,
    fit_slope,
    test_axis_alignment as axis_alignment,
    test_color_comparison as color_comparison,
    test_direction_pair as direction_pair,
    test_proximity as proximity,
    test_region as region,
    test_size_comparison as size_comparison,
)

# ---------------------------------------------------------------------------
# evaluate


def test_left_no_object_negative_mean():
    assert evaluate(R.LEFT, make_ctx([ent(0, x=-10)], no_object=True)) == (True, True)


def test_near_single_referent_is_invalid():
    assert evaluate(R.NEAR, make_ctx([ent(0)], others=[ent(1, 50), ent(2, -50)])) == (False, False)


def test_same_color_spread_40_fails():
    ctx = make_ctx([ent(0, color=100)], [ent(1, x=10, color=140)])
    assert evaluate(R.SAME_COLOR, ctx) == (False, True)


def test_evaluate_accepts_string_kind():
    assert evaluate("left", make_ctx([ent(0, x=-1)], no_object=True)) == (True, True)


def test_context_rejects_objects_with_no_object():
    with pytest.raises(ValueError):
        make_ctx([ent(0)], [ent(1)], no_object=True)


@pytest.mark.parametrize("rel", list(R))
def test_empty_context_is_invalid_everywhere(rel):
    view = [ent(i, 10 * i, -5 * i, 20 * i, i % 6) for i in range(7)]
    for no_object in (False, True):
        assert evaluate(rel, make_ctx(no_object=no_object, others=view)) == (False, False)


# ---------------------------------------------------------------------------
# direction


def test_left_means_5_and_10():
    ctx = make_ctx([ent(0, x=5)], [ent(1, x=0), ent(2, x=20)])
    assert direction_pair(R.LEFT, ctx) == (True, True)


def test_left_without_subject_invalid():
    assert direction_pair(R.LEFT, make_ctx([], [ent(1, x=3)])) == (False, False)


def test_left_with_objects_but_none_given_invalid():
    assert direction_pair(R.LEFT, make_ctx([ent(0, x=-50)])) == (False, False)


def test_right_on_mirrored_left_case():
    left = make_ctx([ent(0, x=5)], [ent(1, x=0), ent(2, x=20)])
    mirrored = make_ctx([ent(0, x=-5)], [ent(1, x=-0.0), ent(2, x=-20)])
    assert direction_pair(R.LEFT, left) == (True, True)
    assert direction_pair(R.RIGHT, mirrored) == (True, True)


@pytest.mark.parametrize("rel,coords,expected", [
    (R.ABOVE, (0, 30), True), (R.ABOVE, (0, -30), False),
    (R.BELOW, (0, -30), True), (R.BELOW, (0, 30), False),
    (R.RIGHT, (30, 0), True), (R.LEFT, (30, 0), False),
])
def test_direction_no_object_sides(rel, coords, expected):
    assert direction_pair(rel, make_ctx([ent(0, *coords)], no_object=True)) == (expected, True)


def test_direction_zero_mean_is_on_neither_side():
    ctx = make_ctx([ent(0, x=-20), ent(1, x=20)], no_object=True)
    assert direction_pair(R.LEFT, ctx) == (False, True)
    assert direction_pair(R.RIGHT, ctx) == (False, True)


def test_direction_equal_means_fail_both_ways():
    ctx = make_ctx([ent(0, y=10)], [ent(1, y=10)])
    assert direction_pair(R.ABOVE, ctx) == (False, True)
    assert direction_pair(R.BELOW, ctx) == (False, True)


# ---------------------------------------------------------------------------
# axis alignment


def test_horizontal_flat_line():
    ctx = make_ctx([ent(0, 0, 0)], [ent(1, 50, 0), ent(2, 100, 0)])
    assert axis_alignment(R.HORIZONTAL, ctx) == (True, True)


def test_horizontal_unit_slope_fails():
    assert axis_alignment(R.HORIZONTAL, make_ctx([ent(0, 0, 0)], [ent(1, 10, 10)])) == (False, True)


def test_vertical_equal_x():
    assert axis_alignment(R.VERTICAL, make_ctx([ent(0, 0, 0)], [ent(1, 0, 30)])) == (True, True)


def test_alignment_uses_union_without_duplicates():
    a = ent(0, 0, 0)
    assert axis_alignment(R.HORIZONTAL, make_ctx([a], [a])) == (False, False)


@pytest.mark.parametrize("slope,band", [
    (0.0, R.HORIZONTAL), (-0.3, R.HORIZONTAL), (1 / 3, R.DIAGONAL), (-1 / 3, R.DIAGONAL),
    (1.0, R.DIAGONAL), (-3.0, R.DIAGONAL), (3.0, R.DIAGONAL), (3.5, R.VERTICAL), (-40.0, R.VERTICAL),
])
def test_slope_band_boundaries(slope, band):
    # two points pin the fitted slope exactly: (0, 0) and (3, 3 * slope)
    ctx = make_ctx([ent(0, 0, 0)], [ent(1, 3, 3 * slope)], no_object=False)
    assert abs(fit_slope([(0, 0), (3, 3 * slope)])) == pytest.approx(abs(slope))
    for rel in (R.HORIZONTAL, R.VERTICAL, R.DIAGONAL):
        assert axis_alignment(rel, ctx).satisfy == (rel is band)


def test_alignment_no_object_uses_subjects():
    ctx = make_ctx([ent(0, -50, 1), ent(1, 50, -1), ent(2, 0, 0)], no_object=True)
    assert axis_alignment(R.HORIZONTAL, ctx) == (True, True)


def test_alignment_rejects_other_kinds():
    with pytest.raises(ValueError):
        axis_alignment(R.LEFT, make_ctx([ent(0)], [ent(1, 1)]))


# ---------------------------------------------------------------------------
# fit_slope


def test_fit_slope_flat():
    assert fit_slope([(0, 0), (1, 0), (2, 0)]) == 0


def test_fit_slope_unit():
    assert fit_slope([(0, 0), (1, 1)]) == 1


def test_fit_slope_vertical_marker():
    assert fit_slope([(0, 0), (0, 1)]) == INFINITE_SLOPE


def test_fit_slope_needs_two_points():
    with pytest.raises(ValueError):
        fit_slope([(1, 1)])


@given(st.lists(st.tuples(st.floats(-200, 200), st.floats(-200, 200)), min_size=2, max_size=7))
def test_fit_slope_matches_polyfit(points):
    xs = np.array([p[0] for p in points])
    if np.ptp(xs) < 1e-3:
        return
    ys = np.array([p[1] for p in points])
    expected = np.polyfit(xs, ys, 1)[0]
    assert fit_slope(points) == pytest.approx(expected, rel=1e-6, abs=1e-6)


# ---------------------------------------------------------------------------
# proximity


def _spread_view():
    # six background entities on a hexagon of radius 150 around the origin
    return [ent(10 + k, 150 * math.cos(k * math.pi / 3), 150 * math.sin(k * math.pi / 3)) for k in range(6)]


def test_near_two_close_referents():
    view = _spread_view()[:5]
    ctx = make_ctx([ent(0, 0, 0)], [ent(1, 5, 0)], others=view)
    e_mean = np.mean([math.dist((a.x, a.y), (b.x, b.y)) for a, b in combinations(ctx.view_entities, 2)])
    assert e_mean > 5
    assert proximity(R.NEAR, ctx) == (True, True)


def test_near_no_object_needs_two_subjects():
    assert proximity(R.NEAR, make_ctx([ent(0)], no_object=True, others=_spread_view())) == (False, False)


def test_alone_center_subject_is_isolated():
    # subject at the origin, six others on a 66-degree arc of radius 150
    arc = [math.radians(-33 + 13.2 * k) for k in range(6)]
    view = [ent(1 + k, 150 * math.cos(a), 150 * math.sin(a)) for k, a in enumerate(arc)]
    subject = ent(0, 0, 0)
    ctx = make_ctx([subject], no_object=True, others=view)
    dists = [math.dist((a.x, a.y), (b.x, b.y)) for a, b in combinations([subject, *view], 2)]
    e_mean = sum(dists) / len(dists)
    nearest = min(math.dist((0, 0), (o.x, o.y)) for o in view)
    assert nearest == pytest.approx(150.0)
    assert 95 < e_mean < 105
    assert proximity(R.ALONE, ctx) == (True, True)


def test_alone_all_subjects_is_valid_but_unsatisfied():
    view = _spread_view()
    assert proximity(R.ALONE, make_ctx(view, no_object=True)) == (False, True)


def test_far_requires_objects_or_no_object_and_a_pair():
    view = _spread_view()
    assert proximity(R.FAR, make_ctx([view[0]], others=view)) == (False, False)
    assert proximity(R.FAR, make_ctx([view[0]], [view[3]], others=view)) == (True, True)
    assert proximity(R.FAR, make_ctx([view[0], view[3]], no_object=True, others=view)) == (True, True)
    assert proximity(R.FAR, make_ctx([view[0]], no_object=True, others=view)) == (False, False)


def test_near_and_far_exclusive_on_the_same_pool():
    view = _spread_view()
    ctx = make_ctx([view[0]], [view[1]], others=view)
    assert proximity(R.NEAR, ctx).satisfy != proximity(R.FAR, ctx).satisfy


def test_proximity_rejects_other_kinds():
    with pytest.raises(ValueError):
        proximity(R.LEFT, make_ctx([ent(0)], no_object=True))


# ---------------------------------------------------------------------------
# region


def test_interior_center():
    assert region(R.INTERIOR, make_ctx([ent(0, 0, 0)], no_object=True)) == (True, True)


def test_interior_outside_radius():
    assert region(R.INTERIOR, make_ctx([ent(0, 150, 0)], no_object=True)) == (False, True)


def test_interior_single_object_invalid():
    assert region(R.INTERIOR, make_ctx([ent(0, 0, 0)], [ent(1, 10, 10)])) == (False, False)


def test_interior_radius_boundary_is_inside():
    assert region(R.INTERIOR, make_ctx([ent(0, 120, 0)], no_object=True)) == (True, True)
    assert region(R.EXTERIOR, make_ctx([ent(0, 120, 0)], no_object=True)) == (False, True)


def test_interior_box_semantics():
    box = [ent(1, -50, -50), ent(2, 50, 50)]
    between = make_ctx([ent(0, 0, 0)], box)
    beside = make_ctx([ent(0, 80, 0)], box)  # outside on x only
    corner = make_ctx([ent(0, 80, 80)], box)  # outside on both axes
    assert region(R.INTERIOR, between) == (True, True)
    assert region(R.INTERIOR, beside) == (True, True)
    assert region(R.INTERIOR, corner) == (False, True)
    assert region(R.EXTERIOR, between) == (False, True)
    assert region(R.EXTERIOR, beside) == (True, True)
    assert region(R.EXTERIOR, corner) == (True, True)


def test_exterior_all_subjects_must_be_far():
    ctx = make_ctx([ent(0, 150, 0), ent(1, 10, 0)], no_object=True)
    assert region(R.EXTERIOR, ctx) == (False, True)
    assert region(R.INTERIOR, ctx) == (False, True)


def test_region_rejects_other_kinds():
    with pytest.raises(ValueError):
        region(R.NEAR, make_ctx([ent(0)], no_object=True))


# ---------------------------------------------------------------------------
# color and size


def test_same_color_within_range():
    assert color_comparison(R.SAME_COLOR, make_ctx([ent(0, color=100)], [ent(1, color=110)])) == (True, True)


def test_darker_by_means():
    ctx = make_ctx([ent(0, color=30), ent(1, color=50)], [ent(2, color=120)])
    assert color_comparison(R.DARKER, ctx) == (True, True)
    assert color_comparison(R.LIGHTER, ctx) == (False, True)


def test_lightest_strict_global_max():
    others = [ent(i, color=148 - i) for i in range(1, 7)]
    ctx = make_ctx([ent(0, color=149)], no_object=True, others=others)
    assert color_comparison(R.LIGHTEST, ctx) == (True, True)


def test_lightest_tie_fails():
    others = [ent(1, color=149)] + [ent(i, color=10) for i in range(2, 7)]
    assert color_comparison(R.LIGHTEST, make_ctx([ent(0, color=149)], no_object=True, others=others)) == (False, True)


def test_superlative_compares_against_objects_minus_subjects():
    s = ent(0, color=20)
    ctx = make_ctx([s], [s, ent(1, color=90)], others=[ent(2, color=0)])
    # entity 2 is darker but is not among the objects
    assert color_comparison(R.DARKEST, ctx) == (True, True)


def test_superlative_without_comparison_set_invalid():
    s = ent(0, color=20)
    assert color_comparison(R.DARKEST, make_ctx([s], [s])) == (False, False)
    assert color_comparison(R.DARKEST, make_ctx([s], no_object=True)) == (False, False)


def test_pairwise_color_needs_objects():
    assert color_comparison(R.LIGHTER, make_ctx([ent(0, color=140)], no_object=True,
                                                 others=[ent(1, color=0)])) == (False, False)


@pytest.mark.parametrize("sizes,same", [((2, 3), True), ((2, 2), True), ((1, 3), False), ((0, 5), False)])
def test_size_same_range_1_2(sizes, same):
    ctx = make_ctx([ent(0, size=sizes[0])], [ent(1, size=sizes[1])])
    assert size_comparison(R.SAME_SIZE, ctx) == (same, True)
    assert size_comparison(R.DIFFERENT_SIZE, ctx) == (not same, True)


def test_size_superlatives_and_pairs():
    others = [ent(i, size=2) for i in range(1, 7)]
    assert size_comparison(R.LARGEST, make_ctx([ent(0, size=5)], no_object=True, others=others)) == (True, True)
    assert size_comparison(R.SMALLEST, make_ctx([ent(0, size=0)], no_object=True, others=others)) == (True, True)
    assert size_comparison(R.SMALLEST, make_ctx([ent(0, size=2)], no_object=True, others=others)) == (False, True)
    assert size_comparison(R.SMALLER, make_ctx([ent(0, size=1)], [ent(1, size=4)])) == (True, True)
    assert size_comparison(R.LARGER, make_ctx([ent(0, size=1)], [ent(1, size=4)])) == (False, True)


def test_color_size_kind_checks():
    with pytest.raises(ValueError):
        color_comparison(R.LARGER, make_ctx([ent(0)], [ent(1)]))
    with pytest.raises(ValueError):
        size_comparison(R.LIGHTER, make_ctx([ent(0)], [ent(1)]))


def test_color_30_boundary():
    ctx = make_ctx([ent(0, color=0)], [ent(1, color=30)])
    assert color_comparison(R.SAME_COLOR, ctx) == (False, True)
    assert color_comparison(R.DIFFERENT_COLOR, ctx) == (True, True)
    ctx = make_ctx([ent(0, color=0)], [ent(1, color=29)])
    assert color_comparison(R.SAME_COLOR, ctx) == (True, True)


# ---------------------------------------------------------------------------
# brute-force oracle for the five published tests, written independently of
# the engine with numpy primitives


def _xs(es, attr):
    return np.array([getattr(e, attr) for e in es], dtype=float)


def oracle_left(ctx):
    s, o = ctx.subjects, ctx.objects
    if ctx.no_object:
        return (len(s) > 0 and _xs(s, "x").mean() < 0, len(s) > 0)
    valid = len(s) > 0 and len(o) > 0
    return (valid and _xs(s, "x").mean() < _xs(o, "x").mean(), valid)


def _union(ctx):
    return list({e.id: e for e in (*ctx.subjects, *ctx.objects)}.values())


def oracle_horizontal(ctx):
    a = _union(ctx)
    if len(a) < 2:
        return (False, False)
    x, y = _xs(a, "x"), _xs(a, "y")
    if np.all(x == x[0]):
        return (False, True)
    coef = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)[0][0]
    return (abs(coef) < 1 / 3, True)


def _pair_mean(es):
    pts = np.array([(e.x, e.y) for e in es])
    d = [np.linalg.norm(pts[i] - pts[j]) for i in range(len(pts)) for j in range(i + 1, len(pts))]
    return float(np.mean(d))


def oracle_near(ctx):
    a = _union(ctx)
    if len(a) < 2:
        return (False, False)
    if {e.id for e in a} == {e.id for e in ctx.view_entities}:
        return (False, True)  # identical sets have identical means
    return (_pair_mean(a) < _pair_mean(ctx.view_entities), True)


def oracle_interior(ctx):
    s, o = ctx.subjects, ctx.objects
    if ctx.no_object:
        if not s:
            return (False, False)
        return (all(math.hypot(e.x, e.y) <= 120 for e in s), True)
    if not s or len(o) < 2:
        return (False, False)
    ox, oy = _xs(o, "x"), _xs(o, "y")
    for e in s:
        if (e.x < ox.min() or e.x > ox.max()) and (e.y < oy.min() or e.y > oy.max()):
            return (False, True)
    return (True, True)


def oracle_same_color(ctx):
    a = _union(ctx)
    if len(a) < 2:
        return (False, False)
    c = _xs(a, "color")
    return (c.max() - c.min() < 30, True)


ORACLES = {R.LEFT: oracle_left, R.HORIZONTAL: oracle_horizontal, R.NEAR: oracle_near,
           R.INTERIOR: oracle_interior, R.SAME_COLOR: oracle_same_color}


def _near_margin(ctx, rel):
    """True when a float-level tie could make two correct implementations disagree."""
    if rel is R.HORIZONTAL:
        a = _union(ctx)
        if len(a) < 2:
            return False
        x = _xs(a, "x")
        if np.all(x == x[0]):
            return False
        return abs(abs(np.polyfit(x, _xs(a, "y"), 1)[0]) - 1 / 3) < 1e-9
    if rel is R.NEAR:
        a = _union(ctx)
        if len(a) < 2 or len(a) == len(ctx.view_entities):
            return False
        return abs(_pair_mean(a) - _pair_mean(ctx.view_entities)) < 1e-9
    return False


@pytest.mark.parametrize("rel", list(ORACLES))
def test_published_tests_match_brute_force_oracle(rel):
    batch = random_contexts(10_000, seed=2024)
    oracle = ORACLES[rel]
    mismatches = 0
    for i in range(len(batch)):
        ctx = batch.context(i)
        if _near_margin(ctx, rel):
            continue
        if tuple(evaluate(rel, ctx)) != tuple(bool(v) for v in oracle(ctx)):
            mismatches += 1
    assert mismatches == 0


# ---------------------------------------------------------------------------
# properties


entities = st.builds(
    lambda i, r, a, c, s: ent(i, r * math.cos(a), r * math.sin(a), c, s),
    st.integers(0, 6), st.floats(0, 200), st.floats(0, 2 * math.pi),
    st.integers(0, 149), st.integers(0, 5),
)


@st.composite
def contexts(draw):
    pts = [(draw(st.floats(0, 200)), draw(st.floats(0, 2 * math.pi))) for _ in range(7)]
    view = [ent(i, r * math.cos(a), r * math.sin(a), draw(st.integers(0, 149)), draw(st.integers(0, 5)))
            for i, (r, a) in enumerate(pts)]
    s = draw(st.lists(st.sampled_from(view), max_size=7, unique_by=lambda e: e.id))
    no_object = draw(st.booleans())
    o = [] if no_object else draw(st.lists(st.sampled_from(view), max_size=7, unique_by=lambda e: e.id))
    return RelationContext(tuple(s), tuple(o), no_object, tuple(view))


@given(contexts(), st.sampled_from(list(R)))
def test_satisfy_implies_valid(ctx, rel):
    res = evaluate(rel, ctx)
    assert isinstance(res, TestResult)
    assert not res.satisfy or res.valid


def _transform(ctx, fx):
    def t(e):
        x, y = fx(e.x, e.y)
        return ent(e.id, x, y, e.color, e.size)
    return RelationContext(tuple(map(t, ctx.subjects)), tuple(map(t, ctx.objects)), ctx.no_object,
                           tuple(map(t, ctx.view_entities)))


@given(contexts())
def test_mirror_swaps_directions(ctx):
    mx = _transform(ctx, lambda x, y: (-x, y))
    my = _transform(ctx, lambda x, y: (x, -y))
    assert evaluate(R.LEFT, ctx) == evaluate(R.RIGHT, mx)
    assert evaluate(R.RIGHT, ctx) == evaluate(R.LEFT, mx)
    assert evaluate(R.ABOVE, ctx) == evaluate(R.BELOW, my)
    assert evaluate(R.BELOW, ctx) == evaluate(R.ABOVE, my)


@given(contexts())
def test_alignment_bands_partition(ctx):
    results = [evaluate(r, ctx) for r in (R.HORIZONTAL, R.VERTICAL, R.DIAGONAL)]
    if results[0].valid:
        assert sum(r.satisfy for r in results) == 1
    else:
        assert not any(r.valid for r in results)


@given(contexts())
def test_same_and_different_complementary(ctx):
    for same, diff in ((R.SAME_COLOR, R.DIFFERENT_COLOR), (R.SAME_SIZE, R.DIFFERENT_SIZE)):
        a, b = evaluate(same, ctx), evaluate(diff, ctx)
        assert a.valid == b.valid
        if a.valid:
            assert a.satisfy != b.satisfy


COMPARISONS = [r for r in R if r.category.value in ("ColorComparison", "SizeComparison")]


@given(contexts(), st.floats(0, 2 * math.pi))
def test_comparisons_rotation_invariant(ctx, angle):
    c, s = math.cos(angle), math.sin(angle)
    rot = _transform(ctx, lambda x, y: (c * x - s * y, s * x + c * y))
    for rel in COMPARISONS:
        assert evaluate(rel, ctx) == evaluate(rel, rot)


@given(contexts(), st.floats(0, 2 * math.pi))
def test_proximity_rotation_invariant_away_from_ties(ctx, angle):
    c, s = math.cos(angle), math.sin(angle)
    rot = _transform(ctx, lambda x, y: (c * x - s * y, s * x + c * y))
    view_mean = _pair_mean(ctx.view_entities)
    for rel in (R.NEAR, R.FAR, R.ALONE):
        a, b = evaluate(rel, ctx), evaluate(rel, rot)
        assert a.valid == b.valid
        pool = ctx.subjects if rel is not R.NEAR and ctx.no_object else _union(ctx)
        if rel is R.ALONE:
            others = [e for e in ctx.view_entities if e.id not in {x.id for x in ctx.subjects}]
            if not ctx.subjects or not others:
                assert a == b
                continue
            stat = min(math.dist((p.x, p.y), (q.x, q.y)) for p in ctx.subjects for q in others)
        elif len(pool) >= 2:
            stat = _pair_mean(pool)
        else:
            assert a == b
            continue
        if abs(stat - view_mean) > 1e-6:
            assert a == b


@given(contexts(), st.floats(0.1, 10))
def test_near_far_scale_invariant_away_from_ties(ctx, k):
    scaled = _transform(ctx, lambda x, y: (k * x, k * y))
    pool = _union(ctx)
    if len(pool) >= 2 and len(pool) < 7 and abs(_pair_mean(pool) - _pair_mean(ctx.view_entities)) > 1e-6:
        assert evaluate(R.NEAR, ctx) == evaluate(R.NEAR, scaled)
        if not ctx.no_object:
            assert evaluate(R.FAR, ctx) == evaluate(R.FAR, scaled)


def test_region_center_test_is_not_scale_invariant():
    ctx = make_ctx([ent(0, 100, 0)], no_object=True)
    scaled = make_ctx([ent(0, 150, 0)], no_object=True)
    assert evaluate(R.INTERIOR, ctx).satisfy
    assert not evaluate(R.INTERIOR, scaled).satisfy
    assert evaluate(R.EXTERIOR, scaled).satisfy
