import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ent
from spatialprobe.scene import (
    ENTITIES_PER_VIEW,
    ScenePair,
    View,
    check_scene_pair,
    dumps_scene,
    generate_scene_pair,
    loads_scene,
    mean_attribute,
    pairwise_mean_distance,
    scene_around_view,
)


def test_generate_shape():
    pair = generate_scene_pair(1, 4)
    assert len(pair.shared_ids) == 4
    assert len(pair.view_a.entities) == len(pair.view_b.entities) == 7


def test_generate_deterministic():
    assert generate_scene_pair(1, 4) == generate_scene_pair(1, 4)
    assert dumps_scene(generate_scene_pair(1, 4)) == dumps_scene(generate_scene_pair(1, 4))


def test_generate_rejects_shared_count():
    with pytest.raises(ValueError):
        generate_scene_pair(1, 7)


def test_generated_pairs_pass_invariants():
    for seed in range(10_000):
        pair = generate_scene_pair(seed, 4 + seed % 3)
        assert check_scene_pair(pair) == []


def test_seeds_differ():
    assert generate_scene_pair(1, 5) != generate_scene_pair(2, 5)


def test_non_shared_absent_from_partner():
    pair = generate_scene_pair(3, 5)
    only_a = set(pair.view_a.ids) - pair.shared_ids
    only_b = set(pair.view_b.ids) - pair.shared_ids
    assert not only_a & set(pair.view_b.ids)
    assert not only_b & set(pair.view_a.ids)
    assert len(only_a) == len(only_b) == 2


def test_exclusive_entities_lie_outside_partner_view():
    pair = generate_scene_pair(8, 4)
    dx, dy = pair.world_offset
    for e in pair.view_a.entities:
        if e.id not in pair.shared_ids:
            assert math.hypot(e.x + dx, e.y + dy) > 200


def test_serialization_round_trip():
    pair = generate_scene_pair(5, 6)
    line = dumps_scene(pair)
    assert loads_scene(line) == pair
    assert dumps_scene(loads_scene(line)) == line


def test_check_reports_broken_pair():
    pair = generate_scene_pair(2, 4)
    a = list(pair.view_a.entities)
    shared = sorted(pair.shared_ids)[0]
    a = [ent(e.id, e.x + 1, e.y, e.color, e.size) if e.id == shared else e for e in a]
    broken = ScenePair(pair.scene_id, View("A", tuple(a)), pair.view_b, pair.shared_ids, pair.world_offset)
    assert any("world_offset" in p for p in check_scene_pair(broken))
    far = [ent(99, 300, 0)] + list(pair.view_a.entities[1:])
    broken = ScenePair(pair.scene_id, View("A", tuple(far)), pair.view_b, pair.shared_ids, pair.world_offset)
    problems = check_scene_pair(broken)
    assert any("outside" in p for p in problems)


def test_view_select_and_lookup():
    view = View("A", (ent(3), ent(1), ent(2)))
    assert view.ids == (1, 2, 3)
    assert [e.id for e in view.select([3, 1])] == [1, 3]
    with pytest.raises(KeyError):
        view.select([4])
    with pytest.raises(KeyError):
        view.entity(9)


def test_scene_around_view_keeps_positions():
    rng = np.random.default_rng(0)
    positions = [(20.0 * k - 60, 5.0 * k) for k in range(7)]
    attrs = [(10 * k, k % 6) for k in range(7)]
    for player in ("A", "B"):
        pair, ids = scene_around_view(rng, positions, attrs, player, "s")
        assert check_scene_pair(pair) == []
        view = pair.view(player)
        for (x, y), (c, s), i in zip(positions, attrs, ids):
            e = view.entity(i)
            assert (e.color, e.size) == (c, s)
            assert e.x == pytest.approx(x, abs=1e-9) and e.y == pytest.approx(y, abs=1e-9)


def test_pairwise_two_entities():
    assert pairwise_mean_distance([ent(0, 0, 0), ent(1, 6, 8)]) == 10


def test_pairwise_collinear_three():
    d = 7.0
    got = pairwise_mean_distance([ent(0, 0, 0), ent(1, d, 0), ent(2, 2 * d, 0)])
    assert got == pytest.approx(4 * d / 3)


def test_pairwise_single_raises():
    with pytest.raises(ValueError):
        pairwise_mean_distance([ent(0)])


def test_mean_attribute_examples():
    assert mean_attribute([ent(0, x=-10)], "x") == -10
    assert mean_attribute([ent(0, x=0), ent(1, x=10)], "x") == 5
    with pytest.raises(ValueError):
        mean_attribute([], "x")
    with pytest.raises(ValueError):
        mean_attribute([ent(0)], "weight")


points = st.lists(st.tuples(st.floats(-150, 150), st.floats(-150, 150)), min_size=2, max_size=7)


@given(points, st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 2 * math.pi), st.floats(0.1, 10))
def test_pairwise_rigid_and_scale(pts, tx, ty, angle, k):
    base = [ent(i, x, y) for i, (x, y) in enumerate(pts)]
    c, s = math.cos(angle), math.sin(angle)
    moved = [ent(e.id, c * e.x - s * e.y + tx, s * e.x + c * e.y + ty) for e in base]
    scaled = [ent(e.id, k * e.x, k * e.y) for e in base]
    d = pairwise_mean_distance(base)
    assert pairwise_mean_distance(moved) == pytest.approx(d, rel=1e-9, abs=1e-9)
    assert pairwise_mean_distance(scaled) == pytest.approx(k * d, rel=1e-9, abs=1e-9)


@given(st.floats(-200, 200), st.integers(0, 149), st.integers(0, 5))
def test_mean_attribute_singleton(x, color, size):
    e = ent(0, x, 0, color, size)
    assert mean_attribute([e], "x") == x
    assert mean_attribute([e], "color") == color
    assert mean_attribute([e], "size") == size


def test_views_hold_seven():
    assert ENTITIES_PER_VIEW == 7
