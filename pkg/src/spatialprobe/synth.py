"""Synthetic dialogues whose gold referents provably satisfy (or violate) a relation.

Each construction places the speaker's seven entities analytically, with explicit
margins, so the outcome of a relation test is known without running it. Violating
constructions stay valid: they only break the geometric or comparative condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .annotation import (
    CanonicalRelation,
    DialogueDocument,
    Markable,
    ModificationType,
    ModifierAnnotation,
    SpatialExpression,
    Utterance,
)
from .annotation import CanonicalRelation as R
from .scene import COLOR_LEVELS, ENTITIES_PER_VIEW, SIZE_LEVELS, VIEW_RADIUS, ScenePair, scene_around_view

MARGIN = 5.0  # minimum gap between subject and object means on position axes
PAIRWISE_ONLY = frozenset({R.LIGHTER, R.DARKER, R.SMALLER, R.LARGER})


@dataclass
class Construction:
    positions: list[tuple[float, float]]
    attributes: list[tuple[int, int]]
    subjects: list[int]
    objects: list[int] = field(default_factory=list)
    no_object: bool = False


def _disk(rng, radius: float = VIEW_RADIUS * 0.97, center=(0.0, 0.0)) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    a = rng.uniform(0.0, 2.0 * math.pi)
    return center[0] + r * math.cos(a), center[1] + r * math.sin(a)


def _polar(r: float, angle: float) -> tuple[float, float]:
    return r * math.cos(angle), r * math.sin(angle)


def _color(rng, lo: int = 0, hi: int = COLOR_LEVELS - 1) -> int:
    return int(rng.integers(lo, hi + 1))


def _size(rng, lo: int = 0, hi: int = SIZE_LEVELS - 1) -> int:
    return int(rng.integers(lo, hi + 1))


def _background(rng) -> Construction:
    return Construction(
        positions=[_disk(rng) for _ in range(ENTITIES_PER_VIEW)],
        attributes=[(_color(rng), _size(rng)) for _ in range(ENTITIES_PER_VIEW)],
        subjects=[],
    )


def _roles(rng, n_total: int, allow_no_object: bool, min_objects: int = 1):
    """Split the first ``n_total`` slots into subjects and objects (or subjects only)."""
    if allow_no_object and (rng.random() < 0.4 or n_total <= min_objects):
        return list(range(n_total)), [], True
    n_obj = int(rng.integers(min_objects, n_total)) if n_total > min_objects + 1 else min_objects
    n_subj = n_total - n_obj
    return list(range(n_subj)), list(range(n_subj, n_total)), False


def _on_axis(rng, axis: int, value: float) -> tuple[float, float]:
    half = math.sqrt(max(VIEW_RADIUS**2 - value * value, 0.0)) * 0.95
    other = rng.uniform(-half, half)
    return (value, other) if axis == 0 else (other, value)


# -- direction -------------------------------------------------------------

def _direction(rel, rng, satisfy):
    axis = 0 if rel in (R.LEFT, R.RIGHT) else 1
    low = rel in (R.LEFT, R.BELOW)
    if not satisfy:
        low = not low
    c = _background(rng)
    if rng.random() < 0.3:
        n = int(rng.integers(1, 3))
        for i in range(n):
            v = rng.uniform(-190.0, -MARGIN) if low else rng.uniform(MARGIN, 190.0)
            c.positions[i] = _on_axis(rng, axis, v)
        c.subjects, c.no_object = list(range(n)), True
        return c
    ns, no = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    t = rng.uniform(-100.0, 100.0)
    below_range = (max(-190.0, t - 150.0), t - MARGIN / 2)
    above_range = (t + MARGIN / 2, min(190.0, t + 150.0))
    s_range, o_range = (below_range, above_range) if low else (above_range, below_range)
    for i in range(ns):
        c.positions[i] = _on_axis(rng, axis, rng.uniform(*s_range))
    for i in range(ns, ns + no):
        c.positions[i] = _on_axis(rng, axis, rng.uniform(*o_range))
    c.subjects, c.objects = list(range(ns)), list(range(ns, ns + no))
    return c


# -- axis alignment --------------------------------------------------------

def _band_angle(rng, band: str) -> float:
    if band == "horizontal":
        return math.atan(rng.uniform(-0.25, 0.25))
    if band == "vertical":
        return math.pi / 2 - math.atan(rng.uniform(-0.25, 0.25))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return math.atan(sign * rng.uniform(0.5, 2.0))


_VIOLATING_BAND = {R.HORIZONTAL: ("diagonal",), R.VERTICAL: ("horizontal",), R.DIAGONAL: ("horizontal", "vertical")}


def _alignment(rel, rng, satisfy):
    if satisfy:
        band = rel.value
    else:
        options = _VIOLATING_BAND[rel]
        band = options[int(rng.integers(len(options)))]
    theta = _band_angle(rng, band)
    n = int(rng.integers(2, 5))
    base = _disk(rng, 60.0)
    # distinct offsets along the line, at least 10 apart
    ts = np.sort(rng.uniform(-60.0, 60.0 - 10.0 * (n - 1), n)) + 10.0 * np.arange(n)
    c = _background(rng)
    for i, t in enumerate(ts):
        c.positions[i] = (base[0] + t * math.cos(theta), base[1] + t * math.sin(theta))
    c.subjects, c.objects, c.no_object = _roles(rng, n, allow_no_object=True)
    return c


# -- proximity -------------------------------------------------------------

def _cluster_and_ring(rng, n_cluster: int, cluster_radius: float, center_radius: float,
                      ring=(150.0, 190.0)) -> list[tuple[float, float]]:
    """``n_cluster`` points near the center, the rest spread evenly on an outer ring."""
    cx, cy = _disk(rng, center_radius)
    pts = [_disk(rng, cluster_radius, (cx, cy)) for _ in range(n_cluster)]
    n_ring = ENTITIES_PER_VIEW - n_cluster
    start = rng.uniform(0.0, 2.0 * math.pi)
    for k in range(n_ring):
        angle = start + 2.0 * math.pi * k / n_ring + rng.uniform(-0.08, 0.08)
        pts.append(_polar(rng.uniform(*ring), angle))
    return pts


def _opposite_pair(rng) -> list[tuple[float, float]]:
    """Two points on opposite edges of the view, the other five packed at the center."""
    phi = rng.uniform(0.0, 2.0 * math.pi)
    pts = [_polar(rng.uniform(180.0, 194.0), phi),
           _polar(rng.uniform(180.0, 194.0), phi + math.pi + rng.uniform(-0.05, 0.05))]
    pts += [_disk(rng, 30.0) for _ in range(ENTITIES_PER_VIEW - 2)]
    return pts


def _proximity(rel, rng, satisfy):
    c = _background(rng)
    if rel is R.ALONE:
        isolated = satisfy
        if isolated:
            phi = rng.uniform(0.0, 2.0 * math.pi)
            center = _polar(100.0, phi + math.pi + rng.uniform(-0.17, 0.17))
            c.positions = [_polar(rng.uniform(185.0, 194.0), phi)]
            c.positions += [_disk(rng, 35.0, center) for _ in range(ENTITIES_PER_VIEW - 1)]
        else:
            c.positions = _cluster_and_ring(rng, 3, 20.0, 30.0)
        c.subjects = [0]
        if rng.random() < 0.8:
            c.no_object = True
        else:
            c.objects = [1]
        return c
    tight = (rel is R.NEAR) == satisfy
    if tight:
        n = int(rng.integers(2, 4))
        c.positions = _cluster_and_ring(rng, n, 10.0, 30.0)
    else:
        n = 2
        c.positions = _opposite_pair(rng)
    if rel is R.FAR:
        c.subjects, c.objects, c.no_object = _roles(rng, n, allow_no_object=True)
        if not c.no_object and not c.objects:
            c.no_object = True
    else:
        c.subjects, c.objects, c.no_object = _roles(rng, n, allow_no_object=True)
    return c


# -- region ----------------------------------------------------------------

def _region(rel, rng, satisfy):
    inside = (rel is R.INTERIOR) == satisfy
    c = _background(rng)
    ns = int(rng.integers(1, 3))
    c.subjects = list(range(ns))
    if rng.random() < 0.5:
        for i in range(ns):
            r = rng.uniform(0.0, 100.0) if inside else rng.uniform(140.0, 194.0)
            c.positions[i] = _polar(r, rng.uniform(0.0, 2.0 * math.pi))
        c.no_object = True
        return c
    qx, qy = _disk(rng, 40.0)
    hx, hy = rng.uniform(30.0, 70.0), rng.uniform(30.0, 70.0)
    no = int(rng.integers(2, 4))
    c.positions[ns] = (qx - hx, qy - hy)
    c.positions[ns + 1] = (qx + hx, qy + hy)
    if no == 3:
        c.positions[ns + 2] = (qx + rng.uniform(-hx, hx), qy + rng.uniform(-hy, hy))
    c.objects = list(range(ns, ns + no))
    for i in range(ns):
        if inside:
            c.positions[i] = (qx + rng.uniform(-0.8, 0.8) * hx, qy + rng.uniform(-0.8, 0.8) * hy)
        elif rel is R.INTERIOR:
            # beyond a corner: outside the box on both axes
            sx, sy = rng.choice([-1.0, 1.0], 2)
            c.positions[i] = (qx + sx * (hx + rng.uniform(5.0, 40.0)), qy + sy * (hy + rng.uniform(5.0, 40.0)))
        else:
            # beside the box: outside on exactly one axis
            s = rng.choice([-1.0, 1.0])
            if rng.random() < 0.5:
                c.positions[i] = (qx + s * (hx + rng.uniform(5.0, 40.0)), qy + rng.uniform(-0.8, 0.8) * hy)
            else:
                c.positions[i] = (qx + rng.uniform(-0.8, 0.8) * hx, qy + s * (hy + rng.uniform(5.0, 40.0)))
    return c


# -- color and size comparisons -------------------------------------------

_COMPARE = {
    R.LIGHTER: (0, "more"), R.DARKER: (0, "less"),
    R.LARGER: (1, "more"), R.SMALLER: (1, "less"),
    R.LIGHTEST: (0, "most"), R.DARKEST: (0, "least"),
    R.LARGEST: (1, "most"), R.SMALLEST: (1, "least"),
    R.SAME_COLOR: (0, "same"), R.DIFFERENT_COLOR: (0, "different"),
    R.SAME_SIZE: (1, "same"), R.DIFFERENT_SIZE: (1, "different"),
}


def _set_attr(c: Construction, i: int, which: int, value: int) -> None:
    color, size = c.attributes[i]
    c.attributes[i] = (value, size) if which == 0 else (color, value)


def _split_levels(rng, which: int):
    """A cut t with 'high' grades in [t, top] and 'low' grades in [0, t-1], gap kept for color."""
    if which == 0:
        t = int(rng.integers(20, 131))
        return (t + 3, COLOR_LEVELS - 1), (0, t - 3)
    t = int(rng.integers(1, SIZE_LEVELS))
    return (t, SIZE_LEVELS - 1), (0, t - 1)


def _comparison(rel, rng, satisfy):
    which, op = _COMPARISON_OP = _COMPARE[rel]
    draw = _color if which == 0 else _size
    c = _background(rng)
    if op in ("more", "less"):
        high, low = _split_levels(rng, which)
        subject_high = (op == "more") == satisfy
        ns, no = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        c.subjects, c.objects = list(range(ns)), list(range(ns, ns + no))
        for i in c.subjects:
            _set_attr(c, i, which, draw(rng, *(high if subject_high else low)))
        for i in c.objects:
            _set_attr(c, i, which, draw(rng, *(low if subject_high else high)))
        return c
    if op in ("most", "least"):
        high, low = _split_levels(rng, which)
        top = op == "most"
        ns = 1 if rng.random() < 0.8 else 2
        c.subjects = list(range(ns))
        if rng.random() < 0.5:
            c.no_object = True
            rest = list(range(ns, ENTITIES_PER_VIEW))
        else:
            c.objects = list(range(ns, ns + int(rng.integers(2, 4))))
            rest = c.objects
        s_band, r_band = (high, low) if top else (low, high)
        if satisfy:
            for i in c.subjects:
                _set_attr(c, i, which, draw(rng, *s_band))
            for i in rest:
                _set_attr(c, i, which, draw(rng, *r_band))
        else:
            # one comparison entity beats every subject
            for i in c.subjects:
                _set_attr(c, i, which, draw(rng, *r_band))
            _set_attr(c, rest[int(rng.integers(len(rest)))], which, draw(rng, *s_band))
        return c
    n = int(rng.integers(2, 4))
    c.subjects, c.objects, c.no_object = _roles(rng, n, allow_no_object=True)
    close = (op == "same") == satisfy
    members = list(range(n))
    if which == 0:
        if close:
            base = int(rng.integers(0, COLOR_LEVELS - 25))
            values = [_color(rng, base, base + 25) for _ in members]
        else:
            base = int(rng.integers(0, COLOR_LEVELS - 35))
            values = [base, _color(rng, base + 35, COLOR_LEVELS - 1)]
            values += [_color(rng, base, COLOR_LEVELS - 1) for _ in members[2:]]
    else:
        if close:
            values = [_size(rng)] * n
        else:
            base = int(rng.integers(0, SIZE_LEVELS - 2))
            values = [base, _size(rng, base + 2)] + [_size(rng) for _ in members[2:]]
    order = rng.permutation(n)
    for i, v in zip(members, (values[k] for k in order)):
        _set_attr(c, i, which, v)
    return c


def construct(relation: CanonicalRelation, rng: np.random.Generator, satisfy: bool = True) -> Construction:
    """Build the speaker's view so that ``relation`` holds (or fails, while valid) on gold referents."""
    rel = CanonicalRelation(relation)
    if rel in (R.LEFT, R.RIGHT, R.ABOVE, R.BELOW):
        return _direction(rel, rng, satisfy)
    if rel in (R.HORIZONTAL, R.VERTICAL, R.DIAGONAL):
        return _alignment(rel, rng, satisfy)
    if rel in (R.NEAR, R.FAR, R.ALONE):
        return _proximity(rel, rng, satisfy)
    if rel in (R.INTERIOR, R.EXTERIOR):
        return _region(rel, rng, satisfy)
    return _comparison(rel, rng, satisfy)


# ---------------------------------------------------------------------------
# surface text

RELATION_PHRASES = {
    # relation: (with objects, without objects)
    R.LEFT: ("to the left of", "on the left"),
    R.RIGHT: ("to the right of", "on the right"),
    R.ABOVE: ("above", "at the top"),
    R.BELOW: ("below", "at the bottom"),
    R.HORIZONTAL: ("in a horizontal line with", "in a horizontal line"),
    R.VERTICAL: ("on a vertical line with", "on a vertical line"),
    R.DIAGONAL: ("in a diagonal line with", "in a diagonal line"),
    R.NEAR: ("close to", "close together"),
    R.FAR: ("far from", "far apart"),
    R.ALONE: ("alone away from", "alone"),
    R.INTERIOR: ("between", "in the middle"),
    R.EXTERIOR: ("outside of", "close to the border"),
    R.LIGHTER: ("lighter than", None),
    R.LIGHTEST: ("the lightest of", "the lightest"),
    R.DARKER: ("darker than", None),
    R.DARKEST: ("the darkest of", "the darkest"),
    R.SAME_COLOR: ("the same color as", "the same color"),
    R.DIFFERENT_COLOR: ("a different shade from", "different shades"),
    R.SMALLER: ("smaller than", None),
    R.SMALLEST: ("the smallest of", "the smallest"),
    R.LARGER: ("larger than", None),
    R.LARGEST: ("the largest of", "the largest"),
    R.SAME_SIZE: ("the same size as", "the same size"),
    R.DIFFERENT_SIZE: ("a different size from", "different sizes"),
}

MODIFIER_WORDS = {
    ModificationType.SUBTLETY: "slightly",
    ModificationType.EXTREMITY: "very",
    ModificationType.UNCERTAINTY: "almost",
    ModificationType.CERTAINTY: "exactly",
    ModificationType.NEUTRALITY: "fairly",
}
NUMBER_WORDS = ["zero", "one", "two", "three", "four", "five", "six", "seven"]


def color_word(color: int) -> str:
    if color < 20:
        return "black"
    if color < 45:
        return "very dark"
    if color < 70:
        return "dark"
    if color < 95:
        return "grey"
    if color < 125:
        return "light grey"
    return "light"


def size_word(size: int) -> str:
    return ("tiny", "small", "small", "medium", "large", "large")[size]


def noun_phrase(attributes: list[tuple[int, int]]) -> list[str]:
    if len(attributes) == 1:
        color, size = attributes[0]
        return ["the", size_word(size), *color_word(color).split(), "dot"]
    return ["the", NUMBER_WORDS[len(attributes)], "dots"]


@dataclass
class _Builder:
    dialogue_id: str
    utterances: list = field(default_factory=list)
    markables: list = field(default_factory=list)

    def say(self, speaker: str, tokens: list[str]) -> int:
        self.utterances.append(Utterance(len(self.utterances), speaker, tuple(tokens)))
        return len(self.utterances) - 1

    def markable(self, utt: int, start: int, end: int, speaker: str, referents) -> str:
        mid = f"{self.dialogue_id}-m{len(self.markables)}"
        self.markables.append(Markable(mid, utt, tuple(range(start, end)), speaker, frozenset(referents)))
        return mid


def build_dialogue(relation: CanonicalRelation, rng: np.random.Generator, satisfy: bool,
                   dialogue_id: str, scene_id: str, max_attempts: int = 50
                   ) -> tuple[ScenePair, DialogueDocument]:
    """One scene pair and a dialogue with a single testable expression of ``relation``."""
    rel = CanonicalRelation(relation)
    speaker = "A" if rng.random() < 0.5 else "B"
    other = "B" if speaker == "A" else "A"
    for _ in range(max_attempts):
        c = construct(rel, rng, satisfy)
        placed = scene_around_view(rng, c.positions, c.attributes, speaker, scene_id)
        if placed is not None:
            break
    else:
        raise RuntimeError(f"could not embed a {rel.value} construction into a scene pair")
    scene, ids = placed

    subj_ids = [ids[i] for i in c.subjects]
    obj_ids = [ids[i] for i in c.objects]
    subj_np = noun_phrase([c.attributes[i] for i in c.subjects])
    with_obj, without_obj = RELATION_PHRASES[rel]
    rel_tokens = (without_obj if c.no_object else with_obj).split()

    mod_type = None
    if rng.random() < 0.3:
        mod_type = list(MODIFIER_WORDS)[int(rng.integers(len(MODIFIER_WORDS)))]
    mod_tokens = [MODIFIER_WORDS[mod_type]] if mod_type else []

    b = _Builder(dialogue_id)
    subject_ellipsis = rng.random() < 0.1
    object_ellipsis = not c.no_object and not subject_ellipsis and rng.random() < 0.15

    subject_mids: list[str] = []
    object_mids: list[str] = []
    if subject_ellipsis:
        u0 = b.say(speaker, ["i", "see", *subj_np])
        subject_mids.append(b.markable(u0, 2, 2 + len(subj_np), speaker, subj_ids))
        b.say(other, ["ok", "got", "it"])
        lead = ["it", "is"]
    elif object_ellipsis:
        obj_np = noun_phrase([c.attributes[i] for i in c.objects])
        u0 = b.say(speaker, ["i", "see", *obj_np])
        object_mids.append(b.markable(u0, 2, 2 + len(obj_np), speaker, obj_ids))
        b.say(other, ["yes"])
        lead = [*subj_np, "is"]
    else:
        lead = [*subj_np, "is"]

    tokens = list(lead)
    mod_span = tuple(range(len(tokens), len(tokens) + len(mod_tokens)))
    tokens += mod_tokens
    rel_span = tuple(range(len(tokens), len(tokens) + len(rel_tokens)))
    tokens += rel_tokens
    obj_start = len(tokens)
    split_objects = False
    if not c.no_object and not object_ellipsis:
        if len(obj_ids) == 2 and rng.random() < 0.5:
            split_objects = True
            first = noun_phrase([c.attributes[c.objects[0]]])
            second = noun_phrase([c.attributes[c.objects[1]]])
            tokens += [*first, "and", *second]
        else:
            tokens += noun_phrase([c.attributes[i] for i in c.objects])
    utt = b.say(speaker, tokens)
    if not subject_ellipsis:
        subject_mids.append(b.markable(utt, 0, len(subj_np), speaker, subj_ids))
    if not c.no_object and not object_ellipsis:
        if split_objects:
            n1 = len(noun_phrase([c.attributes[c.objects[0]]]))
            object_mids.append(b.markable(utt, obj_start, obj_start + n1, speaker, obj_ids[:1]))
            object_mids.append(b.markable(utt, obj_start + n1 + 1, len(tokens), speaker, obj_ids[1:]))
        else:
            object_mids.append(b.markable(utt, obj_start, len(tokens), speaker, obj_ids))

    expr_id = f"{dialogue_id}-e0"
    modifiers = []
    if mod_type is not None:
        modifiers.append(ModifierAnnotation(f"{dialogue_id}-mod0", utt, mod_span, mod_type, expr_id))
    expr = SpatialExpression(
        id=expr_id, kind="relation", utterance_index=utt, token_span=rel_span,
        subjects=tuple(subject_mids), objects=tuple(object_mids), no_object=c.no_object,
        canonical=frozenset({rel}), modifiers=tuple(m.id for m in modifiers),
    )
    doc = DialogueDocument(dialogue_id, scene_id, tuple(b.utterances), tuple(b.markables), (expr,), tuple(modifiers))
    return scene, doc


def generate_corpus(seed: int, per_relation: int, satisfy: bool = True, relations=None):
    """Yield (scene, document) pairs: ``per_relation`` instances of each canonical relation."""
    relations = list(CanonicalRelation) if relations is None else [CanonicalRelation(r) for r in relations]
    tag = "sat" if satisfy else "vio"
    for code, rel in enumerate(CanonicalRelation):
        if rel not in relations:
            continue
        for i in range(per_relation):
            rng = np.random.default_rng([seed, code, i, int(satisfy)])
            name = f"{tag}-{rel.value}-{i:05d}"
            yield build_dialogue(rel, rng, satisfy, dialogue_id=f"d-{name}", scene_id=f"s-{name}")
