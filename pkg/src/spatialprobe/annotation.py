"""Dialogue annotation model: markables, spatial expressions, modifiers.

Token spans are stored as sorted tuples of token indices so that contiguous and
non-contiguous spans share one representation. On disk a contiguous span is the
half-open pair ``[start, end]`` and a non-contiguous one is ``{"indices": [...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .scene import ENTITIES_PER_VIEW, PLAYERS, ScenePair

Span = tuple[int, ...]


class Category(str, Enum):
    DIRECTION = "Direction"
    PROXIMITY = "Proximity"
    REGION = "Region"
    COLOR = "ColorComparison"
    SIZE = "SizeComparison"


class CanonicalRelation(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    ABOVE = "above"
    BELOW = "below"
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    DIAGONAL = "diagonal"
    NEAR = "near"
    FAR = "far"
    ALONE = "alone"
    INTERIOR = "interior"
    EXTERIOR = "exterior"
    LIGHTER = "lighter"
    LIGHTEST = "lightest"
    DARKER = "darker"
    DARKEST = "darkest"
    SAME_COLOR = "same_color"
    DIFFERENT_COLOR = "different_color"
    SMALLER = "smaller"
    SMALLEST = "smallest"
    LARGER = "larger"
    LARGEST = "largest"
    SAME_SIZE = "same_size"
    DIFFERENT_SIZE = "different_size"

    @property
    def category(self) -> Category:
        return CATEGORY_OF[self]


R = CanonicalRelation
CATEGORIES: dict[Category, tuple[CanonicalRelation, ...]] = {
    Category.DIRECTION: (R.LEFT, R.RIGHT, R.ABOVE, R.BELOW, R.HORIZONTAL, R.VERTICAL, R.DIAGONAL),
    Category.PROXIMITY: (R.NEAR, R.FAR, R.ALONE),
    Category.REGION: (R.INTERIOR, R.EXTERIOR),
    Category.COLOR: (R.LIGHTER, R.LIGHTEST, R.DARKER, R.DARKEST, R.SAME_COLOR, R.DIFFERENT_COLOR),
    Category.SIZE: (R.SMALLER, R.SMALLEST, R.LARGER, R.LARGEST, R.SAME_SIZE, R.DIFFERENT_SIZE),
}
CATEGORY_OF = {rel: cat for cat, rels in CATEGORIES.items() for rel in rels}


class ModificationType(str, Enum):
    SUBTLETY = "subtlety"
    EXTREMITY = "extremity"
    UNCERTAINTY = "uncertainty"
    CERTAINTY = "certainty"
    NEUTRALITY = "neutrality"
    NEGATION = "negation"


class Strength(str, Enum):
    STRONG = "strong"
    NEUTRAL = "neutral"
    WEAK = "weak"


STRONG_TYPES = frozenset({ModificationType.EXTREMITY, ModificationType.CERTAINTY})
WEAK_TYPES = frozenset({ModificationType.SUBTLETY, ModificationType.UNCERTAINTY})


class FormatError(ValueError):
    """An annotation record does not follow the interchange schema."""


@dataclass(frozen=True)
class Utterance:
    index: int
    speaker: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Markable:
    id: str
    utterance_index: int
    token_span: Span
    speaker: str
    referents: frozenset[int]


@dataclass(frozen=True)
class SpatialExpression:
    id: str
    kind: str  # "attribute" or "relation"
    utterance_index: int
    token_span: Span
    subjects: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()
    no_object: bool = False
    unannotatable: bool = False
    canonical: frozenset[CanonicalRelation] = frozenset()
    modifiers: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModifierAnnotation:
    id: str
    utterance_index: int
    token_span: Span
    mod_type: ModificationType
    modificand: str


@dataclass(frozen=True)
class DialogueDocument:
    dialogue_id: str
    scene_id: str
    utterances: tuple[Utterance, ...]
    markables: tuple[Markable, ...] = ()
    expressions: tuple[SpatialExpression, ...] = ()
    modifiers: tuple[ModifierAnnotation, ...] = ()

    def markable(self, markable_id: str) -> Markable:
        for m in self.markables:
            if m.id == markable_id:
                return m
        raise KeyError(markable_id)

    def speaker_of(self, utterance_index: int) -> str:
        return self.utterances[utterance_index].speaker

    def modifiers_of(self, expression_id: str) -> list[ModifierAnnotation]:
        return [m for m in self.modifiers if m.modificand == expression_id]


# ---------------------------------------------------------------------------
# interchange format


def span_from_json(raw) -> Span:
    if isinstance(raw, dict):
        return tuple(sorted(set(int(i) for i in raw["indices"])))
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        start, end = int(raw[0]), int(raw[1])
        return tuple(range(start, end))
    raise FormatError(f"bad token span {raw!r}")


def span_to_json(span: Span):
    if span and list(span) == list(range(span[0], span[-1] + 1)):
        return [span[0], span[-1] + 1]
    return {"indices": list(span)}


def document_from_dict(d: Mapping) -> DialogueDocument:
    try:
        utterances = tuple(
            Utterance(int(u["index"]), str(u["speaker"]), tuple(str(t) for t in u["tokens"]))
            for u in d["utterances"]
        )
        speakers = {u.index: u.speaker for u in utterances}
        markables = tuple(
            Markable(
                id=str(m["id"]),
                utterance_index=int(m["utterance"]),
                token_span=span_from_json(m["span"]),
                speaker=speakers.get(int(m["utterance"]), ""),
                referents=frozenset(int(r) for r in m["referents"]),
            )
            for m in d.get("markables", [])
        )
        expressions = tuple(
            SpatialExpression(
                id=str(e["id"]),
                kind=str(e["kind"]),
                utterance_index=int(e["utterance"]),
                token_span=span_from_json(e["span"]),
                subjects=tuple(str(s) for s in e.get("subjects", [])),
                objects=tuple(str(o) for o in e.get("objects", [])),
                no_object=bool(e.get("no_object", False)),
                unannotatable=bool(e.get("unannotatable", False)),
                canonical=frozenset(CanonicalRelation(c) for c in e.get("canonical", [])),
                modifiers=tuple(str(m) for m in e.get("modifiers", [])),
            )
            for e in d.get("expressions", [])
        )
        modifiers = tuple(
            ModifierAnnotation(
                id=str(m["id"]),
                utterance_index=int(m["utterance"]),
                token_span=span_from_json(m["span"]),
                mod_type=ModificationType(m["type"]),
                modificand=str(m["modificand"]),
            )
            for m in d.get("modifiers", [])
        )
        return DialogueDocument(str(d["dialogue_id"]), str(d["scene_id"]), utterances, markables, expressions, modifiers)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed annotation record: {exc!r}") from exc
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def _canonical_order(rels: Iterable[CanonicalRelation]) -> list[str]:
    order = list(CanonicalRelation)
    return [r.value for r in sorted(rels, key=order.index)]


def document_to_dict(doc: DialogueDocument) -> dict:
    return {
        "dialogue_id": doc.dialogue_id,
        "scene_id": doc.scene_id,
        "utterances": [{"index": u.index, "speaker": u.speaker, "tokens": list(u.tokens)} for u in doc.utterances],
        "markables": [
            {"id": m.id, "utterance": m.utterance_index, "span": span_to_json(m.token_span),
             "referents": sorted(m.referents)}
            for m in doc.markables
        ],
        "expressions": [
            {"id": e.id, "kind": e.kind, "utterance": e.utterance_index, "span": span_to_json(e.token_span),
             "subjects": list(e.subjects), "objects": list(e.objects), "no_object": e.no_object,
             "unannotatable": e.unannotatable, "canonical": _canonical_order(e.canonical),
             "modifiers": list(e.modifiers)}
            for e in doc.expressions
        ],
        "modifiers": [
            {"id": m.id, "utterance": m.utterance_index, "span": span_to_json(m.token_span),
             "type": m.mod_type.value, "modificand": m.modificand}
            for m in doc.modifiers
        ],
    }


def dumps_document(doc: DialogueDocument) -> str:
    return json.dumps(document_to_dict(doc), sort_keys=True)


def loads_document(line: str) -> DialogueDocument:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return document_from_dict(raw)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    location: str
    rule: str
    message: str = ""

    def to_dict(self) -> dict:
        return {"location": self.location, "rule": self.rule, "message": self.message}


def _span_ok(span: Span, utterances: Sequence[Utterance], index: int) -> bool:
    if not 0 <= index < len(utterances) or not span:
        return False
    n = len(utterances[index].tokens)
    return all(0 <= i < n for i in span)


def validate_document(doc: DialogueDocument, scene: ScenePair | None = None) -> list[Violation]:
    """Check every structural invariant of a document and collect all violations.

    When ``scene`` is given, markable referents are also checked against the
    speaker's view and the scene id must match.
    """
    out: list[Violation] = []
    where = doc.dialogue_id

    def bad(loc: str, rule: str, msg: str = "") -> None:
        out.append(Violation(f"{where}/{loc}", rule, msg))

    for pos, u in enumerate(doc.utterances):
        if u.index != pos:
            bad(f"utterance[{pos}]", "utterance-index", f"expected index {pos}, got {u.index}")
        if u.speaker not in PLAYERS:
            bad(f"utterance[{pos}]", "bad-speaker", repr(u.speaker))
    n_utt = len(doc.utterances)

    seen: set[str] = set()
    for item in (*doc.markables, *doc.expressions, *doc.modifiers):
        if item.id in seen:
            bad(item.id, "duplicate-id")
        seen.add(item.id)

    if scene is not None and scene.scene_id != doc.scene_id:
        bad("scene", "scene-mismatch", f"{doc.scene_id} vs {scene.scene_id}")

    markables = {m.id: m for m in doc.markables}
    for m in doc.markables:
        if not 0 <= m.utterance_index < n_utt:
            bad(m.id, "markable-utterance", f"utterance {m.utterance_index} does not exist")
            continue
        if not _span_ok(m.token_span, doc.utterances, m.utterance_index):
            bad(m.id, "span-outside-utterance")
        if m.speaker != doc.speaker_of(m.utterance_index):
            bad(m.id, "speaker-mismatch")
        if len(m.referents) > ENTITIES_PER_VIEW:
            bad(m.id, "referent-count", str(len(m.referents)))
        if scene is not None and m.speaker in PLAYERS:
            outside = m.referents - set(scene.view(m.speaker).ids)
            if outside:
                bad(m.id, "referent-outside-view", str(sorted(outside)))

    expressions = {e.id: e for e in doc.expressions}
    for e in doc.expressions:
        if e.kind not in ("attribute", "relation"):
            bad(e.id, "bad-kind", repr(e.kind))
        if not 0 <= e.utterance_index < n_utt:
            bad(e.id, "expression-utterance")
        elif not _span_ok(e.token_span, doc.utterances, e.utterance_index):
            bad(e.id, "span-outside-utterance")
        if e.no_object and e.objects:
            bad(e.id, "no-object-with-objects")
        if e.unannotatable and (e.subjects or e.objects):
            bad(e.id, "unannotatable-with-arguments")
        for role, ids in (("subject", e.subjects), ("object", e.objects)):
            for mid in ids:
                m = markables.get(mid)
                if m is None:
                    bad(e.id, f"dangling-{role}", mid)
                elif m.utterance_index > e.utterance_index:
                    bad(e.id, f"later-{role}", mid)
        for mod_id in e.modifiers:
            mod = next((m for m in doc.modifiers if m.id == mod_id), None)
            if mod is None:
                bad(e.id, "dangling-modifier", mod_id)
            elif mod.modificand != e.id:
                bad(e.id, "modifier-link-mismatch", mod_id)

    for mod in doc.modifiers:
        if not 0 <= mod.utterance_index < n_utt:
            bad(mod.id, "modifier-utterance")
        elif not _span_ok(mod.token_span, doc.utterances, mod.utterance_index):
            bad(mod.id, "span-outside-utterance")
        target = expressions.get(mod.modificand)
        if target is None:
            bad(mod.id, "dangling-modificand", mod.modificand)
        else:
            if target.utterance_index != mod.utterance_index:
                bad(mod.id, "modificand-utterance")
            if mod.id not in target.modifiers:
                bad(mod.id, "modifier-link-mismatch")
    return out


# ---------------------------------------------------------------------------
# lexicons

DEFAULT_MODIFIER_LEXICON: dict[ModificationType, tuple[str, ...]] = {
    ModificationType.SUBTLETY: ("slightly", "a little", "a bit", "a tiny bit", "very slightly"),
    ModificationType.EXTREMITY: ("very", "much", "pretty", "quite", "really"),
    ModificationType.UNCERTAINTY: ("almost", "about", "kind of", "smallish", "not completely"),
    ModificationType.CERTAINTY: ("directly", "exactly", "perfect", "almost exactly"),
    ModificationType.NEUTRALITY: ("medium", "med", "fairly", "mid-size", "slightly medium"),
    ModificationType.NEGATION: ("not", "isn't", "not perceptibly"),
}

# surface phrase -> canonical term
DEFAULT_COLOR_TERMS: dict[str, str] = {
    "black": "black",
    "dark": "dark",
    "dark grey": "dark grey",
    "dark gray": "dark grey",
    "grey": "grey",
    "gray": "grey",
    "light grey": "light grey",
    "light gray": "light grey",
    "light": "light",
    "medium grey": "medium grey",
    "medium gray": "medium grey",
    "very dark": "very dark",
    "very light": "very light",
}
DEFAULT_SIZE_TERMS: dict[str, str] = {
    "tiny": "tiny",
    "small": "small",
    "medium": "medium",
    "large": "large",
    "big": "big",
    "very small": "very small",
    "very large": "very large",
}


def _phrase(text: str) -> tuple[str, ...]:
    return tuple(text.lower().split())


@dataclass
class Lexicon:
    modifiers: dict[ModificationType, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_MODIFIER_LEXICON))
    color: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_COLOR_TERMS))
    size: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SIZE_TERMS))

    def __post_init__(self):
        self._modifier_table = [(_phrase(p), t) for t, phrases in self.modifiers.items() for p in phrases]
        self._term_tables = {
            "color": [(_phrase(p), term) for p, term in self.color.items()],
            "size": [(_phrase(p), term) for p, term in self.size.items()],
        }

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicon":
        """Load a JSON lexicon; any of ``modifiers``, ``color``, ``size`` replaces the default.

        ``color`` and ``size`` may be lists (each phrase is its own term) or
        phrase -> term mappings.
        """
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError("lexicon file must hold a JSON object")
        kwargs = {}
        if "modifiers" in raw:
            kwargs["modifiers"] = {ModificationType(k): tuple(v) for k, v in raw["modifiers"].items()}
        for key in ("color", "size"):
            if key in raw:
                val = raw[key]
                kwargs[key] = {p: p for p in val} if isinstance(val, list) else dict(val)
        return cls(**kwargs)


DEFAULT_LEXICON = Lexicon()


def _tokens(text) -> tuple[str, ...]:
    if isinstance(text, str):
        return _phrase(text)
    return tuple(t.lower() for t in text)


def _longest_match(tokens: tuple[str, ...], table):
    best, best_len, best_pos = None, 0, None
    for phrase, value in table:
        n = len(phrase)
        if n < best_len or n == 0:
            continue
        for pos in range(len(tokens) - n + 1):
            if tokens[pos:pos + n] == phrase:
                if n > best_len or (best_pos is not None and pos < best_pos):
                    best, best_len, best_pos = value, n, pos
                break
    return best


def classify_modifier(text, lexicon: Lexicon = DEFAULT_LEXICON) -> ModificationType | None:
    """Longest-match lookup of a modifier phrase (string or token sequence)."""
    return _longest_match(_tokens(text), lexicon._modifier_table)


def extract_attribute_term(markable_tokens, attribute: str, lexicon: Lexicon = DEFAULT_LEXICON) -> str | None:
    if attribute not in ("color", "size"):
        raise ValueError(f"attribute must be 'color' or 'size', got {attribute!r}")
    return _longest_match(_tokens(markable_tokens), lexicon._term_tables[attribute])


# ---------------------------------------------------------------------------
# expression-level helpers


def filter_testable(doc: DialogueDocument, expressions: Iterable[SpatialExpression] | None = None
                    ) -> list[SpatialExpression]:
    """Relation expressions that can be checked against one player's view.

    Drops attribute and unannotatable expressions, anything carrying a negation
    modifier, and expressions with an argument uttered by the other player.
    """
    if expressions is None:
        expressions = doc.expressions
    markables = {m.id: m for m in doc.markables}
    kept = []
    for e in expressions:
        if e.kind != "relation" or e.unannotatable:
            continue
        if any(m.mod_type is ModificationType.NEGATION for m in doc.modifiers_of(e.id)):
            continue
        speaker = doc.speaker_of(e.utterance_index)
        args = [markables.get(mid) for mid in (*e.subjects, *e.objects)]
        if any(m is None or m.speaker != speaker for m in args):
            continue
        kept.append(e)
    return kept


def modification_strength(expr: SpatialExpression, modifiers: Iterable[ModifierAnnotation]) -> Strength:
    attached = [m for m in modifiers if m.modificand == expr.id]
    strong = [m for m in attached if m.mod_type in STRONG_TYPES]
    weak = [m for m in attached if m.mod_type in WEAK_TYPES]
    if strong and not weak:
        return Strength.STRONG
    if weak and not strong:
        return Strength.WEAK
    if not strong:
        return Strength.NEUTRAL
    # conflicting classes: the modifier starting nearest the expression decides, weak on ties
    anchor = min(expr.token_span) if expr.token_span else 0

    def gap(m: ModifierAnnotation) -> int:
        return abs(min(m.token_span) - anchor) if m.token_span else 1 << 30

    return Strength.STRONG if min(map(gap, strong)) < min(map(gap, weak)) else Strength.WEAK
