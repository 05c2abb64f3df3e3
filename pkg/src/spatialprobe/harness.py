"""Turn annotated dialogues plus referent sets into relation test cases."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping

from .annotation import (
    CanonicalRelation,
    DialogueDocument,
    Lexicon,
    DEFAULT_LEXICON,
    extract_attribute_term,
    filter_testable,
    modification_strength,
)
from .metrics import DIFFERENCE_VALUE, Case, ignorable_object
from .relations import RelationContext, evaluate
from .scene import ScenePair, mean_attribute

Referents = Mapping[str, Iterable[int]]


def gold_referents(doc: DialogueDocument) -> dict[str, frozenset[int]]:
    return {m.id: m.referents for m in doc.markables}


_ORDER = list(CanonicalRelation)


def _resolve(markable_ids, referents) -> set[int]:
    ids = set()
    for mid in markable_ids:
        ids |= set(referents.get(mid, ()))
    return ids


def relation_cases(doc: DialogueDocument, scene: ScenePair, referents: Referents | None = None) -> list[Case]:
    """Run every canonical relation test of every testable expression.

    ``referents`` maps markable ids to the referent sets under test and defaults
    to the gold annotation. Linguistic factors and object ignorability are always
    derived from gold.
    """
    gold = gold_referents(doc)
    referents = gold if referents is None else referents
    markables = {m.id: m for m in doc.markables}
    cases = []
    for expr in filter_testable(doc):
        if not expr.canonical:
            continue
        view = scene.view(doc.speaker_of(expr.utterance_index))
        subj = view.select(_resolve(expr.subjects, referents))
        obj = view.select(_resolve(expr.objects, referents))
        ctx = RelationContext(subj, () if expr.no_object else obj, expr.no_object, view.entities)
        gold_ctx = RelationContext(
            view.select(_resolve(expr.subjects, gold)),
            () if expr.no_object else view.select(_resolve(expr.objects, gold)),
            expr.no_object,
            view.entities,
        )
        strength = modification_strength(expr, doc.modifiers)
        base_factors = []
        if any(markables[m].utterance_index < expr.utterance_index for m in expr.subjects):
            base_factors.append("inter-utterance subject")
        if any(markables[m].utterance_index < expr.utterance_index for m in expr.objects):
            base_factors.append("inter-utterance object")
        for rel in sorted(expr.canonical, key=_ORDER.index):
            result = evaluate(rel, ctx)
            factors = list(base_factors)
            if expr.no_object:
                factors.append("no object")
            else:
                # pairwise-only comparisons (None) cannot drop their objects
                ignorable = ignorable_object(rel, gold_ctx)
                factors.append("ignorable object" if ignorable else "unignorable object")
            difference = None
            if rel in DIFFERENCE_VALUE and result.valid and ctx.subjects and ctx.objects:
                attr = DIFFERENCE_VALUE[rel][1]
                difference = abs(mean_attribute(ctx.subjects, attr) - mean_attribute(ctx.objects, attr))
            cases.append(Case(doc.dialogue_id, expr.id, rel, result.satisfy, result.valid,
                              strength, tuple(factors), difference))
    return cases


def attribute_values(docs: Iterable[DialogueDocument], scenes: Mapping[str, ScenePair],
                     referents_by_dialogue: Mapping[str, Referents] | None, attribute: str,
                     lexicon: Lexicon = DEFAULT_LEXICON) -> dict[str, list[int]]:
    """Referent attribute values grouped by the attribute term found in each markable."""
    out: dict[str, list[int]] = defaultdict(list)
    for doc in docs:
        scene = scenes[doc.scene_id]
        refs = gold_referents(doc) if referents_by_dialogue is None else referents_by_dialogue[doc.dialogue_id]
        for m in doc.markables:
            tokens = [doc.utterances[m.utterance_index].tokens[i] for i in m.token_span]
            term = extract_attribute_term(tokens, attribute, lexicon)
            if term is None:
                continue
            view = scene.view(m.speaker)
            out[term].extend(getattr(e, attribute) for e in view.select(refs.get(m.id, ())))
    return dict(out)
