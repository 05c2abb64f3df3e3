import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spatialprobe.annotation import CanonicalRelation as R, dumps_document, validate_document
from spatialprobe.harness import relation_cases
from spatialprobe.relations import RelationContext, evaluate
from spatialprobe.scene import Entity, check_scene_pair, dumps_scene
from spatialprobe.synth import build_dialogue, color_word, construct, generate_corpus, size_word


def _outcomes(satisfy, per_relation):
    out = {rel: [] for rel in R}
    for scene, doc in generate_corpus(17, per_relation, satisfy=satisfy):
        assert check_scene_pair(scene) == []
        assert validate_document(doc, scene) == []
        for c in relation_cases(doc, scene):
            out[c.relation].append((c.satisfy, c.valid))
    return out


def test_satisfying_corpus_all_pass():
    for rel, results in _outcomes(True, 100).items():
        assert len(results) == 100, rel
        assert all(s and v for s, v in results), rel


def test_violating_corpus_all_fail_but_valid():
    for rel, results in _outcomes(False, 100).items():
        assert len(results) == 100, rel
        assert all(v and not s for s, v in results), rel


@settings(max_examples=300)
@given(st.sampled_from(list(R)), st.booleans(), st.integers(0, 2**32 - 1))
def test_construction_outcome(rel, satisfy, seed):
    c = construct(rel, np.random.default_rng(seed), satisfy)
    ents = [Entity(i, x, y, col, size) for i, ((x, y), (col, size)) in enumerate(zip(c.positions, c.attributes))]
    ctx = RelationContext([ents[i] for i in c.subjects], [ents[i] for i in c.objects], c.no_object, ents)
    assert tuple(evaluate(rel, ctx)) == (satisfy, True)


def test_generation_is_deterministic():
    a = [(dumps_scene(s), dumps_document(d)) for s, d in generate_corpus(5, 3)]
    b = [(dumps_scene(s), dumps_document(d)) for s, d in generate_corpus(5, 3)]
    assert a == b
    c = [(dumps_scene(s), dumps_document(d)) for s, d in generate_corpus(6, 3)]
    assert a != c


def test_relation_subset_and_ids():
    items = list(generate_corpus(1, 2, relations=["near", "left"]))
    assert [d.dialogue_id for _, d in items] == [
        "d-sat-left-00000", "d-sat-left-00001", "d-sat-near-00000", "d-sat-near-00001"]
    assert all(d.scene_id == s.scene_id for s, d in items)


def test_dialogue_mentions_single_expression():
    scene, doc = build_dialogue(R.DARKEST, np.random.default_rng(2), True, "d", "s")
    assert len(doc.expressions) == 1
    assert doc.expressions[0].canonical == {R.DARKEST}


@pytest.mark.parametrize("value,word", [(0, "black"), (19, "black"), (20, "very dark"), (60, "dark"),
                                        (80, "grey"), (100, "light grey"), (149, "light")])
def test_color_word(value, word):
    assert color_word(value) == word


def test_size_words():
    assert [size_word(s) for s in range(6)] == ["tiny", "small", "small", "medium", "large", "large"]
