"""Referent decoding from per-entity scores.

Scores are ordered by the ids of the speaker's view entities. Two decoders are
provided: independent thresholding, and top-k decoding where k is a separately
predicted referent count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .scene import ENTITIES_PER_VIEW

THRESHOLD = 0.5
GOLD_SCORE, OTHER_SCORE = 0.95, 0.05


@dataclass(frozen=True)
class MarkablePrediction:
    markable_id: str
    scores: tuple[float, ...]
    predicted_count: int | None = None
    decoded: frozenset[int] | None = None  # None until a decoder has run

    def to_dict(self) -> dict:
        d = {"markable_id": self.markable_id, "scores": list(self.scores)}
        if self.predicted_count is not None:
            d["count"] = self.predicted_count
        if self.decoded is not None:
            d["decoded"] = sorted(self.decoded)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "MarkablePrediction":
        count = d.get("count")
        return cls(
            markable_id=str(d["markable_id"]),
            scores=tuple(float(s) for s in d["scores"]),
            predicted_count=None if count is None else int(count),
            decoded=None if "decoded" not in d else frozenset(int(i) for i in d["decoded"]),
        )


@dataclass(frozen=True)
class CountPrediction:
    markable_id: str
    count: int

    def __post_init__(self):
        if not 0 <= self.count <= ENTITIES_PER_VIEW:
            raise ValueError(f"count {self.count} outside [0, {ENTITIES_PER_VIEW}]")


def _check_scores(scores: Sequence[float]) -> np.ndarray:
    arr = np.asarray(scores, dtype=float)
    if arr.shape != (ENTITIES_PER_VIEW,):
        raise ValueError(f"expected {ENTITIES_PER_VIEW} scores, got {arr.size}")
    return arr


def _ids(entity_ids: Sequence[int] | None) -> list[int]:
    if entity_ids is None:
        return list(range(ENTITIES_PER_VIEW))
    ids = list(entity_ids)
    if len(ids) != ENTITIES_PER_VIEW:
        raise ValueError(f"expected {ENTITIES_PER_VIEW} entity ids, got {len(ids)}")
    return ids


def threshold_predict(scores: Sequence[float], entity_ids: Sequence[int] | None = None) -> frozenset[int]:
    arr = _check_scores(scores)
    ids = _ids(entity_ids)
    return frozenset(ids[i] for i in np.flatnonzero(arr > THRESHOLD))


def topk_predict(scores: Sequence[float], k: int, entity_ids: Sequence[int] | None = None) -> frozenset[int]:
    """The k highest-scoring entities; equal scores go to the lower entity id."""
    arr = _check_scores(scores)
    if not 0 <= k <= ENTITIES_PER_VIEW:
        raise ValueError(f"k must be in [0, {ENTITIES_PER_VIEW}], got {k}")
    ids = _ids(entity_ids)
    order = sorted(range(ENTITIES_PER_VIEW), key=lambda i: (-arr[i], ids[i]))
    return frozenset(ids[i] for i in order[:k])


def heuristic_count(scores: Sequence[float], markable_id: str = "") -> CountPrediction:
    """Expected referent count rounded half-to-even (a stand-in for a trained count model)."""
    total = float(np.sum(_check_scores(scores)))
    return CountPrediction(markable_id, min(max(round(total), 0), ENTITIES_PER_VIEW))


def perturb_gold(gold: Iterable[int], flip_probability: float, seed: int,
                 entity_ids: Sequence[int] | None = None, markable_id: str = "") -> MarkablePrediction:
    """Synthetic scores: 0.95 on gold referents, 0.05 elsewhere, each flipped with the given probability."""
    if not 0.0 <= flip_probability <= 1.0:
        raise ValueError("flip_probability must be in [0, 1]")
    ids = _ids(entity_ids)
    gold = set(gold)
    rng = np.random.default_rng(seed)
    flips = rng.random(ENTITIES_PER_VIEW) < flip_probability
    scores = []
    for eid, flip in zip(ids, flips):
        is_gold = (eid in gold) != bool(flip)
        scores.append(GOLD_SCORE if is_gold else OTHER_SCORE)
    return MarkablePrediction(markable_id, tuple(scores))


def decode(pred: MarkablePrediction, decoder: str, entity_ids: Sequence[int] | None = None,
           count: int | None = None) -> MarkablePrediction:
    """Fill ``decoded`` (and ``predicted_count`` for top-k) on a prediction.

    For ``topk`` the count comes from ``count`` when given, else from the
    prediction's own ``predicted_count``.
    """
    if decoder == "threshold":
        return replace(pred, decoded=threshold_predict(pred.scores, entity_ids))
    if decoder == "topk":
        k = count if count is not None else pred.predicted_count
        if k is None:
            raise ValueError(f"no count available for markable {pred.markable_id}")
        return replace(pred, predicted_count=k, decoded=topk_predict(pred.scores, k, entity_ids))
    raise ValueError(f"unknown decoder {decoder!r}")


def dumps_predictions(dialogue_id: str, preds: Iterable[MarkablePrediction]) -> str:
    return json.dumps({"dialogue_id": dialogue_id, "predictions": [p.to_dict() for p in preds]},
                      sort_keys=True)


def loads_predictions(line: str) -> tuple[str, list[MarkablePrediction]]:
    raw = json.loads(line)
    return str(raw["dialogue_id"]), [MarkablePrediction.from_dict(p) for p in raw["predictions"]]
