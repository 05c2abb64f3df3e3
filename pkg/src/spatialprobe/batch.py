"""Array-encoded relation contexts for bulk evaluation.

A batch holds N contexts over the same number of view entities. Subject and
object membership are boolean masks over those entities.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .annotation import CanonicalRelation
from .relations import (
    CENTER_RADIUS,
    SAME_COLOR_RANGE,
    SAME_SIZE_RANGE,
    SLOPE_HIGH,
    SLOPE_LOW,
    RelationContext,
)
from .scene import COLOR_LEVELS, ENTITIES_PER_VIEW, SIZE_LEVELS, VIEW_RADIUS, Entity

KIND_CODE = {rel: i for i, rel in enumerate(CanonicalRelation)}


@dataclass(frozen=True)
class ContextBatch:
    x: np.ndarray
    y: np.ndarray
    color: np.ndarray
    size: np.ndarray
    subjects: np.ndarray
    objects: np.ndarray
    no_object: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]

    def mirror_x(self) -> "ContextBatch":
        return replace(self, x=-self.x)

    def mirror_y(self) -> "ContextBatch":
        return replace(self, y=-self.y)

    def rotate(self, angles) -> "ContextBatch":
        """Rotate every context about the view center by its own angle (radians)."""
        angles = np.broadcast_to(np.asarray(angles, dtype=float), (len(self),))[:, None]
        c, s = np.cos(angles), np.sin(angles)
        return replace(self, x=c * self.x - s * self.y, y=s * self.x + c * self.y)

    def scale(self, factor: float) -> "ContextBatch":
        return replace(self, x=self.x * factor, y=self.y * factor)

    def context(self, i: int) -> RelationContext:
        entities = [
            Entity(j, float(self.x[i, j]), float(self.y[i, j]), int(self.color[i, j]), int(self.size[i, j]))
            for j in range(self.x.shape[1])
        ]
        return RelationContext(
            subjects=[e for e, m in zip(entities, self.subjects[i]) if m],
            objects=[e for e, m in zip(entities, self.objects[i]) if m],
            no_object=bool(self.no_object[i]),
            view_entities=entities,
        )

    @classmethod
    def from_contexts(cls, contexts) -> "ContextBatch":
        """Encode scalar contexts; each must share the entity count of the first."""
        contexts = list(contexts)
        k = len(contexts[0].view_entities)
        n = len(contexts)
        x, y = np.zeros((n, k)), np.zeros((n, k))
        color, size = np.zeros((n, k)), np.zeros((n, k))
        subj, obj = np.zeros((n, k), bool), np.zeros((n, k), bool)
        no_obj = np.zeros(n, bool)
        for i, ctx in enumerate(contexts):
            index = {e.id: j for j, e in enumerate(ctx.view_entities)}
            for j, e in enumerate(ctx.view_entities):
                x[i, j], y[i, j], color[i, j], size[i, j] = e.x, e.y, e.color, e.size
            for e in ctx.subjects:
                subj[i, index[e.id]] = True
            for e in ctx.objects:
                obj[i, index[e.id]] = True
            no_obj[i] = ctx.no_object
        return cls(x, y, color, size, subj, obj, no_obj)


def random_contexts(n: int, seed: int, k: int = ENTITIES_PER_VIEW) -> ContextBatch:
    """Uniform random contexts: positions in the view disk, integer color/size grades,
    random subject/object subsets (possibly empty) and a random no-object flag."""
    rng = np.random.default_rng(seed)
    r = VIEW_RADIUS * np.sqrt(rng.random((n, k)))
    theta = rng.uniform(0.0, 2.0 * np.pi, (n, k))
    x, y = r * np.cos(theta), r * np.sin(theta)
    color = rng.integers(0, COLOR_LEVELS, (n, k)).astype(float)
    size = rng.integers(0, SIZE_LEVELS, (n, k)).astype(float)
    # bias towards small referent sets, as in real markables
    subjects = rng.random((n, k)) < rng.uniform(0.05, 0.6, (n, 1))
    objects = rng.random((n, k)) < rng.uniform(0.05, 0.6, (n, 1))
    no_object = rng.random(n) < 0.3
    objects &= ~no_object[:, None]
    return ContextBatch(x, y, color, size, subjects, objects, no_object)


def evaluate_batch(relation, batch: ContextBatch, backend=None):
    """Evaluate one relation on every context of ``batch``; returns (satisfy, valid)."""
    backend = backend or kernels.backend
    return backend.evaluate_batch(
        KIND_CODE[CanonicalRelation(relation)],
        np.ascontiguousarray(batch.x, dtype=np.float64),
        np.ascontiguousarray(batch.y, dtype=np.float64),
        np.ascontiguousarray(batch.color, dtype=np.float64),
        np.ascontiguousarray(batch.size, dtype=np.float64),
        np.ascontiguousarray(batch.subjects, dtype=np.bool_),
        np.ascontiguousarray(batch.objects, dtype=np.bool_),
        np.ascontiguousarray(batch.no_object, dtype=np.bool_),
        SLOPE_LOW, SLOPE_HIGH, CENTER_RADIUS, SAME_COLOR_RANGE, SAME_SIZE_RANGE,
    )
