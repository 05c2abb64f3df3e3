"""Geometric and comparative probing of spatial expressions in grounded dialogue."""

from .annotation import CanonicalRelation, Category, DialogueDocument, ModificationType, Strength
from .kernels import BACKEND
from .relations import RelationContext, TestResult, evaluate
from .scene import Entity, ScenePair, View

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CanonicalRelation",
    "Category",
    "DialogueDocument",
    "Entity",
    "ModificationType",
    "RelationContext",
    "ScenePair",
    "Strength",
    "TestResult",
    "View",
    "evaluate",
]
