"""Resolution accuracy, annotator agreement and satisfy/valid aggregation."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .annotation import CATEGORIES, CATEGORY_OF, CanonicalRelation, Category, Strength
from .annotation import CanonicalRelation as R
from .relations import NO_OBJECT_FORM, RelationContext, evaluate
from .scene import COLOR_LEVELS, ENTITIES_PER_VIEW, SIZE_LEVELS

FACTORS = (
    "inter-utterance subject",
    "inter-utterance object",
    "no object",
    "ignorable object",
    "unignorable object",
)
STRENGTHS = tuple(Strength)

# comparative relation -> value compared, for the absolute difference analysis
DIFFERENCE_VALUE = {
    R.LEFT: ("xy-value", "x"),
    R.RIGHT: ("xy-value", "x"),
    R.ABOVE: ("xy-value", "y"),
    R.BELOW: ("xy-value", "y"),
    R.LIGHTER: ("color", "color"),
    R.DARKER: ("color", "color"),
    R.SMALLER: ("size", "size"),
    R.LARGER: ("size", "size"),
}
DIFFERENCE_ROWS = ("xy-value", "color", "size")


# ---------------------------------------------------------------------------
# reference resolution


def _aligned(predictions: Mapping[str, Iterable[int]], golds: Mapping[str, Iterable[int]]):
    if not golds:
        raise ValueError("no markables to score")
    if set(predictions) != set(golds):
        missing = sorted(set(golds) ^ set(predictions))
        raise ValueError(f"prediction and gold markables differ: {missing[:5]}")
    return [(set(predictions[k]), set(golds[k])) for k in sorted(golds)]


def entity_accuracy(predictions: Mapping[str, Iterable[int]], golds: Mapping[str, Iterable[int]]) -> float:
    """Share of per-entity referent decisions (7 per markable) that match gold."""
    pairs = _aligned(predictions, golds)
    wrong = sum(len(p ^ g) for p, g in pairs)
    return 1.0 - wrong / (ENTITIES_PER_VIEW * len(pairs))


def exact_match(predictions: Mapping[str, Iterable[int]], golds: Mapping[str, Iterable[int]]) -> float:
    pairs = _aligned(predictions, golds)
    return sum(p == g for p, g in pairs) / len(pairs)


# ---------------------------------------------------------------------------
# agreement


@dataclass(frozen=True)
class AgreementReport:
    percent_agreement: float
    kappa: float
    n: int = 0


def cohen_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> AgreementReport:
    """Unweighted Cohen's kappa. Kappa is NaN when chance agreement is 1 (a single shared label)."""
    if len(labels_a) != len(labels_b):
        raise ValueError(f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}")
    n = len(labels_a)
    if n == 0:
        raise ValueError("no labels")
    po = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    ca, cb = Counter(labels_a), Counter(labels_b)
    pe = sum(ca[k] * cb[k] for k in ca) / (n * n)
    kappa = math.nan if pe == 1.0 else (po - pe) / (1.0 - pe)
    return AgreementReport(100.0 * po, kappa, n)


def token_labels(spans: Iterable[tuple[int, Iterable[int]]], utterance_lengths: Sequence[int],
                 starts_only: bool = False) -> list[int]:
    """Flatten spans into one in/out label per dialogue token."""
    offsets = np.concatenate([[0], np.cumsum(utterance_lengths)]).astype(int)
    labels = [0] * int(offsets[-1])
    for utt, tokens in spans:
        tokens = sorted(tokens)
        if not 0 <= utt < len(utterance_lengths) or not tokens:
            raise ValueError(f"span in utterance {utt} is empty or out of range")
        if tokens[0] < 0 or tokens[-1] >= utterance_lengths[utt]:
            raise ValueError(f"span {tokens} exceeds utterance {utt}")
        for t in tokens[:1] if starts_only else tokens:
            labels[offsets[utt] + t] = 1
    return labels


def token_agreement(spans_a, spans_b, utterances, starts_only: bool = False) -> AgreementReport:
    """Token-level agreement of two annotators' spans over the same utterances.

    ``utterances`` is a sequence of token lists (or Utterance objects); spans are
    ``(utterance_index, token_indices)`` pairs. With ``starts_only`` only the
    first token of each span is labelled.
    """
    lengths = [len(getattr(u, "tokens", u)) for u in utterances]
    return cohen_kappa(token_labels(spans_a, lengths, starts_only), token_labels(spans_b, lengths, starts_only))


# ---------------------------------------------------------------------------
# relation test aggregation


@dataclass(frozen=True)
class Case:
    """One canonical relation test on one expression."""

    dialogue_id: str
    expression_id: str
    relation: CanonicalRelation
    satisfy: bool
    valid: bool
    strength: Strength = Strength.NEUTRAL
    factors: tuple[str, ...] = ()
    difference: float | None = None

    def to_row(self) -> list:
        diff = "" if self.difference is None else repr(self.difference)
        return [self.dialogue_id, self.expression_id, self.relation.value, int(self.satisfy), int(self.valid),
                self.strength.value, ";".join(self.factors), diff]


CASE_HEADER = ["dialogue_id", "expression_id", "relation", "satisfy", "valid", "strength", "factors", "difference"]


@dataclass(frozen=True)
class TableRow:
    key: str
    case_count: int
    satisfy_rate: float
    valid_rate: float
    category: str = ""


@dataclass(frozen=True)
class AnalysisTable:
    grouping: str
    rows: tuple[TableRow, ...]

    def row(self, key: str) -> TableRow:
        for r in self.rows:
            if r.key == key:
                return r
        raise KeyError(key)

    def to_csv(self, decimals: int = 2) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.grouping == "relation":
            w.writerow(["category", "relation", "cases", "satisfy", "valid"])
        else:
            w.writerow([self.grouping, "cases", "satisfy", "valid"])
        for r in self.rows:
            rates = [f"{r.satisfy_rate:.{decimals}f}", f"{r.valid_rate:.{decimals}f}"]
            lead = [r.category, r.key] if self.grouping == "relation" else [r.key]
            w.writerow(lead + [r.case_count] + rates)
        return buf.getvalue()


def _row(key: str, cases: Sequence[Case], category: str = "") -> TableRow:
    n = len(cases)
    if n == 0:
        return TableRow(key, 0, 0.0, 0.0, category)
    sat = sum(c.satisfy for c in cases)
    val = sum(c.valid for c in cases)
    return TableRow(key, n, 100.0 * sat / n, 100.0 * val / n, category)


def satisfy_valid_table(cases: Iterable[Case], grouping: str = "relation") -> AnalysisTable:
    """Aggregate satisfy/valid rates (percent of all cases) per group.

    ``relation`` yields one row per canonical relation in category order;
    ``category``, ``strength`` and ``factor`` add a final ``All`` row. A case may
    fall under several factors.
    """
    cases = list(cases)
    groups: dict[str, list[Case]] = defaultdict(list)
    if grouping == "relation":
        for c in cases:
            groups[c.relation.value].append(c)
        rows = [_row(rel.value, groups[rel.value], cat.value) for cat, rels in CATEGORIES.items() for rel in rels]
        return AnalysisTable(grouping, tuple(rows))
    if grouping == "category":
        for c in cases:
            groups[CATEGORY_OF[c.relation].value].append(c)
        keys = [cat.value for cat in Category]
    elif grouping == "strength":
        for c in cases:
            groups[c.strength.value].append(c)
        keys = [s.value for s in STRENGTHS]
    elif grouping == "factor":
        for c in cases:
            for f in c.factors:
                groups[f].append(c)
        keys = list(FACTORS)
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    rows = [_row(k, groups[k]) for k in keys] + [_row("All", cases)]
    return AnalysisTable(grouping, tuple(rows))


def ignorable_object(relation: CanonicalRelation, gold: RelationContext) -> bool | None:
    """Whether a relation with objects still holds on gold referents once the objects are dropped.

    Returns None (not applicable) for pairwise-only comparisons and for contexts
    that have no objects to drop.
    """
    relation = CanonicalRelation(relation)
    if relation not in NO_OBJECT_FORM or gold.no_object or not gold.objects:
        return None
    stripped = RelationContext(gold.subjects, (), True, gold.view_entities)
    return evaluate(relation, stripped).satisfy


@dataclass(frozen=True)
class DifferenceRow:
    value: str
    strength: Strength
    mean_difference: float | None
    valid_count: int


def absolute_difference_table(cases: Iterable[Case]) -> list[DifferenceRow]:
    """Mean |mean(S.v) - mean(O.v)| per compared value and modification strength.

    Only valid comparative cases with both subjects and objects carry a difference.
    """
    bins: dict[tuple[str, Strength], list[float]] = defaultdict(list)
    for c in cases:
        if c.relation in DIFFERENCE_VALUE and c.valid and c.difference is not None:
            bins[DIFFERENCE_VALUE[c.relation][0], c.strength].append(c.difference)
    rows = []
    for value in DIFFERENCE_ROWS:
        for strength in STRENGTHS:
            diffs = bins[value, strength]
            mean = sum(diffs) / len(diffs) if diffs else None
            rows.append(DifferenceRow(value, strength, mean, len(diffs)))
    return rows


def difference_csv(rows: Sequence[DifferenceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "mod_type", "diff", "valid"])
    for r in rows:
        diff = "" if r.mean_difference is None else f"{r.mean_difference:.2f}"
        w.writerow([r.value, r.strength.value, diff, r.valid_count])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# attribute distributions

HISTOGRAM_BINS = {"color": 30, "size": 6}
SCALE_SPAN = {"color": float(COLOR_LEVELS), "size": float(SIZE_LEVELS)}


def referent_distribution(values: Iterable[float], attribute: str) -> np.ndarray:
    """Fixed-bin histogram of referent attribute values (30 color bins, 6 size bins)."""
    if attribute not in HISTOGRAM_BINS:
        raise ValueError(f"attribute must be color or size, got {attribute!r}")
    counts, _ = np.histogram(np.asarray(list(values), dtype=float),
                             bins=HISTOGRAM_BINS[attribute], range=(0.0, SCALE_SPAN[attribute]))
    return counts


def bin_centers(attribute: str) -> np.ndarray:
    n, span = HISTOGRAM_BINS[attribute], SCALE_SPAN[attribute]
    width = span / n
    return (np.arange(n) + 0.5) * width


def distribution_distance(h1, h2, attribute: str) -> float:
    """Wasserstein-1 distance between two histograms, as a fraction of the scale span."""
    h1, h2 = np.asarray(h1, dtype=float), np.asarray(h2, dtype=float)
    if h1.shape != h2.shape or h1.size != HISTOGRAM_BINS[attribute]:
        raise ValueError("histograms must use the attribute's bins")
    if h1.sum() == 0 or h2.sum() == 0:
        return math.nan
    width = SCALE_SPAN[attribute] / h1.size
    cdf_gap = np.cumsum(h1 / h1.sum() - h2 / h2.sum())
    return float(np.abs(cdf_gap[:-1]).sum() * width / SCALE_SPAN[attribute])


# ---------------------------------------------------------------------------
# cross-validation split


def _stable_key(item_id: str) -> str:
    return hashlib.sha256(str(item_id).encode("utf-8")).hexdigest()


def split_bins(item_ids: Iterable[str], bins: int = 10) -> list[list[str]]:
    """Deal items into equal-sized bins by a stable hash of their id (order independent)."""
    ids = sorted(set(item_ids), key=lambda i: (_stable_key(i), str(i)))
    if len(ids) < bins:
        raise ValueError(f"need at least {bins} items, got {len(ids)}")
    return [list(chunk) for chunk in np.array_split(np.array(ids, dtype=object), bins)]


def rotation_split(item_ids: Iterable[str], round_index: int, bins: int = 10
                   ) -> tuple[list[str], list[str], list[str]]:
    """Train on bins r..r+7, validate on r+8, test on r+9 (all mod ``bins``)."""
    if not 0 <= round_index < bins:
        raise ValueError(f"round must be in [0, {bins - 1}], got {round_index}")
    parts = split_bins(item_ids, bins)
    train = [i for k in range(bins - 2) for i in parts[(round_index + k) % bins]]
    return sorted(train), sorted(parts[(round_index + bins - 2) % bins]), sorted(parts[(round_index + bins - 1) % bins])
