"""Confusion-matrix statistics, primarily the Matthews correlation coefficient.

MCC is the classification score shared by the matching weights, the RoDeO
classification sub-metric, and the baseline bookkeeping. Degenerate
confusion matrices (any zero factor in the denominator) score 0 by
convention: a classifier that carries no signal is treated like a random
one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

LabelPair = tuple[Hashable, Hashable]


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary true/false positive/negative counts."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValueError(f"count {name!r} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def mcc_binary(c: ConfusionCounts) -> float:
    """Matthews correlation coefficient from binary confusion counts.

    Returns (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)), or 0.0
    when any denominator factor vanishes.
    """
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def confusion_from_pairs(pairs: Iterable[LabelPair]) -> tuple[np.ndarray, list[Hashable]]:
    """K x K confusion matrix over (target, predicted) label pairs.

    Labels are indexed in sorted order over every label seen on either
    side, so the layout is deterministic. Rows are targets, columns
    predictions.
    """
    pair_list = list(pairs)
    labels = sorted({t for t, _ in pair_list} | {p for _, p in pair_list}, key=repr)
    index = {label: k for k, label in enumerate(labels)}
    matrix = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for target, predicted in pair_list:
        matrix[index[target], index[predicted]] += 1
    return matrix, labels


def mcc_multiclass(pairs: Sequence[LabelPair]) -> float:
    """Multiclass correlation coefficient over (target, predicted) pairs.

    The K-category generalization computed from the confusion matrix; it
    reduces exactly to :func:`mcc_binary` when two classes are present.
    Returns 0.0 on a degenerate denominator (e.g. a single class on both
    sides). Raises ``ValueError`` on an empty pair set, which has no
    defined score.
    """
    if len(pairs) == 0:
        raise ValueError("cannot compute a correlation over an empty pair set")
    matrix, _ = confusion_from_pairs(pairs)
    n = float(matrix.sum())
    trace = float(np.trace(matrix))
    target_totals = matrix.sum(axis=1).astype(np.float64)
    predicted_totals = matrix.sum(axis=0).astype(np.float64)
    numerator = trace * n - float(target_totals @ predicted_totals)
    denom_t = n * n - float(target_totals @ target_totals)
    denom_p = n * n - float(predicted_totals @ predicted_totals)
    if denom_t <= 0.0 or denom_p <= 0.0:
        return 0.0
    return numerator / math.sqrt(denom_t * denom_p)
