"""One-to-one box correspondence per image via optimal assignment.

The cost of pairing a target with a prediction combines a class-agreement
bonus and the generalized IoU between the boxes:

    cost(t, p) = -[class(t) == class(p)] * w_cls - giou(t.box, p.box) * w_shape

``w_shape`` defaults to 1 and ``w_cls`` is estimated per image from a
preliminary, geometry-only assignment, so that unreliable class
predictions cannot distort the matching. Exactly ``min(|targets|,
|predictions|)`` pairs always form; the leftovers are reported as
unmatched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Box, giou
from .stats import mcc_multiclass

# Relative slack when deciding whether a candidate pairing still attains the
# optimal total cost; well above float rounding of < 20-term sums, well below
# any genuine cost difference between distinct pairings in practice.
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class LabeledBox:
    """A box with a class label and an optional confidence score."""

    box: Box
    class_id: int
    confidence: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.class_id, int) or isinstance(self.class_id, bool) or self.class_id < 0:
            raise ValueError(f"class_id must be a non-negative integer, got {self.class_id!r}")
        if self.confidence is not None:
            if not math.isfinite(self.confidence) or not 0.0 <= self.confidence <= 1.0:
                raise ValueError(f"confidence must lie in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class MatchWeights:
    """Relative importance of the class and shape terms in the pair cost."""

    w_cls: float
    w_shape: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.w_cls <= 1.0:
            raise ValueError(f"w_cls must lie in [0, 1], got {self.w_cls!r}")
        if self.w_shape < 0.0:
            raise ValueError(f"w_shape must be non-negative, got {self.w_shape!r}")


@dataclass(frozen=True)
class MatchResult:
    """Matched (target_index, prediction_index) pairs and the leftovers.

    Every index appears exactly once across the matched pairs and the
    unmatched sets, and ``len(matched) == min(n_targets, n_predictions)``.
    """

    matched: tuple[tuple[int, int], ...]
    unmatched_targets: tuple[int, ...]
    unmatched_predictions: tuple[int, ...]


def cost_matrix(
    targets: Sequence[LabeledBox],
    predictions: Sequence[LabeledBox],
    weights: MatchWeights,
) -> np.ndarray:
    """Pairwise assignment costs, shape (len(targets), len(predictions))."""
    if len(targets) == 0 or len(predictions) == 0:
        raise ValueError("cost matrix requires at least one target and one prediction")
    cost = np.empty((len(targets), len(predictions)), dtype=np.float64)
    for i, target in enumerate(targets):
        for j, prediction in enumerate(predictions):
            class_bonus = weights.w_cls if target.class_id == prediction.class_id else 0.0
            cost[i, j] = -class_bonus - giou(target.box, prediction.box) * weights.w_shape
    return cost


def _lexmin_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost assignment, lexicographically smallest among ties.

    Rows are fixed in ascending order, each taking the smallest column that
    still admits an optimal completion; a row is skipped only when no
    column does (possible only with more rows than columns). Ties are rare
    in real data, so the extra solver calls stay cheap at per-image sizes.
    """
    n_rows, n_cols = cost.shape
    base_rows, base_cols = linear_sum_assignment(cost)
    best = math.fsum(cost[r, c] for r, c in zip(base_rows, base_cols))
    slack = _TIE_RTOL * max(1.0, abs(best))

    n_pairs = min(n_rows, n_cols)
    if n_pairs == 1 and n_rows <= n_cols:
        return [(0, int(np.argmin(cost[0])))]

    pairs: list[tuple[int, int]] = []
    fixed: list[float] = []
    free_rows = list(range(n_rows))
    free_cols = list(range(n_cols))
    while len(pairs) < n_pairs and free_rows:
        row = free_rows[0]
        chosen = None
        for col in free_cols:
            rest_rows = [r for r in free_rows if r != row]
            rest_cols = [c for c in free_cols if c != col]
            completion = 0.0
            if rest_rows and rest_cols:
                sub = cost[np.ix_(rest_rows, rest_cols)]
                sub_r, sub_c = linear_sum_assignment(sub)
                completion = math.fsum(sub[r, c] for r, c in zip(sub_r, sub_c))
            total = math.fsum(fixed + [cost[row, col], completion])
            if total <= best + slack:
                chosen = col
                break
        free_rows.remove(row)
        if chosen is None:
            continue  # row unmatched in every optimal assignment
        free_cols.remove(chosen)
        fixed.append(cost[row, chosen])
        pairs.append((row, chosen))
    if len(pairs) < n_pairs:
        # only reachable if the slack misjudged a tie; keep optimality
        return sorted((int(r), int(c)) for r, c in zip(base_rows, base_cols))
    return pairs


def class_weight(targets: Sequence[LabeledBox], predictions: Sequence[LabeledBox]) -> float:
    """Per-image class weight: clamped MCC of a geometry-only pre-matching.

    A preliminary assignment ignoring class labels pairs up the boxes;
    the multiclass MCC of the resulting label pairs, clamped at zero,
    says how much the class term can be trusted. Either side empty gives
    0.0.
    """
    if len(targets) == 0 or len(predictions) == 0:
        return 0.0
    cost = cost_matrix(targets, predictions, MatchWeights(w_cls=0.0, w_shape=1.0))
    pairs = _lexmin_assignment(cost)
    if not pairs:
        return 0.0
    label_pairs = [(targets[i].class_id, predictions[j].class_id) for i, j in pairs]
    return max(0.0, mcc_multiclass(label_pairs))


def match_image(
    targets: Sequence[LabeledBox],
    predictions: Sequence[LabeledBox],
    w_shape: float = 1.0,
) -> MatchResult:
    """Optimal one-to-one matching for a single image.

    Either side may be empty, in which case every box of the other side is
    unmatched. Deterministic: equal-cost assignments are resolved to the
    lexicographically smallest (target_index, prediction_index) pairing.
    """
    if len(targets) == 0 or len(predictions) == 0:
        return MatchResult(
            matched=(),
            unmatched_targets=tuple(range(len(targets))),
            unmatched_predictions=tuple(range(len(predictions))),
        )
    w_cls = class_weight(targets, predictions)
    cost = cost_matrix(targets, predictions, MatchWeights(w_cls=w_cls, w_shape=w_shape))
    pairs = sorted(_lexmin_assignment(cost))
    matched_t = {i for i, _ in pairs}
    matched_p = {j for _, j in pairs}
    return MatchResult(
        matched=tuple(pairs),
        unmatched_targets=tuple(i for i in range(len(targets)) if i not in matched_t),
        unmatched_predictions=tuple(j for j in range(len(predictions)) if j not in matched_p),
    )
