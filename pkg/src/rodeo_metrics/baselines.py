"""IoU-threshold detection metrics: acc@IoU, precision/recall/F1@IoU, AP@IoU, mAP.

All of them share one matching rule set, applied per image and class at a
threshold ``t``:

1. a prediction is a true positive when it pairs with a same-class target
   at IoU >= t;
2. at most one prediction per target counts (greedy, in descending
   confidence order, each taking the unclaimed target with the highest
   IoU), all further same-target hits are false positives;
3. predictions reaching no target at IoU >= t are false positives;
4. targets left unclaimed are false negatives;
5. a class with neither targets nor predictions in an image is one true
   negative.

AP additionally sweeps the confidence threshold over every distinct score
and integrates the precision-recall points.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .geometry import iou
from .matching import LabeledBox
from .samples import ImageSample
from .stats import ConfusionCounts

DEFAULT_MAP_THRESHOLDS: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
COCO_MAP_THRESHOLDS: tuple[float, ...] = tuple(np.round(np.arange(0.5, 0.96, 0.05), 2))

AP_INTERPOLATIONS = ("envelope", "11point")


@dataclass(frozen=True)
class ThresholdedOutcome:
    """Per-class confusion counts for one image at one IoU threshold.

    ``tp_confidences`` carries, per class, the confidences of the matched
    true-positive predictions (None entries for unscored predictions).
    """

    counts: Mapping[int, ConfusionCounts]
    tp_confidences: Mapping[int, tuple[Optional[float], ...]]


def _confidence_order(predictions: Sequence[tuple[int, LabeledBox]]) -> list[tuple[int, LabeledBox]]:
    # Descending confidence; unscored boxes last; ties keep input order.
    return sorted(
        predictions,
        key=lambda item: -(item[1].confidence if item[1].confidence is not None else -np.inf),
    )


def _greedy_match_class(
    targets: Sequence[LabeledBox],
    predictions: Sequence[tuple[int, LabeledBox]],
    t: float,
) -> tuple[list[tuple[int, LabeledBox]], int]:
    """Greedy same-class matching; returns (true-positive predictions, #FN)."""
    claimed = [False] * len(targets)
    true_positives: list[tuple[int, LabeledBox]] = []
    for item in _confidence_order(predictions):
        best_iou = 0.0
        best_index = -1
        for k, target in enumerate(targets):
            if claimed[k]:
                continue
            overlap = iou(target.box, item[1].box)
            if overlap >= t and overlap > best_iou:
                best_iou = overlap
                best_index = k
        if best_index >= 0:
            claimed[best_index] = True
            true_positives.append(item)
    return true_positives, claimed.count(False)


def threshold_match(sample: ImageSample, t: float, classes: Sequence[int]) -> ThresholdedOutcome:
    """Apply the five matching rules to one image at IoU threshold ``t``."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"IoU threshold must lie in (0, 1], got {t!r}")
    targets_by_class: dict[int, list[LabeledBox]] = defaultdict(list)
    predictions_by_class: dict[int, list[tuple[int, LabeledBox]]] = defaultdict(list)
    for box in sample.targets:
        targets_by_class[box.class_id].append(box)
    for index, box in enumerate(sample.predictions):
        predictions_by_class[box.class_id].append((index, box))

    counts: dict[int, ConfusionCounts] = {}
    tp_confidences: dict[int, tuple[Optional[float], ...]] = {}
    for class_id in classes:
        class_targets = targets_by_class.get(class_id, [])
        class_predictions = predictions_by_class.get(class_id, [])
        if not class_targets and not class_predictions:
            counts[class_id] = ConfusionCounts(tp=0, fp=0, tn=1, fn=0)
            tp_confidences[class_id] = ()
            continue
        true_positives, n_fn = _greedy_match_class(class_targets, class_predictions, t)
        counts[class_id] = ConfusionCounts(
            tp=len(true_positives),
            fp=len(class_predictions) - len(true_positives),
            tn=0,
            fn=n_fn,
        )
        tp_confidences[class_id] = tuple(box.confidence for _, box in true_positives)
    return ThresholdedOutcome(counts=counts, tp_confidences=tp_confidences)


def _pooled_counts(
    dataset: Sequence[ImageSample],
    t: float,
    classes: Sequence[int],
    class_id: Optional[int] = None,
) -> ConfusionCounts:
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    wanted = classes if class_id is None else [class_id]
    tp = fp = tn = fn = 0
    for sample in dataset:
        outcome = threshold_match(sample, t, wanted)
        for c in outcome.counts.values():
            tp += c.tp
            fp += c.fp
            tn += c.tn
            fn += c.fn
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def acc_at_iou(
    dataset: Sequence[ImageSample],
    t: float,
    classes: Sequence[int],
    class_id: Optional[int] = None,
) -> float:
    """Accuracy over image x class cells at IoU threshold ``t``."""
    counts = _pooled_counts(dataset, t, classes, class_id)
    if counts.total == 0:
        return 0.0
    return (counts.tp + counts.tn) / counts.total


def precision_at_iou(dataset, t, classes, class_id=None) -> float:
    counts = _pooled_counts(dataset, t, classes, class_id)
    return counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0


def recall_at_iou(dataset, t, classes, class_id=None) -> float:
    counts = _pooled_counts(dataset, t, classes, class_id)
    return counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0


def f1_at_iou(dataset, t, classes, class_id=None) -> float:
    precision = precision_at_iou(dataset, t, classes, class_id)
    recall = recall_at_iou(dataset, t, classes, class_id)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _require_confidences(dataset: Sequence[ImageSample]) -> None:
    for sample in dataset:
        for box in sample.predictions:
            if box.confidence is None:
                raise ValueError(
                    f"average precision requires a confidence on every prediction; "
                    f"image {sample.image_id!r} has an unscored box"
                )


def _pr_points(dataset: Sequence[ImageSample], t: float, class_id: int) -> tuple[list[tuple[float, float]], int]:
    """Precision-recall points for one class, one per distinct confidence.

    Equivalent to re-running the greedy matching restricted to predictions
    with confidence >= s for every distinct score s: the greedy consumes
    predictions in descending confidence order, so the matches made on a
    prefix are exactly the first steps of the full run, and cumulative
    TP/FP counters at each score boundary reproduce the restricted runs.
    """
    n_positive = 0
    scored: list[tuple[float, bool]] = []  # (confidence, is_tp) per prediction
    for sample in dataset:
        class_targets = [b for b in sample.targets if b.class_id == class_id]
        class_predictions = [
            (i, b) for i, b in enumerate(sample.predictions) if b.class_id == class_id
        ]
        n_positive += len(class_targets)
        true_positives, _ = _greedy_match_class(class_targets, class_predictions, t)
        tp_ids = {i for i, _ in true_positives}
        for i, box in class_predictions:
            scored.append((float(box.confidence), i in tp_ids))

    scored.sort(key=lambda s: -s[0])
    points: list[tuple[float, float]] = []
    tp = fp = 0
    for k, (confidence, is_tp) in enumerate(scored):
        tp += int(is_tp)
        fp += int(not is_tp)
        last_of_score = k + 1 == len(scored) or scored[k + 1][0] != confidence
        if last_of_score and n_positive > 0:
            points.append((tp / n_positive, tp / (tp + fp)))
    return points, n_positive


def _integrate_envelope(points: Sequence[tuple[float, float]]) -> float:
    # All-point interpolation: running max of precision from the high-recall
    # end, integrated over the recall increments.
    if not points:
        return 0.0
    recalls = np.array([r for r, _ in points])
    precisions = np.array([p for _, p in points])
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    previous = np.concatenate(([0.0], recalls[:-1]))
    return float(np.sum((recalls - previous) * envelope))


def _integrate_11point(points: Sequence[tuple[float, float]]) -> float:
    if not points:
        return 0.0
    total = 0.0
    for r in np.linspace(0.0, 1.0, 11):
        attained = [p for recall, p in points if recall >= r - 1e-12]
        total += max(attained) if attained else 0.0
    return total / 11.0


def ap_at_iou(
    dataset: Sequence[ImageSample],
    t: float,
    classes: Sequence[int],
    class_id: Optional[int] = None,
    interpolation: str = "envelope",
) -> float:
    """Average precision at IoU threshold ``t``.

    Per class, the precision-recall curve is swept over the distinct
    confidence scores and integrated. Without ``class_id`` the result is
    the mean over all classes that have at least one target box.
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    if interpolation not in AP_INTERPOLATIONS:
        raise ValueError(f"interpolation must be one of {AP_INTERPOLATIONS}, got {interpolation!r}")
    if not 0.0 < t <= 1.0:
        raise ValueError(f"IoU threshold must lie in (0, 1], got {t!r}")
    _require_confidences(dataset)
    integrate = _integrate_envelope if interpolation == "envelope" else _integrate_11point

    if class_id is not None:
        points, _ = _pr_points(dataset, t, class_id)
        return integrate(points)

    values = []
    for c in classes:
        points, n_positive = _pr_points(dataset, t, c)
        if n_positive == 0:
            continue  # class without targets: recall undefined, excluded
        values.append(integrate(points))
    if not values:
        raise ValueError("no class has any target box; average precision is undefined")
    return float(np.mean(values))


def mean_average_precision(
    dataset: Sequence[ImageSample],
    classes: Sequence[int],
    thresholds: Iterable[float] = DEFAULT_MAP_THRESHOLDS,
    class_id: Optional[int] = None,
    interpolation: str = "envelope",
) -> float:
    """Mean of AP@t over a list of IoU thresholds (default 0.1 .. 0.7)."""
    threshold_list = list(thresholds)
    if not threshold_list:
        raise ValueError("threshold list must not be empty")
    return float(
        np.mean([ap_at_iou(dataset, t, classes, class_id, interpolation) for t in threshold_list])
    )
