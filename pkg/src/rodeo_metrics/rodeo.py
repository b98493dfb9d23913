"""Robust Detection Outcome (RoDeO): sub-metrics and summary score.

The metric separates three error sources on the matched box pairs:

* localization - a Gaussian score of the center offset, normalized by the
  target box extents, calibrated so a relative distance of 1 scores 0.5;
* shape - the centered IoU of each pair;
* classification - the clamped multiclass MCC of the paired labels.

Over- and underprediction scale every sub-metric linearly by
``|M| / (|M| + |unmatched targets| + |unmatched predictions|)``, and the
harmonic mean of the three scaled sub-metrics summarizes them into one
number. Pair pooling is dataset-wide, not per image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .geometry import Box, ciou
from .matching import MatchResult, match_image
from .samples import ImageSample
from .stats import mcc_multiclass

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class RodeoScores:
    """Final (over/under-scaled) sub-metrics, summary score, and counts.

    ``no_support`` marks a per-class evaluation of a class that occurs in
    neither targets nor predictions; all scores are zero in that case.
    """

    loc: float
    shape: float
    cls: float
    total: float
    n_matched: int
    n_unmatched_targets: int
    n_unmatched_predictions: int
    no_support: bool = False

    @property
    def match_factor(self) -> float:
        """Fraction of boxes participating in a matched pair."""
        denom = self.n_matched + self.n_unmatched_targets + self.n_unmatched_predictions
        if denom == 0:
            return 0.0
        return self.n_matched / denom


def loc_score_pair(target: Box, prediction: Box) -> float:
    """Localization score of one pair, in (0, 1].

    exp(-(dx^2 + dy^2) * ln 2) with the center offsets dx, dy normalized
    by the *target* box extents; 1.0 for aligned centers, exactly 0.5 at
    relative Euclidean distance 1.
    """
    dx = (target.x - prediction.x) / target.w
    dy = (target.y - prediction.y) / target.h
    return math.exp(-(dx * dx + dy * dy) * _LN2)


def classification_score(label_pairs: Sequence[tuple[Hashable, Hashable]]) -> float:
    """Clamped multiclass MCC over (target, predicted) label pairs.

    An entirely correct pairing scores 1.0 even when only one class is
    present, where the MCC denominator degenerates and its zero-denominator
    convention would otherwise punish a perfect prediction.
    """
    if len(label_pairs) == 0:
        return 0.0
    if all(t == p for t, p in label_pairs):
        return 1.0
    return max(0.0, mcc_multiclass(label_pairs))


def rodeo_matched(
    matches: Sequence[tuple[ImageSample, MatchResult]],
) -> tuple[float, float, float]:
    """Sub-metrics (loc, shape, cls) over all matched pairs, pooled dataset-wide.

    With zero matched pairs every sub-metric is 0.0, consistent with the
    over/underprediction factor being 0 in that case.
    """
    loc_scores: list[float] = []
    shape_scores: list[float] = []
    label_pairs: list[tuple[int, int]] = []
    for sample, result in matches:
        for t_index, p_index in result.matched:
            target = sample.targets[t_index]
            prediction = sample.predictions[p_index]
            loc_scores.append(loc_score_pair(target.box, prediction.box))
            shape_scores.append(ciou(target.box, prediction.box))
            label_pairs.append((target.class_id, prediction.class_id))
    if not label_pairs:
        return 0.0, 0.0, 0.0
    loc = float(np.mean(loc_scores))
    shape = float(np.mean(shape_scores))
    cls = classification_score(label_pairs)
    return loc, shape, cls


def apply_overunder(sub: float, n_matched: int, n_unmatched_targets: int, n_unmatched_predictions: int) -> float:
    """Scale a sub-metric by the matched fraction of all boxes."""
    if min(n_matched, n_unmatched_targets, n_unmatched_predictions) < 0:
        raise ValueError("box counts must be non-negative")
    denom = n_matched + n_unmatched_targets + n_unmatched_predictions
    if denom == 0:
        return 0.0
    return sub * n_matched / denom


def rodeo_total(loc: float, shape: float, cls: float) -> float:
    """Harmonic mean of the three sub-metrics; 0.0 if any of them is 0."""
    for name, value in (("loc", loc), ("shape", shape), ("cls", cls)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"sub-metric {name!r} must lie in [0, 1], got {value!r}")
    if loc == 0.0 or shape == 0.0 or cls == 0.0:
        return 0.0
    return 3.0 / (1.0 / loc + 1.0 / shape + 1.0 / cls)


def _scored(
    loc_m: float,
    shape_m: float,
    cls_m: float,
    n_matched: int,
    n_ut: int,
    n_up: int,
    no_support: bool = False,
) -> RodeoScores:
    loc = apply_overunder(loc_m, n_matched, n_ut, n_up)
    shape = apply_overunder(shape_m, n_matched, n_ut, n_up)
    cls = apply_overunder(cls_m, n_matched, n_ut, n_up)
    return RodeoScores(
        loc=loc,
        shape=shape,
        cls=cls,
        total=rodeo_total(loc, shape, cls),
        n_matched=n_matched,
        n_unmatched_targets=n_ut,
        n_unmatched_predictions=n_up,
        no_support=no_support,
    )


def match_dataset(dataset: Sequence[ImageSample], w_shape: float = 1.0) -> list[tuple[ImageSample, MatchResult]]:
    """Match every image independently; order follows the input."""
    return [(sample, match_image(sample.targets, sample.predictions, w_shape=w_shape)) for sample in dataset]


def evaluate_rodeo(dataset: Sequence[ImageSample], w_shape: float = 1.0) -> RodeoScores:
    """Full RoDeO evaluation of a dataset.

    Matches each image, pools matched pairs and unmatched counts across
    the dataset, applies the over/underprediction scaling to each
    sub-metric, and summarizes with the harmonic mean.
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    matches = match_dataset(dataset, w_shape=w_shape)
    loc_m, shape_m, cls_m = rodeo_matched(matches)
    n_matched = sum(len(r.matched) for _, r in matches)
    n_ut = sum(len(r.unmatched_targets) for _, r in matches)
    n_up = sum(len(r.unmatched_predictions) for _, r in matches)
    return _scored(loc_m, shape_m, cls_m, n_matched, n_ut, n_up)


def evaluate_rodeo_per_class(
    dataset: Sequence[ImageSample],
    class_id: int,
    w_shape: float = 1.0,
    matches: Sequence[tuple[ImageSample, MatchResult]] | None = None,
) -> RodeoScores:
    """RoDeO restricted to one class after full matching.

    Matching always runs on the complete box sets; the matched pairs are
    then filtered to target class ``class_id`` and the unmatched sets to
    boxes of that class. The classification sub-metric over the filtered
    pairs is the fraction predicted as ``class_id`` (the target side is
    that class by construction, which degenerates any MCC). A class absent
    from targets and predictions yields all-zero scores flagged
    ``no_support``. Precomputed ``matches`` may be passed to avoid
    re-matching when scoring several classes.
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    if matches is None:
        matches = match_dataset(dataset, w_shape=w_shape)

    loc_scores: list[float] = []
    shape_scores: list[float] = []
    correct = 0
    n_ut = 0
    n_up = 0
    support = False
    for sample, result in matches:
        for t_index, p_index in result.matched:
            target = sample.targets[t_index]
            prediction = sample.predictions[p_index]
            if target.class_id == class_id:
                loc_scores.append(loc_score_pair(target.box, prediction.box))
                shape_scores.append(ciou(target.box, prediction.box))
                correct += int(prediction.class_id == class_id)
        n_ut += sum(1 for i in result.unmatched_targets if sample.targets[i].class_id == class_id)
        n_up += sum(1 for j in result.unmatched_predictions if sample.predictions[j].class_id == class_id)
        support = support or any(b.class_id == class_id for b in sample.targets + sample.predictions)

    if not support:
        return RodeoScores(0.0, 0.0, 0.0, 0.0, 0, 0, 0, no_support=True)
    n_matched = len(loc_scores)
    if n_matched == 0:
        return _scored(0.0, 0.0, 0.0, 0, n_ut, n_up)
    loc_m = float(np.mean(loc_scores))
    shape_m = float(np.mean(shape_scores))
    cls_m = correct / n_matched
    return _scored(loc_m, shape_m, cls_m, n_matched, n_ut, n_up)
