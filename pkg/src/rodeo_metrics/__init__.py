"""Robust Detection Outcome (RoDeO) and IoU-threshold detection metrics.

A library, CLI, and corruption-oracle toolkit for evaluating box-based
detection, built for settings (such as chest X-ray pathology detection)
where coarse localization is valuable, error sources must be separated,
and IoU-thresholded scores behave poorly.
"""

from .baselines import (
    COCO_MAP_THRESHOLDS,
    DEFAULT_MAP_THRESHOLDS,
    ThresholdedOutcome,
    acc_at_iou,
    ap_at_iou,
    f1_at_iou,
    mean_average_precision,
    precision_at_iou,
    recall_at_iou,
    threshold_match,
)
from .corruption import (
    CorruptionSpec,
    SweepRow,
    apply_corruptions,
    as_oracle,
    class_oracle_random_boxes,
    confuse_classes,
    corrupt_dataset,
    corrupt_position,
    corrupt_position_bias,
    corrupt_ratio,
    corrupt_shape,
    corrupt_size,
    expand_grid,
    overpredict_boxes,
    overpredict_class,
    run_sweep,
    underpredict,
)
from .dataset_io import DatasetError, DatasetFile, load_dataset, pair_datasets, save_dataset
from .geometry import Box, ciou, giou, hausdorff_similarity, iou
from .matching import LabeledBox, MatchResult, MatchWeights, class_weight, cost_matrix, match_image
from .rodeo import (
    RodeoScores,
    apply_overunder,
    evaluate_rodeo,
    evaluate_rodeo_per_class,
    loc_score_pair,
    rodeo_matched,
    rodeo_total,
)
from .samples import ImageSample
from .stats import ConfusionCounts, mcc_binary, mcc_multiclass

__version__ = "0.1.0"

__all__ = [
    "Box",
    "COCO_MAP_THRESHOLDS",
    "ConfusionCounts",
    "CorruptionSpec",
    "DEFAULT_MAP_THRESHOLDS",
    "DatasetError",
    "DatasetFile",
    "ImageSample",
    "LabeledBox",
    "MatchResult",
    "MatchWeights",
    "RodeoScores",
    "SweepRow",
    "ThresholdedOutcome",
    "acc_at_iou",
    "ap_at_iou",
    "apply_corruptions",
    "apply_overunder",
    "as_oracle",
    "ciou",
    "class_oracle_random_boxes",
    "class_weight",
    "confuse_classes",
    "corrupt_dataset",
    "corrupt_position",
    "corrupt_position_bias",
    "corrupt_ratio",
    "corrupt_shape",
    "corrupt_size",
    "cost_matrix",
    "evaluate_rodeo",
    "evaluate_rodeo_per_class",
    "expand_grid",
    "f1_at_iou",
    "giou",
    "hausdorff_similarity",
    "iou",
    "load_dataset",
    "loc_score_pair",
    "match_image",
    "mcc_binary",
    "mcc_multiclass",
    "mean_average_precision",
    "overpredict_boxes",
    "overpredict_class",
    "pair_datasets",
    "precision_at_iou",
    "recall_at_iou",
    "rodeo_matched",
    "rodeo_total",
    "run_sweep",
    "save_dataset",
    "threshold_match",
    "underpredict",
]
