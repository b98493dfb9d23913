"""Oracle corruption models for metric sensitivity sweeps.

An oracle predictor starts from the ground-truth boxes and degrades them
with parameterized random corruptions; sweeping a corruption parameter and
evaluating the metrics on the result exposes how each metric reacts to a
single, controlled error source.

Corruptions compose in a fixed order: class-level operations
(underprediction, class overprediction, class confusion), then box
duplication, then per-box geometric noise (position bias, position, shape,
size, aspect ratio). Every parameter at its identity value (0, or no
duplications) leaves the quantities it governs untouched. Each image is
corrupted from an independent sub-seed derived from (seed, run, image_id),
so results are reproducible regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import baselines
from .geometry import Box
from .matching import LabeledBox
from .rodeo import evaluate_rodeo
from .samples import ImageSample

DEFAULT_SWEEP_METRICS: tuple[str, ...] = (
    "rodeo",
    "rodeo_loc",
    "rodeo_shape",
    "rodeo_cls",
    "acc@50",
    "ap@50",
)


@dataclass(frozen=True)
class CorruptionSpec:
    """Parameter set for one corruption pipeline configuration.

    ``random_box_size`` switches to the class-oracle mode, which discards
    the target geometry entirely and emits one square box per positive
    class; all other box-generating steps are skipped in that mode.
    """

    sigma_pos: float = 0.0
    pos_bias: float = 0.0
    sigma_shape: float = 0.0
    sigma_size: float = 0.0
    sigma_ratio: float = 0.0
    p_underpred: float = 0.0
    p_overpred: float = 0.0
    expected_duplications: float = 0.0
    p_cls_confuse: float = 0.0
    random_box_size: Optional[float] = None
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("sigma_pos", "pos_bias", "sigma_shape", "sigma_size", "sigma_ratio", "expected_duplications"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        for name in ("p_underpred", "p_overpred", "p_cls_confuse"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")
        if self.random_box_size is not None and not 0.0 < self.random_box_size <= 1.0:
            raise ValueError(f"random_box_size must lie in (0, 1], got {self.random_box_size!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0 or self.seed >= 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def replace(self, **overrides) -> "CorruptionSpec":
        return replace(self, **overrides)


def spec_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(CorruptionSpec))


# ---------------------------------------------------------------------------
# per-box geometric corruptions


def corrupt_position(box: Box, sigma_pos: float, rng: np.random.Generator) -> Box:
    """Resample the center per axis with std scaled by the box extents."""
    if sigma_pos == 0.0:
        return box
    x = rng.normal(box.x, box.w * sigma_pos)
    y = rng.normal(box.y, box.h * sigma_pos)
    return Box(x, y, box.w, box.h)


def corrupt_position_bias(box: Box, magnitude: float, rng: np.random.Generator) -> Box:
    """Offset the center in a uniformly random direction.

    The offset magnitude is divided by the box extents per axis, i.e. it is
    a relative displacement; a unit box moves by exactly ``magnitude``.
    """
    if magnitude == 0.0:
        return box
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return Box(
        box.x + magnitude * math.cos(phi) / box.w,
        box.y + magnitude * math.sin(phi) / box.h,
        box.w,
        box.h,
    )


def corrupt_shape(box: Box, sigma_shape: float, rng: np.random.Generator) -> Box:
    """Lognormal resampling of width and height, independently."""
    if sigma_shape == 0.0:
        return box
    w = math.exp(rng.normal(math.log(box.w), sigma_shape))
    h = math.exp(rng.normal(math.log(box.h), sigma_shape))
    return Box(box.x, box.y, w, h)


def corrupt_size(box: Box, sigma_size: float, rng: np.random.Generator) -> Box:
    """One lognormal scale factor applied to both extents."""
    if sigma_size == 0.0:
        return box
    factor = math.exp(rng.normal(0.0, sigma_size))
    return Box(box.x, box.y, factor * box.w, factor * box.h)


def corrupt_ratio(box: Box, sigma_ratio: float, rng: np.random.Generator) -> Box:
    """Lognormal resampling of the aspect ratio at exactly constant area."""
    if sigma_ratio == 0.0:
        return box
    area = box.w * box.h
    ratio = math.exp(rng.normal(math.log(box.w / box.h), sigma_ratio))
    return Box(box.x, box.y, math.sqrt(area * ratio), math.sqrt(area / ratio))


# ---------------------------------------------------------------------------
# class-level and box-count corruptions

UNDERPREDICTION_SIGMA_POS = 0.5   # realism noise baked into the two oracles below


def as_oracle(sample: ImageSample) -> ImageSample:
    """Echo the targets as predictions (a perfect oracle, unscored)."""
    return sample.with_predictions(
        [LabeledBox(box=b.box, class_id=b.class_id) for b in sample.targets]
    )


def _drop_classes(predictions: Sequence[LabeledBox], p: float, rng: np.random.Generator) -> list[LabeledBox]:
    present = sorted({b.class_id for b in predictions})
    dropped = {c for c in present if rng.random() < p}
    return [b for b in predictions if b.class_id not in dropped]


def underpredict(sample: ImageSample, p_underpred: float, rng: np.random.Generator) -> ImageSample:
    """Drop each positive class entirely with probability ``p_underpred``.

    Surviving boxes additionally receive position corruption at sigma 0.5,
    mimicking a realistic (imperfect) predictor rather than a clean oracle.
    """
    kept = _drop_classes(sample.predictions, p_underpred, rng)
    noisy = [
        replace(b, box=corrupt_position(b.box, UNDERPREDICTION_SIGMA_POS, rng)) for b in kept
    ]
    return sample.with_predictions(noisy)


def _random_box_inside(width: float, height: float, w: float, h: float, rng: np.random.Generator) -> Box:
    # Uniform center such that the whole box stays inside the image.
    x = rng.uniform(w / 2.0, width - w / 2.0) if w < width else width / 2.0
    y = rng.uniform(h / 2.0, height - h / 2.0) if h < height else height / 2.0
    return Box(x, y, w, h)


def overpredict_class(
    sample: ImageSample,
    p_overpred: float,
    classes: Sequence[int],
    rng: np.random.Generator,
) -> ImageSample:
    """Flip each negative class to positive with probability ``p_overpred``.

    Every flipped class gains one box of 0.25 x 0.25 of the image extents
    at a uniform position fully inside the image.
    """
    width, height = sample.image_size
    present = {b.class_id for b in sample.predictions}
    added: list[LabeledBox] = []
    for class_id in classes:
        if class_id in present:
            continue
        if rng.random() < p_overpred:
            box = _random_box_inside(width, height, 0.25 * width, 0.25 * height, rng)
            added.append(LabeledBox(box=box, class_id=class_id))
    return sample.with_predictions(list(sample.predictions) + added)


def duplications_per_box(expected_duplications: float, rng: np.random.Generator) -> int:
    """Geometric duplication count on {0, 1, 2, ...} with the given mean."""
    if expected_duplications == 0.0:
        return 0
    return int(rng.geometric(1.0 / (1.0 + expected_duplications))) - 1


def overpredict_boxes(
    sample: ImageSample,
    expected_duplications: float,
    rng: np.random.Generator,
) -> ImageSample:
    """Duplicate each box a geometric number of times, then jitter positions.

    The original and all duplicates receive position corruption at sigma
    0.5, so duplicates deviate slightly from each other.
    """
    duplicated: list[LabeledBox] = []
    for box in sample.predictions:
        copies = 1 + duplications_per_box(expected_duplications, rng)
        duplicated.extend([box] * copies)
    noisy = [
        replace(b, box=corrupt_position(b.box, UNDERPREDICTION_SIGMA_POS, rng)) for b in duplicated
    ]
    return sample.with_predictions(noisy)


def confuse_classes(
    sample: ImageSample,
    p_cls_confuse: float,
    classes: Sequence[int],
    rng: np.random.Generator,
) -> ImageSample:
    """Randomly permute the labels of a Bernoulli-selected class subset.

    Each class of the vocabulary is selected independently with
    probability ``p_cls_confuse``; a uniform permutation of the selected
    subset then relabels every box of a selected class. Unselected labels
    are untouched, and box geometry never changes.
    """
    selected = [c for c in classes if rng.random() < p_cls_confuse]
    permutation = rng.permutation(len(selected))
    mapping = {c: selected[permutation[k]] for k, c in enumerate(selected)}
    relabeled = [
        replace(b, class_id=mapping.get(b.class_id, b.class_id)) for b in sample.predictions
    ]
    return sample.with_predictions(relabeled)


def class_oracle_random_boxes(
    sample: ImageSample,
    p_overpred: float,
    size: float,
    classes: Sequence[int],
    rng: np.random.Generator,
) -> ImageSample:
    """Class oracle: correct positive classes, randomly positioned boxes.

    Ignores the target geometry. Negative classes flip to positive with
    probability ``p_overpred``; every positive class emits one square box
    with side ``size * min(image extents)``, uniformly positioned fully
    inside the image.
    """
    if not 0.0 < size <= 1.0:
        raise ValueError(f"relative box size must lie in (0, 1], got {size!r}")
    width, height = sample.image_size
    side = size * min(width, height)
    positives = sorted({b.class_id for b in sample.targets})
    flipped = [c for c in classes if c not in positives and rng.random() < p_overpred]
    emitted = [
        LabeledBox(box=_random_box_inside(width, height, side, side, rng), class_id=class_id)
        for class_id in positives + flipped
    ]
    return sample.with_predictions(emitted)


# ---------------------------------------------------------------------------
# pipeline and sweeps


def image_rng(seed: int, run_index: int, image_id: str) -> np.random.Generator:
    """Independent, scheduling-free generator for one image of one run."""
    digest = hashlib.blake2b(image_id.encode("utf-8"), digest_size=8).digest()
    token = int.from_bytes(digest, "big")
    return np.random.default_rng(np.random.SeedSequence([seed + run_index, token]))


def apply_corruptions(
    sample: ImageSample,
    spec: CorruptionSpec,
    classes: Sequence[int],
    rng: np.random.Generator,
) -> ImageSample:
    """Run the corruption pipeline for one image.

    Predictions start as an echo of the targets; exactly the corruptions
    with active parameters are applied, in the documented order. Every
    final prediction receives a uniform random confidence so the
    confidence-based metrics have scores to integrate over.
    """
    oracle = as_oracle(sample)
    if spec.random_box_size is not None:
        oracle = class_oracle_random_boxes(oracle, spec.p_overpred, spec.random_box_size, classes, rng)
    else:
        if spec.p_underpred > 0.0:
            oracle = oracle.with_predictions(_drop_classes(oracle.predictions, spec.p_underpred, rng))
        if spec.p_overpred > 0.0:
            oracle = overpredict_class(oracle, spec.p_overpred, classes, rng)
        if spec.p_cls_confuse > 0.0:
            oracle = confuse_classes(oracle, spec.p_cls_confuse, classes, rng)
        if spec.expected_duplications > 0.0:
            duplicated: list[LabeledBox] = []
            for box in oracle.predictions:
                copies = 1 + duplications_per_box(spec.expected_duplications, rng)
                duplicated.extend([box] * copies)
            oracle = oracle.with_predictions(duplicated)

    corrupted: list[LabeledBox] = []
    for labeled in oracle.predictions:
        box = labeled.box
        box = corrupt_position_bias(box, spec.pos_bias, rng)
        box = corrupt_position(box, spec.sigma_pos, rng)
        box = corrupt_shape(box, spec.sigma_shape, rng)
        box = corrupt_size(box, spec.sigma_size, rng)
        box = corrupt_ratio(box, spec.sigma_ratio, rng)
        corrupted.append(replace(labeled, box=box, confidence=float(rng.uniform(0.0, 1.0))))
    return oracle.with_predictions(corrupted)


def corrupt_dataset(
    dataset: Sequence[ImageSample],
    spec: CorruptionSpec,
    classes: Sequence[int],
    run_index: int = 0,
) -> list[ImageSample]:
    return [
        apply_corruptions(sample, spec, classes, image_rng(spec.seed, run_index, sample.image_id))
        for sample in dataset
    ]


def parse_metric_name(name: str) -> tuple[str, Optional[float]]:
    """Split a metric name like ``acc@50`` into kind and IoU threshold."""
    if name in ("rodeo", "rodeo_loc", "rodeo_shape", "rodeo_cls", "rodeo_factor", "map"):
        return name, None
    for prefix in ("acc@", "ap@"):
        if name.startswith(prefix):
            try:
                percent = float(name[len(prefix):])
            except ValueError:
                raise ValueError(f"unknown metric {name!r}") from None
            if not 0.0 < percent <= 100.0:
                raise ValueError(f"metric threshold out of range in {name!r}")
            return prefix[:-1], percent / 100.0
    raise ValueError(f"unknown metric {name!r}")


def evaluate_metric_set(
    dataset: Sequence[ImageSample],
    classes: Sequence[int],
    metric_names: Sequence[str],
) -> dict[str, float]:
    """Evaluate the named metrics once over a dataset."""
    parsed = [(name, *parse_metric_name(name)) for name in metric_names]
    values: dict[str, float] = {}
    rodeo_scores = None
    for name, kind, threshold in parsed:
        if kind.startswith("rodeo"):
            if rodeo_scores is None:
                rodeo_scores = evaluate_rodeo(dataset)
            values[name] = {
                "rodeo": rodeo_scores.total,
                "rodeo_loc": rodeo_scores.loc,
                "rodeo_shape": rodeo_scores.shape,
                "rodeo_cls": rodeo_scores.cls,
                "rodeo_factor": rodeo_scores.match_factor,
            }[kind]
        elif kind == "acc":
            values[name] = baselines.acc_at_iou(dataset, threshold, classes)
        elif kind == "ap":
            values[name] = baselines.ap_at_iou(dataset, threshold, classes)
        else:
            values[name] = baselines.mean_average_precision(dataset, classes)
    return values


@dataclass(frozen=True)
class SweepRow:
    """Mean and spread of one metric at one grid point."""

    params: dict[str, object]
    metric: str
    mean: float
    std: float
    runs: int


def run_sweep(
    dataset: Sequence[ImageSample],
    classes: Sequence[int],
    grid: Sequence[CorruptionSpec],
    metrics: Sequence[str] = DEFAULT_SWEEP_METRICS,
    runs: int = 5,
) -> list[SweepRow]:
    """Corrupt, evaluate, and aggregate over repeated runs per grid point.

    Run ``r`` of a grid point uses seed ``spec.seed + r``; with a fixed
    dataset and grid the output is bitwise reproducible.
    """
    if len(grid) == 0:
        raise ValueError("sweep grid must not be empty")
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs!r}")
    for name in metrics:
        parse_metric_name(name)

    rows: list[SweepRow] = []
    for spec in grid:
        per_run: list[dict[str, float]] = []
        for run_index in range(runs):
            corrupted = corrupt_dataset(dataset, spec, classes, run_index)
            per_run.append(evaluate_metric_set(corrupted, classes, metrics))
        params = {name: getattr(spec, name) for name in spec_field_names()}
        for metric in metrics:
            samples = np.array([run[metric] for run in per_run], dtype=np.float64)
            std = float(samples.std(ddof=1)) if runs > 1 else 0.0
            rows.append(
                SweepRow(params=params, metric=metric, mean=float(samples.mean()), std=std, runs=runs)
            )
    return rows


def expand_grid(
    base: CorruptionSpec,
    axes: dict[str, Iterable[object]],
) -> list[CorruptionSpec]:
    """Cartesian product of parameter axes over a base spec.

    Axis order follows the dict order; the last axis varies fastest.
    """
    valid = set(spec_field_names())
    for key in axes:
        if key not in valid:
            raise ValueError(f"unknown corruption parameter {key!r}")
    specs = [base]
    for key, values in axes.items():
        specs = [spec.replace(**{key: value}) for spec in specs for value in values]
    return specs
