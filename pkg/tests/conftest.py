from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from rodeo_metrics import Box, ImageSample, LabeledBox

DATA_DIR = Path(__file__).parent / "data"

ALPHA, BETA = 0, 1


def lb(x, y, w, h, class_id, confidence=None) -> LabeledBox:
    return LabeledBox(Box(x, y, w, h), class_id, confidence)


def golden_samples() -> list[ImageSample]:
    """The hand-walked 4-image fixture.

    Derivation of every expected value, following each defining equation:

    Matching (per image, w_shape=1, w_cls from the geometry-only stage):
      img-1: identical boxes, both classes correct -> pairs (0,0),(1,1),
             label pairs (A,A),(B,B).
      img-2: single pair forced; centers offset by exactly one target
             width -> loc 2^-1 = 0.5, same extents -> ciou 1.
      img-3: pred 0 has identical geometry (giou 1), pred 1 is far away
             (giou < 0); the single target takes pred 0 -> label pair
             (A,B); pred 1 (class A) left unmatched.
      img-4: pred is co-centered with target A at half extents
             (giou = iou = 4/16 = 0.25) and far from target B -> pair with
             A (ciou 0.25), target B (class B) left unmatched.

    Pooled sub-metrics over the 5 matched pairs:
      loc   = (1 + 1 + 0.5 + 1 + 1)/5 = 9/10
      shape = (1 + 1 + 1 + 1 + 0.25)/5 = 17/20
      cls   = MCC of {(A,A)x3, (A,B), (B,B)}: counts tp=3 fp=0 tn=1 fn=1
              -> (3*1 - 0*1)/sqrt(3*4*1*2) = 3/sqrt(24) = sqrt(6)/4
    Over/underprediction: |M|=5, |U^t|=1 (img-4 B), |U^p|=1 (img-3 A)
      -> factor 5/7, so loc 9/14, shape 17/28, cls 5*sqrt(6)/28,
      total = 3/(14/9 + 28/17 + 28/(5*sqrt(6))) = 0.546567077206695.

    Per class A: 4 pairs, loc (1+0.5+1+1)/4 = 7/8, shape 13/16,
      correct predictions 3/4, U^p_A = 1 -> factor 4/5:
      (0.7, 0.65, 0.6), total 819/1265. Per class B: single perfect pair,
      U^t_B = 1 -> factor 1/2: (0.5, 0.5, 0.5), total 0.5.
    """
    return [
        ImageSample(
            "img-1",
            (64, 64),
            targets=(lb(10, 10, 4, 4, ALPHA), lb(30, 30, 6, 4, BETA)),
            predictions=(lb(10, 10, 4, 4, ALPHA, 0.9), lb(30, 30, 6, 4, BETA, 0.8)),
        ),
        ImageSample(
            "img-2",
            (64, 64),
            targets=(lb(10, 10, 4, 4, ALPHA),),
            predictions=(lb(14, 10, 4, 4, ALPHA, 0.7),),
        ),
        ImageSample(
            "img-3",
            (64, 64),
            targets=(lb(20, 20, 4, 2, ALPHA),),
            predictions=(lb(20, 20, 4, 2, BETA, 0.6), lb(40, 40, 4, 2, ALPHA, 0.5)),
        ),
        ImageSample(
            "img-4",
            (64, 64),
            targets=(lb(5, 5, 4, 4, ALPHA), lb(30, 30, 2, 2, BETA)),
            predictions=(lb(5, 5, 2, 2, ALPHA, 0.95),),
        ),
    ]


GOLDEN_EXPECTED = {
    "loc": 9 / 14,
    "shape": 17 / 28,
    "cls": 5 * np.sqrt(6) / 28,
    "total": 0.546567077206695,
    "per_class": {
        ALPHA: {"loc": 0.7, "shape": 0.65, "cls": 0.6, "total": 819 / 1265},
        BETA: {"loc": 0.5, "shape": 0.5, "cls": 0.5, "total": 0.5},
    },
    "acc@0.3": 3 / 11,
    # AP per threshold: class A scores 0.5 while the img-4 pair (IoU 0.25)
    # still counts, 0.125 above; class B scores 0.5 at every threshold.
    "ap": {0.1: 0.5, 0.2: 0.5, 0.3: 0.3125, 0.5: 0.3125, 0.7: 0.3125},
    "map": (0.5 + 0.5 + 0.3125 * 5) / 7,
}


@pytest.fixture
def golden() -> list[ImageSample]:
    return golden_samples()


def random_labeled_boxes(rng: np.random.Generator, count: int, n_classes: int, scale: float = 10.0):
    boxes = []
    for _ in range(count):
        boxes.append(
            LabeledBox(
                Box(
                    float(rng.uniform(0, scale)),
                    float(rng.uniform(0, scale)),
                    float(rng.uniform(0.2, scale / 2)),
                    float(rng.uniform(0.2, scale / 2)),
                ),
                int(rng.integers(n_classes)),
                float(rng.uniform(0, 1)),
            )
        )
    return boxes


def random_dataset(
    rng: np.random.Generator,
    n_images: int,
    n_classes: int = 3,
    max_boxes: int = 4,
    image_size: float = 100.0,
) -> list[ImageSample]:
    samples = []
    for index in range(n_images):
        samples.append(
            ImageSample(
                image_id=f"image-{index:04d}",
                image_size=(image_size, image_size),
                targets=tuple(random_labeled_boxes(rng, int(rng.integers(1, max_boxes + 1)), n_classes)),
                predictions=tuple(random_labeled_boxes(rng, int(rng.integers(0, max_boxes + 1)), n_classes)),
            )
        )
    return samples


def balanced_synthetic_dataset(
    rng: np.random.Generator,
    n_images: int,
    n_classes: int = 8,
    classes_per_image: int = 2,
    image_size: float = 256.0,
) -> list[ImageSample]:
    """Images with a few present classes, one target box each, classes
    balanced across the dataset by round-robin."""
    samples = []
    for index in range(n_images):
        first = index % n_classes
        present = [(first + k) % n_classes for k in range(classes_per_image)]
        targets = []
        for class_id in present:
            w = float(rng.uniform(20, 60))
            h = float(rng.uniform(20, 60))
            x = float(rng.uniform(w / 2, image_size - w / 2))
            y = float(rng.uniform(h / 2, image_size - h / 2))
            targets.append(LabeledBox(Box(x, y, w, h), class_id))
        samples.append(
            ImageSample(
                image_id=f"image-{index:04d}",
                image_size=(image_size, image_size),
                targets=tuple(targets),
            )
        )
    return samples
