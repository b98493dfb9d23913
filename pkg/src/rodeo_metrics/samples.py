"""Per-image container joining target and predicted boxes."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .matching import LabeledBox


@dataclass(frozen=True)
class ImageSample:
    """One image's target and predicted boxes.

    ``image_size`` is (width, height) in the same units as the box
    coordinates; it is only consulted by the corruption oracles, which
    must place random boxes inside the image.
    """

    image_id: str
    image_size: tuple[float, float]
    targets: tuple[LabeledBox, ...]
    predictions: tuple[LabeledBox, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValueError("image_id must be a non-empty string")
        width, height = self.image_size
        if width <= 0 or height <= 0:
            raise ValueError(f"image_size must be positive, got {self.image_size!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "predictions", tuple(self.predictions))

    def with_predictions(self, predictions: Sequence[LabeledBox]) -> "ImageSample":
        return replace(self, predictions=tuple(predictions))
