"""Axis-aligned box geometry: IoU, centered IoU, and generalized IoU.

Boxes are kept in center format ``(x, y, w, h)`` throughout the library;
corner-format inputs are converted once at ingestion. All overlap measures
clamp degenerate intersections (touching edges) to zero area, so the raw
corner arithmetic can never produce a negative intersection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle with center ``(x, y)`` and extents ``(w, h)``.

    Extents must be strictly positive and all fields finite. Instances are
    immutable values, safe to share across threads.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TypeError(f"box field {name!r} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"box field {name!r} must be finite, got {value!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def from_corner_size(cls, x_min: float, y_min: float, w: float, h: float) -> "Box":
        """Build a box from its upper-left corner and extents."""
        return cls(x_min + w / 2.0, y_min + h / 2.0, w, h)

    @property
    def x_min(self) -> float:
        return self.x - self.w / 2.0

    @property
    def x_max(self) -> float:
        return self.x + self.w / 2.0

    @property
    def y_min(self) -> float:
        return self.y - self.h / 2.0

    @property
    def y_max(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


def _axis_overlap(center_a: float, w_a: float, center_b: float, w_b: float) -> float:
    # min(a_max, b_max) - max(a_min, b_min), written so that identical and
    # contained intervals come out exact instead of accumulating the
    # center +/- w/2 rounding.
    return min((w_a + w_b) / 2.0 - abs(center_a - center_b), w_a, w_b)


def _axis_hull(center_a: float, w_a: float, center_b: float, w_b: float) -> float:
    return max((w_a + w_b) / 2.0 + abs(center_a - center_b), w_a, w_b)


def intersection_area(a: Box, b: Box) -> float:
    """Overlap area of two boxes; 0.0 for disjoint or edge-touching boxes."""
    iw = _axis_overlap(a.x, a.w, b.x, b.w)
    ih = _axis_overlap(a.y, a.h, b.y, b.h)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def union_area(a: Box, b: Box) -> float:
    return a.area + b.area - intersection_area(a, b)


def iou(a: Box, b: Box) -> float:
    """Intersection over union, in [0, 1]."""
    inter = intersection_area(a, b)
    return inter / (a.area + b.area - inter)


def ciou(a: Box, b: Box) -> float:
    """Centered IoU: IoU after translating ``b`` onto ``a``'s center.

    A pure shape similarity in (0, 1]; co-centered boxes always overlap,
    and the value is independent of either box's position.
    """
    inter = min(a.w, b.w) * min(a.h, b.h)
    return inter / (a.area + b.area - inter)


def giou(a: Box, b: Box) -> float:
    """Generalized IoU in (-1, 1].

    IoU minus the fraction of the smallest enclosing box not covered by
    the union, which extends the gradient of plain IoU to disjoint boxes.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    hull = _axis_hull(a.x, a.w, b.x, b.w) * _axis_hull(a.y, a.h, b.y, b.h)
    return inter / union - max(0.0, hull - union) / hull


def hausdorff_similarity(a: Box, b: Box) -> float:
    """Negated Hausdorff distance between the two boxes placed co-centered.

    Used only by comparison plots against the centered-IoU shape score:
    unlike ciou this decreases linearly with size mismatch and is
    unbounded below. 0.0 means identical extents.
    """
    half_dw = (a.w - b.w) / 2.0
    half_dh = (a.h - b.h) / 2.0
    d_ab = math.hypot(max(0.0, half_dw), max(0.0, half_dh))
    d_ba = math.hypot(max(0.0, -half_dw), max(0.0, -half_dh))
    return -max(d_ab, d_ba)
