"""Ingestion, validation, and canonical conversion of box datasets.

The canonical on-disk format is a single JSON document with an explicit
schema version, a class vocabulary, and center-format boxes:

    {
      "schema_version": "1",
      "classes": ["atelectasis", "effusion"],
      "images": [
        {"id": "img-001", "size": [1024, 1024],
         "boxes": [{"class": "effusion", "x": 512.0, "y": 300.0,
                    "w": 120.0, "h": 80.0, "confidence": 0.91}]}
      ]
    }

A file holds one box list per image; whether those boxes are targets or
predictions is decided by how the file is used. Corner-format JSON
(``x_min``/``y_min`` instead of the center) and a one-box-per-row CSV are
accepted as alternate formats and converted on load.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .geometry import Box
from .matching import LabeledBox
from .samples import ImageSample

SCHEMA_VERSION = "1"
FORMATS = ("canonical-json", "coco-corner-json", "csv")

_CSV_REQUIRED = ("image_id", "class", "x", "y", "w", "h")
_CSV_OPTIONAL = ("confidence", "image_width", "image_height")
_DEFAULT_IMAGE_SIZE = (1.0, 1.0)


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset files."""


@dataclass
class DatasetFile:
    """A parsed, validated box file: vocabulary plus per-image samples.

    Boxes load into each sample's ``targets`` slot; ``pair_datasets``
    decides their role when two files are joined.
    """

    schema_version: str
    classes: tuple[str, ...]
    samples: list[ImageSample]

    def class_ids(self) -> tuple[int, ...]:
        return tuple(range(len(self.classes)))


def _fail(path: Path, where: str, message: str) -> None:
    raise DatasetError(f"{path}: {where}: {message}")


def _resolve_class(path: Path, where: str, name: object, classes: Sequence[str]) -> int:
    if not isinstance(name, str) or name not in classes:
        _fail(path, where, f"unknown class {name!r} (vocabulary: {', '.join(classes)})")
    return list(classes).index(name)


def _parse_real(path: Path, where: str, field: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        _fail(path, where, f"field {field!r} must be a real number, got {value!r}")
    try:
        return float(value)
    except ValueError:
        _fail(path, where, f"field {field!r} must be a real number, got {value!r}")
    raise AssertionError("unreachable")


def _build_box(path: Path, where: str, record: dict, corner: bool) -> Box:
    x_key = "x_min" if corner else "x"
    y_key = "y_min" if corner else "y"
    for field in (x_key, y_key, "w", "h"):
        if field not in record:
            _fail(path, where, f"missing field {field!r}")
    x = _parse_real(path, where, x_key, record[x_key])
    y = _parse_real(path, where, y_key, record[y_key])
    w = _parse_real(path, where, "w", record["w"])
    h = _parse_real(path, where, "h", record["h"])
    try:
        if corner:
            return Box.from_corner_size(x, y, w, h)
        return Box(x, y, w, h)
    except (TypeError, ValueError) as error:
        _fail(path, where, str(error))
    raise AssertionError("unreachable")


def _build_labeled_box(
    path: Path, where: str, record: dict, classes: Sequence[str], corner: bool
) -> LabeledBox:
    if "class" not in record:
        _fail(path, where, "missing field 'class'")
    class_id = _resolve_class(path, where, record["class"], classes)
    confidence = record.get("confidence")
    if confidence is not None:
        confidence = _parse_real(path, where, "confidence", confidence)
    box = _build_box(path, where, record, corner)
    try:
        return LabeledBox(box=box, class_id=class_id, confidence=confidence)
    except ValueError as error:
        _fail(path, where, str(error))
    raise AssertionError("unreachable")


def _load_json(path: Path, corner: bool, classes: Optional[Sequence[str]]) -> DatasetFile:
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise DatasetError(f"{path}: not valid JSON: {error}") from error
    if not isinstance(document, dict):
        _fail(path, "document", "top level must be a JSON object")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        _fail(path, "schema_version", f"expected {SCHEMA_VERSION!r}, got {version!r}")
    file_classes = document.get("classes")
    if not isinstance(file_classes, list) or not all(isinstance(c, str) for c in file_classes):
        _fail(path, "classes", "must be a list of class-name strings")
    if len(set(file_classes)) != len(file_classes):
        _fail(path, "classes", "class names must be unique")
    if classes is not None and list(classes) != list(file_classes):
        _fail(path, "classes", f"vocabulary mismatch: expected {list(classes)!r}")

    images = document.get("images")
    if not isinstance(images, list):
        _fail(path, "images", "must be a list")
    samples: list[ImageSample] = []
    seen_ids: set[str] = set()
    for index, image in enumerate(images):
        where = f"images[{index}]"
        if not isinstance(image, dict):
            _fail(path, where, "must be an object")
        image_id = image.get("id")
        if not isinstance(image_id, str) or not image_id:
            _fail(path, f"{where}.id", "must be a non-empty string")
        if image_id in seen_ids:
            _fail(path, f"{where}.id", f"duplicate image id {image_id!r}")
        seen_ids.add(image_id)
        size = image.get("size")
        if not isinstance(size, list) or len(size) != 2:
            _fail(path, f"{where}.size", "must be [width, height]")
        width = _parse_real(path, f"{where}.size", "width", size[0])
        height = _parse_real(path, f"{where}.size", "height", size[1])
        boxes = image.get("boxes", [])
        if not isinstance(boxes, list):
            _fail(path, f"{where}.boxes", "must be a list")
        labeled = [
            _build_labeled_box(path, f"{where}.boxes[{k}]", record, file_classes, corner)
            for k, record in enumerate(boxes)
        ]
        try:
            samples.append(ImageSample(image_id=image_id, image_size=(width, height), targets=tuple(labeled)))
        except ValueError as error:
            _fail(path, where, str(error))
    return DatasetFile(schema_version=SCHEMA_VERSION, classes=tuple(file_classes), samples=samples)


def _load_csv(path: Path, classes: Optional[Sequence[str]]) -> DatasetFile:
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            _fail(path, "header", "file is empty")
        for column in _CSV_REQUIRED:
            if column not in reader.fieldnames:
                _fail(path, "header", f"missing required column {column!r}")
        unknown = set(reader.fieldnames) - set(_CSV_REQUIRED) - set(_CSV_OPTIONAL)
        if unknown:
            _fail(path, "header", f"unknown columns: {', '.join(sorted(unknown))}")
        rows = list(reader)

    if classes is None:
        vocabulary = tuple(sorted({row["class"] for row in rows if row.get("class")}))
    else:
        vocabulary = tuple(classes)

    order: list[str] = []
    boxes_by_image: dict[str, list[LabeledBox]] = {}
    size_by_image: dict[str, tuple[float, float]] = {}
    for index, row in enumerate(rows):
        where = f"row {index + 2}"  # 1-based, counting the header line
        image_id = row.get("image_id")
        if not image_id:
            _fail(path, where, "field 'image_id' must be a non-empty string")
        record = {key: row[key] for key in ("class", "x", "y", "w", "h")}
        confidence = row.get("confidence")
        if confidence not in (None, ""):
            record["confidence"] = confidence
        labeled = _build_labeled_box(path, where, record, vocabulary, corner=False)
        if image_id not in boxes_by_image:
            order.append(image_id)
            boxes_by_image[image_id] = []
            width = row.get("image_width")
            height = row.get("image_height")
            if width not in (None, "") and height not in (None, ""):
                size_by_image[image_id] = (
                    _parse_real(path, where, "image_width", width),
                    _parse_real(path, where, "image_height", height),
                )
            else:
                size_by_image[image_id] = _DEFAULT_IMAGE_SIZE
        boxes_by_image[image_id].append(labeled)

    samples = [
        ImageSample(image_id=image_id, image_size=size_by_image[image_id], targets=tuple(boxes_by_image[image_id]))
        for image_id in order
    ]
    return DatasetFile(schema_version=SCHEMA_VERSION, classes=vocabulary, samples=samples)


def load_dataset(
    path: str | Path,
    format: str = "canonical-json",
    classes: Optional[Sequence[str]] = None,
) -> DatasetFile:
    """Load and validate a box file.

    ``classes`` forces a vocabulary: JSON files must declare exactly that
    vocabulary, CSV files (which carry none) resolve against it. Corner
    coordinates are converted to center format on load.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    if format == "csv":
        return _load_csv(path, classes)
    return _load_json(path, corner=(format == "coco-corner-json"), classes=classes)


def save_dataset(dataset: DatasetFile, path: str | Path, format: str = "canonical-json") -> None:
    """Write a dataset back to disk in the requested format."""
    path = Path(path)
    if format == "canonical-json" or format == "coco-corner-json":
        corner = format == "coco-corner-json"
        images = []
        for sample in dataset.samples:
            boxes = []
            for labeled in sample.targets:
                record: dict[str, object] = {"class": dataset.classes[labeled.class_id]}
                if corner:
                    record.update({"x_min": labeled.box.x_min, "y_min": labeled.box.y_min})
                else:
                    record.update({"x": labeled.box.x, "y": labeled.box.y})
                record.update({"w": labeled.box.w, "h": labeled.box.h})
                if labeled.confidence is not None:
                    record["confidence"] = labeled.confidence
                boxes.append(record)
            images.append({"id": sample.image_id, "size": list(sample.image_size), "boxes": boxes})
        document = {
            "schema_version": dataset.schema_version,
            "classes": list(dataset.classes),
            "images": images,
        }
        Path(path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
        return
    if format == "csv":
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(list(_CSV_REQUIRED) + list(_CSV_OPTIONAL))
            for sample in dataset.samples:
                width, height = sample.image_size
                for labeled in sample.targets:
                    writer.writerow(
                        [
                            sample.image_id,
                            dataset.classes[labeled.class_id],
                            repr(labeled.box.x),
                            repr(labeled.box.y),
                            repr(labeled.box.w),
                            repr(labeled.box.h),
                            "" if labeled.confidence is None else repr(labeled.confidence),
                            repr(width),
                            repr(height),
                        ]
                    )
        return
    raise ValueError(f"format must be one of {FORMATS}, got {format!r}")


def pair_datasets(targets: DatasetFile, predictions: DatasetFile) -> list[ImageSample]:
    """Join a targets file with a predictions file on image id.

    Images present only in the targets file get an empty prediction list;
    an image present only in the predictions file is an error, since
    predictions for an unknown image signal a broken pipeline upstream.
    """
    if targets.classes != predictions.classes:
        raise DatasetError(
            f"vocabulary mismatch between targets {list(targets.classes)!r} "
            f"and predictions {list(predictions.classes)!r}"
        )
    target_ids = {sample.image_id for sample in targets.samples}
    prediction_map = {sample.image_id: sample for sample in predictions.samples}
    orphans = [image_id for image_id in prediction_map if image_id not in target_ids]
    if orphans:
        raise DatasetError(f"predictions for unknown image ids: {', '.join(sorted(orphans))}")

    paired: list[ImageSample] = []
    for sample in targets.samples:
        prediction_sample = prediction_map.get(sample.image_id)
        predicted_boxes = prediction_sample.targets if prediction_sample is not None else ()
        paired.append(
            ImageSample(
                image_id=sample.image_id,
                image_size=sample.image_size,
                targets=sample.targets,
                predictions=predicted_boxes,
            )
        )
    return paired
