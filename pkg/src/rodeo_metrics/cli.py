"""Command-line surface: evaluate, sweep, report.

``evaluate`` scores a prediction file against a target file and prints a
per-class table (RoDeO sub-metrics and total, acc@t, AP@t, mAP) or, with
``--json``, a machine-readable document at full float precision.
``sweep`` drives the corruption oracles over a parameter grid and writes a
delimited table of per-grid-point metric means. ``report`` reshapes sweep
tables into a long format for plotting tools. All diagnostics go to
stderr; results go to stdout or the requested output file; the exit code
is 0 exactly when the command completed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import baselines
from .corruption import (
    DEFAULT_SWEEP_METRICS,
    CorruptionSpec,
    expand_grid,
    parse_metric_name,
    run_sweep,
    spec_field_names,
)
from .dataset_io import DatasetError, DatasetFile, load_dataset, pair_datasets
from .rodeo import evaluate_rodeo, evaluate_rodeo_per_class, match_dataset
from .samples import ImageSample


def _parse_threshold_range(text: str) -> list[float]:
    """Parse ``lo:hi:step`` into an inclusive list of thresholds."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"invalid threshold range {text!r}")
    count = int(round((hi - lo) / step))
    thresholds = [round(lo + k * step, 10) for k in range(count + 1)]
    return [t for t in thresholds if t <= hi + 1e-9]


def _parse_threshold_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _threshold_label(t: float) -> str:
    return str(int(round(t * 100)))


def _load_pair(args: argparse.Namespace) -> tuple[DatasetFile, list[ImageSample]]:
    targets = load_dataset(args.targets, format=args.format)
    predictions = load_dataset(args.predictions, format=args.format, classes=targets.classes)
    return targets, pair_datasets(targets, predictions)


def _evaluate_report(
    samples: list[ImageSample],
    classes: Sequence[str],
    acc_thresholds: Sequence[float],
    map_thresholds: Sequence[float],
    interpolation: str,
) -> dict:
    class_ids = list(range(len(classes)))
    matches = match_dataset(samples)

    def rodeo_entry(scores) -> dict:
        return {
            "cls": scores.cls,
            "loc": scores.loc,
            "shape": scores.shape,
            "total": scores.total,
            "n_matched": scores.n_matched,
            "n_unmatched_targets": scores.n_unmatched_targets,
            "n_unmatched_predictions": scores.n_unmatched_predictions,
            "match_factor": scores.match_factor,
            "no_support": scores.no_support,
        }

    per_class: dict[str, dict] = {}
    for class_id, name in enumerate(classes):
        scores = evaluate_rodeo_per_class(samples, class_id, matches=matches)
        ap_values = {
            _threshold_label(t): baselines.ap_at_iou(
                samples, t, class_ids, class_id=class_id, interpolation=interpolation
            )
            for t in map_thresholds
        }
        per_class[name] = {
            "rodeo": rodeo_entry(scores),
            "acc": {
                _threshold_label(t): baselines.acc_at_iou(samples, t, class_ids, class_id=class_id)
                for t in acc_thresholds
            },
            "ap": ap_values,
            "map": sum(ap_values.values()) / len(ap_values),
        }

    overall = evaluate_rodeo(samples)
    total_ap = {
        _threshold_label(t): baselines.ap_at_iou(samples, t, class_ids, interpolation=interpolation)
        for t in map_thresholds
    }
    total = {
        "rodeo": rodeo_entry(overall),
        "acc": {
            _threshold_label(t): baselines.acc_at_iou(samples, t, class_ids) for t in acc_thresholds
        },
        "ap": total_ap,
        "map": baselines.mean_average_precision(
            samples, class_ids, thresholds=map_thresholds, interpolation=interpolation
        ),
    }
    return {
        "classes": per_class,
        "total": total,
        "acc_thresholds": list(acc_thresholds),
        "map_thresholds": list(map_thresholds),
        "n_images": len(samples),
    }


def _format_table(report: dict, only_class: Optional[str] = None) -> str:
    acc_labels = [_threshold_label(t) for t in report["acc_thresholds"]]
    ap_labels = [_threshold_label(t) for t in report["map_thresholds"]]
    headers = (
        ["Class", "RoDeO/cls", "RoDeO/loc", "RoDeO/shape", "RoDeO"]
        + [f"acc@{label}" for label in acc_labels]
        + [f"AP@{label}" for label in ap_labels]
        + ["mAP"]
    )

    def row_values(entry: dict) -> list[float]:
        rodeo = entry["rodeo"]
        return (
            [rodeo["cls"], rodeo["loc"], rodeo["shape"], rodeo["total"]]
            + [entry["acc"][label] for label in acc_labels]
            + [entry["ap"][label] for label in ap_labels]
            + [entry["map"]]
        )

    rows: list[tuple[str, list[float]]] = []
    for name, entry in report["classes"].items():
        if only_class is None or name == only_class:
            rows.append((name, row_values(entry)))
    rows.append(("Total", row_values(report["total"])))

    name_width = max(len(headers[0]), max(len(name) for name, _ in rows))
    widths = [max(len(header), 6) for header in headers[1:]]
    lines = [
        "  ".join(
            [headers[0].ljust(name_width)]
            + [header.rjust(width) for header, width in zip(headers[1:], widths)]
        )
    ]
    for name, values in rows:
        lines.append(
            "  ".join(
                [name.ljust(name_width)]
                + [f"{value:.4f}".rjust(width) for value, width in zip(values, widths)]
            )
        )
    return "\n".join(lines) + "\n"


def _write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_evaluate(args: argparse.Namespace) -> int:
    targets, samples = _load_pair(args)
    acc_thresholds = _parse_threshold_list(args.acc_thresholds)
    map_thresholds = _parse_threshold_range(args.map_thresholds)
    if not acc_thresholds or not map_thresholds:
        raise ValueError("threshold lists must not be empty")
    if args.per_class is not None and args.per_class not in targets.classes:
        raise ValueError(
            f"unknown class {args.per_class!r} (vocabulary: {', '.join(targets.classes)})"
        )
    report = _evaluate_report(
        samples, targets.classes, acc_thresholds, map_thresholds, args.ap_interpolation
    )
    if args.json:
        text = json.dumps(report, indent=2) + "\n"
    else:
        text = _format_table(report, only_class=args.per_class)
    _write_output(text, args.out)
    return 0


def _grid_from_config(path: str, args: argparse.Namespace) -> tuple[list[CorruptionSpec], list[str], int, list[str]]:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetError(f"{path}: no such file") from None
    except json.JSONDecodeError as error:
        raise DatasetError(f"{path}: not valid JSON: {error}") from error
    if not isinstance(document, dict):
        raise DatasetError(f"{path}: grid config must be a JSON object")
    known_keys = {"schema_version", "base", "axes", "metrics", "runs", "seed"}
    for key in document:
        if key not in known_keys:
            raise DatasetError(f"{path}: unknown grid config key {key!r}")

    base_params = document.get("base", {})
    if not isinstance(base_params, dict):
        raise DatasetError(f"{path}: 'base' must be an object")
    valid = set(spec_field_names())
    for key in base_params:
        if key not in valid:
            raise DatasetError(f"{path}: base.{key}: unknown corruption parameter")
    if args.seed is not None:
        base_params = dict(base_params, seed=args.seed)
    try:
        base = CorruptionSpec(**base_params)
    except (TypeError, ValueError) as error:
        raise DatasetError(f"{path}: base: {error}") from error

    axes = document.get("axes", {})
    if not isinstance(axes, dict):
        raise DatasetError(f"{path}: 'axes' must be an object")
    for key, values in axes.items():
        if key not in valid:
            raise DatasetError(f"{path}: axes.{key}: unknown corruption parameter")
        if not isinstance(values, list) or not values:
            raise DatasetError(f"{path}: axes.{key}: must be a non-empty list")
    try:
        grid = expand_grid(base, axes)
    except (TypeError, ValueError) as error:
        raise DatasetError(f"{path}: axes: {error}") from error

    metrics = document.get("metrics", list(DEFAULT_SWEEP_METRICS))
    if args.metrics is not None:
        metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not isinstance(metrics, list) or not metrics:
        raise DatasetError(f"{path}: 'metrics' must be a non-empty list")
    for name in metrics:
        try:
            parse_metric_name(name)
        except ValueError as error:
            raise DatasetError(f"{path}: metrics: {error}") from error

    runs = document.get("runs", 5)
    if args.runs is not None:
        runs = args.runs
    if not isinstance(runs, int) or runs < 1:
        raise DatasetError(f"{path}: 'runs' must be a positive integer")

    axis_names = list(axes.keys())
    return grid, metrics, runs, axis_names


def _format_csv_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_sweep(args: argparse.Namespace) -> int:
    targets = load_dataset(args.targets, format=args.format)
    grid, metrics, runs, _ = _grid_from_config(args.grid, args)
    rows = run_sweep(
        [s for s in targets.samples],
        list(range(len(targets.classes))),
        grid,
        metrics=metrics,
        runs=runs,
    )
    param_names = list(spec_field_names())
    lines = [",".join(param_names + ["metric", "mean", "std", "runs"])]
    for row in rows:
        lines.append(
            ",".join(
                [_format_csv_value(row.params[name]) for name in param_names]
                + [row.metric, repr(row.mean), repr(row.std), str(row.runs)]
            )
        )
    _write_output("\n".join(lines) + "\n", args.out)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetError(f"{args.input}: empty sweep table")
    header = lines[0].split(",")
    if "metric" not in header:
        raise DatasetError(f"{args.input}: not a sweep table (no 'metric' column)")
    metric_at = header.index("metric")
    param_names = header[:metric_at]
    expected_tail = ["metric", "mean", "std", "runs"]
    if header[metric_at:] != expected_tail:
        raise DatasetError(f"{args.input}: expected trailing columns {expected_tail}")

    out_lines = ["params,metric,mean,std,runs"]
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise DatasetError(f"{args.input}: malformed row: {line!r}")
        params = ";".join(f"{name}={value}" for name, value in zip(param_names, cells))
        out_lines.append(",".join(['"' + params + '"'] + cells[metric_at:]))
    _write_output("\n".join(out_lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rodeo-metrics",
        description="RoDeO and IoU-threshold detection metrics",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser("evaluate", help="score predictions against targets")
    evaluate.add_argument("--targets", required=True, help="target boxes file")
    evaluate.add_argument("--predictions", required=True, help="predicted boxes file")
    evaluate.add_argument("--format", default="canonical-json", help="input file format")
    evaluate.add_argument(
        "--map-thresholds",
        default="0.1:0.7:0.1",
        help="IoU thresholds for AP/mAP as lo:hi:step",
    )
    evaluate.add_argument(
        "--acc-thresholds", default="0.3", help="comma-separated IoU thresholds for accuracy"
    )
    evaluate.add_argument(
        "--ap-interpolation",
        default="envelope",
        choices=list(baselines.AP_INTERPOLATIONS),
        help="AP integration rule",
    )
    evaluate.add_argument("--per-class", default=None, help="restrict table rows to one class")
    evaluate.add_argument("--json", action="store_true", help="machine-readable full-precision output")
    evaluate.add_argument("--out", default=None, help="write output to a file instead of stdout")
    evaluate.set_defaults(func=cmd_evaluate)

    sweep = commands.add_parser("sweep", help="corruption sensitivity sweep over a parameter grid")
    sweep.add_argument("--targets", required=True, help="target boxes file")
    sweep.add_argument("--format", default="canonical-json", help="input file format")
    sweep.add_argument("--grid", required=True, help="grid config file (JSON)")
    sweep.add_argument("--runs", type=int, default=None, help="override runs per grid point")
    sweep.add_argument("--seed", type=int, default=None, help="override the base seed")
    sweep.add_argument("--metrics", default=None, help="override metric list (comma-separated)")
    sweep.add_argument("--out", default=None, help="write the sweep table to a file")
    sweep.set_defaults(func=cmd_sweep)

    report = commands.add_parser("report", help="reshape a sweep table for plotting")
    report.add_argument("--input", required=True, help="sweep table (CSV)")
    report.add_argument("--out", default=None, help="write the long-format table to a file")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
