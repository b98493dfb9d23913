/**
 * Node bindings for the rodeo-metrics detection-metric engine.
 *
 * A thin marshaling layer: in-memory box arrays are written to the
 * engine's canonical JSON dataset format, the Python CLI is invoked, and
 * its full-precision JSON report is parsed back. No metric arithmetic
 * happens on this side of the boundary, so results are bit-identical to
 * the core's.
 */

import { execFile } from "node:child_process";
import { mkdtemp, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

const execFileAsync = promisify(execFile);

/** One box record: [x, y, w, h, classId] or [x, y, w, h, classId, score]. */
export type BoxRecord = number[];

/** Per-image box lists; targets[i] and predictions[i] describe image i. */
export type ImageBoxes = BoxRecord[];

export interface EvaluateOptions {
  /** Class names; defaults to "class-0" .. "class-(K-1)" covering every id seen. */
  classes?: string[];
  /** Image extent (width, height) shared by all images; defaults to [1, 1]. */
  imageSize?: [number, number];
  /** IoU thresholds for accuracy columns; default [0.3]. */
  accThresholds?: number[];
  /** IoU threshold range for AP/mAP; default 0.1..0.7 step 0.1. */
  mapThresholds?: { lo: number; hi: number; step: number };
  /** Python executable; default $RODEO_METRICS_PYTHON or "python3". */
  python?: string;
}

export interface RodeoBreakdown {
  cls: number;
  loc: number;
  shape: number;
  total: number;
  n_matched: number;
  n_unmatched_targets: number;
  n_unmatched_predictions: number;
  match_factor: number;
  no_support: boolean;
}

export interface ClassMetrics {
  rodeo: RodeoBreakdown;
  acc: Record<string, number>;
  ap: Record<string, number>;
  map: number;
}

export interface EvaluationReport {
  classes: Record<string, ClassMetrics>;
  total: ClassMetrics;
  acc_thresholds: number[];
  map_thresholds: number[];
  n_images: number;
}

export interface SweepGrid {
  base?: Record<string, number>;
  axes?: Record<string, number[]>;
  metrics?: string[];
  runs?: number;
  seed?: number;
}

export interface SweepRow {
  params: Record<string, number | null>;
  metric: string;
  mean: number;
  std: number;
  runs: number;
}

function pythonExecutable(options?: EvaluateOptions): string {
  return options?.python ?? process.env.RODEO_METRICS_PYTHON ?? "python3";
}

function inferClassCount(imageSets: ImageBoxes[][]): number {
  let highest = -1;
  for (const images of imageSets) {
    for (const boxes of images) {
      for (const record of boxes) {
        highest = Math.max(highest, record[4]);
      }
    }
  }
  return highest + 1;
}

function validateRecord(record: BoxRecord, where: string): void {
  if (record.length !== 5 && record.length !== 6) {
    throw new Error(`${where}: box record must have 5 or 6 numbers, got ${record.length}`);
  }
  for (const value of record) {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new Error(`${where}: box record fields must be finite numbers`);
    }
  }
  if (!Number.isInteger(record[4]) || record[4] < 0) {
    throw new Error(`${where}: class id must be a non-negative integer, got ${record[4]}`);
  }
}

/** Serialize per-image box lists to the engine's canonical JSON document. */
export function toCanonicalDocument(
  images: ImageBoxes[],
  classes: string[],
  imageSize: [number, number],
): string {
  const document = {
    schema_version: "1",
    classes,
    images: images.map((boxes, index) => ({
      id: `image-${String(index).padStart(4, "0")}`,
      size: imageSize,
      boxes: boxes.map((record, boxIndex) => {
        validateRecord(record, `images[${index}].boxes[${boxIndex}]`);
        if (record[4] >= classes.length) {
          throw new Error(
            `images[${index}].boxes[${boxIndex}]: class id ${record[4]} outside vocabulary of ${classes.length}`,
          );
        }
        const box: Record<string, unknown> = {
          class: classes[record[4]],
          x: record[0],
          y: record[1],
          w: record[2],
          h: record[3],
        };
        if (record.length === 6) {
          box.confidence = record[5];
        }
        return box;
      }),
    })),
  };
  return JSON.stringify(document);
}

async function runCli(args: string[], python: string): Promise<string> {
  try {
    const { stdout } = await execFileAsync(python, ["-m", "rodeo_metrics", ...args], {
      maxBuffer: 64 * 1024 * 1024,
    });
    return stdout;
  } catch (error) {
    const failure = error as { stderr?: string; message: string };
    const detail = failure.stderr?.trim() || failure.message;
    throw new Error(`rodeo-metrics CLI failed: ${detail}`);
  }
}

function resolveClasses(options: EvaluateOptions | undefined, sets: ImageBoxes[][]): string[] {
  if (options?.classes !== undefined) {
    if (options.classes.length === 0) {
      throw new Error("classes must not be empty");
    }
    return options.classes;
  }
  const count = inferClassCount(sets);
  if (count <= 0) {
    throw new Error("cannot infer a class vocabulary from empty inputs");
  }
  return Array.from({ length: count }, (_, k) => `class-${k}`);
}

/**
 * Evaluate predictions against targets.
 *
 * `targets[i]` and `predictions[i]` hold the box records of image i.
 * Returns the engine's full report (per-class and total RoDeO
 * sub-metrics, acc@t, AP@t, mAP) parsed at full precision.
 */
export async function evaluateDetections(
  targets: ImageBoxes[],
  predictions: ImageBoxes[],
  options?: EvaluateOptions,
): Promise<EvaluationReport> {
  if (targets.length !== predictions.length) {
    throw new Error(
      `targets and predictions must cover the same images, got ${targets.length} vs ${predictions.length}`,
    );
  }
  const classes = resolveClasses(options, [targets, predictions]);
  const imageSize = options?.imageSize ?? [1, 1];
  const workDir = await mkdtemp(join(tmpdir(), "rodeo-bindings-"));
  try {
    const targetsPath = join(workDir, "targets.json");
    const predictionsPath = join(workDir, "predictions.json");
    await writeFile(targetsPath, toCanonicalDocument(targets, classes, imageSize), "utf-8");
    await writeFile(predictionsPath, toCanonicalDocument(predictions, classes, imageSize), "utf-8");
    const args = [
      "evaluate",
      "--targets", targetsPath,
      "--predictions", predictionsPath,
      "--json",
    ];
    if (options?.accThresholds !== undefined) {
      args.push("--acc-thresholds", options.accThresholds.join(","));
    }
    if (options?.mapThresholds !== undefined) {
      const { lo, hi, step } = options.mapThresholds;
      args.push("--map-thresholds", `${lo}:${hi}:${step}`);
    }
    const stdout = await runCli(args, pythonExecutable(options));
    return JSON.parse(stdout) as EvaluationReport;
  } finally {
    await rm(workDir, { recursive: true, force: true });
  }
}

/** Flatten a report's total section to a metric-name -> value mapping. */
export function flattenTotals(report: EvaluationReport): Record<string, number> {
  const flat: Record<string, number> = {
    rodeo: report.total.rodeo.total,
    rodeo_loc: report.total.rodeo.loc,
    rodeo_shape: report.total.rodeo.shape,
    rodeo_cls: report.total.rodeo.cls,
    rodeo_factor: report.total.rodeo.match_factor,
    map: report.total.map,
  };
  for (const [label, value] of Object.entries(report.total.acc)) {
    flat[`acc@${label}`] = value;
  }
  for (const [label, value] of Object.entries(report.total.ap)) {
    flat[`ap@${label}`] = value;
  }
  return flat;
}

/**
 * Run a corruption sensitivity sweep on target boxes.
 *
 * The grid is forwarded verbatim to the engine's sweep command; rows of
 * the returned table carry the full corruption parameter set per grid
 * point plus mean/std over the repeated runs.
 */
export async function runCorruptionSweep(
  targets: ImageBoxes[],
  grid: SweepGrid,
  options?: EvaluateOptions,
): Promise<SweepRow[]> {
  const classes = resolveClasses(options, [targets]);
  const imageSize = options?.imageSize ?? [1, 1];
  const workDir = await mkdtemp(join(tmpdir(), "rodeo-bindings-"));
  try {
    const targetsPath = join(workDir, "targets.json");
    const gridPath = join(workDir, "grid.json");
    const outPath = join(workDir, "sweep.csv");
    await writeFile(targetsPath, toCanonicalDocument(targets, classes, imageSize), "utf-8");
    await writeFile(gridPath, JSON.stringify(grid), "utf-8");
    await runCli(
      ["sweep", "--targets", targetsPath, "--grid", gridPath, "--out", outPath],
      pythonExecutable(options),
    );
    const { readFile } = await import("node:fs/promises");
    const table = await readFile(outPath, "utf-8");
    return parseSweepTable(table);
  } finally {
    await rm(workDir, { recursive: true, force: true });
  }
}

function parseSweepTable(table: string): SweepRow[] {
  const lines = table.trim().split("\n");
  const header = lines[0].split(",");
  const metricAt = header.indexOf("metric");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    const params: Record<string, number | null> = {};
    for (let k = 0; k < metricAt; k += 1) {
      params[header[k]] = cells[k] === "" ? null : Number(cells[k]);
    }
    return {
      params,
      metric: cells[metricAt],
      mean: Number(cells[metricAt + 1]),
      std: Number(cells[metricAt + 2]),
      runs: Number(cells[metricAt + 3]),
    };
  });
}
