/**
 * Typed wrappers over the xaikit subcommands.
 *
 * Each wrapper stages its inputs as array or CSV files in a scratch
 * directory, runs one CLI subcommand, and parses the report and array
 * outputs back into plain records. Black-box predictors for the
 * perturbation explainers may be an in-process callback (served over the
 * child's stdio) or an external command line the CLI launches itself.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { CallbackPredictor } from "./bridge.js";
import { runCli, stderrTail } from "./bridge.js";
import type { NdArray } from "./nd.js";
import { elementCount, fromRows, ndarray } from "./nd.js";
import { decodeFrame, encodeFrame, readArrayFile, writeArrayFile } from "./npy.js";

export type ExplainMethod = "lime" | "shap";

export interface ExplainOptions {
  /** Output class the attributions explain. */
  classIndex: number;
  /** Target tile count for the superpixel grid (default 16). */
  superpixels?: number;
  /** Perturbation sample count (default 2048). */
  samples?: number;
  seed?: number;
  /** Replacement for masked-out tiles: image mean or zero. */
  baseline?: "mean" | "zero";
  /** Evaluation batch size for an external predictor command (default 32). */
  batch?: number;
  /** Surrogate kernel width (lime only). */
  kernelWidth?: number;
  /** Surrogate ridge strength (lime only). */
  ridge?: number;
  timeoutMs?: number;
}

export interface Explanation {
  method: string;
  classIndex: number;
  /** One attribution weight per superpixel. */
  weights: Float64Array;
  intercept: number;
  baselineValue: number;
  fullValue: number;
  superpixelCount: number;
  /** Prediction batches issued to the predictor. */
  invocations: number;
  /** |sum(weights) - (full - baseline)|, reported for shap only. */
  efficiencyGap?: number;
}

export interface BoxRecord {
  rowMin: number;
  colMin: number;
  rowMax: number;
  colMax: number;
}

export interface CamResult {
  classScores: number[];
  /** Score of the requested class; equals the map mean up to roundoff. */
  score: number;
  identityGap: number;
  map: NdArray;
  boxes: BoxRecord[];
}

export interface MilOptions {
  label: 0 | 1;
  sectionLength?: number;
  topK?: number;
  noisyWeight?: number;
  clampEps?: number;
  timeoutMs?: number;
}

export interface MilResult {
  /** Half-open slice ranges covering the stack. */
  sections: [number, number][];
  /** One row per section: class-0 and class-1 probabilities. */
  sectionProbs: number[][];
  patientProbs: number[];
  lCls: number;
  lNoisy: number | null;
  lTotal: number | null;
}

export interface ThresholdRecord {
  threshold: number;
  tp: number;
  fp: number;
  tn: number;
  fn: number;
  accuracy: number;
  precision: number | null;
  sensitivity: number | null;
  specificity: number | null;
}

export interface MetricsOptions {
  threshold?: number;
  timeoutMs?: number;
}

export interface MetricsResult {
  n: number;
  positives: number;
  negatives: number;
  auc: number;
  averagePrecision: number;
  bestThreshold: ThresholdRecord;
  givenThreshold: ThresholdRecord | null;
}

interface CliReport {
  command: string;
  config: Record<string, unknown>;
  results: Record<string, unknown>;
}

function withScratchDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = mkdtempSync(join(tmpdir(), "xaikit-bridge-"));
  return fn(dir).finally(() => rmSync(dir, { recursive: true, force: true }));
}

function readReport(path: string): CliReport {
  return JSON.parse(readFileSync(path, "utf8")) as CliReport;
}

async function runOrThrow(
  subcommand: string,
  args: string[],
  options: { predictor?: CallbackPredictor; timeoutMs?: number },
): Promise<{ invocations: number }> {
  const result = await runCli([subcommand, ...args], options);
  if (result.code !== 0) {
    throw new Error(
      `xaikit ${subcommand} exited with code ${result.code}: ${stderrTail(result.stderr)}`,
    );
  }
  return { invocations: result.invocations };
}

function asArray(values: NdArray | number[][]): NdArray {
  return Array.isArray(values) ? fromRows(values) : values;
}

function thresholdRecord(raw: unknown): ThresholdRecord {
  return raw as ThresholdRecord;
}

/**
 * Explain one prediction with a perturbation surrogate.
 *
 * `predictor` is either an in-process callback (invoked serially with
 * rank-4 batches, one call per batch, ceil(samples / batchLimit) + 2
 * calls in total) or a command line for the CLI to launch as its own
 * child. Results are numerically identical across the two transports
 * for the same seed.
 */
export async function explain(
  method: ExplainMethod,
  image: NdArray,
  predictor: CallbackPredictor | string,
  options: ExplainOptions,
): Promise<Explanation> {
  if (method !== "lime" && method !== "shap") {
    throw new Error(`unknown explain method: ${String(method)}`);
  }
  if (image.shape.length !== 3) {
    throw new Error(`image must be H x W x C, got rank ${image.shape.length}`);
  }
  const callback = typeof predictor === "string" ? undefined : predictor;
  if (callback !== undefined) {
    if (!Number.isInteger(callback.batchLimit) || callback.batchLimit < 1) {
      throw new Error("predictor batch limit must be a positive integer");
    }
  }
  const batch =
    callback !== undefined ? callback.batchLimit : (options.batch ?? 32);

  return withScratchDir(async (dir) => {
    const imagePath = join(dir, "image.npy");
    const weightsPath = join(dir, "weights.npy");
    const reportPath = join(dir, "report.json");
    writeArrayFile(imagePath, image);

    const args = [
      "--image", imagePath,
      "--predictor-cmd", typeof predictor === "string" ? predictor : "-",
      "--superpixels", String(options.superpixels ?? 16),
      "--class", String(options.classIndex),
      "--samples", String(options.samples ?? 2048),
      "--seed", String(options.seed ?? 0),
      "--baseline", options.baseline ?? "mean",
      "--batch", String(batch),
      "--threads", "1",
      "--weights-out", weightsPath,
      "--report", reportPath,
    ];
    if (method === "lime" && options.kernelWidth !== undefined) {
      args.push("--kernel-width", String(options.kernelWidth));
    }
    if (method === "lime" && options.ridge !== undefined) {
      args.push("--ridge", String(options.ridge));
    }

    const run = await runOrThrow(method, args, {
      predictor: callback,
      timeoutMs: options.timeoutMs,
    });
    const report = readReport(reportPath);
    const results = report.results;
    const explanation: Explanation = {
      method: results.method as string,
      classIndex: results.class_index as number,
      weights: readArrayFile(weightsPath).data,
      intercept: results.intercept as number,
      baselineValue: results.baseline_value as number,
      fullValue: results.full_value as number,
      superpixelCount: (results.superpixels as { count: number }).count,
      invocations:
        callback !== undefined ? run.invocations : (results.invocations as number),
    };
    if (method === "shap") {
      explanation.efficiencyGap = results.efficiency_gap as number;
    }
    return explanation;
  });
}

/** Class activation map for one class of a linear head over features. */
export async function cam(
  features: NdArray,
  weights: NdArray | number[][],
  classIndex: number,
  options: { threshold?: number; timeoutMs?: number } = {},
): Promise<CamResult> {
  return withScratchDir(async (dir) => {
    const featuresPath = join(dir, "features.npy");
    const weightsPath = join(dir, "weights.npy");
    const mapPath = join(dir, "map.npy");
    const reportPath = join(dir, "report.json");
    writeArrayFile(featuresPath, features);
    writeArrayFile(weightsPath, asArray(weights));

    const args = [
      "--features", featuresPath,
      "--weights", weightsPath,
      "--class", String(classIndex),
      "--map-out", mapPath,
      "--report", reportPath,
    ];
    if (options.threshold !== undefined) {
      args.push("--threshold", String(options.threshold));
    }
    await runOrThrow("cam", args, { timeoutMs: options.timeoutMs });

    const results = readReport(reportPath).results;
    const boxes = (results.boxes as Record<string, number>[]).map((box) => ({
      rowMin: box.row_min,
      colMin: box.col_min,
      rowMax: box.row_max,
      colMax: box.col_max,
    }));
    return {
      classScores: results.class_scores as number[],
      score: results.score as number,
      identityGap: results.identity_gap as number,
      map: readArrayFile(mapPath),
      boxes,
    };
  });
}

/** Patient-level probability aggregation over per-slice class scores. */
export async function milScore(
  scores: NdArray | number[][],
  config: MilOptions,
): Promise<MilResult> {
  return withScratchDir(async (dir) => {
    const scoresPath = join(dir, "scores.npy");
    const reportPath = join(dir, "report.json");
    writeArrayFile(scoresPath, asArray(scores));

    const args = [
      "--scores", scoresPath,
      "--label", String(config.label),
      "--report", reportPath,
    ];
    if (config.sectionLength !== undefined) {
      args.push("--section-len", String(config.sectionLength));
    }
    if (config.topK !== undefined) args.push("--k", String(config.topK));
    if (config.noisyWeight !== undefined) {
      args.push("--lambda", String(config.noisyWeight));
    }
    if (config.clampEps !== undefined) {
      args.push("--clamp-eps", String(config.clampEps));
    }
    await runOrThrow("mil", args, { timeoutMs: config.timeoutMs });

    const results = readReport(reportPath).results;
    return {
      sections: results.sections as [number, number][],
      sectionProbs: results.section_probs as number[][],
      patientProbs: results.patient_probs as number[],
      lCls: results.l_cls as number,
      lNoisy: results.l_noisy as number | null,
      lTotal: results.l_total as number | null,
    };
  });
}

/** ROC/AUC, average precision, and confusion counts for binary scores. */
export async function metrics(
  scores: readonly number[],
  labels: readonly number[],
  options: MetricsOptions = {},
): Promise<MetricsResult> {
  if (scores.length !== labels.length) {
    throw new Error("scores and labels must have equal length");
  }
  return withScratchDir(async (dir) => {
    const dataPath = join(dir, "data.csv");
    const reportPath = join(dir, "report.json");
    const lines = ["score,label"];
    for (let i = 0; i < scores.length; i++) {
      lines.push(`${scores[i]},${labels[i]}`);
    }
    writeFileSync(dataPath, lines.join("\n") + "\n");

    const args = ["--data", dataPath, "--report", reportPath];
    if (options.threshold !== undefined) {
      args.push("--threshold", String(options.threshold));
    }
    await runOrThrow("metrics", args, { timeoutMs: options.timeoutMs });

    const results = readReport(reportPath).results;
    return {
      n: results.n as number,
      positives: results.positives as number,
      negatives: results.negatives as number,
      auc: results.auc as number,
      averagePrecision: results.average_precision as number,
      bestThreshold: thresholdRecord(results.best_threshold),
      givenThreshold:
        results.given_threshold === null
          ? null
          : thresholdRecord(results.given_threshold),
    };
  });
}

/**
 * Marshalling self-test: push an array through the frame codec and back.
 * The copy is bit-identical to the input, including NaN payloads and
 * signed zeros. Arrays must have rank 1 to 4 and no empty extent.
 */
export function arrayRoundtrip(array: NdArray): NdArray {
  const shape = array.shape;
  if (shape.length < 1 || shape.length > 4 || elementCount(shape) === 0) {
    throw new Error(`unsupported shape (${shape.join(" x ") || "scalar"})`);
  }
  const decoded = decodeFrame(encodeFrame(ndarray(shape, array.data))).array;
  return decoded;
}
