/**
 * Process bridge to the xaikit command line tool.
 *
 * The CLI is the only boundary this package crosses: inputs and outputs
 * travel as files, and a black-box predictor can be served back to the
 * child over its own stdio. When a subcommand is invoked with
 * `--predictor-cmd -`, the child writes one array frame per prediction
 * batch to stdout and blocks until the reply frame arrives on stdin;
 * this module answers those frames from an in-process callback, one at
 * a time, in arrival order.
 */

import { spawn } from "node:child_process";

import type { NdArray } from "./nd.js";
import { fromRows } from "./nd.js";
import { FrameDecoder, encodeFrame } from "./npy.js";

/** An in-process model: a batch of inputs in, one score row per input out. */
export interface CallbackPredictor {
  /** Largest batch the callback accepts; forwarded to the CLI as --batch. */
  batchLimit: number;
  predict(
    batch: NdArray,
  ): NdArray | number[][] | Promise<NdArray | number[][]>;
}

export interface CliRunResult {
  code: number;
  stderr: string;
  /** Prediction batches answered by the callback (0 without one). */
  invocations: number;
}

export interface CliRunOptions {
  predictor?: CallbackPredictor;
  /** Wall-clock guard for the whole child process run. */
  timeoutMs?: number;
}

const DEFAULT_TIMEOUT_MS = 120_000;

/**
 * Command that starts the CLI. Honors the XAIKIT_BIN environment
 * variable (a full command line, split on whitespace) and falls back to
 * the `xaikit` entry point on PATH.
 */
export function cliCommand(): string[] {
  const override = process.env.XAIKIT_BIN;
  if (override !== undefined && override.trim() !== "") {
    return override.trim().split(/\s+/);
  }
  return ["xaikit"];
}

function errorMessage(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function asReplyArray(reply: NdArray | number[][], rows: number): NdArray {
  const arr = Array.isArray(reply) ? fromRows(reply) : reply;
  if (arr.shape.length !== 2) {
    throw new Error(
      "shape mismatch from predictor: expected a rank-2 batch of row scores",
    );
  }
  if (arr.shape[0] !== rows) {
    throw new Error(`expected ${rows} rows, got ${arr.shape[0]}`);
  }
  if (arr.shape[1] < 1) {
    throw new Error("zero score columns");
  }
  for (let i = 0; i < arr.data.length; i++) {
    if (!Number.isFinite(arr.data[i])) {
      throw new Error("predictor returned non-finite values");
    }
  }
  return arr;
}

/**
 * Run one CLI subcommand to completion.
 *
 * With a predictor, every frame the child emits is answered through the
 * callback; callbacks run strictly one at a time, and a callback that
 * throws aborts the child and surfaces the original error (as `cause`)
 * tagged with the 1-based batch index. Exit codes are returned, not
 * interpreted; callers decide what nonzero means for their subcommand.
 */
export function runCli(
  args: string[],
  options: CliRunOptions = {},
): Promise<CliRunResult> {
  const command = cliCommand();
  const timeoutMs = options.timeoutMs ?? DEFAULT_TIMEOUT_MS;
  const predictor = options.predictor;

  return new Promise<CliRunResult>((resolve, reject) => {
    const child = spawn(command[0], [...command.slice(1), ...args], {
      stdio: ["pipe", "pipe", "pipe"],
    });

    let stderr = "";
    let invocations = 0;
    let failure: Error | null = null;
    let settled = false;

    const fail = (err: Error): void => {
      if (failure === null) failure = err;
      child.stdin.destroy();
      child.kill("SIGTERM");
    };

    const timer = setTimeout(() => {
      fail(new Error(`xaikit run timed out after ${timeoutMs} ms`));
    }, timeoutMs);

    // replies are tiny; ignore backpressure, but swallow EPIPE after death
    child.stdin.on("error", () => undefined);
    child.stderr.on("data", (chunk: Buffer) => {
      stderr += chunk.toString("utf8");
    });

    const decoder = new FrameDecoder();
    let queue: Promise<void> = Promise.resolve();

    const answer = async (batch: NdArray): Promise<void> => {
      if (failure !== null || predictor === undefined) return;
      invocations += 1;
      const index = invocations;
      try {
        if (batch.shape.length === 0 || batch.shape[0] > predictor.batchLimit) {
          throw new Error(
            `batch of ${batch.shape[0] ?? 0} exceeds the declared limit ${predictor.batchLimit}`,
          );
        }
        let raw: NdArray | number[][];
        try {
          raw = await predictor.predict(batch);
        } catch (err) {
          throw new Error(`callback failed on batch ${index}: ${errorMessage(err)}`, {
            cause: err,
          });
        }
        const reply = asReplyArray(raw, batch.shape[0]);
        if (!child.stdin.destroyed) child.stdin.write(encodeFrame(reply));
      } catch (err) {
        fail(err instanceof Error ? err : new Error(String(err)));
      }
    };

    child.stdout.on("data", (chunk: Buffer) => {
      if (predictor === undefined) return; // nothing should arrive; drop it
      let frames: NdArray[];
      try {
        frames = decoder.push(chunk);
      } catch (err) {
        fail(new Error(`bad frame from xaikit: ${errorMessage(err)}`));
        return;
      }
      for (const frame of frames) {
        queue = queue.then(() => answer(frame));
      }
    });

    if (predictor === undefined) child.stdin.end();

    child.on("error", (err) => {
      clearTimeout(timer);
      if (!settled) {
        settled = true;
        reject(new Error(`cannot launch ${command.join(" ")}: ${err.message}`));
      }
    });

    child.on("close", (code) => {
      void queue.then(() => {
        if (settled) return;
        settled = true;
        clearTimeout(timer);
        if (failure !== null) reject(failure);
        else resolve({ code: code ?? -1, stderr, invocations });
      });
    });
  });
}

/** Last nonempty stderr line, for compact error messages. */
export function stderrTail(stderr: string): string {
  const lines = stderr
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line !== "");
  return lines.length > 0 ? lines[lines.length - 1] : "(no diagnostics)";
}
