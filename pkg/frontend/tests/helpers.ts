import type { NdArray } from "../src/index.js";
import { elementCount, ndarray } from "../src/index.js";

/** Deterministic uniform [0, 1) generator so fixtures never drift. */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x9e3779b9) >>> 0;
    let z = state;
    z = Math.imul(z ^ (z >>> 16), 0x21f0aaad);
    z = Math.imul(z ^ (z >>> 15), 0x735a2d97);
    z ^= z >>> 15;
    return (z >>> 0) / 4294967296;
  };
}

export function randomArray(
  shape: number[],
  seed: number,
  low = -1,
  high = 1,
): NdArray {
  const rng = seededRng(seed);
  const data = new Float64Array(elementCount(shape));
  for (let i = 0; i < data.length; i++) data[i] = low + (high - low) * rng();
  return ndarray(shape, data);
}

/** All-ones image of shape 1 x width x 1: one superpixel per column. */
export function onesRowImage(width: number): NdArray {
  return ndarray([1, width, 1], new Float64Array(width).fill(1));
}

export const PYTHON = process.env.PYTHON ?? "python3";

export function sigmoid(x: number): number {
  return 1 / (1 + Math.exp(-x));
}

export function logit(p: number): number {
  return Math.log(p / (1 - p));
}

/** Product-form evidence combination over per-section probabilities. */
export function noisyOr(probs: number[]): number {
  let odds = 1;
  for (const p of probs) odds *= (1 - p) / p;
  return 1 / (1 + odds);
}
