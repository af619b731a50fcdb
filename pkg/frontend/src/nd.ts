/**
 * Minimal dense array container shared by the codec and the wrappers.
 *
 * Data is always float64 in row-major (C) order; shape is a plain list of
 * nonnegative extents. Nothing here owns semantics beyond layout.
 */

export interface NdArray {
  readonly shape: readonly number[];
  /** Row-major elements, length equal to the product of the extents. */
  readonly data: Float64Array;
}

export function elementCount(shape: readonly number[]): number {
  let count = 1;
  for (const extent of shape) count *= extent;
  return count;
}

function checkShape(shape: readonly number[]): void {
  for (const extent of shape) {
    if (!Number.isInteger(extent) || extent < 0) {
      throw new Error(`bad shape: extents must be nonnegative integers, got ${extent}`);
    }
  }
}

/** Wrap existing data, or allocate zeros when no data is given. */
export function ndarray(shape: readonly number[], data?: Float64Array): NdArray {
  checkShape(shape);
  const count = elementCount(shape);
  if (data === undefined) return { shape: [...shape], data: new Float64Array(count) };
  if (data.length !== count) {
    throw new Error(`bad shape: ${count} elements expected, data holds ${data.length}`);
  }
  return { shape: [...shape], data };
}

/** Rank-2 convenience: build an NdArray from nested rows. */
export function fromRows(rows: readonly (readonly number[])[]): NdArray {
  const height = rows.length;
  const width = height > 0 ? rows[0].length : 0;
  const data = new Float64Array(height * width);
  for (let i = 0; i < height; i++) {
    if (rows[i].length !== width) throw new Error("bad shape: ragged rows");
    data.set(rows[i], i * width);
  }
  return { shape: [height, width], data };
}

/** Rank-1 convenience. */
export function fromVector(values: readonly number[]): NdArray {
  return { shape: [values.length], data: Float64Array.from(values) };
}

export function bytesOf(array: NdArray): Buffer {
  return Buffer.from(array.data.buffer, array.data.byteOffset, array.data.byteLength);
}

/** Bitwise equality, so NaN payloads and signed zeros are distinguished. */
export function bitIdentical(a: NdArray, b: NdArray): boolean {
  if (a.shape.length !== b.shape.length) return false;
  for (let i = 0; i < a.shape.length; i++) {
    if (a.shape[i] !== b.shape[i]) return false;
  }
  return bytesOf(a).equals(bytesOf(b));
}
