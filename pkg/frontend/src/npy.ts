/**
 * Array frame codec, wire-compatible with the files and stdio frames the
 * xaikit CLI produces and consumes.
 *
 * A frame is `\x93NUMPY`, a version pair, a little-endian header length
 * (2 bytes at version 1.0, 4 at 2.0), a Python dict-literal header padded
 * so the block through its trailing newline ends on a 64-byte boundary,
 * then the raw row-major payload. The writer always emits version 1.0
 * with 8-byte little-endian floats; the reader additionally accepts
 * 4-byte floats (widened on read) and version 2.0 headers.
 */

import { readFileSync, writeFileSync } from "node:fs";

import type { NdArray } from "./nd.js";
import { elementCount, ndarray } from "./nd.js";

const MAGIC = Buffer.from("\x93NUMPY", "latin1");
const LITTLE_ENDIAN =
  new Uint8Array(new Uint16Array([0x0102]).buffer)[0] === 0x02;

export class FormatError extends Error {}

export function encodeFrame(array: NdArray): Buffer {
  const shape = array.shape;
  const shapeRepr =
    shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(", ")})`;
  const body = `{'descr': '<f8', 'fortran_order': False, 'shape': ${shapeRepr}, }`;
  // pad so magic through the trailing newline fills whole 64-byte blocks
  const base = MAGIC.length + 2 + 2;
  const padded = Math.ceil((base + body.length + 1) / 64) * 64 - base;
  const header = body + " ".repeat(padded - body.length - 1) + "\n";

  const payload = Buffer.from(
    array.data.buffer.slice(
      array.data.byteOffset,
      array.data.byteOffset + array.data.byteLength,
    ),
  );
  if (!LITTLE_ENDIAN) payload.swap64();

  const frame = Buffer.alloc(base + header.length + payload.length);
  MAGIC.copy(frame, 0);
  frame[6] = 1;
  frame[7] = 0;
  frame.writeUInt16LE(header.length, 8);
  frame.write(header, 10, "latin1");
  payload.copy(frame, base + header.length);
  return frame;
}

function headerField(text: string, pattern: RegExp, what: string): string {
  const match = pattern.exec(text);
  if (match === null) throw new FormatError(`malformed header: missing ${what}`);
  return match[1];
}

function parseHeader(text: string): { shape: number[]; itemSize: number } {
  const descr = headerField(text, /'descr'\s*:\s*'([^']*)'/, "'descr'");
  if (descr !== "<f8" && descr !== "<f4") {
    throw new FormatError(`unsupported element type '${descr}' (need <f8 or <f4)`);
  }
  const order = headerField(
    text,
    /'fortran_order'\s*:\s*(True|False)/,
    "'fortran_order'",
  );
  if (order !== "False") {
    throw new FormatError("unsupported layout: fortran_order must be False");
  }
  const inner = headerField(text, /'shape'\s*:\s*\(([^)]*)\)/, "'shape'");
  const shape: number[] = [];
  for (const piece of inner.split(",")) {
    const item = piece.trim();
    if (item === "") continue;
    if (!/^\d+$/.test(item)) throw new FormatError("malformed header: bad shape");
    shape.push(Number(item));
  }
  return { shape, itemSize: descr === "<f8" ? 8 : 4 };
}

function widenPayload(raw: Buffer, count: number, itemSize: number): Float64Array {
  // copy out of the stream buffer, both for alignment and for ownership
  const copy = Buffer.from(raw);
  if (itemSize === 8) {
    if (!LITTLE_ENDIAN) copy.swap64();
    return new Float64Array(copy.buffer, copy.byteOffset, count);
  }
  if (!LITTLE_ENDIAN) copy.swap32();
  const narrow = new Float32Array(copy.buffer, copy.byteOffset, count);
  return Float64Array.from(narrow);
}

interface DecodedFrame {
  array: NdArray;
  bytesRead: number;
}

/**
 * Decode one frame starting at `offset`, or return null when the buffer
 * holds only a prefix of it. Structural problems always throw.
 */
export function tryDecodeFrame(buf: Buffer, offset = 0): DecodedFrame | null {
  const avail = buf.length - offset;
  if (avail < MAGIC.length) {
    if (buf.compare(MAGIC, 0, avail, offset, offset + avail) !== 0) {
      throw new FormatError("bad magic: not an array file");
    }
    return null;
  }
  if (buf.compare(MAGIC, 0, MAGIC.length, offset, offset + MAGIC.length) !== 0) {
    throw new FormatError("bad magic: not an array file");
  }
  if (avail < 8) return null;
  const major = buf[offset + 6];
  const minor = buf[offset + 7];
  let headerLen: number;
  let headerStart: number;
  if (major === 1 && minor === 0) {
    if (avail < 10) return null;
    headerLen = buf.readUInt16LE(offset + 8);
    headerStart = offset + 10;
  } else if (major === 2 && minor === 0) {
    if (avail < 12) return null;
    headerLen = buf.readUInt32LE(offset + 8);
    headerStart = offset + 12;
  } else {
    throw new FormatError(`unsupported format version ${major}.${minor}`);
  }
  if (buf.length < headerStart + headerLen) return null;
  const headerText = buf.toString("latin1", headerStart, headerStart + headerLen);
  const { shape, itemSize } = parseHeader(headerText);
  const count = elementCount(shape);
  const payloadStart = headerStart + headerLen;
  if (buf.length < payloadStart + count * itemSize) return null;
  const raw = buf.subarray(payloadStart, payloadStart + count * itemSize);
  return {
    array: ndarray(shape, widenPayload(raw, count, itemSize)),
    bytesRead: payloadStart + count * itemSize - offset,
  };
}

/** Decode one complete frame; a truncated buffer is an error here. */
export function decodeFrame(buf: Buffer, offset = 0): DecodedFrame {
  const decoded = tryDecodeFrame(buf, offset);
  if (decoded === null) {
    throw new FormatError(
      `unexpected end of stream (${buf.length - offset} bytes buffered)`,
    );
  }
  return decoded;
}

/** Incremental decoder for a stream of concatenated frames. */
export class FrameDecoder {
  private pending: Buffer = Buffer.alloc(0);

  /** Absorb a chunk and return every frame completed by it. */
  push(chunk: Buffer): NdArray[] {
    this.pending =
      this.pending.length === 0 ? chunk : Buffer.concat([this.pending, chunk]);
    const frames: NdArray[] = [];
    let offset = 0;
    for (;;) {
      if (offset === this.pending.length) break;
      const decoded = tryDecodeFrame(this.pending, offset);
      if (decoded === null) break;
      frames.push(decoded.array);
      offset += decoded.bytesRead;
    }
    this.pending = this.pending.subarray(offset);
    return frames;
  }

  /** Bytes sitting in the buffer that do not yet form a frame. */
  get buffered(): number {
    return this.pending.length;
  }
}

export function readArrayFile(path: string): NdArray {
  return decodeFrame(readFileSync(path)).array;
}

export function writeArrayFile(path: string, array: NdArray): void {
  writeFileSync(path, encodeFrame(array));
}
