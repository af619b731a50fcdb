"""File and stream formats: npy arrays, P5/P6 rasters, CSV tables, and
canonical JSON reports.

The array reader/writer is hand-rolled rather than delegated to numpy's
file helpers because the subprocess predictor protocol needs exact-byte
framing on pipes: each frame must be read with no lookahead or buffering
past its end. Writers always emit version 1.0 headers with little-endian
8-byte floats; readers also accept 4-byte floats (widened on read) and
version 2.0 headers.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import struct
from typing import BinaryIO

import numpy as np

__all__ = [
    "FormatError",
    "read_array",
    "write_array",
    "read_array_file",
    "write_array_file",
    "write_pgm",
    "write_ppm",
    "color_table",
    "read_table",
    "write_table",
    "canonical_json",
    "write_report",
    "dumps_frame",
    "loads_frame",
]

_MAGIC = b"\x93NUMPY"


class FormatError(ValueError):
    """Malformed or unsupported serialized content."""


def _read_exact(stream: BinaryIO, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining > 0:
        piece = stream.read(remaining)
        if not piece:
            raise FormatError(
                f"unexpected end of stream ({count - remaining} of {count} bytes)"
            )
        chunks.append(piece)
        remaining -= len(piece)
    return b"".join(chunks)


def read_array(stream: BinaryIO, eof_ok: bool = False):
    """Read one array frame from a binary stream, consuming exactly its bytes.

    With eof_ok=True, a stream that is already exhausted (no bytes before
    the frame) returns None instead of raising; EOF inside a frame is
    always an error.
    """
    head = stream.read(1)
    if head == b"":
        if eof_ok:
            return None
        raise FormatError("unexpected end of stream (no frame)")
    magic = head + _read_exact(stream, 5)
    if magic != _MAGIC:
        raise FormatError("bad magic: not an array file")
    major, minor = _read_exact(stream, 2)
    if (major, minor) == (1, 0):
        (header_len,) = struct.unpack("<H", _read_exact(stream, 2))
    elif (major, minor) == (2, 0):
        (header_len,) = struct.unpack("<I", _read_exact(stream, 4))
    else:
        raise FormatError(f"unsupported format version {major}.{minor}")
    header_text = _read_exact(stream, header_len).decode("latin1")
    try:
        header = ast.literal_eval(header_text)
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"malformed header: {exc}") from None
    if not isinstance(header, dict):
        raise FormatError("malformed header: not a dict literal")

    descr = header.get("descr")
    if descr not in ("<f8", "<f4"):
        raise FormatError(f"unsupported element type {descr!r} (need <f8 or <f4)")
    if header.get("fortran_order") is not False:
        raise FormatError("unsupported layout: fortran_order must be False")
    shape = header.get("shape")
    if not isinstance(shape, tuple) or not all(
        isinstance(n, int) and n >= 0 for n in shape
    ):
        raise FormatError("malformed header: bad shape")

    itemsize = 8 if descr == "<f8" else 4
    count = 1
    for n in shape:
        count *= n
    raw = _read_exact(stream, count * itemsize)
    arr = np.frombuffer(raw, dtype=np.dtype(descr)).reshape(shape)
    return np.ascontiguousarray(arr, dtype=np.float64)


def write_array(stream: BinaryIO, values) -> None:
    """Write one version-1.0 frame: little-endian 8-byte floats, row-major."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    shape = arr.shape
    shape_repr = (
        f"({shape[0]},)" if len(shape) == 1 else "(" + ", ".join(map(str, shape)) + ")"
    )
    header = (
        "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_repr + ", }"
    )
    # total header block (magic through trailing newline) padded to 64 bytes
    base = len(_MAGIC) + 2 + 2
    padded = ((base + len(header) + 1 + 63) // 64) * 64 - base
    header = header + " " * (padded - len(header) - 1) + "\n"
    stream.write(_MAGIC)
    stream.write(b"\x01\x00")
    stream.write(struct.pack("<H", len(header)))
    stream.write(header.encode("latin1"))
    stream.write(arr.tobytes())
    stream.flush()


def read_array_file(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_array(fh)


def write_array_file(path, values) -> None:
    with open(path, "wb") as fh:
        write_array(fh, values)


def _to_byte_levels(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError("raster output needs a 2-D value map")
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise FormatError("raster output needs finite, non-empty values")
    clipped = np.clip(arr, 0.0, 1.0)
    return np.round(255.0 * clipped).astype(np.uint8)


def write_pgm(path, values) -> None:
    """Binary portable graymap: 'P5\\n<w> <h>\\n255\\n' + round(255*value)."""
    levels = _to_byte_levels(values)
    height, width = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(levels.tobytes())


def color_table() -> np.ndarray:
    """256-entry blue-to-red table: level t maps to (t, 0, 255 - t)."""
    t = np.arange(256, dtype=np.uint8)
    return np.stack([t, np.zeros_like(t), 255 - t], axis=1)


def write_ppm(path, values) -> None:
    """Binary portable pixmap of the value map through the blue-to-red table."""
    levels = _to_byte_levels(values)
    height, width = levels.shape
    pixels = color_table()[levels]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV file with one header row; returns (header, rows) as strings."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"empty table: {path}") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{line_no}: expected {len(header)} columns")
            rows.append(row)
    return header, rows


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_table(path, header: list[str], rows) -> None:
    """Write CSV: one header row, UTF-8, LF line endings, shortest-round-trip floats."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if value is None or isinstance(value, str):
        return value
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


def canonical_json(payload) -> str:
    """Deterministic serialization: sorted keys, shortest round-trip floats."""
    plain = _plain(payload)
    return json.dumps(plain, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, payload) -> None:
    text = canonical_json(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def dumps_frame(values) -> bytes:
    """One array frame as bytes (stream format), for tests and bindings."""
    buf = io.BytesIO()
    write_array(buf, values)
    return buf.getvalue()


def loads_frame(data: bytes) -> np.ndarray:
    return read_array(io.BytesIO(data))
