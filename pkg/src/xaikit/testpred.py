"""Built-in test predictors speaking the stdin/stdout array protocol.

Run as ``python -m xaikit.testpred --mode <mode>``. Each mode reads batch
frames (B x H x W x C) from stdin and replies with a B x 2 score frame on
stdout, which makes explainer runs fully reproducible without a real
model:

* constant:  both columns fixed at --value (default 0.5).
* mean:      column 1 is the clipped mean pixel value, column 0 its complement.
* pixel0:    column 1 is pixel [0, 0, 0] clipped into [0, 1] - with unit
             pixel values and single-pixel superpixels this makes class 1
             exactly the first mask coordinate.
* echo:      columns are the first two values of each image, bit-identical
             (requires H*W*C >= 2); exercises round-trip exactness.
* badshape:  replies with one row too many (protocol-violation fixture).
* fail:      exits with code 3 without replying (error-path fixture).
* slow:      sleeps --delay seconds before each reply (timeout fixture).
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .arrayio import FormatError, read_array, write_array

MODES = ("constant", "mean", "pixel0", "echo", "badshape", "fail", "slow")


def _rows(mode: str, batch: np.ndarray, value: float) -> np.ndarray:
    b = batch.shape[0]
    if mode == "constant":
        return np.full((b, 2), value)
    if mode == "mean":
        m = np.clip(batch.reshape(b, -1).mean(axis=1), 0.0, 1.0)
        return np.stack([1.0 - m, m], axis=1)
    if mode == "pixel0":
        p = np.clip(batch[:, 0, 0, 0], 0.0, 1.0)
        return np.stack([1.0 - p, p], axis=1)
    if mode == "echo":
        flat = batch.reshape(b, -1)
        if flat.shape[1] < 2:
            raise SystemExit("echo mode needs at least two values per image")
        return flat[:, :2]
    if mode == "badshape":
        return np.zeros((b + 1, 2))
    raise SystemExit(f"unhandled mode {mode}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="xaikit.testpred", description=__doc__)
    parser.add_argument("--mode", choices=MODES, required=True)
    parser.add_argument("--value", type=float, default=0.5)
    parser.add_argument("--delay", type=float, default=5.0)
    args = parser.parse_args(argv)

    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        try:
            batch = read_array(stdin, eof_ok=True)
        except FormatError as exc:
            print(f"testpred: {exc}", file=sys.stderr)
            return 1
        if batch is None:
            return 0  # clean shutdown: parent closed the pipe
        if batch.ndim != 4:
            print(f"testpred: expected rank-4 batches, got rank {batch.ndim}", file=sys.stderr)
            return 1
        if args.mode == "fail":
            return 3
        if args.mode == "slow":
            time.sleep(args.delay)
        write_array(stdout, _rows(args.mode, batch, args.value))
    return 0


if __name__ == "__main__":
    sys.exit(main())
