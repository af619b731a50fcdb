"""Black-box predictor channels.

A predictor maps a batch of images (B x H x W x C float64) to B x C score
rows. Three carriers implement that contract:

* CallbackPredictor wraps an in-process callable with the serial-invocation
  guard, a declared batch limit, and output validation.
* SubprocessPredictor speaks array frames over a child's stdin/stdout: one
  child per explanation run, requests strictly serial, reply deadline
  enforced.
* StdioPredictor inverts the channel: batches go out on THIS process's
  stdout and replies come back on its stdin, so a parent process can serve
  predictions (the CLI's `--predictor-cmd -` mode).
"""

from __future__ import annotations

import shlex
import subprocess
import sys
import threading

import numpy as np

from .arrayio import FormatError, read_array, write_array

__all__ = [
    "PredictorError",
    "validate_predictions",
    "CallbackPredictor",
    "SubprocessPredictor",
    "StdioPredictor",
]


class PredictorError(RuntimeError):
    """A predictor channel failed: launch, protocol, shape, or timeout."""


def validate_predictions(rows, batch_size: int) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise PredictorError(f"predictor output is not numeric: {exc}") from None
    if arr.ndim != 2:
        raise PredictorError(
            f"shape mismatch from predictor: expected a rank-2 batch of score "
            f"rows, got rank {arr.ndim}"
        )
    if arr.shape[0] != batch_size:
        raise PredictorError(
            f"shape mismatch from predictor: expected {batch_size} rows, "
            f"got {arr.shape[0]}"
        )
    if arr.shape[1] < 1:
        raise PredictorError("shape mismatch from predictor: zero score columns")
    if not np.all(np.isfinite(arr)):
        raise PredictorError("predictor returned non-finite values")
    return np.ascontiguousarray(arr)


def _check_batch(batch) -> np.ndarray:
    arr = np.ascontiguousarray(batch, dtype=np.float64)
    if arr.ndim != 4 or arr.shape[0] < 1:
        raise ValueError("predictor batch must be a non-empty B x H x W x C array")
    return arr


class CallbackPredictor:
    """In-process predictor with a serial-invocation contract.

    The callable is never invoked concurrently, every output is validated
    for shape and finiteness, and ``calls`` counts invocations.
    """

    def __init__(self, fn, batch_limit: int = 32):
        if batch_limit < 1:
            raise ValueError("batch_limit must be positive")
        self._fn = fn
        self.batch_limit = int(batch_limit)
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, batch) -> np.ndarray:
        arr = _check_batch(batch)
        if arr.shape[0] > self.batch_limit:
            raise PredictorError(
                f"batch of {arr.shape[0]} exceeds the declared limit "
                f"{self.batch_limit}"
            )
        if not self._lock.acquire(blocking=False):
            raise PredictorError("callback invoked concurrently")
        try:
            try:
                rows = self._fn(arr)
            except PredictorError:
                raise
            except Exception as exc:
                raise PredictorError(f"callback raised {type(exc).__name__}: {exc}") from exc
        finally:
            self._lock.release()
        self.calls += 1
        return validate_predictions(rows, arr.shape[0])


class SubprocessPredictor:
    """Child-process predictor: one frame out, one frame back, per batch.

    The child is launched on first use and kept for the whole explanation
    run. Replies must arrive within ``timeout`` seconds or the child is
    killed and the batch reported as failed.
    """

    def __init__(self, command, timeout: float = 120.0):
        if isinstance(command, str):
            command = shlex.split(command)
        if not command:
            raise ValueError("empty predictor command")
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        self._command = [str(part) for part in command]
        self._timeout = float(timeout)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()
        self.calls = 0

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        for stream in (proc.stdin, proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def _ensure_child(self) -> subprocess.Popen:
        if self._proc is None:
            try:
                self._proc = subprocess.Popen(
                    self._command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            except OSError as exc:
                raise PredictorError(
                    f"cannot launch predictor {self._command[0]!r}: {exc}"
                ) from None
        return self._proc

    def _exit_context(self, proc: subprocess.Popen) -> str:
        code = proc.poll()
        if code is None:
            return ""
        return f" (predictor exited with code {code})"

    def __call__(self, batch) -> np.ndarray:
        arr = _check_batch(batch)
        if not self._lock.acquire(blocking=False):
            raise PredictorError("subprocess predictor invoked concurrently")
        try:
            proc = self._ensure_child()
            if proc.poll() is not None:
                raise PredictorError(
                    f"predictor exited with code {proc.returncode} before the batch"
                )
            try:
                write_array(proc.stdin, arr)
            except (BrokenPipeError, OSError) as exc:
                proc.wait()
                raise PredictorError(
                    f"could not send batch: {exc}{self._exit_context(proc)}"
                ) from None

            box: dict = {}

            def _reader():
                try:
                    box["rows"] = read_array(proc.stdout)
                except Exception as exc:  # surfaced below with context
                    box["error"] = exc

            thread = threading.Thread(target=_reader, daemon=True)
            thread.start()
            thread.join(self._timeout)
            if thread.is_alive():
                proc.kill()
                thread.join(1.0)
                raise PredictorError(
                    f"predictor timed out after {self._timeout:g}s"
                )
            if "error" in box:
                exc = box["error"]
                if isinstance(exc, FormatError):
                    # EOF usually means the child died; give it a moment to
                    # be reapable so the exit code makes it into the message
                    try:
                        proc.wait(timeout=1.0)
                    except subprocess.TimeoutExpired:
                        pass
                    raise PredictorError(
                        f"malformed reply: {exc}{self._exit_context(proc)}"
                    ) from None
                raise PredictorError(f"reading reply failed: {exc}") from exc
            rows = box["rows"]
        finally:
            self._lock.release()
        self.calls += 1
        return validate_predictions(rows, arr.shape[0])


class StdioPredictor:
    """Predictor served by the parent process over our own stdio."""

    def __init__(self, outstream=None, instream=None):
        self._out = outstream if outstream is not None else sys.stdout.buffer
        self._in = instream if instream is not None else sys.stdin.buffer
        self._lock = threading.Lock()
        self.calls = 0

    def __call__(self, batch) -> np.ndarray:
        arr = _check_batch(batch)
        if not self._lock.acquire(blocking=False):
            raise PredictorError("stdio predictor invoked concurrently")
        try:
            try:
                write_array(self._out, arr)
                rows = read_array(self._in)
            except FormatError as exc:
                raise PredictorError(f"malformed reply on stdin: {exc}") from None
            except OSError as exc:
                raise PredictorError(f"stdio channel failed: {exc}") from None
        finally:
            self._lock.release()
        self.calls += 1
        return validate_predictions(rows, arr.shape[0])
