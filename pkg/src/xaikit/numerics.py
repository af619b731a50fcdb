"""Shared numeric kernels: tensor validation, stable nonlinearities,
pooling, sub-pixel rearrangement, weighted least squares, PCA, and the
portable 64-bit bit stream used wherever reproducible coin flips are needed.

Everything operates on float64 C-order numpy arrays and is deterministic
for fixed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "as_tensor",
    "sigmoid",
    "logit",
    "softmax",
    "global_average_pool",
    "pixel_shuffle",
    "pixel_unshuffle",
    "weighted_least_squares",
    "PcaModel",
    "pca_fit_project",
    "splitmix64",
    "unit_floats",
]


def as_tensor(values, rank: int | None = None, name: str = "tensor") -> np.ndarray:
    """Coerce to a validated float64 C-order array.

    Rejects empty extents and non-finite entries so downstream kernels can
    assume clean data. ``rank``, when given, pins the required dimensionality.
    """
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if rank is not None and arr.ndim != rank:
        raise ValueError(f"{name}: expected rank {rank}, got rank {arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name}: empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: non-finite values")
    return arr


def sigmoid(x):
    """Numerically stable logistic function, elementwise.

    Uses the sign-split form so neither branch exponentiates a large
    positive argument; exact at x=0 and monotone over [-40, 40] down to
    float spacing.
    """
    arr = np.asarray(x, dtype=np.float64)
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ex = np.exp(flat[~pos])
    out[~pos] = ex / (1.0 + ex)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def logit(p):
    """Inverse of :func:`sigmoid`; input must lie strictly inside (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("logit: input outside the open interval (0, 1)")
    out = np.log(p) - np.log1p(-p)
    if out.ndim == 0:
        return float(out)
    return out


def softmax(v) -> np.ndarray:
    """Max-subtracted softmax of a 1-D vector."""
    v = as_tensor(v, rank=1, name="softmax input")
    shifted = v - v.max()
    e = np.exp(shifted)
    return e / e.sum()


def global_average_pool(stack) -> np.ndarray:
    """Spatially average an H x W x K feature stack down to a K-vector."""
    f = as_tensor(stack, rank=3, name="feature stack")
    return f.mean(axis=(0, 1))


def pixel_shuffle(tensor, factor: int) -> np.ndarray:
    """Rearrange H x W x (C*r^2) into (H*r) x (W*r) x C.

    Channel index decomposes as c*r^2 + a*r + b with (a, b) the sub-pixel
    offsets: out[r*i + a, r*j + b, c] = in[i, j, c*r^2 + a*r + b].
    """
    t = as_tensor(tensor, rank=3, name="pixel_shuffle input")
    r = int(factor)
    if r < 1:
        raise ValueError("pixel_shuffle: factor must be a positive integer")
    h, w, ch = t.shape
    if ch % (r * r) != 0:
        raise ValueError(
            f"pixel_shuffle: channel count {ch} not divisible by factor^2 = {r * r}"
        )
    c = ch // (r * r)
    out = t.reshape(h, w, c, r, r).transpose(0, 3, 1, 4, 2)
    return np.ascontiguousarray(out.reshape(h * r, w * r, c))


def pixel_unshuffle(tensor, factor: int) -> np.ndarray:
    """Exact inverse of :func:`pixel_shuffle` for the same factor."""
    t = as_tensor(tensor, rank=3, name="pixel_unshuffle input")
    r = int(factor)
    if r < 1:
        raise ValueError("pixel_unshuffle: factor must be a positive integer")
    hr, wr, c = t.shape
    if hr % r != 0 or wr % r != 0:
        raise ValueError("pixel_unshuffle: spatial extents not divisible by factor")
    h, w = hr // r, wr // r
    out = t.reshape(h, r, w, r, c).transpose(0, 2, 4, 1, 3)
    return np.ascontiguousarray(out.reshape(h, w, c * r * r))


def weighted_least_squares(
    design,
    target,
    weights,
    ridge: float = 0.0,
    fit_intercept: bool = True,
) -> tuple[np.ndarray, float]:
    """Solve argmin_b sum_i w_i (y_i - x_i . b)^2 + ridge * |b[:-int]|^2.

    The intercept column, when fitted, is never penalized. The normal
    equations are factorized with Cholesky (symmetric positive definite
    path). A singular system with ridge=0 falls back to the minimum-norm
    solution and is accepted only when it reproduces the targets, i.e. the
    system is consistent; otherwise the fit is rank deficient and refused.

    Returns (coefficients, intercept); intercept is 0.0 when not fitted.
    """
    x = as_tensor(design, rank=2, name="design matrix")
    y = as_tensor(target, rank=1, name="target")
    w = as_tensor(weights, rank=1, name="weights")
    n, m = x.shape
    if y.shape[0] != n or w.shape[0] != n:
        raise ValueError("weighted_least_squares: row counts disagree")
    if np.any(w < 0.0):
        raise ValueError("weighted_least_squares: negative weight")
    if not np.any(w > 0.0):
        raise ValueError("weighted_least_squares: all weights are zero")
    if ridge < 0.0:
        raise ValueError("weighted_least_squares: negative ridge")

    if fit_intercept:
        x = np.hstack([x, np.ones((n, 1))])
    p = x.shape[1]

    xtw = x.T * w
    a = xtw @ x
    if ridge > 0.0:
        # the intercept (last column when fitted) stays unpenalized
        pen = np.full(p, ridge)
        if fit_intercept:
            pen[-1] = 0.0
        a = a + np.diag(pen)
    rhs = xtw @ y

    try:
        chol = np.linalg.cholesky(a)
        z = np.linalg.solve(chol, rhs)
        beta = np.linalg.solve(chol.T, z)
    except np.linalg.LinAlgError:
        if ridge > 0.0:
            raise ValueError("weighted_least_squares: rank deficient") from None
        beta, *_ = np.linalg.lstsq(a, rhs, rcond=None)
        resid = x @ beta - y
        wres = float(resid @ (w * resid))
        scale = max(1.0, float(y @ (w * y)))
        if wres > 1e-18 * scale:
            raise ValueError("weighted_least_squares: rank deficient") from None

    if fit_intercept:
        return beta[:-1].copy(), float(beta[-1])
    return beta, 0.0


@dataclass(frozen=True)
class PcaModel:
    """Principal axes of a centered sample matrix.

    ``components`` holds one unit-norm axis per row, ordered by explained
    variance (non-increasing); each row's largest-magnitude entry is made
    nonnegative so the decomposition has a single canonical sign.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def project(self, points) -> np.ndarray:
        x = as_tensor(points, rank=2, name="points")
        if x.shape[1] != self.mean.shape[0]:
            raise ValueError("PcaModel.project: feature count mismatch")
        return (x - self.mean) @ self.components.T

    def reconstruct(self, coords) -> np.ndarray:
        y = as_tensor(coords, rank=2, name="coords")
        if y.shape[1] != self.components.shape[0]:
            raise ValueError("PcaModel.reconstruct: component count mismatch")
        return self.mean + y @ self.components


def pca_fit_project(points, n_components: int) -> tuple[PcaModel, np.ndarray]:
    """Fit PCA by SVD of the centered matrix and project the input.

    Explained variance is s^2/(N-1) for singular values s. Requires
    1 <= n_components <= min(N, D) and N >= 2.
    """
    x = as_tensor(points, rank=2, name="points")
    n, d = x.shape
    if n < 2:
        raise ValueError("pca_fit_project: need at least two points")
    k = int(n_components)
    if k < 1 or k > min(n, d):
        raise ValueError(
            f"pca_fit_project: n_components {k} outside [1, {min(n, d)}]"
        )
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k].copy()
    variance = (s[:k] ** 2) / (n - 1)

    # canonical sign: the largest-magnitude entry of each axis is nonnegative
    for row in range(k):
        pivot = int(np.argmax(np.abs(components[row])))
        if components[row, pivot] < 0.0:
            components[row] = -components[row]

    model = PcaModel(mean=mean, components=components, explained_variance=variance)
    return model, model.project(x)


# splitmix64: counter-based, so the whole stream vectorizes; the mixing
# constants are the standard ones and the output is platform independent.
_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of the splitmix64 stream for ``seed``.

    Step t (1-based) mixes ``seed + t * gamma`` mod 2^64. Returns uint64.
    """
    if count < 0:
        raise ValueError("splitmix64: negative count")
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _SM64_GAMMA
    z = (z ^ (z >> np.uint64(30))) * _SM64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _SM64_MIX2
    return z ^ (z >> np.uint64(31))


def unit_floats(seed: int, count: int) -> np.ndarray:
    """Floats in [0, 1) built from the top 53 bits of the splitmix64 stream."""
    bits = splitmix64(seed, count) >> np.uint64(11)
    return bits.astype(np.float64) * 2.0**-53
