"""Perturbation-based model-agnostic explainers.

Images are partitioned into superpixels; binary masks switch superpixels
between the original content and a baseline; a black-box predictor scores
the masked images; a weighted linear surrogate turns the mask/score pairs
into per-superpixel attributions. Two surrogates are provided: LIME
(proximity-weighted ridge regression) and Kernel SHAP (Shapley-kernel
weights with the empty/full coalitions enforced as equality constraints),
plus a brute-force exact Shapley oracle.

Mask sampling uses the splitmix64 stream so identical seeds reproduce the
identical neighborhood on every platform.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .numerics import as_tensor, splitmix64, weighted_least_squares
from .parallel import map_ordered
from .predictor import PredictorError, validate_predictions

__all__ = [
    "SuperpixelMap",
    "Explanation",
    "grid_superpixels",
    "apply_mask",
    "sample_masks",
    "shapley_kernel_weight",
    "enumerate_proper_masks",
    "fit_lime_surrogate",
    "fit_shap_surrogate",
    "lime_explain",
    "kernel_shap_explain",
    "exact_shapley",
]

BASELINE_MODES = ("mean", "zero")


@dataclass(frozen=True)
class SuperpixelMap:
    """Partition of an H x W pixel grid into M labeled regions.

    Every pixel carries exactly one label in [0, M), every label is
    non-empty, and every region is 4-connected.
    """

    labels: np.ndarray
    count: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError("SuperpixelMap: labels must be a non-empty 2-D map")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError("SuperpixelMap: labels must be integers")
        m = int(self.count)
        if m < 1:
            raise ValueError("SuperpixelMap: count must be positive")
        if labels.min() < 0 or labels.max() >= m:
            raise ValueError("SuperpixelMap: label outside [0, count)")
        hist = np.bincount(labels.ravel(), minlength=m)
        if np.any(hist == 0):
            raise ValueError("SuperpixelMap: empty label")
        _check_connected(labels, m)
        object.__setattr__(self, "labels", np.ascontiguousarray(labels, dtype=np.int64))
        object.__setattr__(self, "count", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


def _check_connected(labels: np.ndarray, m: int) -> None:
    rows, cols = labels.shape
    seen = np.zeros(labels.shape, dtype=bool)
    reached = np.zeros(m, dtype=bool)
    for r0 in range(rows):
        for c0 in range(cols):
            if seen[r0, c0]:
                continue
            label = labels[r0, c0]
            if reached[label]:
                raise ValueError(
                    f"SuperpixelMap: label {label} is not 4-connected"
                )
            reached[label] = True
            queue = deque([(r0, c0)])
            seen[r0, c0] = True
            while queue:
                r, c = queue.popleft()
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= rr < rows and 0 <= cc < cols:
                        if not seen[rr, cc] and labels[rr, cc] == label:
                            seen[rr, cc] = True
                            queue.append((rr, cc))


@dataclass(frozen=True)
class Explanation:
    """Per-superpixel attributions from one explainer run."""

    weights: np.ndarray
    intercept: float
    method: str
    class_index: int
    baseline_value: float
    full_value: float


def grid_superpixels(height: int, width: int, target_count: int) -> SuperpixelMap:
    """Tile the grid into near-square rectangles, about target_count of them.

    rows = min(ceil(sqrt(target)), H) bands and cols = min(ceil(target/rows), W)
    bands, each axis split as evenly as possible (band sizes differ by at
    most one). The realized count is rows*cols, which matches the target
    whenever the target factors that way.
    """
    h, w, t = int(height), int(width), int(target_count)
    if h < 1 or w < 1:
        raise ValueError("grid_superpixels: degenerate image extents")
    if t < 1 or t > h * w:
        raise ValueError("grid_superpixels: target count outside [1, H*W]")
    rows = min(math.isqrt(t - 1) + 1, h)
    cols = min(-(-t // rows), w)
    row_band = np.repeat(np.arange(rows), _band_sizes(h, rows))
    col_band = np.repeat(np.arange(cols), _band_sizes(w, cols))
    labels = row_band[:, None] * cols + col_band[None, :]
    return SuperpixelMap(labels=labels, count=rows * cols)


def _band_sizes(extent: int, bands: int) -> np.ndarray:
    base, extra = divmod(extent, bands)
    return np.array([base + 1] * extra + [base] * (bands - extra))


def _check_image(image) -> np.ndarray:
    return as_tensor(image, rank=3, name="image")


def _baseline_image(image: np.ndarray, spmap: SuperpixelMap, mode: str) -> np.ndarray:
    if mode == "zero":
        return np.zeros_like(image)
    if mode != "mean":
        raise ValueError(f"unknown baseline mode {mode!r}")
    base = np.empty_like(image)
    for label in range(spmap.count):
        region = spmap.labels == label
        base[region] = image[region].mean(axis=0)
    return base


def apply_mask(image, spmap: SuperpixelMap, mask, baseline_mode: str = "mean") -> np.ndarray:
    """Keep superpixels where mask=1, replace the rest with the baseline."""
    img = _check_image(image)
    if img.shape[:2] != spmap.shape:
        raise ValueError("image extents do not match the superpixel map")
    z = np.asarray(mask)
    if z.shape != (spmap.count,):
        raise ValueError(
            f"mask length {z.shape} does not match superpixel count {spmap.count}"
        )
    keep = (z != 0)[spmap.labels]
    return np.where(keep[:, :, None], img, _baseline_image(img, spmap, baseline_mode))


def sample_masks(m: int, n_samples: int, seed: int) -> np.ndarray:
    """n_samples x m Bernoulli(0.5) masks from the splitmix64 stream.

    Coordinate (sample s, position i) consumes stream output s*m + i and
    keeps the superpixel when the output's top bit is set. Identical seeds
    give identical masks on every platform.
    """
    m = int(m)
    n = int(n_samples)
    if m < 1:
        raise ValueError("sample_masks: need at least one superpixel")
    if n < 1:
        raise ValueError("sample_masks: need at least one sample")
    bits = splitmix64(seed, n * m) >> np.uint64(63)
    return bits.astype(np.uint8).reshape(n, m)


def shapley_kernel_weight(m: int, subset_size: int) -> float:
    """Kernel SHAP regression weight for a coalition of the given size.

    The empty and full coalitions have no finite weight (they enter the fit
    as equality constraints, never as regression rows): infinity is
    returned to mark them.
    """
    m = int(m)
    s = int(subset_size)
    if not 0 <= s <= m:
        raise ValueError("subset size outside [0, M]")
    if s in (0, m):
        return math.inf
    return (m - 1) / (math.comb(m, s) * s * (m - s))


def enumerate_proper_masks(m: int) -> np.ndarray:
    """All 2^m - 2 proper coalition masks, ordered by integer code 1..2^m-2.

    Bit i of the code is coordinate i (lowest bit first).
    """
    if m < 2:
        raise ValueError("proper coalitions need at least two superpixels")
    if m > 20:
        raise ValueError("oracle limit: enumeration capped at 20 superpixels")
    codes = np.arange(1, 2**m - 1, dtype=np.uint64)
    return ((codes[:, None] >> np.arange(m, dtype=np.uint64)) & 1).astype(np.uint8)


def fit_lime_surrogate(
    masks, values, kernel_width: float = 0.25, ridge: float = 1e-6
) -> tuple[np.ndarray, float]:
    """Proximity-weighted ridge fit of values against mask indicators.

    Proximity of a mask keeping |z| of M superpixels is
    exp(-(1 - sqrt(|z|/M))^2 / kernel_width^2): full-keep masks get weight
    1 and heavily ablated ones fade out.
    """
    z = np.asarray(masks, dtype=np.float64)
    y = as_tensor(values, rank=1, name="predictions")
    if z.ndim != 2 or z.shape[0] != y.shape[0]:
        raise ValueError("mask matrix and prediction vector disagree")
    if kernel_width <= 0.0:
        raise ValueError("kernel width must be positive")
    kept = z.sum(axis=1)
    proximity = np.exp(-((1.0 - np.sqrt(kept / z.shape[1])) ** 2) / kernel_width**2)
    return weighted_least_squares(z, y, proximity, ridge=ridge)


def fit_shap_surrogate(
    masks, values, baseline_value: float, full_value: float
) -> tuple[np.ndarray, float]:
    """Shapley-kernel weighted fit with both boundary coalitions exact.

    The empty coalition pins the intercept to the baseline value and the
    full coalition pins the attribution sum to full - baseline; the last
    attribution is eliminated by substitution, leaving an unconstrained
    weighted least-squares problem over the first M-1 coordinates.
    """
    z = np.asarray(masks, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("mask matrix and prediction vector disagree")
    m = z.shape[1]
    f0 = float(baseline_value)
    delta = float(full_value) - f0
    if m == 1:
        # both constraints pin the single attribution; no regression rows exist
        return np.array([delta]), f0
    y = as_tensor(values, rank=1, name="predictions")
    if z.shape[0] != y.shape[0]:
        raise ValueError("mask matrix and prediction vector disagree")
    kept = z.sum(axis=1).astype(int)
    if np.any(kept == 0) or np.any(kept == m):
        raise ValueError("boundary coalitions may not appear as regression rows")
    weights = np.array([shapley_kernel_weight(m, s) for s in kept])
    design = z[:, : m - 1] - z[:, m - 1 :]
    target = y - f0 - delta * z[:, m - 1]
    head, _ = weighted_least_squares(
        design, target, weights, ridge=0.0, fit_intercept=False
    )
    phi = np.append(head, delta - head.sum())
    return phi, f0


def _predict_values(predictor, images: list[np.ndarray], class_index: int, context: str) -> np.ndarray:
    batch = np.stack(images)
    try:
        rows = validate_predictions(predictor(batch), batch.shape[0])
    except PredictorError as exc:
        raise PredictorError(f"predictor failed on {context}: {exc}") from exc
    if not 0 <= class_index < rows.shape[1]:
        raise ValueError(
            f"class index {class_index} outside the predictor's {rows.shape[1]} columns"
        )
    return rows[:, class_index]


def _evaluate_game(
    predictor,
    image: np.ndarray,
    spmap: SuperpixelMap,
    masks: np.ndarray,
    class_index: int,
    baseline_mode: str,
    batch_size: int,
    threads: int,
) -> tuple[float, float, np.ndarray]:
    """Predictor values for (baseline, full image, every mask row).

    The baseline and full image are evaluated first as two single-image
    calls, then masks go out in batches, so a predictor sees exactly
    2 + ceil(n_masks/batch_size) invocations.
    """
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    base = _baseline_image(image, spmap, baseline_mode)
    baseline_value = float(_predict_values(predictor, [base], class_index, "the baseline image")[0])
    full_value = float(_predict_values(predictor, [image], class_index, "the full image")[0])

    def _masked(row: np.ndarray) -> np.ndarray:
        keep = (row != 0)[spmap.labels]
        return np.where(keep[:, :, None], image, base)

    values = np.empty(masks.shape[0])
    for start in range(0, masks.shape[0], batch_size):
        stop = min(start + batch_size, masks.shape[0])
        build = map_ordered(_masked, masks[start:stop], threads)
        label = f"batch {start // batch_size} (samples {start}..{stop - 1})"
        values[start:stop] = _predict_values(predictor, build, class_index, label)
    return baseline_value, full_value, values


def lime_explain(
    predictor,
    image,
    spmap: SuperpixelMap,
    class_index: int,
    n_samples: int = 2048,
    seed: int = 0,
    kernel_width: float = 0.25,
    ridge: float = 1e-6,
    baseline_mode: str = "mean",
    batch_size: int = 32,
    threads: int = 1,
) -> Explanation:
    """Local linear surrogate of the predictor around the image."""
    img = _check_image(image)
    if img.shape[:2] != spmap.shape:
        raise ValueError("image extents do not match the superpixel map")
    if n_samples < 1:
        raise ValueError("need at least one mask sample")
    masks = sample_masks(spmap.count, n_samples, seed)
    baseline_value, full_value, values = _evaluate_game(
        predictor, img, spmap, masks, class_index, baseline_mode, batch_size, threads
    )
    coef, intercept = fit_lime_surrogate(masks, values, kernel_width, ridge)
    return Explanation(
        weights=coef,
        intercept=intercept,
        method="lime",
        class_index=int(class_index),
        baseline_value=baseline_value,
        full_value=full_value,
    )


def kernel_shap_explain(
    predictor,
    image,
    spmap: SuperpixelMap,
    class_index: int,
    n_samples: int = 2048,
    seed: int = 0,
    baseline_mode: str = "mean",
    batch_size: int = 32,
    threads: int = 1,
) -> Explanation:
    """Shapley-value attributions via the kernel-weighted surrogate.

    When n_samples covers all 2^M - 2 proper coalitions they are enumerated
    exactly (and the result matches the brute-force oracle); otherwise
    masks are drawn from the seeded stream, rejecting the empty and full
    coalitions, which stay equality constraints.
    """
    img = _check_image(image)
    if img.shape[:2] != spmap.shape:
        raise ValueError("image extents do not match the superpixel map")
    if n_samples < 1:
        raise ValueError("need at least one mask sample")
    m = spmap.count

    if m == 1:
        base = _baseline_image(img, spmap, baseline_mode)
        baseline_value = float(_predict_values(predictor, [base], class_index, "the baseline image")[0])
        full_value = float(_predict_values(predictor, [img], class_index, "the full image")[0])
        return Explanation(
            weights=np.array([full_value - baseline_value]),
            intercept=baseline_value,
            method="kernel_shap",
            class_index=int(class_index),
            baseline_value=baseline_value,
            full_value=full_value,
        )

    total_proper = 2**m - 2 if m <= 20 else None
    if total_proper is not None and n_samples >= total_proper:
        masks = enumerate_proper_masks(m)
    else:
        masks = _sample_proper_masks(m, n_samples, seed)

    baseline_value, full_value, values = _evaluate_game(
        predictor, img, spmap, masks, class_index, baseline_mode, batch_size, threads
    )
    phi, intercept = fit_shap_surrogate(masks, values, baseline_value, full_value)
    return Explanation(
        weights=phi,
        intercept=intercept,
        method="kernel_shap",
        class_index=int(class_index),
        baseline_value=baseline_value,
        full_value=full_value,
    )


def _sample_proper_masks(m: int, n_samples: int, seed: int) -> np.ndarray:
    """Bernoulli(0.5) masks from the seeded stream, boundary rows rejected."""
    collected: list[np.ndarray] = []
    have = 0
    offset = 0
    while have < n_samples:
        want = max(n_samples - have, 16)
        bits = (splitmix64(seed, offset + want * m)[offset:] >> np.uint64(63))
        offset += want * m
        chunk = bits.astype(np.uint8).reshape(want, m)
        kept = chunk.sum(axis=1)
        chunk = chunk[(kept > 0) & (kept < m)]
        if chunk.shape[0]:
            collected.append(chunk)
            have += chunk.shape[0]
    return np.concatenate(collected)[:n_samples]


def exact_shapley(value_fn, m: int) -> np.ndarray:
    """Brute-force Shapley values of a coalition game over m players.

    value_fn receives a boolean mask of length m. All 2^m coalitions are
    evaluated, so m is capped at 20.
    """
    m = int(m)
    if m < 1:
        raise ValueError("need at least one player")
    if m > 20:
        raise ValueError("oracle limit: exact Shapley capped at 20 players")
    size = 2**m
    coords = np.arange(m, dtype=np.uint64)
    values = np.empty(size)
    for code in range(size):
        mask = (np.uint64(code) >> coords) & np.uint64(1)
        values[code] = float(value_fn(mask.astype(bool)))

    codes = np.arange(size, dtype=np.uint64)
    sizes = np.zeros(size, dtype=np.int64)
    for i in range(m):
        sizes += ((codes >> np.uint64(i)) & np.uint64(1)).astype(np.int64)

    fact = [math.factorial(i) for i in range(m + 1)]
    coeff = np.array(
        [fact[s] * fact[m - s - 1] / fact[m] if s < m else 0.0 for s in range(m + 1)]
    )
    phi = np.empty(m)
    for i in range(m):
        without = (codes >> np.uint64(i)) & np.uint64(1) == 0
        base_codes = codes[without]
        gain = values[base_codes | np.uint64(1 << i)] - values[base_codes]
        phi[i] = float(np.sum(coeff[sizes[base_codes]] * gain))
    return phi
