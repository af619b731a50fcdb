"""Explainable diagnosis maps: per-class scores from pooled features, the
matching spatial activation maps, heatmap normalization, and lesion
bounding boxes from thresholded heatmaps.

The defining identity: the spatial mean of a class's activation map equals
that class's score, because pooling and the linear head commute.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .numerics import as_tensor, global_average_pool

__all__ = [
    "SaliencyMap",
    "BoundingBox",
    "class_scores",
    "activation_map",
    "normalize_map",
    "extract_boxes",
]


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray  # H' x W'
    class_index: int


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Inclusive pixel-index box."""

    row_min: int
    col_min: int
    row_max: int
    col_max: int

    def __post_init__(self):
        if self.row_min > self.row_max or self.col_min > self.col_max:
            raise ValueError("BoundingBox: empty extent")


def _check_head(features: np.ndarray, weights) -> np.ndarray:
    w = as_tensor(weights, rank=2, name="classifier head")
    if w.shape[0] != features.shape[2]:
        raise ValueError(
            f"classifier head has {w.shape[0]} feature rows, "
            f"stack has {features.shape[2]} maps"
        )
    return w


def class_scores(features, weights) -> np.ndarray:
    """Class scores s_c = sum_k W[k,c] * spatial_mean(F[:,:,k])."""
    f = as_tensor(features, rank=3, name="feature stack")
    w = _check_head(f, weights)
    return global_average_pool(f) @ w


def activation_map(features, weights, class_index: int) -> SaliencyMap:
    """Spatial activation map A[i,j] = sum_k W[k,c] * F[i,j,k].

    mean(A) equals class_scores(...)[c]: the map is the score's spatial
    decomposition.
    """
    f = as_tensor(features, rank=3, name="feature stack")
    w = _check_head(f, weights)
    c = int(class_index)
    if not 0 <= c < w.shape[1]:
        raise ValueError(f"class index {c} out of range [0, {w.shape[1]})")
    return SaliencyMap(values=f @ w[:, c], class_index=c)


def normalize_map(saliency) -> np.ndarray:
    """Min-max scale a map into [0,1]; constant maps become all zeros."""
    values = saliency.values if isinstance(saliency, SaliencyMap) else saliency
    a = as_tensor(values, rank=2, name="saliency map")
    lo, hi = a.min(), a.max()
    if hi == lo:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def extract_boxes(heatmap, threshold: float = 0.6) -> list[BoundingBox]:
    """Tight boxes around 4-connected components of {value >= threshold}.

    Boxes are ordered by descending component pixel count, ties by
    (row_min, col_min). Threshold 0.6 of the normalized range by default.
    """
    h = as_tensor(heatmap, rank=2, name="heatmap")
    t = float(threshold)
    if not 0.0 < t < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    mask = h >= t
    rows, cols = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    found: list[tuple[int, BoundingBox]] = []

    for r0 in range(rows):
        for c0 in range(cols):
            if not mask[r0, c0] or seen[r0, c0]:
                continue
            # breadth-first flood fill over the 4-neighborhood
            queue = deque([(r0, c0)])
            seen[r0, c0] = True
            rmin = rmax = r0
            cmin = cmax = c0
            count = 0
            while queue:
                r, c = queue.popleft()
                count += 1
                rmin, rmax = min(rmin, r), max(rmax, r)
                cmin, cmax = min(cmin, c), max(cmax, c)
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= rr < rows and 0 <= cc < cols:
                        if mask[rr, cc] and not seen[rr, cc]:
                            seen[rr, cc] = True
                            queue.append((rr, cc))
            found.append((count, BoundingBox(rmin, cmin, rmax, cmax)))

    found.sort(key=lambda item: (-item[0], item[1].row_min, item[1].col_min))
    return [box for _, box in found]
