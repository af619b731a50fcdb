"""Segmentation training losses over per-pixel probability maps.

Two pieces: a supervised cross entropy against one-hot labels, and an
unsupervised confidence term that pushes predictions away from the uniform
distribution, measured either by KL or by Pearson chi-squared divergence.
The chi-squared gradient is linear in the probabilities (constant slope),
which is the reason that mode exists: near-zero probabilities do not blow
up the update the way the KL gradient's log term does.

Normalization conventions are part of the contract: the supervised loss
and the KL mode divide by H*W*C, the chi-squared mode by H*W with a factor
C inside. Losses are reported with these exact scalings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_tensor

__all__ = [
    "DIVERGENCES",
    "SegLossConfig",
    "supervised_loss",
    "uniform_divergence_loss",
    "combined_loss",
    "divergence_gradient",
]

DIVERGENCES = ("kl", "pearson_chi2")


@dataclass(frozen=True)
class SegLossConfig:
    beta: float = 1e-2
    divergence: str = "pearson_chi2"
    clamp_eps: float = 1e-7

    def __post_init__(self):
        if self.beta < 0.0:
            raise ValueError("SegLossConfig: beta must be nonnegative")
        if self.divergence not in DIVERGENCES:
            raise ValueError(f"SegLossConfig: divergence must be one of {DIVERGENCES}")
        if not 0.0 < self.clamp_eps < 0.5:
            raise ValueError("SegLossConfig: clamp_eps must lie in (0, 0.5)")


def _check_probmap(values, name: str = "probability map") -> np.ndarray:
    p = as_tensor(values, rank=3, name=name)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError(f"{name}: entries outside [0, 1]")
    sums = p.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError(f"{name}: channel sums deviate from 1 beyond 1e-6")
    return p


def _check_labelmap(values, shape) -> np.ndarray:
    y = as_tensor(values, rank=3, name="label map")
    if y.shape != shape:
        raise ValueError(
            f"label map shape {y.shape} does not match probability map {shape}"
        )
    if not set(np.unique(y)) <= {0.0, 1.0} or np.any(y.sum(axis=2) != 1.0):
        raise ValueError("label map must be one-hot per pixel")
    return y


def supervised_loss(probs, labels, clamp_eps: float = 1e-7) -> float:
    """Cross entropy -(1/(HWC)) * sum y*log(p) with probabilities clamped."""
    p = _check_probmap(probs)
    y = _check_labelmap(labels, p.shape)
    clamped = np.clip(p, clamp_eps, 1.0)
    return float(-(y * np.log(clamped)).sum() / p.size)


def _divergence_sum(p: np.ndarray, divergence: str, clamp_eps: float) -> float:
    h, w, c = p.shape
    if divergence == "kl":
        x = c * np.clip(p, clamp_eps, 1.0)
        return float(-(x * np.log(x)).sum() / (h * w * c))
    if divergence == "pearson_chi2":
        return float(-c * np.square(p).sum() / (h * w))
    raise ValueError(f"divergence must be one of {DIVERGENCES}")


def uniform_divergence_loss(
    probs,
    divergence: str = "pearson_chi2",
    clamp_eps: float = 1e-7,
    validate: bool = True,
) -> float:
    """Negative divergence from the per-pixel uniform distribution.

    KL mode: -(1/(HWC)) * sum (C*p) log(C*p), zero exactly at uniform maps.
    Chi-squared mode: -(C/(HW)) * sum p^2, ranging from -1 (uniform) down
    to -C (one-hot) per pixel.

    validate=False skips the simplex check; finite-difference probes sit
    slightly off the simplex and still need the raw function value.
    """
    p = _check_probmap(probs) if validate else as_tensor(probs, rank=3, name="probability map")
    return _divergence_sum(p, divergence, clamp_eps)


def combined_loss(sup_probs, labels, unsup_probs, config: SegLossConfig = SegLossConfig()) -> float:
    """Supervised cross entropy plus beta times the divergence term."""
    sup = supervised_loss(sup_probs, labels, config.clamp_eps)
    div = uniform_divergence_loss(unsup_probs, config.divergence, config.clamp_eps)
    return sup + config.beta * div


def divergence_gradient(probs, divergence: str = "pearson_chi2", clamp_eps: float = 1e-7) -> np.ndarray:
    """Per-entry partial derivatives of uniform_divergence_loss.

    Chi-squared: -2C*p/(HW), linear in p. KL: -(log(C*p) + 1)/(HW), which
    diverges as p approaches zero.
    """
    p = _check_probmap(probs)
    h, w, c = p.shape
    if divergence == "kl":
        x = c * np.clip(p, clamp_eps, 1.0)
        return -(np.log(x) + 1.0) / (h * w)
    if divergence == "pearson_chi2":
        return -2.0 * c * p / (h * w)
    raise ValueError(f"divergence must be one of {DIVERGENCES}")
