"""Patient-level scoring from per-slice class scores.

A patient's slices are cut into fixed-length sections; each section is
scored by the sigmoid of the mean of its k largest slice scores; section
probabilities combine into a patient probability by summing log-odds
(noisy-OR product form). A per-image 2x2 noise-transition head converts
clean posteriors into noisy-label posteriors for the corrected loss, and
the total objective returns analytic gradients for every slice score and
head parameter.

Binary classes only: class scores arrive as an n x 2 matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_tensor, logit, sigmoid

__all__ = [
    "MilConfig",
    "SectionPartition",
    "NoiseHead",
    "LossBundle",
    "PatientSummary",
    "one_hot_label",
    "partition_sections",
    "section_probability",
    "patient_probability",
    "classification_loss",
    "noise_transition",
    "noisy_distribution",
    "noisy_loss",
    "total_loss_with_gradients",
    "aggregate_patient",
]


@dataclass(frozen=True)
class MilConfig:
    section_length: int = 16
    top_k: int = 8
    noisy_weight: float = 1e-4
    clamp_eps: float = 1e-7

    def __post_init__(self):
        if self.section_length < 1:
            raise ValueError("MilConfig: section_length must be positive")
        if self.top_k < 1:
            raise ValueError("MilConfig: top_k must be positive")
        if self.noisy_weight < 0.0:
            raise ValueError("MilConfig: noisy_weight must be nonnegative")
        if not 0.0 < self.clamp_eps < 0.5:
            raise ValueError("MilConfig: clamp_eps must lie in (0, 0.5)")


@dataclass(frozen=True)
class SectionPartition:
    """Disjoint half-open slice ranges covering [0, n)."""

    ranges: tuple[tuple[int, int], ...]
    section_length: int


@dataclass(frozen=True)
class NoiseHead:
    """Per (class, noisy-label i, true-label j) linear scorer over embeddings.

    weights has shape (2, 2, 2, d) indexed [c, i, j, :], biases (2, 2, 2).
    """

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        w = as_tensor(self.weights, rank=4, name="noise head weights")
        b = as_tensor(self.biases, rank=3, name="noise head biases")
        if w.shape[:3] != (2, 2, 2) or b.shape != (2, 2, 2):
            raise ValueError("NoiseHead: expected weights (2,2,2,d), biases (2,2,2)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def dim(self) -> int:
        return self.weights.shape[3]


@dataclass(frozen=True)
class LossBundle:
    l_cls: float
    l_noisy: float
    l_total: float
    grad_scores: np.ndarray        # d l_total / d s, shape (n, 2)
    grad_head_weights: np.ndarray  # d l_total / d w, shape (2, 2, 2, d)
    grad_head_biases: np.ndarray   # d l_total / d b, shape (2, 2, 2)


@dataclass(frozen=True)
class PatientSummary:
    partition: SectionPartition
    section_probs: np.ndarray  # (|S|, 2)
    patient_probs: np.ndarray  # (2,)


def _clamp(p, eps: float):
    return np.clip(p, eps, 1.0 - eps)


def one_hot_label(value: int) -> np.ndarray:
    if value not in (0, 1):
        raise ValueError("label must be 0 or 1")
    y = np.zeros(2)
    y[value] = 1.0
    return y


def _check_label(label) -> np.ndarray:
    y = as_tensor(label, rank=1, name="label")
    if y.shape != (2,) or not set(np.unique(y)) <= {0.0, 1.0} or y.sum() != 1.0:
        raise ValueError("label must be a one-hot 2-vector")
    return y


def _check_scores(scores) -> np.ndarray:
    s = as_tensor(scores, rank=2, name="slice scores")
    if s.shape[1] != 2:
        raise ValueError("slice scores must have exactly two class columns")
    return s


def partition_sections(n: int, section_length: int) -> SectionPartition:
    """Split [0, n) into max(1, floor(n/l)) sections of length l.

    The division remainder is absorbed into the last section, so every
    slice belongs to exactly one section and short patients form a single
    section.
    """
    n = int(n)
    l = int(section_length)
    if n < 1:
        raise ValueError("partition_sections: need at least one slice")
    if l < 1:
        raise ValueError("partition_sections: section length must be positive")
    count = max(1, n // l)
    ranges = [(i * l, (i + 1) * l) for i in range(count - 1)]
    ranges.append(((count - 1) * l, n))
    return SectionPartition(ranges=tuple(ranges), section_length=l)


def _top_k_indices(column: np.ndarray, k: int) -> np.ndarray:
    # descending by score, ties resolved toward the lower slice index
    order = np.argsort(-column, kind="stable")
    return order[: min(k, column.shape[0])]


def section_probability(scores, top_k: int, class_index: int = 0) -> float:
    """Sigmoid of the mean of the section's top-min(k, size) class scores."""
    s = np.asarray(scores, dtype=np.float64)
    column = s[:, class_index] if s.ndim == 2 else as_tensor(s, rank=1, name="scores")
    if column.size == 0:
        raise ValueError("section_probability: empty section")
    if top_k < 1:
        raise ValueError("section_probability: k must be positive")
    chosen = _top_k_indices(column, int(top_k))
    return float(sigmoid(column[chosen].mean()))


def patient_probability(section_probs, clamp_eps: float = 1e-7) -> float:
    """Combine section probabilities by summing their log-odds.

    Equivalent to the product form 1/(1 + prod(1/p_i - 1)) but immune to
    underflow near the clamp boundaries. Inputs and output are clamped
    into [clamp_eps, 1 - clamp_eps].
    """
    p = as_tensor(section_probs, rank=1, name="section probabilities")
    p = _clamp(p, clamp_eps)
    return float(_clamp(sigmoid(np.sum(logit(p))), clamp_eps))


def classification_loss(patient_probs, label, clamp_eps: float = 1e-7) -> float:
    """Binary cross entropy summed over both class channels."""
    p = _clamp(as_tensor(patient_probs, rank=1, name="patient probabilities"), clamp_eps)
    y = _check_label(label)
    if p.shape != (2,):
        raise ValueError("expected one probability per class channel")
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _check_embeddings(embeddings, n: int, head: NoiseHead) -> np.ndarray:
    phi = as_tensor(embeddings, rank=2, name="embeddings")
    if phi.shape[0] != n:
        raise ValueError("one embedding row per slice required")
    if phi.shape[1] != head.dim:
        raise ValueError(
            f"embedding dimension {phi.shape[1]} does not match head dimension {head.dim}"
        )
    return phi


def _transition_batch(phi: np.ndarray, head: NoiseHead, c: int) -> np.ndarray:
    """Per-image transition matrices Q with columns normalized over the
    noisy-label axis i: Q[n, i, j] = softmax_i(w[c,i,j] . phi_n + b[c,i,j])."""
    t = np.einsum("nd,ijd->nij", phi, head.weights[c]) + head.biases[c]
    t = t - t.max(axis=1, keepdims=True)
    e = np.exp(t)
    return e / e.sum(axis=1, keepdims=True)


def noise_transition(phi, head: NoiseHead, class_index: int) -> np.ndarray:
    """Single-image 2x2 noise transition matrix; each column sums to 1."""
    v = as_tensor(phi, rank=1, name="embedding")
    if v.shape[0] != head.dim:
        raise ValueError("embedding dimension does not match head dimension")
    c = int(class_index)
    if c not in (0, 1):
        raise ValueError("class index must be 0 or 1")
    return _transition_batch(v[None, :], head, c)[0]


def noisy_distribution(q, p_true) -> np.ndarray:
    """Push a clean posterior through the transition: P(z=i) = sum_j Q[i,j] P(y=j)."""
    qm = as_tensor(q, rank=2, name="transition matrix")
    p = as_tensor(p_true, rank=1, name="true posterior")
    if qm.shape != (2, 2) or p.shape != (2,):
        raise ValueError("expected a 2x2 transition and a 2-vector posterior")
    if abs(float(p.sum()) - 1.0) > 1e-9 or np.any(p < 0.0):
        raise ValueError("true posterior must be a probability vector")
    return qm @ p


def _noisy_forward(s, phi, head, y, eps):
    """Per-class noisy posteriors. Returns (loss, cache for backprop)."""
    n = s.shape[0]
    cache = []
    total = 0.0
    for c in (0, 1):
        t1 = sigmoid(s[:, c])                       # P(y_c=1 | image)
        p_true = np.stack([1.0 - t1, t1], axis=1)   # (n, 2), column j
        q = _transition_batch(phi, head, c)         # (n, 2, 2)
        pz = np.einsum("nij,nj->ni", q, p_true)     # (n, 2)
        pz_c = _clamp(pz, eps)
        picked = pz_c[:, 1] if y[c] == 1.0 else pz_c[:, 0]
        total += float(-np.log(picked).sum()) / n
        cache.append((t1, p_true, q, pz, pz_c))
    return total, cache


def noisy_loss(scores, embeddings, head: NoiseHead, label, clamp_eps: float = 1e-7) -> float:
    """Mean over images of the cross entropy against noisy-label posteriors.

    The image-level clean posterior is sigmoid of that image's slice score
    for the class; both class channels contribute a complementary term.
    """
    s = _check_scores(scores)
    y = _check_label(label)
    phi = _check_embeddings(embeddings, s.shape[0], head)
    loss, _ = _noisy_forward(s, phi, head, y, clamp_eps)
    return loss


def aggregate_patient(scores, config: MilConfig = MilConfig()) -> PatientSummary:
    """Forward scoring path only: sections, per-section and patient probabilities."""
    s = _check_scores(scores)
    part = partition_sections(s.shape[0], config.section_length)
    sect = np.empty((len(part.ranges), 2))
    for i, (a, b) in enumerate(part.ranges):
        for c in (0, 1):
            sect[i, c] = section_probability(s[a:b], config.top_k, c)
    patient = np.array([
        patient_probability(sect[:, c], config.clamp_eps) for c in (0, 1)
    ])
    return PatientSummary(partition=part, section_probs=sect, patient_probs=patient)


def total_loss_with_gradients(
    scores, embeddings, head: NoiseHead, label, config: MilConfig = MilConfig()
) -> LossBundle:
    """Total objective l_cls + lambda * l_noisy with analytic gradients.

    Gradients are of the total loss with respect to every slice score and
    every head parameter. The k-max selection routes classification
    gradient only to the selected slices (ties to the lower index);
    clamped probabilities contribute zero derivative through the clamp.
    """
    s = _check_scores(scores)
    y = _check_label(label)
    phi = _check_embeddings(embeddings, s.shape[0], head)
    cfg = config
    eps = cfg.clamp_eps
    n = s.shape[0]
    part = partition_sections(n, cfg.section_length)

    grad_cls = np.zeros_like(s)
    l_cls = 0.0
    for c in (0, 1):
        sections = []
        for a, b in part.ranges:
            column = s[a:b, c]
            chosen = a + _top_k_indices(column, cfg.top_k)
            mean_score = s[chosen, c].mean()
            p = float(sigmoid(mean_score))
            sections.append((chosen, p, _clamp(p, eps)))

        section_clamped = np.array([pc for _, _, pc in sections])
        big_l = float(np.sum(logit(section_clamped)))
        patient = float(sigmoid(big_l))
        patient_c = float(_clamp(patient, eps))
        l_cls += -(y[c] * np.log(patient_c) + (1.0 - y[c]) * np.log(1.0 - patient_c))

        d_patient_c = -(y[c] / patient_c - (1.0 - y[c]) / (1.0 - patient_c))
        d_patient = d_patient_c if patient == patient_c else 0.0
        d_big_l = d_patient * patient * (1.0 - patient)
        for chosen, p, pc in sections:
            d_pc = d_big_l / (pc * (1.0 - pc))
            d_p = d_pc if p == pc else 0.0
            d_mean = d_p * p * (1.0 - p)
            grad_cls[chosen, c] += d_mean / chosen.shape[0]

    l_noisy, cache = _noisy_forward(s, phi, head, y, eps)

    grad_noisy_s = np.zeros_like(s)
    grad_noisy_w = np.zeros_like(head.weights)
    grad_noisy_b = np.zeros_like(head.biases)
    for c in (0, 1):
        t1, p_true, q, pz, pz_c = cache[c]
        g = np.zeros((n, 2))
        idx = 1 if y[c] == 1.0 else 0
        live = (pz[:, idx] == pz_c[:, idx]).astype(np.float64)
        g[:, idx] = -live / pz_c[:, idx]

        # slice-score path: d pz[:,i] / d t1 = q[:,i,1] - q[:,i,0]
        d_t1 = np.einsum("ni,ni->n", g, q[:, :, 1] - q[:, :, 0])
        grad_noisy_s[:, c] = d_t1 * t1 * (1.0 - t1) / n

        # head path through the column softmax:
        # d term / d T[i,j] = p_true[j] * q[i,j] * (g[i] - sum_i' g[i'] q[i',j])
        col_dot = np.einsum("ni,nij->nj", g, q)
        d_t = p_true[:, None, :] * q * (g[:, :, None] - col_dot[:, None, :])
        grad_noisy_w[c] = np.einsum("nij,nd->ijd", d_t, phi) / n
        grad_noisy_b[c] = d_t.sum(axis=0) / n

    lam = cfg.noisy_weight
    return LossBundle(
        l_cls=float(l_cls),
        l_noisy=float(l_noisy),
        l_total=float(l_cls + lam * l_noisy),
        grad_scores=grad_cls + lam * grad_noisy_s,
        grad_head_weights=lam * grad_noisy_w,
        grad_head_biases=lam * grad_noisy_b,
    )
