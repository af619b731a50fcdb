"""Latent-space explanation: 2-D PCA projection of embeddings, a small
regression landscape fitted over the projection, and an exact t-SNE
embedding.

The landscape is a fixed 2-32-32-1 tanh network trained by full-batch
gradient descent with manual backpropagation; initialization draws every
parameter uniformly from [-0.5, 0.5] in a fixed order, so a seed pins the
whole fit. t-SNE is the exact O(N^2) formulation: per-point bandwidths
found by bisection to match the target entropy, symmetrized affinities,
plain momentum gradient descent with early exaggeration, coordinates
re-centered every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import PcaModel, as_tensor, pca_fit_project
from .parallel import map_ordered

__all__ = [
    "LandscapeModel",
    "TsneConfig",
    "TsneResult",
    "project_2d",
    "init_landscape",
    "landscape_gradients",
    "fit_landscape",
    "evaluate_grid",
    "conditional_affinities",
    "tsne_embed",
]

_HIDDEN = 32
_TSNE_POINT_LIMIT = 5000


def project_2d(embeddings) -> tuple[PcaModel, np.ndarray]:
    """Project an N x D embedding set onto its top two principal axes."""
    x = as_tensor(embeddings, rank=2, name="embeddings")
    if x.shape[1] < 2:
        raise ValueError("project_2d: need at least two embedding dimensions")
    return pca_fit_project(x, 2)


@dataclass(frozen=True)
class LandscapeModel:
    """2-32-32-1 regression network: tanh hidden layers, identity output."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    seed: int
    final_mse: float | None = None

    def predict(self, points) -> np.ndarray:
        """Evaluate at one (2,) point or a stack of N x 2 points."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("landscape points must be 2-D coordinates")
        out, _ = _forward(self, pts)
        values = out[:, 0]
        return float(values[0]) if single else values


def init_landscape(seed: int) -> LandscapeModel:
    """Untrained model; parameters drawn U[-0.5, 0.5] in the order
    w1, b1, w2, b2, w3, b3 from the seeded generator."""
    rng = np.random.default_rng(seed)

    def draw(*shape):
        return rng.uniform(-0.5, 0.5, size=shape)

    return LandscapeModel(
        w1=draw(2, _HIDDEN),
        b1=draw(_HIDDEN),
        w2=draw(_HIDDEN, _HIDDEN),
        b2=draw(_HIDDEN),
        w3=draw(_HIDDEN, 1),
        b3=draw(1),
        seed=int(seed),
    )


def _forward(model: LandscapeModel, pts: np.ndarray):
    h1 = np.tanh(pts @ model.w1 + model.b1)
    h2 = np.tanh(h1 @ model.w2 + model.b2)
    out = h2 @ model.w3 + model.b3
    return out, (pts, h1, h2)


def landscape_gradients(model: LandscapeModel, points, targets):
    """Mean-squared-error loss and its gradients for every parameter.

    Returns (mse, grads) with grads keyed w1, b1, w2, b2, w3, b3.
    """
    pts = as_tensor(points, rank=2, name="coordinates")
    t = as_tensor(targets, rank=1, name="targets")
    if pts.shape[0] != t.shape[0]:
        raise ValueError("coordinate and target counts differ")
    n = pts.shape[0]
    out, (x, h1, h2) = _forward(model, pts)
    resid = out - t[:, None]
    mse = float(np.mean(resid**2))

    d_out = 2.0 * resid / n
    g_w3 = h2.T @ d_out
    g_b3 = d_out.sum(axis=0)
    d_h2 = (d_out @ model.w3.T) * (1.0 - h2**2)
    g_w2 = h1.T @ d_h2
    g_b2 = d_h2.sum(axis=0)
    d_h1 = (d_h2 @ model.w2.T) * (1.0 - h1**2)
    g_w1 = x.T @ d_h1
    g_b1 = d_h1.sum(axis=0)
    return mse, {"w1": g_w1, "b1": g_b1, "w2": g_w2, "b2": g_b2, "w3": g_w3, "b3": g_b3}


def fit_landscape(
    coords,
    dice,
    seed: int = 0,
    learning_rate: float = 1e-2,
    iterations: int = 5000,
) -> LandscapeModel:
    """Fit the landscape to (coordinate, dice) pairs by full-batch descent."""
    pts = as_tensor(coords, rank=2, name="coordinates")
    if pts.shape[1] != 2:
        raise ValueError("fit_landscape: coordinates must be N x 2")
    if pts.shape[0] < 4:
        raise ValueError("fit_landscape: need at least four points")
    d = as_tensor(dice, rank=1, name="dice")
    if d.shape[0] != pts.shape[0]:
        raise ValueError("fit_landscape: one dice value per coordinate required")
    if np.any(d < 0.0) or np.any(d > 1.0):
        raise ValueError("fit_landscape: dice values outside [0, 1]")
    if iterations < 1 or learning_rate <= 0.0:
        raise ValueError("fit_landscape: bad optimizer settings")

    current = init_landscape(seed)
    for _ in range(int(iterations)):
        _, grads = landscape_gradients(current, pts, d)
        current = replace(
            current,
            **{key: getattr(current, key) - learning_rate * grad for key, grad in grads.items()},
        )
    out, _ = _forward(current, pts)
    final = float(np.mean((out[:, 0] - d) ** 2))
    return replace(current, final_mse=final)


def evaluate_grid(model: LandscapeModel, bounds, resolution: int) -> np.ndarray:
    """Model values on an R x R grid; grid[i, j] is the model at
    (y1_lin[i], y2_lin[j]), corners exactly on the bounds.

    Each grid entry is a fresh single-point forward pass, so it is
    bit-identical to model.predict at the same coordinates.
    """
    y1_min, y1_max, y2_min, y2_max = (float(v) for v in bounds)
    r = int(resolution)
    if r < 2:
        raise ValueError("evaluate_grid: resolution must be at least 2")
    if not (y1_max > y1_min and y2_max > y2_min):
        raise ValueError("evaluate_grid: degenerate bounds")
    lin1 = np.linspace(y1_min, y1_max, r)
    lin2 = np.linspace(y2_min, y2_max, r)
    grid = np.empty((r, r))
    for i in range(r):
        for j in range(r):
            grid[i, j] = model.predict(np.array([lin1[i], lin2[j]]))
    return grid


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 100.0
    early_exaggeration: float = 4.0
    exaggeration_iters: int = 100
    initial_momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    seed: int = 0

    def __post_init__(self):
        if self.perplexity < 2.0:
            raise ValueError("TsneConfig: perplexity must be at least 2")
        if self.iterations < 1:
            raise ValueError("TsneConfig: iterations must be at least 1")
        if self.learning_rate <= 0.0:
            raise ValueError("TsneConfig: learning rate must be positive")
        if self.early_exaggeration < 1.0:
            raise ValueError("TsneConfig: exaggeration factor must be at least 1")


@dataclass(frozen=True)
class TsneResult:
    coords: np.ndarray
    objective_trace: np.ndarray

    @property
    def initial_objective(self) -> float:
        return float(self.objective_trace[0])

    @property
    def final_objective(self) -> float:
        return float(self.objective_trace[-1])


def _row_bandwidth(distances: np.ndarray, target_entropy: float, tol: float, max_iter: int):
    """Bisect the precision beta of one row until the conditional entropy
    hits the target. Returns (conditional row, entropy, beta)."""
    beta = 1.0
    beta_min = -np.inf
    beta_max = np.inf
    probs = np.full_like(distances, 1.0 / distances.shape[0])
    entropy = float(np.log(distances.shape[0]))
    for _ in range(max_iter):
        logits = -beta * distances
        peak = logits.max()
        w = np.exp(logits - peak)
        z = w.sum()
        probs = w / z
        # natural-log entropy: H = log(sum exp(-beta d)) + beta * E[d]
        entropy = float(np.log(z) + peak + beta * (probs @ distances))
        if abs(entropy - target_entropy) <= tol:
            break
        # entropy decreases as beta grows
        if entropy > target_entropy:
            beta_min = beta
            beta = beta * 2.0 if not np.isfinite(beta_max) else (beta + beta_max) / 2.0
        else:
            beta_max = beta
            beta = beta / 2.0 if not np.isfinite(beta_min) else (beta + beta_min) / 2.0
    return probs, entropy, beta


def conditional_affinities(
    sq_distances,
    perplexity: float,
    tol: float = 1e-5,
    max_iter: int = 200,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-point conditional affinities with entropy log(perplexity).

    Returns (P_conditional with zero diagonal, per-point entropies, betas).
    Rows whose entropy cannot reach the target (all neighbors equidistant
    closer than the target allows) keep their last bisection state.
    """
    d2 = as_tensor(sq_distances, rank=2, name="squared distances")
    n = d2.shape[0]
    if d2.shape[1] != n:
        raise ValueError("squared distance matrix must be square")
    if n < 2:
        raise ValueError("need at least two points")
    target = float(np.log(perplexity))

    mask = ~np.eye(n, dtype=bool)

    def solve_row(i: int):
        return _row_bandwidth(d2[i][mask[i]], target, tol, max_iter)

    results = map_ordered(solve_row, range(n), threads)
    p_cond = np.zeros((n, n))
    entropies = np.empty(n)
    betas = np.empty(n)
    for i, (row, entropy, beta) in enumerate(results):
        p_cond[i][mask[i]] = row
        entropies[i] = entropy
        betas[i] = beta
    return p_cond, entropies, betas


def tsne_embed(embeddings, config: TsneConfig = TsneConfig(), threads: int = 1) -> TsneResult:
    """Exact t-SNE to two dimensions.

    The effective perplexity is min(config.perplexity, (N-1)/3); if that
    falls below 2 the input is too small and an error is raised. The
    objective trace holds the true (unexaggerated) KL divergence at
    initialization and after every iteration.
    """
    x = as_tensor(embeddings, rank=2, name="embeddings")
    n = x.shape[0]
    if n < 5:
        raise ValueError("tsne_embed: need at least five points")
    if n > _TSNE_POINT_LIMIT:
        raise ValueError(f"tsne_embed: exact formulation capped at {_TSNE_POINT_LIMIT} points")
    perp = min(config.perplexity, (n - 1) / 3.0)
    if perp < 2.0:
        raise ValueError("tsne_embed: infeasible perplexity for this point count")

    sq_norms = np.sum(x * x, axis=1)
    d2 = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * (x @ x.T), 0.0)
    np.fill_diagonal(d2, 0.0)

    p_cond, _, _ = conditional_affinities(d2, perp, threads=threads)
    p = (p_cond + p_cond.T) / (2.0 * n)
    p_sum = p.sum()
    if p_sum <= 0.0:
        raise ValueError("tsne_embed: degenerate affinities")

    rng = np.random.default_rng(config.seed)
    y = rng.normal(0.0, 1e-2, size=(n, 2))
    y -= y.mean(axis=0)
    velocity = np.zeros_like(y)

    def kl_divergence(q: np.ndarray) -> float:
        live = p > 0.0
        return float(np.sum(p[live] * np.log(p[live] / np.maximum(q[live], 1e-300))))

    def low_dim_q(coords: np.ndarray):
        sq = np.sum(coords * coords, axis=1)
        num = 1.0 / (1.0 + np.maximum(sq[:, None] + sq[None, :] - 2.0 * (coords @ coords.T), 0.0))
        np.fill_diagonal(num, 0.0)
        return num, num / num.sum()

    trace = np.empty(config.iterations + 1)
    num, q = low_dim_q(y)
    trace[0] = kl_divergence(q)

    for t in range(config.iterations):
        p_t = p * config.early_exaggeration if t < config.exaggeration_iters else p
        weights = (p_t - q) * num
        grad = 4.0 * (np.diag(weights.sum(axis=1)) - weights) @ y
        momentum = config.initial_momentum if t < config.momentum_switch else config.final_momentum
        velocity = momentum * velocity - config.learning_rate * grad
        y = y + velocity
        y -= y.mean(axis=0)
        num, q = low_dim_q(y)
        trace[t + 1] = kl_divergence(q)

    return TsneResult(coords=y, objective_trace=trace)
