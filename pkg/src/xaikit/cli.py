"""Command-line surface.

Eight subcommands (cam, mil, lime, shap, tsne, landscape, metrics,
segloss-check) wire the library to files: arrays travel as npy files,
curves and tables as CSV, reports as canonical JSON, heatmaps as P5/P6
rasters. Exit codes: 0 success, 1 computation error, 2 usage or file
error. All diagnostics go to stderr; stdout stays clean (it carries the
predictor protocol when `--predictor-cmd -` serves predictions from the
parent process).

Every subcommand is deterministic given its inputs, seed, and a thread
count of 1: reports never embed wall time (it is printed to stderr only),
so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .arrayio import (
    FormatError,
    read_array_file,
    read_table,
    write_array_file,
    write_pgm,
    write_ppm,
    write_report,
    write_table,
)
from .edm import activation_map, class_scores, extract_boxes, normalize_map
from .latent import TsneConfig, evaluate_grid, fit_landscape, project_2d, tsne_embed
from .metrics import (
    confusion_metrics,
    dice_score,
    max_accuracy_threshold,
    pr_curve,
    roc_auc,
)
from .mil import (
    MilConfig,
    NoiseHead,
    aggregate_patient,
    classification_loss,
    one_hot_label,
    total_loss_with_gradients,
)
from .numerics import splitmix64
from .parallel import thread_count
from .perturb import grid_superpixels, kernel_shap_explain, lime_explain
from .predictor import PredictorError, StdioPredictor, SubprocessPredictor
from .segloss import (
    SegLossConfig,
    combined_loss,
    divergence_gradient,
    supervised_loss,
    uniform_divergence_loss,
)

__all__ = ["main", "build_parser", "UsageError"]


class UsageError(Exception):
    """Bad invocation or unusable file: exit code 2."""


def _load_array(path) -> np.ndarray:
    try:
        return read_array_file(path)
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except IsADirectoryError:
        raise UsageError(f"input path is a directory: {path}") from None
    except FormatError as exc:
        raise UsageError(f"cannot read array file {path}: {exc}") from None


def _load_table(path):
    try:
        return read_table(path)
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except FormatError as exc:
        raise UsageError(f"cannot read table {path}: {exc}") from None


def _write(path, writer, *payload):
    try:
        writer(path, *payload)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    import os

    raw = os.environ.get("XAIKIT_SEED", "")
    if not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"XAIKIT_SEED is not an integer: {raw!r}") from None


def _resolve_threads(value) -> int:
    try:
        return thread_count(value)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _report(args, command: str, config: dict, results: dict) -> None:
    if getattr(args, "report", None):
        payload = {
            "command": command,
            "config": config,
            "results": results,
            "tool": {"name": "xaikit", "version": __version__},
        }
        _write(args.report, write_report, payload)


def _box_record(box) -> dict:
    return {
        "row_min": box.row_min,
        "col_min": box.col_min,
        "row_max": box.row_max,
        "col_max": box.col_max,
    }


def _cmd_cam(args) -> None:
    features = _load_array(args.features)
    weights = _load_array(args.weights)
    scores = class_scores(features, weights)
    saliency = activation_map(features, weights, args.class_index)
    heatmap = normalize_map(saliency)
    boxes = extract_boxes(heatmap, args.threshold)

    raster = heatmap
    if args.scale > 1:
        raster = np.repeat(np.repeat(heatmap, args.scale, axis=0), args.scale, axis=1)
    if args.out:
        _write(args.out, write_pgm, raster)
    if args.ppm:
        _write(args.ppm, write_ppm, raster)
    if args.map_out:
        _write(args.map_out, write_array_file, saliency.values)
    if args.boxes:
        _write(
            args.boxes,
            write_report,
            {"threshold": args.threshold, "scale": args.scale, "boxes": [_box_record(b) for b in boxes]},
        )

    score = float(scores[args.class_index])
    _report(
        args,
        "cam",
        {
            "features": args.features,
            "weights": args.weights,
            "class_index": args.class_index,
            "threshold": args.threshold,
            "scale": args.scale,
        },
        {
            "class_scores": scores,
            "score": score,
            "map_shape": list(saliency.values.shape),
            "map_mean": float(saliency.values.mean()),
            "identity_gap": abs(float(saliency.values.mean()) - score),
            "box_count": len(boxes),
            "boxes": [_box_record(b) for b in boxes],
        },
    )


def _cmd_mil(args) -> None:
    scores = _load_array(args.scores)
    config = MilConfig(
        section_length=args.section_len,
        top_k=args.k,
        noisy_weight=args.noisy_weight,
        clamp_eps=args.clamp_eps,
    )
    label = one_hot_label(args.label)
    summary = aggregate_patient(scores, config)
    l_cls = classification_loss(summary.patient_probs, label, config.clamp_eps)

    results = {
        "label": args.label,
        "n_slices": int(scores.shape[0]),
        "sections": [[a, b] for a, b in summary.partition.ranges],
        "section_probs": summary.section_probs,
        "patient_probs": summary.patient_probs,
        "l_cls": l_cls,
        "l_noisy": None,
        "l_total": None,
    }

    head_parts = (args.embeddings, args.head_weights, args.head_biases)
    grads_requested = any(
        (args.grad_scores, args.grad_head_weights, args.grad_head_biases)
    )
    if any(head_parts):
        if not all(head_parts):
            raise UsageError(
                "--embeddings, --head-weights and --head-biases must be given together"
            )
        embeddings = _load_array(args.embeddings)
        head = NoiseHead(
            weights=_load_array(args.head_weights),
            biases=_load_array(args.head_biases),
        )
        bundle = total_loss_with_gradients(scores, embeddings, head, label, config)
        results["l_cls"] = bundle.l_cls
        results["l_noisy"] = bundle.l_noisy
        results["l_total"] = bundle.l_total
        results["grad_norms"] = {
            "scores": float(np.linalg.norm(bundle.grad_scores)),
            "head_weights": float(np.linalg.norm(bundle.grad_head_weights)),
            "head_biases": float(np.linalg.norm(bundle.grad_head_biases)),
        }
        if args.grad_scores:
            _write(args.grad_scores, write_array_file, bundle.grad_scores)
        if args.grad_head_weights:
            _write(args.grad_head_weights, write_array_file, bundle.grad_head_weights)
        if args.grad_head_biases:
            _write(args.grad_head_biases, write_array_file, bundle.grad_head_biases)
    elif grads_requested:
        raise UsageError("gradient outputs need --embeddings and the noise head files")

    _report(
        args,
        "mil",
        {
            "scores": args.scores,
            "label": args.label,
            "section_len": config.section_length,
            "k": config.top_k,
            "lambda": config.noisy_weight,
            "clamp_eps": config.clamp_eps,
            "embeddings": args.embeddings,
        },
        results,
    )


def _make_predictor(args):
    if args.predictor_cmd.strip() == "-":
        return StdioPredictor()
    return SubprocessPredictor(args.predictor_cmd, timeout=args.timeout)


def _cmd_explain(args, method: str) -> None:
    image = _load_array(args.image)
    if image.ndim != 3:
        raise UsageError(f"image must be H x W x C, got rank {image.ndim}")
    spmap = grid_superpixels(image.shape[0], image.shape[1], args.superpixels)
    seed = _resolve_seed(args.seed)
    threads = _resolve_threads(args.threads)

    predictor = _make_predictor(args)
    closer = predictor.close if isinstance(predictor, SubprocessPredictor) else lambda: None
    try:
        if method == "lime":
            explanation = lime_explain(
                predictor,
                image,
                spmap,
                args.class_index,
                n_samples=args.samples,
                seed=seed,
                kernel_width=args.kernel_width,
                ridge=args.ridge,
                baseline_mode=args.baseline,
                batch_size=args.batch,
                threads=threads,
            )
        else:
            explanation = kernel_shap_explain(
                predictor,
                image,
                spmap,
                args.class_index,
                n_samples=args.samples,
                seed=seed,
                baseline_mode=args.baseline,
                batch_size=args.batch,
                threads=threads,
            )
    finally:
        closer()

    if args.weights_out:
        _write(args.weights_out, write_array_file, explanation.weights)

    efficiency_gap = abs(
        float(explanation.weights.sum())
        - (explanation.full_value - explanation.baseline_value)
    )
    results = {
        "method": explanation.method,
        "class_index": explanation.class_index,
        "weights": explanation.weights,
        "intercept": explanation.intercept,
        "baseline_value": explanation.baseline_value,
        "full_value": explanation.full_value,
        "superpixels": {
            "count": spmap.count,
            "image_shape": list(image.shape),
        },
        "invocations": predictor.calls,
    }
    if method == "shap":
        results["efficiency_gap"] = efficiency_gap

    config = {
        "image": args.image,
        "predictor_cmd": args.predictor_cmd,
        "superpixels": args.superpixels,
        "class_index": args.class_index,
        "samples": args.samples,
        "seed": seed,
        "baseline": args.baseline,
        "batch": args.batch,
        "threads": threads,
    }
    if method == "lime":
        config["kernel_width"] = args.kernel_width
        config["ridge"] = args.ridge
    _report(args, method, config, results)


def _cmd_tsne(args) -> None:
    embeddings = _load_array(args.embeddings)
    seed = _resolve_seed(args.seed)
    threads = _resolve_threads(args.threads)
    config = TsneConfig(
        perplexity=args.perplexity,
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        seed=seed,
    )
    result = tsne_embed(embeddings, config, threads=threads)

    if args.out:
        _write(args.out, write_array_file, result.coords)
    if args.coords_csv:
        _write(
            args.coords_csv,
            write_table,
            ["index", "y1", "y2"],
            [(i, row[0], row[1]) for i, row in enumerate(result.coords)],
        )
    if args.trace_csv:
        _write(
            args.trace_csv,
            write_table,
            ["iteration", "objective"],
            [(i, v) for i, v in enumerate(result.objective_trace)],
        )

    n = embeddings.shape[0]
    _report(
        args,
        "tsne",
        {
            "embeddings": args.embeddings,
            "perplexity": args.perplexity,
            "iterations": args.iterations,
            "learning_rate": args.learning_rate,
            "seed": seed,
            "threads": threads,
        },
        {
            "n": n,
            "d": int(embeddings.shape[1]),
            "perplexity_effective": min(args.perplexity, (n - 1) / 3.0),
            "initial_objective": result.initial_objective,
            "final_objective": result.final_objective,
        },
    )


def _parse_dice_table(path) -> np.ndarray:
    header, rows = _load_table(path)
    if "dice" not in header:
        raise UsageError(f"{path}: need a 'dice' column")
    idx = header.index("dice")
    try:
        return np.array([float(row[idx]) for row in rows])
    except ValueError as exc:
        raise UsageError(f"{path}: bad dice value: {exc}") from None


def _cmd_landscape(args) -> None:
    embeddings = _load_array(args.embeddings)
    dice = _parse_dice_table(args.dice)
    if dice.shape[0] != embeddings.shape[0]:
        raise UsageError(
            f"dice count {dice.shape[0]} does not match embedding rows {embeddings.shape[0]}"
        )
    seed = _resolve_seed(args.seed)
    pca, coords = project_2d(embeddings)
    model = fit_landscape(
        coords, dice, seed=seed, learning_rate=args.learning_rate, iterations=args.iterations
    )

    if args.bounds is not None:
        bounds = tuple(args.bounds)
    else:
        bounds = _data_bounds(coords)
    grid = evaluate_grid(model, bounds, args.resolution)

    if args.coords_out:
        _write(args.coords_out, write_array_file, coords)
    if args.grid_out:
        _write(args.grid_out, write_array_file, grid)
    if args.grid_pgm:
        _write(args.grid_pgm, write_pgm, np.clip(grid, 0.0, 1.0))

    _report(
        args,
        "landscape",
        {
            "embeddings": args.embeddings,
            "dice": args.dice,
            "seed": seed,
            "iterations": args.iterations,
            "learning_rate": args.learning_rate,
            "resolution": args.resolution,
        },
        {
            "n": int(coords.shape[0]),
            "final_mse": model.final_mse,
            "bounds": list(bounds),
            "resolution": args.resolution,
            "explained_variance": pca.explained_variance,
            "grid_min": float(grid.min()),
            "grid_max": float(grid.max()),
        },
    )


def _data_bounds(coords: np.ndarray) -> tuple[float, float, float, float]:
    """Data extents per axis; a collapsed axis is widened by 0.5 each way."""
    bounds = []
    for axis in (0, 1):
        lo = float(coords[:, axis].min())
        hi = float(coords[:, axis].max())
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        bounds.extend([lo, hi])
    return tuple(bounds)


def _metrics_record(threshold: float, cm) -> dict:
    return {
        "threshold": threshold,
        "tp": cm.counts.tp,
        "fp": cm.counts.fp,
        "tn": cm.counts.tn,
        "fn": cm.counts.fn,
        "accuracy": cm.accuracy,
        "precision": cm.precision,
        "sensitivity": cm.sensitivity,
        "specificity": cm.specificity,
    }


def _cmd_metrics(args) -> None:
    header, rows = _load_table(args.data)
    for column in ("score", "label"):
        if column not in header:
            raise UsageError(f"{args.data}: need a '{column}' column")
    s_idx, l_idx = header.index("score"), header.index("label")
    try:
        scores = np.array([float(row[s_idx]) for row in rows])
        labels = np.array([float(row[l_idx]) for row in rows])
    except ValueError as exc:
        raise UsageError(f"{args.data}: bad numeric value: {exc}") from None

    roc = roc_auc(scores, labels)
    pr = pr_curve(scores, labels)
    best_threshold, best = max_accuracy_threshold(scores, labels)

    results = {
        "n": int(scores.shape[0]),
        "positives": int(labels.sum()),
        "negatives": int(scores.shape[0] - labels.sum()),
        "auc": roc.auc,
        "average_precision": pr.average_precision,
        "best_threshold": _metrics_record(best_threshold, best),
        "given_threshold": None,
    }
    if args.threshold is not None:
        results["given_threshold"] = _metrics_record(
            args.threshold, confusion_metrics(scores, labels, args.threshold)
        )
    if args.mask_a or args.mask_b:
        if not (args.mask_a and args.mask_b):
            raise UsageError("--mask-a and --mask-b must be given together")
        results["dice"] = dice_score(_load_array(args.mask_a), _load_array(args.mask_b))

    if args.roc_csv:
        _write(
            args.roc_csv,
            write_table,
            ["threshold", "fpr", "tpr"],
            list(zip(roc.thresholds, roc.fpr, roc.tpr)),
        )
    if args.pr_csv:
        _write(
            args.pr_csv,
            write_table,
            ["threshold", "recall", "precision"],
            list(zip(pr.thresholds, pr.recall, pr.precision)),
        )

    _report(
        args,
        "metrics",
        {"data": args.data, "threshold": args.threshold},
        results,
    )


def _cmd_segloss_check(args) -> None:
    prob_sup = _load_array(args.prob_sup)
    labels = _load_array(args.labels)
    prob_unsup = _load_array(args.prob_unsup)
    config = SegLossConfig(beta=args.beta, divergence=args.divergence)
    seed = _resolve_seed(args.seed)

    l_sup = supervised_loss(prob_sup, labels, config.clamp_eps)
    l_div = uniform_divergence_loss(prob_unsup, config.divergence, config.clamp_eps)
    combined = combined_loss(prob_sup, labels, prob_unsup, config)
    grad = divergence_gradient(prob_unsup, config.divergence, config.clamp_eps)

    # dual-route check: analytic gradient vs central finite differences at
    # stream-chosen probe entries (raw loss; probes sit just off the simplex)
    flat = prob_unsup.ravel().copy()
    probes = splitmix64(seed, args.fd_probes) % np.uint64(flat.size)
    step = args.fd_step
    max_rel = 0.0
    for probe in probes.astype(np.int64):
        bumped = flat.copy()
        bumped[probe] = flat[probe] + step
        hi = uniform_divergence_loss(
            bumped.reshape(prob_unsup.shape), config.divergence, config.clamp_eps, validate=False
        )
        bumped[probe] = flat[probe] - step
        lo = uniform_divergence_loss(
            bumped.reshape(prob_unsup.shape), config.divergence, config.clamp_eps, validate=False
        )
        fd = (hi - lo) / (2.0 * step)
        analytic = float(grad.ravel()[probe])
        max_rel = max(max_rel, abs(analytic - fd) / max(1.0, abs(fd)))

    if args.grad_out:
        _write(args.grad_out, write_array_file, grad)

    _report(
        args,
        "segloss-check",
        {
            "prob_sup": args.prob_sup,
            "labels": args.labels,
            "prob_unsup": args.prob_unsup,
            "beta": config.beta,
            "divergence": config.divergence,
            "fd_probes": args.fd_probes,
            "fd_step": args.fd_step,
            "seed": seed,
        },
        {
            "l_sup": l_sup,
            "l_div": l_div,
            "combined": combined,
            "grad_max_abs": float(np.abs(grad).max()),
            "fd_max_rel_err": max_rel,
        },
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xaikit",
        description="Model-agnostic explainability toolkit: activation maps, "
        "patient-level MIL scoring, perturbation explainers, divergence "
        "losses, latent-space maps, and evaluation metrics.",
    )
    parser.add_argument("--version", action="version", version=f"xaikit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    cam = sub.add_parser("cam", help="class activation heatmap and lesion boxes")
    cam.add_argument("--features", required=True, help="npy H x W x K feature stack")
    cam.add_argument("--weights", required=True, help="npy K x C classifier head")
    cam.add_argument("--class", dest="class_index", type=int, required=True)
    cam.add_argument("--threshold", type=float, default=0.6, help="box threshold in (0,1)")
    cam.add_argument("--scale", type=int, default=1, help="nearest-neighbor raster upscale")
    cam.add_argument("--out", help="P5 graymap output path")
    cam.add_argument("--ppm", help="P6 blue-to-red pixmap output path")
    cam.add_argument("--map-out", help="npy raw activation map output")
    cam.add_argument("--boxes", help="JSON bounding-box list output")
    cam.add_argument("--report", help="JSON report output")
    cam.set_defaults(handler=_cmd_cam)

    mil = sub.add_parser("mil", help="patient probability aggregation and losses")
    mil.add_argument("--scores", required=True, help="npy n x 2 slice scores")
    mil.add_argument("--label", type=int, choices=(0, 1), required=True)
    mil.add_argument("--section-len", type=int, default=16)
    mil.add_argument("--k", type=int, default=8)
    mil.add_argument("--lambda", dest="noisy_weight", type=float, default=1e-4)
    mil.add_argument("--clamp-eps", type=float, default=1e-7)
    mil.add_argument("--embeddings", help="npy n x d per-slice embeddings")
    mil.add_argument("--head-weights", help="npy (2,2,2,d) noise head weights")
    mil.add_argument("--head-biases", help="npy (2,2,2) noise head biases")
    mil.add_argument("--grad-scores", help="npy output: d l_total / d scores")
    mil.add_argument("--grad-head-weights", help="npy output: head weight gradients")
    mil.add_argument("--grad-head-biases", help="npy output: head bias gradients")
    mil.add_argument("--report", help="JSON report output")
    mil.set_defaults(handler=_cmd_mil)

    for name, blurb in (
        ("lime", "local linear surrogate attributions"),
        ("shap", "kernel Shapley attributions"),
    ):
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--image", required=True, help="npy H x W x C image")
        cmd.add_argument(
            "--predictor-cmd",
            required=True,
            help="predictor command line, or '-' to serve batches over stdio",
        )
        cmd.add_argument("--superpixels", type=int, default=16, help="target tile count")
        cmd.add_argument("--class", dest="class_index", type=int, required=True)
        cmd.add_argument("--samples", type=int, default=2048)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--baseline", choices=("mean", "zero"), default="mean")
        cmd.add_argument("--batch", type=int, default=32)
        cmd.add_argument("--timeout", type=float, default=120.0)
        cmd.add_argument("--threads", type=int, default=None)
        if name == "lime":
            cmd.add_argument("--kernel-width", type=float, default=0.25)
            cmd.add_argument("--ridge", type=float, default=1e-6)
        cmd.add_argument("--weights-out", help="npy attribution vector output")
        cmd.add_argument("--report", help="JSON report output")
        cmd.set_defaults(handler=lambda args, _name=name: _cmd_explain(args, _name))

    tsne = sub.add_parser("tsne", help="exact t-SNE embedding to 2-D")
    tsne.add_argument("--embeddings", required=True, help="npy N x D embeddings")
    tsne.add_argument("--perplexity", type=float, default=30.0)
    tsne.add_argument("--iterations", type=int, default=1000)
    tsne.add_argument("--learning-rate", type=float, default=100.0)
    tsne.add_argument("--seed", type=int, default=None)
    tsne.add_argument("--threads", type=int, default=None)
    tsne.add_argument("--out", help="npy N x 2 coordinates output")
    tsne.add_argument("--coords-csv", help="CSV coordinates output")
    tsne.add_argument("--trace-csv", help="CSV objective trace output")
    tsne.add_argument("--report", help="JSON report output")
    tsne.set_defaults(handler=_cmd_tsne)

    land = sub.add_parser("landscape", help="PCA projection + fitted value landscape")
    land.add_argument("--embeddings", required=True, help="npy N x D embeddings")
    land.add_argument("--dice", required=True, help="CSV with a 'dice' column")
    land.add_argument("--seed", type=int, default=None)
    land.add_argument("--iterations", type=int, default=5000)
    land.add_argument("--learning-rate", type=float, default=1e-2)
    land.add_argument("--resolution", type=int, default=64)
    land.add_argument(
        "--bounds",
        type=float,
        nargs=4,
        metavar=("Y1MIN", "Y1MAX", "Y2MIN", "Y2MAX"),
        help="grid bounds (default: data extents)",
    )
    land.add_argument("--coords-out", help="npy N x 2 projected coordinates output")
    land.add_argument("--grid-out", help="npy R x R landscape grid output")
    land.add_argument("--grid-pgm", help="P5 rendering of the clipped grid")
    land.add_argument("--report", help="JSON report output")
    land.set_defaults(handler=_cmd_landscape)

    met = sub.add_parser("metrics", help="ROC/AUC, PR, confusion metrics, Dice")
    met.add_argument("--data", required=True, help="CSV with 'score' and 'label' columns")
    met.add_argument("--threshold", type=float, default=None)
    met.add_argument("--roc-csv", help="CSV ROC curve output")
    met.add_argument("--pr-csv", help="CSV PR curve output")
    met.add_argument("--mask-a", help="npy binary mask (Dice operand A)")
    met.add_argument("--mask-b", help="npy binary mask (Dice operand B)")
    met.add_argument("--report", help="JSON report output")
    met.set_defaults(handler=_cmd_metrics)

    seg = sub.add_parser("segloss-check", help="divergence losses and gradient check")
    seg.add_argument("--prob-sup", required=True, help="npy H x W x C supervised probabilities")
    seg.add_argument("--labels", required=True, help="npy H x W x C one-hot labels")
    seg.add_argument("--prob-unsup", required=True, help="npy H x W x C unsupervised probabilities")
    seg.add_argument("--beta", type=float, default=1e-2)
    seg.add_argument("--divergence", choices=("kl", "pearson_chi2"), default="pearson_chi2")
    seg.add_argument("--fd-probes", type=int, default=8)
    seg.add_argument("--fd-step", type=float, default=1e-6)
    seg.add_argument("--seed", type=int, default=None)
    seg.add_argument("--grad-out", help="npy gradient output")
    seg.add_argument("--report", help="JSON report output")
    seg.set_defaults(handler=_cmd_segloss_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    started = time.monotonic()
    try:
        args.handler(args)
    except UsageError as exc:
        print(f"xaikit: {exc}", file=sys.stderr)
        return 2
    except (ValueError, PredictorError) as exc:
        print(f"xaikit: {exc}", file=sys.stderr)
        return 1
    elapsed = time.monotonic() - started
    print(f"xaikit {args.command}: completed in {elapsed:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
