"""xaikit: model-agnostic explainability and evaluation toolkit.

The package groups six concerns behind plain numpy interfaces:

- ``edm``: class activation maps from pooled feature stacks, box extraction
- ``mil``: sectioned top-k patient aggregation, noise-corrected losses,
  analytic gradients
- ``perturb``: LIME and kernel SHAP over superpixel perturbations of a
  black-box predictor
- ``segloss``: supervised and divergence-to-uniform segmentation losses
- ``latent``: PCA projection, fitted value landscapes, exact t-SNE
- ``metrics``: ROC/AUC, PR, confusion metrics, Dice

``arrayio`` carries the file formats (npy, PGM/PPM, CSV, canonical JSON)
and ``predictor`` the black-box subprocess protocol used by the CLI.
"""

__version__ = "0.1.0"

from .edm import (
    BoundingBox,
    SaliencyMap,
    activation_map,
    class_scores,
    extract_boxes,
    normalize_map,
)
from .latent import (
    LandscapeModel,
    TsneConfig,
    TsneResult,
    evaluate_grid,
    fit_landscape,
    init_landscape,
    project_2d,
    tsne_embed,
)
from .metrics import (
    ConfusionCounts,
    ConfusionMetrics,
    PrResult,
    RocResult,
    confusion_metrics,
    dice_score,
    max_accuracy_threshold,
    pr_curve,
    roc_auc,
)
from .mil import (
    LossBundle,
    MilConfig,
    NoiseHead,
    PatientSummary,
    aggregate_patient,
    classification_loss,
    noisy_loss,
    one_hot_label,
    partition_sections,
    patient_probability,
    section_probability,
    total_loss_with_gradients,
)
from .numerics import (
    PcaModel,
    global_average_pool,
    logit,
    pca_fit_project,
    pixel_shuffle,
    pixel_unshuffle,
    sigmoid,
    softmax,
    splitmix64,
    unit_floats,
    weighted_least_squares,
)
from .perturb import (
    Explanation,
    SuperpixelMap,
    apply_mask,
    exact_shapley,
    enumerate_proper_masks,
    fit_lime_surrogate,
    fit_shap_surrogate,
    grid_superpixels,
    kernel_shap_explain,
    lime_explain,
    sample_masks,
    shapley_kernel_weight,
)
from .predictor import (
    CallbackPredictor,
    PredictorError,
    StdioPredictor,
    SubprocessPredictor,
    validate_predictions,
)
from .segloss import (
    SegLossConfig,
    combined_loss,
    divergence_gradient,
    supervised_loss,
    uniform_divergence_loss,
)

__all__ = [
    "__version__",
    "BoundingBox",
    "SaliencyMap",
    "activation_map",
    "class_scores",
    "extract_boxes",
    "normalize_map",
    "LandscapeModel",
    "TsneConfig",
    "TsneResult",
    "evaluate_grid",
    "fit_landscape",
    "init_landscape",
    "project_2d",
    "tsne_embed",
    "ConfusionCounts",
    "ConfusionMetrics",
    "PrResult",
    "RocResult",
    "confusion_metrics",
    "dice_score",
    "max_accuracy_threshold",
    "pr_curve",
    "roc_auc",
    "LossBundle",
    "MilConfig",
    "NoiseHead",
    "PatientSummary",
    "aggregate_patient",
    "classification_loss",
    "noisy_loss",
    "one_hot_label",
    "partition_sections",
    "patient_probability",
    "section_probability",
    "total_loss_with_gradients",
    "PcaModel",
    "global_average_pool",
    "logit",
    "pca_fit_project",
    "pixel_shuffle",
    "pixel_unshuffle",
    "sigmoid",
    "softmax",
    "splitmix64",
    "unit_floats",
    "weighted_least_squares",
    "Explanation",
    "SuperpixelMap",
    "apply_mask",
    "exact_shapley",
    "enumerate_proper_masks",
    "fit_lime_surrogate",
    "fit_shap_surrogate",
    "grid_superpixels",
    "kernel_shap_explain",
    "lime_explain",
    "sample_masks",
    "shapley_kernel_weight",
    "CallbackPredictor",
    "PredictorError",
    "StdioPredictor",
    "SubprocessPredictor",
    "validate_predictions",
    "SegLossConfig",
    "combined_loss",
    "divergence_gradient",
    "supervised_loss",
    "uniform_divergence_loss",
]
