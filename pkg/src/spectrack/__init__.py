"""spectrack: visual tracking with spectral graph filters on pixel lattices.

The candidate region around a target is modeled as a grid graph; localized
filter responses are obtained from Chebyshev polynomials of the scaled
normalized Laplacian and regressed against a Gaussian peak map in closed
form. Tracking reduces to scoring each frame's candidate region and reading
off the peak, with a multiplicative scale pyramid on top.
"""

__version__ = "0.1.0"

from .features import Channel, FeatureMap, FeatureSpec, PcaProjection, extract_features, fit_pca, project
from .grid_graph import (
    GridGraph,
    LambdaMaxMode,
    LaplacianKind,
    LaplacianOperator,
    NeighborhoodSpec,
    Pattern,
    Weighting,
    build_grid_graph,
    estimate_lambda_max,
    hop_distance,
    normalized_laplacian,
    scaled_laplacian,
)
from .regression import (
    LabelMap,
    RegressionModel,
    fit_ridge,
    gaussian_label_map,
    locate_peak,
    predict_response,
)
from .spectral_filter import (
    FilterResponseStack,
    SpectralFilterSpec,
    apply_filter,
    chebyshev_responses,
    design_matrix,
    spectral_oracle,
)
from .tracker import (
    BoundingBox,
    TrackerConfig,
    TrackerState,
    estimate_scale,
    filter_order_for_target,
    init_tracker,
    track_frame,
    update_model,
)
from .evaluation import (
    EvaluationResult,
    Sequence,
    center_location_error,
    evaluate,
    load_sequence,
    overlap_ratio,
    precision_at,
    precision_curve,
    success_auc,
    success_curve,
)

__all__ = [
    "__version__",
    "BoundingBox",
    "Channel",
    "EvaluationResult",
    "FeatureMap",
    "FeatureSpec",
    "FilterResponseStack",
    "GridGraph",
    "LabelMap",
    "LambdaMaxMode",
    "LaplacianKind",
    "LaplacianOperator",
    "NeighborhoodSpec",
    "Pattern",
    "PcaProjection",
    "RegressionModel",
    "Sequence",
    "SpectralFilterSpec",
    "TrackerConfig",
    "TrackerState",
    "Weighting",
    "apply_filter",
    "build_grid_graph",
    "center_location_error",
    "chebyshev_responses",
    "design_matrix",
    "estimate_lambda_max",
    "estimate_scale",
    "evaluate",
    "extract_features",
    "filter_order_for_target",
    "fit_pca",
    "fit_ridge",
    "gaussian_label_map",
    "hop_distance",
    "init_tracker",
    "load_sequence",
    "locate_peak",
    "normalized_laplacian",
    "overlap_ratio",
    "precision_at",
    "precision_curve",
    "predict_response",
    "project",
    "scaled_laplacian",
    "spectral_oracle",
    "success_auc",
    "success_curve",
    "track_frame",
    "update_model",
]
