"""Frame-by-frame tracking loop.

Per frame: crop the candidate region around the previous center, extract and
project features, assemble the filter-response design matrix, score it with
the running model to find the new center, search a multiplicative scale
pyramid, refit the model at the new location, and blend it into the running
model with an exponential moving average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .features import FeatureSpec, PcaProjection, extract_features, fit_pca, project
from .grid_graph import (
    GridGraph,
    LambdaMaxMode,
    LaplacianOperator,
    NeighborhoodSpec,
    build_grid_graph,
    estimate_lambda_max,
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
from .spectral_filter import chebyshev_responses, design_matrix


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left (x, y) and size (w, h), in image pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + (self.w - 1.0) / 2.0, self.y + (self.h - 1.0) / 2.0)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        return cls(x=cx - (w - 1.0) / 2.0, y=cy - (h - 1.0) / 2.0, w=w, h=h)


@dataclass(frozen=True)
class TrackerConfig:
    neighborhood: NeighborhoodSpec = NeighborhoodSpec()
    feature_spec: FeatureSpec = FeatureSpec()
    gamma: float = 1.0
    alpha: float = 0.01
    search_factor: float = 2.4
    label_sigma_ratio: float = 0.1
    scale_count: int = 33
    scale_step: float = 1.02
    lambda_max_mode: LambdaMaxMode = LambdaMaxMode.BOUND2
    k_cap: int = 60
    pca_dim: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if self.scale_count < 1 or self.scale_count % 2 == 0:
            raise ValueError(f"scale_count must be odd and positive, got {self.scale_count}")
        if not self.scale_step > 1.0:
            raise ValueError(f"scale_step must exceed 1, got {self.scale_step}")
        if not self.search_factor > 0:
            raise ValueError(f"search_factor must be positive, got {self.search_factor}")
        if not self.label_sigma_ratio > 0:
            raise ValueError(f"label_sigma_ratio must be positive, got {self.label_sigma_ratio}")
        if self.k_cap < 1:
            raise ValueError(f"k_cap must be positive, got {self.k_cap}")
        if self.pca_dim < 1:
            raise ValueError(f"pca_dim must be positive, got {self.pca_dim}")


@dataclass
class TrackerState:
    """Mutable per-sequence state; owned by a single logical thread."""

    center: tuple[float, float]
    target_size: tuple[float, float]  # (h, w)
    scale: float
    model: RegressionModel
    pca: PcaProjection
    graph: GridGraph
    lap_tilde: LaplacianOperator
    label: LabelMap
    frame_index: int
    config: TrackerConfig


def filter_order_for_target(h: int, w: int, skip_step: int, k_cap: int) -> int:
    """Order K = ceil(max(h, w) / skip_step), capped; skip_step 1 gives max(h, w).

    h and w are the target extents in feature-grid cells, so the largest
    filter basis spans the whole target region.
    """
    if h < 1 or w < 1:
        raise ValueError(f"target extent must be >= 1 cell, got {h}x{w}")
    if skip_step < 1:
        raise ValueError(f"skip_step must be positive, got {skip_step}")
    return max(1, min(k_cap, -(-max(h, w) // skip_step)))


def _axis_positions(center: float, span: float, count: int) -> np.ndarray:
    if count == 1:
        return np.array([center])
    start = center - (span - 1.0) / 2.0
    return start + np.arange(count) * ((span - 1.0) / (count - 1))


def _sample_bilinear(frame: np.ndarray, r_pos: np.ndarray, c_pos: np.ndarray) -> np.ndarray:
    """Bilinear gather at arbitrary positions; positions outside the frame clamp
    to the border, which realizes edge replication."""
    h, w = frame.shape[0], frame.shape[1]
    r_pos = np.clip(r_pos, 0.0, h - 1.0)
    c_pos = np.clip(c_pos, 0.0, w - 1.0)
    r0 = np.floor(r_pos).astype(int)
    c0 = np.floor(c_pos).astype(int)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    tr = r_pos - r0
    tc = c_pos - c0
    if frame.ndim == 3:
        tr = tr[:, None, None]
        tc = tc[None, :, None]
    else:
        tr = tr[:, None]
        tc = tc[None, :]
    frame = frame.astype(np.float64, copy=False)
    top_left = frame[np.ix_(r0, c0)]
    left_col = top_left + tr * (frame[np.ix_(r1, c0)] - top_left)
    top_right = frame[np.ix_(r0, c1)]
    right_col = top_right + tr * (frame[np.ix_(r1, c1)] - top_right)
    return left_col + tc * (right_col - left_col)


def _crop(
    frame: np.ndarray, center: tuple[float, float], size_hw: tuple[float, float]
) -> tuple[np.ndarray, float, float, float, float]:
    """Sub-pixel crop of a float-sized window centered exactly on `center`.

    The window is sampled bilinearly at ~native resolution, so the patch is a
    smooth function of center and size (no integer-snap jumps between nearby
    candidate windows). Out-of-frame samples replicate the border. Returns
    (patch, top, left, span_h, span_w) with the float window geometry.
    """
    cx, cy = center
    span_h = max(float(size_hw[0]), 1.0)
    span_w = max(float(size_hw[1]), 1.0)
    n_rows = max(1, int(round(span_h)))
    n_cols = max(1, int(round(span_w)))
    r_pos = _axis_positions(cy, span_h, n_rows)
    c_pos = _axis_positions(cx, span_w, n_cols)
    patch = _sample_bilinear(frame, r_pos, c_pos)
    return patch, cy - (span_h - 1.0) / 2.0, cx - (span_w - 1.0) / 2.0, span_h, span_w


def _grid_to_image(
    peak: tuple[int, int], top: float, left: float, span_h: float, span_w: float, grid: int
) -> tuple[float, float]:
    """Map a feature-grid cell back to image coordinates (cell-center convention)."""
    pr, pc = peak
    y = top + (pr * (span_h - 1.0) / (grid - 1) if grid > 1 else (span_h - 1.0) / 2.0)
    x = left + (pc * (span_w - 1.0) / (grid - 1) if grid > 1 else (span_w - 1.0) / 2.0)
    return x, y


def _search_size(target_size: tuple[float, float], factor: float) -> tuple[float, float]:
    return (target_size[0] * factor, target_size[1] * factor)


def _design_at(
    frame: np.ndarray,
    center: tuple[float, float],
    target_size: tuple[float, float],
    config: TrackerConfig,
    pca: PcaProjection,
    lap_tilde: LaplacianOperator,
    order: int,
) -> tuple[np.ndarray, tuple[int, int, int, int]]:
    patch, top, left, crop_h, crop_w = _crop(
        frame, center, _search_size(target_size, config.search_factor)
    )
    fmap = extract_features(patch, config.feature_spec)
    X = project(fmap.data, pca)
    F = design_matrix(chebyshev_responses(lap_tilde, X, order))
    return F, (top, left, crop_h, crop_w)


def _grid_extent_cells(target_size: tuple[float, float], config: TrackerConfig) -> tuple[int, int]:
    """Target extent mapped onto the feature lattice, in whole cells (>= 1)."""
    g = config.feature_spec.grid_size
    span_h = max(target_size[0] * config.search_factor, 1.0)
    span_w = max(target_size[1] * config.search_factor, 1.0)
    h_cells = max(1, math.ceil(target_size[0] / span_h * g))
    w_cells = max(1, math.ceil(target_size[1] / span_w * g))
    return h_cells, w_cells


def init_tracker(frame: np.ndarray, bbox: BoundingBox, config: TrackerConfig | None = None) -> TrackerState:
    """Build the graph, fit PCA and the first model from the initial box."""
    if config is None:
        config = TrackerConfig()
    frame = np.asarray(frame)
    fh, fw = frame.shape[0], frame.shape[1]
    if bbox.w < 1 or bbox.h < 1:
        raise ValueError(f"degenerate initial box {bbox}")
    if bbox.x < 0 or bbox.y < 0 or bbox.x + bbox.w > fw or bbox.y + bbox.h > fh:
        raise ValueError(f"initial box {bbox} outside a {fh}x{fw} frame")

    center = bbox.center
    target_size = (float(bbox.h), float(bbox.w))
    g = config.feature_spec.grid_size

    patch, *_ = _crop(frame, center, _search_size(target_size, config.search_factor))
    fmap = extract_features(patch, config.feature_spec)
    d_raw = fmap.feature_dim
    pca = fit_pca(fmap.data, min(config.pca_dim, d_raw, fmap.data.shape[0]))
    X = project(fmap.data, pca)

    graph = build_grid_graph(g, g, config.neighborhood)
    lap = normalized_laplacian(graph)
    lam_max = estimate_lambda_max(lap, config.lambda_max_mode, seed=config.seed)
    lap_tilde = scaled_laplacian(lap, lam_max)

    h_cells, w_cells = _grid_extent_cells(target_size, config)
    order = filter_order_for_target(
        h_cells, w_cells, config.neighborhood.skip_step, config.k_cap
    )
    label = gaussian_label_map(
        g, g, ((g - 1) // 2, (g - 1) // 2), config.label_sigma_ratio * max(h_cells, w_cells)
    )

    F = design_matrix(chebyshev_responses(lap_tilde, X, order))
    model = fit_ridge(F, label.values, config.gamma, order=order)
    return TrackerState(
        center=center,
        target_size=target_size,
        scale=1.0,
        model=model,
        pca=pca,
        graph=graph,
        lap_tilde=lap_tilde,
        label=label,
        frame_index=1,
        config=config,
    )


def update_model(w_old: RegressionModel, w_t: RegressionModel, alpha: float) -> RegressionModel:
    """Exponential moving average w <- (1 - alpha) w + alpha w_t."""
    if w_old.weights.size != w_t.weights.size:
        raise ValueError(
            f"model size mismatch: {w_old.weights.size} vs {w_t.weights.size}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0.0:
        return w_old
    if alpha == 1.0:
        return w_t
    return replace(w_t, weights=(1.0 - alpha) * w_old.weights + alpha * w_t.weights)


def estimate_scale(state: TrackerState, frame: np.ndarray) -> float:
    """Pick the best of S multiplicative scale candidates a^r around the center.

    Each candidate crop is rescored with the current model (features
    re-extracted per scale); the candidate with the highest peak response
    wins, ties going to the smallest r. Updates target_size and the
    cumulative scale multiplicatively and returns the chosen factor.
    """
    config = state.config
    if config.scale_count == 1:
        return 1.0
    half = (config.scale_count - 1) // 2
    best_r = None
    best_peak = -np.inf
    for r in range(-half, half + 1):
        factor = config.scale_step**r
        size = (state.target_size[0] * factor, state.target_size[1] * factor)
        F, _ = _design_at(
            frame, state.center, size, config, state.pca, state.lap_tilde, state.model.order
        )
        peak = float(predict_response(F, state.model).max())
        if peak > best_peak:
            best_peak = peak
            best_r = r
    multiplier = float(config.scale_step**best_r)
    state.target_size = (state.target_size[0] * multiplier, state.target_size[1] * multiplier)
    state.scale *= multiplier
    return multiplier


def track_frame(state: TrackerState, frame: np.ndarray) -> tuple[TrackerState, BoundingBox]:
    """Advance the tracker by one frame; returns the state and the new box."""
    frame = np.asarray(frame)
    config = state.config
    g = config.feature_spec.grid_size

    F, geom = _design_at(
        frame, state.center, state.target_size, config, state.pca, state.lap_tilde,
        state.model.order,
    )
    response = predict_response(F, state.model)
    peak = locate_peak(response, g, g)
    cx, cy = _grid_to_image(peak, *geom, g)
    state.center = (
        min(max(cx, 0.0), frame.shape[1] - 1.0),
        min(max(cy, 0.0), frame.shape[0] - 1.0),
    )

    estimate_scale(state, frame)

    F_train, _ = _design_at(
        frame, state.center, state.target_size, config, state.pca, state.lap_tilde,
        state.model.order,
    )
    w_t = fit_ridge(F_train, state.label.values, config.gamma, order=state.model.order)
    state.model = update_model(state.model, w_t, config.alpha)
    state.frame_index += 1

    h, w = state.target_size
    bbox = BoundingBox.from_center(state.center[0], state.center[1], w, h)
    return state, bbox
