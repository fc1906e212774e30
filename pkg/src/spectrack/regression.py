"""Closed-form ridge regression on filter-response design matrices.

The filter coefficients and the feature projection are absorbed jointly
into a single weight vector of length K*d, solved from
(F^T F + gamma I) w = F^T y by a symmetric positive-definite factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularSystemError(np.linalg.LinAlgError):
    """Unregularized normal equations are rank-deficient."""


@dataclass(frozen=True, eq=False)
class RegressionModel:
    """Ridge weights over a block-major design matrix (K blocks of d columns)."""

    weights: np.ndarray
    order: int
    feature_dim: int
    gamma: float

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if weights.ndim != 1:
            raise ValueError(f"weights must be 1-D, got shape {weights.shape}")
        if self.order < 1 or self.feature_dim < 1:
            raise ValueError(f"invalid model dims K={self.order}, d={self.feature_dim}")
        if weights.size != self.order * self.feature_dim:
            raise ValueError(
                f"expected {self.order * self.feature_dim} weights "
                f"(K={self.order}, d={self.feature_dim}), got {weights.size}"
            )
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Gaussian regression target on a rows x cols grid, peak value exactly 1."""

    values: np.ndarray
    rows: int
    cols: int
    peak_index: int
    sigma: float


def gaussian_label_map(
    rows: int, cols: int, center: tuple[int, int], sigma: float
) -> LabelMap:
    """Gaussian bump exp(-((r-r0)^2 + (c-c0)^2) / (2 sigma^2)), row-major flattened."""
    r0, c0 = center
    if not (0 <= r0 < rows and 0 <= c0 < cols):
        raise ValueError(f"center {center} outside a {rows}x{cols} grid")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    rr = np.arange(rows, dtype=np.float64)[:, None] - float(r0)
    cc = np.arange(cols, dtype=np.float64)[None, :] - float(c0)
    values = np.exp(-(rr**2 + cc**2) / (2.0 * sigma**2)).ravel()
    return LabelMap(
        values=values, rows=rows, cols=cols, peak_index=r0 * cols + c0, sigma=float(sigma)
    )


def fit_ridge(F: np.ndarray, y: np.ndarray, gamma: float, *, order: int = 1) -> RegressionModel:
    """Solve w = (F^T F + gamma I)^{-1} F^T y without forming an inverse.

    Uses a Cholesky solve of the normal equations. gamma = 0 on a
    rank-deficient system raises SingularSystemError; with gamma > 0 the
    system is SPD by construction, so a factorization failure can only be
    numerical and falls back to a least-squares solve.
    """
    F = np.asarray(F, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError(f"F must be 2-D, got shape {F.shape}")
    if y.shape != (F.shape[0],):
        raise ValueError(f"y must have shape ({F.shape[0]},), got {y.shape}")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    n_cols = F.shape[1]
    if order < 1 or n_cols % order != 0:
        raise ValueError(f"F has {n_cols} columns, not divisible into order={order} blocks")

    gram = F.T @ F
    gram[np.diag_indices_from(gram)] += gamma
    rhs = F.T @ y
    try:
        weights = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), rhs)
    except np.linalg.LinAlgError as err:
        if gamma == 0:
            raise SingularSystemError(
                "normal equations are singular with gamma = 0; regularize or reduce K*d"
            ) from err
        weights, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    return RegressionModel(
        weights=weights, order=order, feature_dim=n_cols // order, gamma=float(gamma)
    )


def predict_response(F: np.ndarray, model: RegressionModel) -> np.ndarray:
    """Detection score F w."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] != model.weights.size:
        raise ValueError(
            f"F has shape {F.shape}, incompatible with {model.weights.size} weights"
        )
    return F @ model.weights


def locate_peak(response: np.ndarray, rows: int, cols: int) -> tuple[int, int]:
    """Grid coordinate of the maximum response; ties go to the smallest row-major index."""
    response = np.asarray(response)
    if response.shape != (rows * cols,):
        raise ValueError(f"response must have shape ({rows * cols},), got {response.shape}")
    return divmod(int(np.argmax(response)), cols)


def save_model(model: RegressionModel, path) -> None:
    """Text record: header "K d gamma", then K*d weights in block-major order."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{model.order} {model.feature_dim} {model.gamma!r}\n")
        for w in model.weights:
            fh.write(f"{float(w)!r}\n")


def load_model(path) -> RegressionModel:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: malformed model header {header!r}")
        order, feature_dim, gamma = int(header[0]), int(header[1]), float(header[2])
        weights = np.array([float(line) for line in fh if line.strip()])
    return RegressionModel(weights=weights, order=order, feature_dim=feature_dim, gamma=gamma)
