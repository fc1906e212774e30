"""Per-pixel feature channels for image patches, plus PCA reduction.

Channels are self-contained (raw intensity, raw color, gradient-orientation
histograms); any richer feature source can be swapped in behind the same
FeatureMap interface. Every channel is bilinearly resampled to a fixed odd
feature grid and standardized to zero mean / unit variance; the row-major
vertex order of FeatureMap.data matches the grid-graph convention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Rec. 601 luma coefficients.
_LUMA = np.array([0.299, 0.587, 0.114])


class Channel(enum.Enum):
    RAW_GRAY = "gray"
    RAW_COLOR = "color"
    GRADIENT_HISTOGRAM = "gradhist"


_CHANNEL_ORDER = {ch: i for i, ch in enumerate(Channel)}


@dataclass(frozen=True)
class FeatureSpec:
    """Channel selection and feature-grid geometry.

    `grid_size` must be odd so the grid has a unique center cell.
    """

    channels: tuple[Channel, ...] = (Channel.RAW_GRAY, Channel.GRADIENT_HISTOGRAM)
    grid_size: int = 57
    hog_bins: int = 9
    hog_cell: int = 4

    def __post_init__(self) -> None:
        chans = tuple(sorted(set(self.channels), key=_CHANNEL_ORDER.__getitem__))
        if not chans:
            raise ValueError("at least one feature channel is required")
        object.__setattr__(self, "channels", chans)
        if self.grid_size < 1 or self.grid_size % 2 == 0:
            raise ValueError(f"grid_size must be odd and positive, got {self.grid_size}")
        if self.hog_bins < 1:
            raise ValueError(f"hog_bins must be positive, got {self.hog_bins}")
        if self.hog_cell < 1:
            raise ValueError(f"hog_cell must be positive, got {self.hog_cell}")

    @property
    def feature_dim(self) -> int:
        d = 0
        for ch in self.channels:
            d += {Channel.RAW_GRAY: 1, Channel.RAW_COLOR: 3}.get(ch, self.hog_bins)
        return d


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """(rows*cols) x d feature matrix in row-major vertex order."""

    rows: int
    cols: int
    data: np.ndarray

    @property
    def feature_dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class PcaProjection:
    """Frozen linear projection: x -> (x - mean) @ basis."""

    mean: np.ndarray
    basis: np.ndarray
    explained_variance: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _bilinear_resize(img: np.ndarray, out_rows: int, out_cols: int) -> np.ndarray:
    """Align-corners bilinear resampling; exact identity when sizes match."""
    in_rows, in_cols = img.shape
    r_pos = np.linspace(0.0, in_rows - 1.0, out_rows) if in_rows > 1 else np.zeros(out_rows)
    c_pos = np.linspace(0.0, in_cols - 1.0, out_cols) if in_cols > 1 else np.zeros(out_cols)
    r0 = np.floor(r_pos).astype(int)
    c0 = np.floor(c_pos).astype(int)
    r1 = np.minimum(r0 + 1, in_rows - 1)
    c1 = np.minimum(c0 + 1, in_cols - 1)
    tr = (r_pos - r0)[:, None]
    tc = (c_pos - c0)[None, :]
    # a + t*(b - a) form stays exact on constant inputs and at t = 0.
    top = img[np.ix_(r0, c0)]
    rows_interp = top + tr * (img[np.ix_(r1, c0)] - top)
    right = img[np.ix_(r0, c1)] + tr * (img[np.ix_(r1, c1)] - img[np.ix_(r0, c1)])
    return rows_interp + tc * (right - rows_interp)


def _standardize(channel: np.ndarray) -> np.ndarray:
    sd = float(channel.std())
    if sd == 0.0:
        return np.zeros_like(channel)
    return (channel - channel.mean()) / sd


def _to_gray(patch: np.ndarray) -> np.ndarray:
    if patch.ndim == 2:
        return patch
    return patch @ _LUMA


def _gradient_histogram_cells(gray: np.ndarray, n_bins: int, cell: int) -> np.ndarray:
    """Soft-binned orientation histograms averaged over cell x cell blocks.

    Orientations are unsigned (mod pi) and magnitude-weighted; each pixel
    votes into its two nearest bins with linear weights. Returns an array of
    shape (n_cell_rows, n_cell_cols, n_bins).
    """
    h, w = gray.shape
    if h < 2 or w < 2:
        return np.zeros((1, 1, n_bins))
    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    ori = np.mod(np.arctan2(gy, gx), np.pi)
    pos = ori / np.pi * n_bins
    b0 = np.minimum(np.floor(pos).astype(int), n_bins - 1)
    frac = pos - b0
    b1 = (b0 + 1) % n_bins

    votes = np.zeros((h, w, n_bins))
    for b in range(n_bins):
        votes[:, :, b] = mag * ((b0 == b) * (1.0 - frac) + (b1 == b) * frac)

    r_starts = np.arange(0, h, cell)
    c_starts = np.arange(0, w, cell)
    sums = np.add.reduceat(np.add.reduceat(votes, r_starts, axis=0), c_starts, axis=1)
    r_counts = np.diff(np.append(r_starts, h))
    c_counts = np.diff(np.append(c_starts, w))
    counts = np.outer(r_counts, c_counts)[:, :, None].astype(float)
    return sums / counts


def extract_features(patch: np.ndarray, spec: FeatureSpec | None = None) -> FeatureMap:
    """Compute the selected channels on a patch and resample to the feature grid.

    Accepts 8-bit or float images, (H, W) grayscale or (H, W, 3) color. A
    grayscale input fills RAW_COLOR with the intensity replicated 3x so the
    feature dimension never depends on the source image mode. Constant
    channels standardize to all-zeros.
    """
    if spec is None:
        spec = FeatureSpec()
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim == 3 and patch.shape[2] != 3:
        raise ValueError(f"color patches must have 3 channels, got {patch.shape[2]}")
    if patch.ndim not in (2, 3) or patch.shape[0] < 1 or patch.shape[1] < 1:
        raise ValueError(f"empty or malformed patch with shape {patch.shape}")

    gray = _to_gray(patch)
    g = spec.grid_size
    planes: list[np.ndarray] = []
    for ch in spec.channels:
        if ch is Channel.RAW_GRAY:
            planes.append(_bilinear_resize(gray, g, g))
        elif ch is Channel.RAW_COLOR:
            color = patch if patch.ndim == 3 else np.repeat(gray[:, :, None], 3, axis=2)
            planes.extend(_bilinear_resize(color[:, :, c], g, g) for c in range(3))
        else:
            cells = _gradient_histogram_cells(gray, spec.hog_bins, spec.hog_cell)
            planes.extend(
                _bilinear_resize(cells[:, :, b], g, g) for b in range(spec.hog_bins)
            )

    data = np.column_stack([_standardize(p).ravel() for p in planes])
    return FeatureMap(rows=g, cols=g, data=data)


def fit_pca(X: np.ndarray, d_target: int) -> PcaProjection:
    """Top-`d_target` principal directions of the centered rows of X.

    The basis columns are orthonormal; signs are fixed deterministically
    (largest-magnitude loading positive) so repeated fits are identical.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if not (1 <= d_target <= min(n, d)):
        raise ValueError(f"d_target must be in [1, {min(n, d)}] for a {n}x{d} matrix, got {d_target}")
    mean = X.mean(axis=0)
    _, svals, vt = np.linalg.svd(X - mean, full_matrices=False)
    basis = vt[:d_target].T.copy()
    flip = basis[np.argmax(np.abs(basis), axis=0), np.arange(d_target)] < 0
    basis[:, flip] *= -1.0
    explained = (svals[:d_target] ** 2) / max(n - 1, 1)
    return PcaProjection(mean=mean, basis=basis, explained_variance=explained)


def project(X: np.ndarray, proj: PcaProjection) -> np.ndarray:
    """(X - mean) @ basis."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != proj.mean.size:
        raise ValueError(f"X has shape {X.shape}, expected (*, {proj.mean.size})")
    return (X - proj.mean) @ proj.basis
