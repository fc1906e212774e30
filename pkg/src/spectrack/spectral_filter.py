"""Chebyshev polynomial filters on graph Laplacians.

Filter responses T_k(L~) X are computed with the three-term recurrence
T_k = 2 L~ T_{k-1} - T_{k-2} using sparse matrix-vector products only; the
polynomial of the operator is never formed densely, which also preserves
k-hop locality implicitly. A dense spectral-domain oracle is provided for
verification on small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid_graph import LaplacianKind, LaplacianOperator

DENSE_ORACLE_CAP = 4096


@dataclass(frozen=True, eq=False)
class FilterResponseStack:
    """Per-order response blocks Z_k = T_k(L~) X, k = 0..K-1."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("a response stack needs at least one block")
        shape = self.blocks[0].shape
        if any(b.shape != shape for b in self.blocks):
            raise ValueError("all response blocks must share one shape")

    @property
    def order(self) -> int:
        return len(self.blocks)

    @property
    def n_vertices(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def feature_dim(self) -> int:
        return self.blocks[0].shape[1]


@dataclass(frozen=True, eq=False)
class SpectralFilterSpec:
    """Chebyshev coefficient vector theta; order K = len(theta)."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta must be a non-empty 1-D coefficient vector")
        object.__setattr__(self, "theta", theta)

    @property
    def order(self) -> int:
        return self.theta.size


def _check_scaled(lap_tilde: LaplacianOperator, n_rows: int) -> None:
    if lap_tilde.kind is not LaplacianKind.SCALED_SHIFTED:
        raise ValueError(f"expected a scaled-shifted Laplacian, got kind={lap_tilde.kind.value}")
    if lap_tilde.n != n_rows:
        raise ValueError(f"operator is {lap_tilde.n}x{lap_tilde.n} but signal has {n_rows} rows")


def chebyshev_responses(lap_tilde: LaplacianOperator, X: np.ndarray, K: int) -> FilterResponseStack:
    """Compute the K response blocks T_0(L~)X .. T_{K-1}(L~)X by recurrence."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D (n_vertices x d), got shape {X.shape}")
    _check_scaled(lap_tilde, X.shape[0])
    if K < 1:
        raise ValueError(f"filter order K must be >= 1, got {K}")

    blocks = [X.copy()]
    if K >= 2:
        blocks.append(lap_tilde.matrix @ X)
    for _ in range(2, K):
        blocks.append(2.0 * (lap_tilde.matrix @ blocks[-1]) - blocks[-2])
    return FilterResponseStack(blocks=tuple(blocks))


def apply_filter(
    lap_tilde: LaplacianOperator, x: np.ndarray, spec: SpectralFilterSpec
) -> np.ndarray:
    """Filter an n-vector: sum_k theta_k T_k(L~) x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"x must be a 1-D signal, got shape {x.shape}")
    _check_scaled(lap_tilde, x.shape[0])

    theta = spec.theta
    out = theta[0] * x
    if spec.order == 1:
        return out
    t_prev, t_cur = x, lap_tilde.matrix @ x
    out = out + theta[1] * t_cur
    for k in range(2, spec.order):
        t_prev, t_cur = t_cur, 2.0 * (lap_tilde.matrix @ t_cur) - t_prev
        out = out + theta[k] * t_cur
    return out


def spectral_oracle(
    lap: LaplacianOperator,
    x: np.ndarray,
    ghat: Callable[[float], float],
    *,
    dense_cap: int = DENSE_ORACLE_CAP,
) -> np.ndarray:
    """Exact spectral-domain filtering U diag(ghat(lambda)) U^T x.

    Test-only verification path: runs a full dense eigendecomposition of a
    normalized Laplacian, so it is capped at `dense_cap` vertices.
    """
    x = np.asarray(x, dtype=np.float64)
    if lap.kind is not LaplacianKind.NORMALIZED:
        raise ValueError(f"expected a normalized Laplacian, got kind={lap.kind.value}")
    if lap.n > dense_cap:
        raise ValueError(f"graph has {lap.n} vertices, above the dense oracle cap {dense_cap}")
    if x.shape != (lap.n,):
        raise ValueError(f"x must have shape ({lap.n},), got {x.shape}")
    evals, evecs = np.linalg.eigh(lap.matrix.toarray())
    gains = np.array([float(ghat(lam)) for lam in evals])
    return evecs @ (gains * (evecs.T @ x))


def design_matrix(stack: FilterResponseStack) -> np.ndarray:
    """Concatenate the response blocks into the n x (K*d) regression design.

    Column layout is block-major: all d columns of order 0, then order 1, ...
    RegressionModel weights follow the same layout.
    """
    return np.hstack(stack.blocks)
