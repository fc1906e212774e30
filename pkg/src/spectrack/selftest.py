"""Built-in verification suite.

Checks the load-bearing numerical identities on small random instances:
recurrence-based filtering against a dense spectral-domain oracle, the k-hop
locality of polynomial filter bases against BFS hop counts, and the ridge
solver against an explicit dense normal-equations inverse. Exposed through
`spectrack selftest`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid_graph, regression, spectral_filter
from .grid_graph import LambdaMaxMode, NeighborhoodSpec, Pattern, Weighting


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _random_neighborhood(rng: np.random.Generator, max_dim: int) -> NeighborhoodSpec:
    pattern = rng.choice(list(Pattern))
    weighting = rng.choice(list(Weighting))
    sigma = float(rng.uniform(0.5, 3.0)) if weighting is Weighting.GAUSSIAN_DISTANCE else None
    if pattern in (Pattern.CASE1_4CONN, Pattern.CASE2_8CONN):
        skip = 1
    else:
        skip = int(rng.integers(2, max(3, max_dim - 1)))
    return NeighborhoodSpec(
        pattern=pattern, skip_step=skip, weighting=weighting, gaussian_sigma=sigma
    )


def random_grid_graph(rng: np.random.Generator, max_vertices: int = 64):
    """Random small lattice covering all patterns and both weightings."""
    while True:
        rows = int(rng.integers(3, 9))
        cols = int(rng.integers(3, 9))
        if rows * cols <= max_vertices:
            break
    spec = _random_neighborhood(rng, min(rows, cols))
    return grid_graph.build_grid_graph(rows, cols, spec)


def check_spectral_equivalence(
    seed: int = 0, n_graphs: int = 50, tol: float = 1e-8
) -> PropertyResult:
    """Recurrence filtering must match the dense eigendecomposition oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_graphs):
        graph = random_grid_graph(rng)
        lap = grid_graph.normalized_laplacian(graph)
        if i % 2 == 0:
            lam_max = grid_graph.estimate_lambda_max(lap, LambdaMaxMode.BOUND2)
        else:
            lam_max = grid_graph.estimate_lambda_max(
                lap, LambdaMaxMode.POWER_ITERATION, seed=seed + i
            )
        lap_tilde = grid_graph.scaled_laplacian(lap, lam_max)
        theta = rng.standard_normal(int(rng.integers(1, 9)))
        x = rng.standard_normal(graph.n_vertices)
        fast = spectral_filter.apply_filter(
            lap_tilde, x, spectral_filter.SpectralFilterSpec(theta)
        )
        slow = spectral_filter.spectral_oracle(
            lap, x, lambda lam: np.polynomial.chebyshev.chebval(2.0 * lam / lam_max - 1.0, theta)
        )
        worst = max(worst, float(np.abs(fast - slow).max()))
    passed = worst <= tol
    return PropertyResult(
        "spectral_equivalence", passed, f"max |recurrence - oracle| = {worst:.3e} (tol {tol:g})"
    )


def check_k_hop_locality(
    seed: int = 0, n_graphs: int = 10, max_order: int = 8, tol: float = 1e-12
) -> PropertyResult:
    """T_k responses to indicator signals must vanish beyond hop distance k."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_graphs):
        graph = random_grid_graph(rng)
        lap = grid_graph.normalized_laplacian(graph)
        lap_tilde = grid_graph.scaled_laplacian(lap, 2.0)
        n = graph.n_vertices
        stack = spectral_filter.chebyshev_responses(lap_tilde, np.eye(n), max_order)
        hops = np.stack([grid_graph.hop_distances_from(graph, i) for i in range(n)], axis=1)
        beyond = np.where(hops < 0, np.inf, hops)  # unreachable counts as infinitely far
        for k, block in enumerate(stack.blocks):
            leak = np.abs(block[beyond > k])
            if leak.size:
                worst = max(worst, float(leak.max()))
    passed = worst <= tol
    return PropertyResult(
        "k_hop_locality", passed, f"max leak beyond hop k = {worst:.3e} (tol {tol:g})"
    )


def check_ridge_oracle(
    seed: int = 0, n_instances: int = 100, tol: float = 1e-8, grad_tol: float = 1e-6
) -> PropertyResult:
    """fit_ridge must match a dense inverse and be first-order stationary."""
    rng = np.random.default_rng(seed)
    worst_w = 0.0
    worst_grad = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(5, 40))
        p = int(rng.integers(1, min(n, 12) + 1))
        F = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        gamma = float(rng.uniform(0.1, 5.0))
        w = regression.fit_ridge(F, y, gamma).weights
        w_oracle = np.linalg.inv(F.T @ F + gamma * np.eye(p)) @ (F.T @ y)
        grad = 2.0 * F.T @ (F @ w - y) + 2.0 * gamma * w
        worst_w = max(worst_w, float(np.abs(w - w_oracle).max()))
        worst_grad = max(worst_grad, float(np.abs(grad).max()))
    passed = worst_w <= tol and worst_grad <= grad_tol
    return PropertyResult(
        "ridge_oracle",
        passed,
        f"max |w - inverse oracle| = {worst_w:.3e} (tol {tol:g}), "
        f"max |objective gradient| = {worst_grad:.3e} (tol {grad_tol:g})",
    )


def run_selftest(seed: int = 0) -> list[PropertyResult]:
    return [
        check_spectral_equivalence(seed),
        check_k_hop_locality(seed),
        check_ridge_oracle(seed),
    ]
