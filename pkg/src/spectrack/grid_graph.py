"""Pixel-lattice graphs and the Laplacian operators built from them.

Vertices are the cells of an H x W grid in row-major, 0-based order
(vertex i sits at row i // W, column i % W). Edges connect spatially
nearby cells according to a neighborhood pattern; weights are either
{0,1} or a Gaussian of the Euclidean pixel distance.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class Pattern(enum.Enum):
    """Neighborhood patterns, from densest to widest-skipping."""

    CASE1_4CONN = "case1"
    CASE2_8CONN = "case2"
    CASE3_SKIP4CONN = "case3"
    CASE4_SKIP4CONN_WIDE = "case4"


class Weighting(enum.Enum):
    BINARY01 = "binary"
    GAUSSIAN_DISTANCE = "gaussian"


class LaplacianKind(enum.Enum):
    COMBINATORIAL = "combinatorial"
    NORMALIZED = "normalized"
    SCALED_SHIFTED = "scaled_shifted"


class LambdaMaxMode(enum.Enum):
    BOUND2 = "bound2"
    POWER_ITERATION = "power"


class NonConvergenceError(RuntimeError):
    """Power iteration hit its iteration cap without converging."""


_DEFAULT_SKIP = {
    Pattern.CASE1_4CONN: 1,
    Pattern.CASE2_8CONN: 1,
    Pattern.CASE3_SKIP4CONN: 2,
    Pattern.CASE4_SKIP4CONN_WIDE: 3,
}


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Which cells count as neighbors and how their edges are weighted.

    `skip_step` is the lattice distance between connected cells: fixed at 1
    for the dense patterns (case1/case2), >= 2 for the skipping patterns
    (default 2 for case3, 3 for case4). `gaussian_sigma` is only used with
    Gaussian weighting and defaults to `skip_step`.
    """

    pattern: Pattern = Pattern.CASE3_SKIP4CONN
    skip_step: int | None = None
    weighting: Weighting = Weighting.BINARY01
    gaussian_sigma: float | None = None

    def __post_init__(self) -> None:
        if self.skip_step is None:
            object.__setattr__(self, "skip_step", _DEFAULT_SKIP[self.pattern])
        if not isinstance(self.skip_step, (int, np.integer)) or self.skip_step < 1:
            raise ValueError(f"skip_step must be a positive integer, got {self.skip_step!r}")
        dense = self.pattern in (Pattern.CASE1_4CONN, Pattern.CASE2_8CONN)
        if dense and self.skip_step != 1:
            raise ValueError(f"{self.pattern.value} requires skip_step = 1, got {self.skip_step}")
        if not dense and self.skip_step < 2:
            raise ValueError(f"{self.pattern.value} requires skip_step >= 2, got {self.skip_step}")
        if self.gaussian_sigma is None and self.weighting is Weighting.GAUSSIAN_DISTANCE:
            object.__setattr__(self, "gaussian_sigma", float(self.skip_step))
        if self.gaussian_sigma is not None and not self.gaussian_sigma > 0:
            raise ValueError(f"gaussian_sigma must be positive, got {self.gaussian_sigma!r}")


@dataclass(frozen=True, eq=False)
class GridGraph:
    """An H x W lattice with a sparse symmetric nonnegative adjacency."""

    rows: int
    cols: int
    adjacency: sp.csr_matrix
    spec: NeighborhoodSpec

    @property
    def n_vertices(self) -> int:
        return self.rows * self.cols

    def vertex_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"({row}, {col}) outside a {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def vertex_coords(self, index: int) -> tuple[int, int]:
        if not (0 <= index < self.n_vertices):
            raise IndexError(f"vertex {index} outside a {self.rows}x{self.cols} grid")
        return divmod(index, self.cols)

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()


@dataclass(frozen=True, eq=False)
class LaplacianOperator:
    """Sparse symmetric Laplacian with a tag for which variant it is.

    `lambda_max` records the spectral-max estimate attached to the operator:
    for a SCALED_SHIFTED operator it is the value used in the scaling.
    """

    matrix: sp.csr_matrix
    kind: LaplacianKind
    lambda_max: float | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _half_offsets(spec: NeighborhoodSpec) -> list[tuple[int, int]]:
    # One offset per undirected edge orbit; the mirror is added when
    # symmetrizing. case2 needs both diagonal directions explicitly.
    if spec.pattern is Pattern.CASE2_8CONN:
        return [(1, 0), (0, 1), (1, 1), (1, -1)]
    s = spec.skip_step
    return [(s, 0), (0, s)]


def build_grid_graph(rows: int, cols: int, spec: NeighborhoodSpec | None = None) -> GridGraph:
    """Construct the lattice graph for an `rows` x `cols` grid.

    case1 connects each cell to its 4 axis-aligned neighbors, case2 adds the
    4 diagonals, case3/case4 connect axis-aligned neighbors `skip_step` cells
    away. Boundary cells simply have fewer neighbors (no wraparound).
    """
    if spec is None:
        spec = NeighborhoodSpec()
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    if min(rows, cols) > 1 and spec.skip_step >= min(rows, cols):
        raise ValueError(
            f"skip_step {spec.skip_step} would degenerately disconnect a {rows}x{cols} grid"
        )

    n = rows * cols
    src: list[np.ndarray] = []
    dst: list[np.ndarray] = []
    wgt: list[np.ndarray] = []
    for dr, dc in _half_offsets(spec):
        r_lo, r_hi = max(0, -dr), rows - max(0, dr)
        c_lo, c_hi = max(0, -dc), cols - max(0, dc)
        if r_lo >= r_hi or c_lo >= c_hi:
            continue
        rr, cc = np.mgrid[r_lo:r_hi, c_lo:c_hi]
        i = (rr * cols + cc).ravel()
        j = ((rr + dr) * cols + (cc + dc)).ravel()
        if spec.weighting is Weighting.BINARY01:
            w = np.ones(i.size)
        else:
            dist2 = float(dr * dr + dc * dc)
            w = np.full(i.size, np.exp(-dist2 / (2.0 * spec.gaussian_sigma**2)))
        src.append(i)
        dst.append(j)
        wgt.append(w)

    if not src:
        adjacency = sp.csr_matrix((n, n))
    else:
        i = np.concatenate(src)
        j = np.concatenate(dst)
        w = np.concatenate(wgt)
        # Each undirected edge appears exactly once above; mirroring the
        # triplets makes W = W^T bitwise.
        adjacency = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        ).tocsr()
    return GridGraph(rows=rows, cols=cols, adjacency=adjacency, spec=spec)


def combinatorial_laplacian(graph: GridGraph) -> LaplacianOperator:
    """L = D - W."""
    lap = sp.diags(graph.degrees()) - graph.adjacency
    return LaplacianOperator(matrix=lap.tocsr(), kind=LaplacianKind.COMBINATORIAL)


def normalized_laplacian(graph: GridGraph) -> LaplacianOperator:
    """Symmetric normalized Laplacian I - D^{-1/2} W D^{-1/2}.

    Isolated vertices get a zero row/column (their D^{-1/2} entry is taken
    as 0), which keeps the operator PSD with spectrum in [0, 2].
    """
    deg = graph.degrees()
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    d_half = sp.diags(inv_sqrt)
    eye_connected = sp.diags((deg > 0).astype(float))
    lap = eye_connected - d_half @ graph.adjacency @ d_half
    lap = ((lap + lap.T) * 0.5).tocsr()  # kill last-ulp asymmetry from the scaling products
    return LaplacianOperator(matrix=lap, kind=LaplacianKind.NORMALIZED)


def scaled_laplacian(lap: LaplacianOperator, lambda_max: float) -> LaplacianOperator:
    """Affine rescaling (2/lambda_max) L - I, mapping [0, lambda_max] onto [-1, 1]."""
    if lap.kind is not LaplacianKind.NORMALIZED:
        raise ValueError(f"expected a normalized Laplacian, got kind={lap.kind.value}")
    if not lambda_max > 0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max!r}")
    n = lap.n
    matrix = ((2.0 / lambda_max) * lap.matrix - sp.identity(n, format="csr")).tocsr()
    return LaplacianOperator(matrix=matrix, kind=LaplacianKind.SCALED_SHIFTED, lambda_max=float(lambda_max))


def estimate_lambda_max(
    lap: LaplacianOperator,
    mode: LambdaMaxMode = LambdaMaxMode.BOUND2,
    *,
    seed: int = 0,
    max_iter: int = 50_000,
    rtol: float = 1e-12,
) -> float:
    """Spectral-max estimate for a normalized Laplacian.

    BOUND2 returns the constant 2 (always an upper bound). POWER_ITERATION
    runs a seeded Rayleigh-quotient power iteration; the converged value is
    inflated by a relative 1e-7 so that downstream scaling keeps the spectrum
    inside [-1, 1] even though the Rayleigh quotient approaches the true
    maximum from below.
    """
    if lap.kind is not LaplacianKind.NORMALIZED:
        raise ValueError(f"expected a normalized Laplacian, got kind={lap.kind.value}")
    if mode is LambdaMaxMode.BOUND2:
        return 2.0

    matrix = lap.matrix
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(lap.n)
    v /= np.linalg.norm(v)
    lam_prev = np.inf
    for _ in range(max_iter):
        w = matrix @ v
        lam = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0  # edgeless graph: the operator is identically zero
        v = w / norm_w
        if abs(lam - lam_prev) <= rtol * max(abs(lam), 1e-30):
            return lam * (1.0 + 1e-7)
        lam_prev = lam
    raise NonConvergenceError(f"power iteration did not converge within {max_iter} iterations")


def hop_distances_from(graph: GridGraph, source: int) -> np.ndarray:
    """BFS hop counts from `source` to every vertex; -1 marks unreachable."""
    n = graph.n_vertices
    if not (0 <= source < n):
        raise IndexError(f"vertex {source} outside a {graph.rows}x{graph.cols} grid")
    indptr = graph.adjacency.indptr
    indices = graph.adjacency.indices
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in indices[indptr[u] : indptr[u + 1]]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def hop_distance(graph: GridGraph, i: int, j: int) -> int | None:
    """Shortest-path length in edges between vertices i and j, None if unreachable."""
    if not (0 <= j < graph.n_vertices):
        raise IndexError(f"vertex {j} outside a {graph.rows}x{graph.cols} grid")
    d = int(hop_distances_from(graph, i)[j])
    return None if d < 0 else d


def write_edge_list(graph: GridGraph, path) -> None:
    """Debug export: one line per undirected edge, "i j weight", 0-based."""
    coo = sp.triu(graph.adjacency, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="ascii") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")
