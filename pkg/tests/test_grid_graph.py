import numpy as np
import pytest
import scipy.sparse as sp

from spectrack.grid_graph import (
    LambdaMaxMode,
    LaplacianKind,
    NeighborhoodSpec,
    NonConvergenceError,
    Pattern,
    Weighting,
    build_grid_graph,
    combinatorial_laplacian,
    estimate_lambda_max,
    hop_distance,
    hop_distances_from,
    normalized_laplacian,
    scaled_laplacian,
    write_edge_list,
)
from spectrack.selftest import random_grid_graph

CASE1 = NeighborhoodSpec(pattern=Pattern.CASE1_4CONN)
CASE2 = NeighborhoodSpec(pattern=Pattern.CASE2_8CONN)
CASE3 = NeighborhoodSpec(pattern=Pattern.CASE3_SKIP4CONN)


def path_graph(n):
    """n-vertex path with unit weights, as a 1xn lattice."""
    return build_grid_graph(1, n, CASE1)


class TestBuildGridGraph:
    def test_single_vertex_has_no_edges(self):
        g = build_grid_graph(1, 1, CASE1)
        assert g.n_vertices == 1
        assert g.adjacency.nnz == 0

    def test_3x3_case1_edge_count_and_center_degree(self):
        # lattice edge count: 2*rows*cols - rows - cols = 12
        g = build_grid_graph(3, 3, CASE1)
        assert g.adjacency.nnz // 2 == 12
        assert g.degrees()[g.vertex_index(1, 1)] == 4

    def test_5x5_case3_center_neighbors(self):
        g = build_grid_graph(5, 5, CASE3)
        center = g.vertex_index(2, 2)
        neighbors = sorted(g.vertex_coords(j) for j in g.adjacency[center].indices)
        assert neighbors == [(0, 2), (2, 0), (2, 4), (4, 2)]

    def test_case2_adds_diagonals(self):
        g = build_grid_graph(3, 3, CASE2)
        center = g.vertex_index(1, 1)
        assert g.degrees()[center] == 8
        corner = g.vertex_index(0, 0)
        assert g.degrees()[corner] == 3  # right, down, diagonal

    def test_case4_default_skip_is_3(self):
        spec = NeighborhoodSpec(pattern=Pattern.CASE4_SKIP4CONN_WIDE)
        assert spec.skip_step == 3
        g = build_grid_graph(7, 7, spec)
        center = g.vertex_index(3, 3)
        neighbors = sorted(g.vertex_coords(j) for j in g.adjacency[center].indices)
        assert neighbors == [(0, 3), (3, 0), (3, 6), (6, 3)]

    def test_binary_weights_are_exactly_one(self):
        g = build_grid_graph(4, 5, CASE2)
        assert np.all(g.adjacency.data == 1.0)

    def test_gaussian_weights(self):
        spec = NeighborhoodSpec(
            pattern=Pattern.CASE2_8CONN, weighting=Weighting.GAUSSIAN_DISTANCE, gaussian_sigma=1.5
        )
        g = build_grid_graph(3, 3, spec)
        center = g.vertex_index(1, 1)
        row = g.adjacency[center].toarray().ravel()
        assert row[g.vertex_index(0, 1)] == pytest.approx(np.exp(-1.0 / (2 * 1.5**2)))
        assert row[g.vertex_index(0, 0)] == pytest.approx(np.exp(-2.0 / (2 * 1.5**2)))

    def test_gaussian_sigma_defaults_to_skip_step(self):
        spec = NeighborhoodSpec(
            pattern=Pattern.CASE3_SKIP4CONN, weighting=Weighting.GAUSSIAN_DISTANCE
        )
        assert spec.gaussian_sigma == 2.0

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            build_grid_graph(0, 3, CASE1)
        with pytest.raises(ValueError):
            build_grid_graph(3, -1, CASE1)

    def test_rejects_degenerate_skip(self):
        spec = NeighborhoodSpec(pattern=Pattern.CASE3_SKIP4CONN, skip_step=3)
        with pytest.raises(ValueError, match="skip_step"):
            build_grid_graph(3, 3, spec)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            NeighborhoodSpec(pattern=Pattern.CASE1_4CONN, skip_step=2)
        with pytest.raises(ValueError):
            NeighborhoodSpec(pattern=Pattern.CASE3_SKIP4CONN, skip_step=1)
        with pytest.raises(ValueError):
            NeighborhoodSpec(
                pattern=Pattern.CASE1_4CONN,
                weighting=Weighting.GAUSSIAN_DISTANCE,
                gaussian_sigma=-1.0,
            )


class TestNormalizedLaplacian:
    def test_two_vertex_path(self):
        lap = normalized_laplacian(path_graph(2))
        np.testing.assert_array_equal(lap.matrix.toarray(), [[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_allclose(
            np.linalg.eigvalsh(lap.matrix.toarray()), [0.0, 2.0], atol=1e-12
        )

    def test_three_vertex_path(self):
        lap = normalized_laplacian(path_graph(3))
        dense = lap.matrix.toarray()
        np.testing.assert_allclose(np.diag(dense), 1.0)
        assert dense[0, 1] == pytest.approx(-1.0 / np.sqrt(2.0))
        assert dense[1, 2] == pytest.approx(-1.0 / np.sqrt(2.0))
        assert dense[0, 2] == 0.0
        np.testing.assert_allclose(
            np.linalg.eigvalsh(dense), [0.0, 1.0, 2.0], atol=1e-12
        )

    def test_null_space_vector(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g = random_grid_graph(rng)
            lap = normalized_laplacian(g)
            null_vec = np.sqrt(g.degrees())
            assert np.abs(lap.matrix @ null_vec).max() <= 1e-10

    def test_isolated_vertices_get_zero_rows(self):
        # skip-2 on a 1x5 strip leaves no valid edges in the short axis only;
        # a completely edgeless graph exercises the isolated-vertex rule.
        spec = NeighborhoodSpec(pattern=Pattern.CASE3_SKIP4CONN, skip_step=4)
        g = build_grid_graph(1, 3, spec)
        assert g.adjacency.nnz == 0
        lap = normalized_laplacian(g)
        assert lap.matrix.nnz == 0

    def test_kind_tag(self):
        lap = normalized_laplacian(path_graph(3))
        assert lap.kind is LaplacianKind.NORMALIZED


class TestScaledLaplacian:
    def test_two_vertex_path_lambda2(self):
        lap = normalized_laplacian(path_graph(2))
        lt = scaled_laplacian(lap, 2.0)
        np.testing.assert_array_equal(lt.matrix.toarray(), [[0.0, -1.0], [-1.0, 0.0]])
        np.testing.assert_allclose(np.linalg.eigvalsh(lt.matrix.toarray()), [-1.0, 1.0])
        assert lt.kind is LaplacianKind.SCALED_SHIFTED
        assert lt.lambda_max == 2.0

    def test_spectrum_is_affine_image(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            g = random_grid_graph(rng)
            lap = normalized_laplacian(g)
            lam_max = float(rng.uniform(1.5, 3.0))
            lt = scaled_laplacian(lap, lam_max)
            evals = np.linalg.eigvalsh(lap.matrix.toarray())
            evals_t = np.linalg.eigvalsh(lt.matrix.toarray())
            np.testing.assert_allclose(evals_t, 2.0 * evals / lam_max - 1.0, atol=1e-10)

    def test_bound2_keeps_spectrum_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            lt = scaled_laplacian(normalized_laplacian(random_grid_graph(rng)), 2.0)
            evals = np.linalg.eigvalsh(lt.matrix.toarray())
            assert evals.min() >= -1.0 - 1e-10
            assert evals.max() <= 1.0 + 1e-10

    def test_rejects_bad_inputs(self):
        lap = normalized_laplacian(path_graph(2))
        with pytest.raises(ValueError):
            scaled_laplacian(lap, 0.0)
        with pytest.raises(ValueError):
            scaled_laplacian(lap, -1.0)
        with pytest.raises(ValueError):
            scaled_laplacian(scaled_laplacian(lap, 2.0), 2.0)


class TestEstimateLambdaMax:
    def test_bound2_is_constant(self):
        lap = normalized_laplacian(path_graph(5))
        assert estimate_lambda_max(lap, LambdaMaxMode.BOUND2) == 2.0

    def test_power_iteration_on_paths(self):
        for n in (2, 3):
            lap = normalized_laplacian(path_graph(n))
            est = estimate_lambda_max(lap, LambdaMaxMode.POWER_ITERATION)
            assert est == pytest.approx(2.0, abs=1e-6)

    def test_power_iteration_matches_dense_eig(self):
        rng = np.random.default_rng(3)
        for i in range(10):
            lap = normalized_laplacian(random_grid_graph(rng))
            est = estimate_lambda_max(lap, LambdaMaxMode.POWER_ITERATION, seed=i)
            true_max = np.linalg.eigvalsh(lap.matrix.toarray()).max()
            assert est == pytest.approx(true_max, rel=1e-6)

    def test_rejects_wrong_kind(self):
        lap = normalized_laplacian(path_graph(3))
        with pytest.raises(ValueError):
            estimate_lambda_max(scaled_laplacian(lap, 2.0), LambdaMaxMode.BOUND2)

    def test_signals_non_convergence_at_iteration_cap(self):
        lap = normalized_laplacian(build_grid_graph(6, 6, CASE1))
        with pytest.raises(NonConvergenceError):
            estimate_lambda_max(lap, LambdaMaxMode.POWER_ITERATION, max_iter=2)

    def test_edgeless_graph_has_zero_dominant_eigenvalue(self):
        spec = NeighborhoodSpec(pattern=Pattern.CASE3_SKIP4CONN, skip_step=4)
        lap = normalized_laplacian(build_grid_graph(1, 3, spec))
        assert estimate_lambda_max(lap, LambdaMaxMode.POWER_ITERATION) == 0.0


class TestHopDistance:
    def test_self_distance_zero(self):
        g = build_grid_graph(3, 3, CASE1)
        assert hop_distance(g, 4, 4) == 0

    def test_corner_to_corner(self):
        g = build_grid_graph(3, 3, CASE1)
        assert hop_distance(g, g.vertex_index(0, 0), g.vertex_index(2, 2)) == 4

    def test_adjacent(self):
        g = build_grid_graph(3, 3, CASE1)
        assert hop_distance(g, g.vertex_index(0, 0), g.vertex_index(0, 1)) == 1

    def test_unreachable_is_none(self):
        # case3 skip-2 splits the lattice into parity components
        g = build_grid_graph(5, 5, CASE3)
        assert hop_distance(g, g.vertex_index(0, 0), g.vertex_index(0, 1)) is None

    def test_vector_form_matches(self):
        g = build_grid_graph(4, 4, CASE2)
        dist = hop_distances_from(g, 0)
        for j in range(g.n_vertices):
            assert hop_distance(g, 0, j) == int(dist[j])


class TestInvariants:
    def test_exact_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            g = random_grid_graph(rng)
            assert (g.adjacency != g.adjacency.T).nnz == 0

    def test_psd_quadratic_forms(self):
        rng = np.random.default_rng(5)
        g = random_grid_graph(rng)
        for lap in (normalized_laplacian(g), combinatorial_laplacian(g)):
            dense = lap.matrix
            for _ in range(100):
                x = rng.standard_normal(g.n_vertices)
                assert x @ (dense @ x) >= -1e-10

    def test_normalized_spectral_range(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            lap = normalized_laplacian(random_grid_graph(rng))
            evals = np.linalg.eigvalsh(lap.matrix.toarray())
            assert evals.min() >= -1e-10
            assert evals.max() <= 2.0 + 1e-10

    def test_scaled_spectrum_with_power_estimate(self):
        rng = np.random.default_rng(7)
        for i in range(10):
            lap = normalized_laplacian(random_grid_graph(rng))
            est = estimate_lambda_max(lap, LambdaMaxMode.POWER_ITERATION, seed=i)
            evals = np.linalg.eigvalsh(scaled_laplacian(lap, est).matrix.toarray())
            assert evals.min() >= -1.0 - 1e-8
            assert evals.max() <= 1.0 + 1e-8

    def test_degree_consistency(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            g = random_grid_graph(rng)
            row_sums = np.asarray(g.adjacency.sum(axis=1)).ravel()
            np.testing.assert_array_equal(row_sums, g.degrees())

    def test_row_nonzeros_bounded_by_pattern(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            g = random_grid_graph(rng)
            bound = 8 if g.spec.pattern is Pattern.CASE2_8CONN else 4
            per_row = np.diff(g.adjacency.indptr)
            assert per_row.max(initial=0) <= bound


class TestEdgeListExport:
    def test_round_trip(self, tmp_path):
        spec = NeighborhoodSpec(
            pattern=Pattern.CASE2_8CONN, weighting=Weighting.GAUSSIAN_DISTANCE, gaussian_sigma=1.2
        )
        g = build_grid_graph(4, 3, spec)
        path = tmp_path / "edges.txt"
        write_edge_list(g, path)
        i, j, w = [], [], []
        for line in path.read_text().splitlines():
            a, b, weight = line.split()
            i.append(int(a))
            j.append(int(b))
            w.append(float(weight))
        assert all(a < b for a, b in zip(i, j))
        rebuilt = sp.coo_matrix((w + w, (i + j, j + i)), shape=g.adjacency.shape)
        assert (rebuilt.tocsr() != g.adjacency).nnz == 0
