import numpy as np
import pytest

import anisogcn as ag
from anisogcn.graph import (
    DuplicateEdgeError,
    EdgeIndexError,
    EdgeWeightError,
    SelfLoopError,
)

from conftest import make_random_graph


class TestBuildGraph:
    def test_empty_graph(self):
        g = ag.build_graph(1, [])
        assert g.n == 1
        assert g.adjacency.nnz == 0

    def test_symmetry_by_construction(self):
        g = ag.build_graph(2, [(0, 1, 1.0)])
        assert g.adjacency.get(0, 1) == 1.0
        assert g.adjacency.get(1, 0) == 1.0
        assert g.adjacency.nnz == 2

    def test_rejects_self_loop(self):
        with pytest.raises(SelfLoopError):
            ag.build_graph(2, [(0, 0, 1.0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(EdgeIndexError):
            ag.build_graph(2, [(0, 2, 1.0)])

    def test_rejects_duplicates_either_direction(self):
        with pytest.raises(DuplicateEdgeError):
            ag.build_graph(3, [(0, 1, 1.0), (1, 0, 2.0)])

    def test_rejects_bad_weight(self):
        with pytest.raises(EdgeWeightError):
            ag.build_graph(2, [(0, 1, 0.0)])
        with pytest.raises(EdgeWeightError):
            ag.build_graph(2, [(0, 1, -1.0)])
        with pytest.raises(EdgeWeightError):
            ag.build_graph(2, [(0, 1, float("nan"))])


class TestNormalize:
    def test_single_node(self):
        ng = ag.normalize(ag.build_graph(1, []))
        assert np.array_equal(ng.self_looped.to_dense(), [[1.0]])
        assert np.array_equal(ng.degree, [1.0])
        assert np.array_equal(ng.sym_norm.to_dense(), [[1.0]])
        assert np.array_equal(ng.laplacian.to_dense(), [[0.0]])

    def test_unit_edge(self, unit_edge_pair):
        ng = unit_edge_pair
        assert np.array_equal(ng.degree, [2.0, 2.0])
        assert np.allclose(ng.sym_norm.to_dense(), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
        assert np.array_equal(ng.laplacian.to_dense(), [[1.0, -1.0], [-1.0, 1.0]])

    def test_path_graph(self):
        ng = ag.normalize(ag.build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)]))
        assert np.array_equal(ng.degree, [2.0, 3.0, 2.0])
        assert abs(ng.sym_norm.get(0, 1) - 1.0 / np.sqrt(6.0)) < 1e-15

    def test_consistency_of_derived_matrices(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g = make_random_graph(rng, int(rng.integers(2, 20)))
            ng = ag.normalize(g)
            assert ng.degree.min() >= 1.0  # the self-loop guarantees this
            dense_sl = ng.self_looped.to_dense()
            assert np.allclose(dense_sl.sum(axis=1), ng.degree, rtol=1e-12)
            lap = ng.laplacian.to_dense()
            assert np.allclose(lap, np.diag(ng.degree) - dense_sl, atol=1e-12)
            assert np.abs(lap.sum(axis=1)).max() <= 1e-12
            # symmetry and matching sparsity pattern of the normalized form
            sym = ng.sym_norm.to_dense()
            assert np.abs(sym - sym.T).max() <= 1e-12
            assert np.array_equal(sym > 0, dense_sl > 0)

    def test_spectral_radius_at_most_one(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            g = make_random_graph(rng, 12)
            ng = ag.normalize(g)
            v = rng.normal(size=(12, 1))
            v /= np.linalg.norm(v)
            for _ in range(200):
                v = ag.spmm(ng.sym_norm, v)
                norm = np.linalg.norm(v)
                v /= norm
            assert norm <= 1.0 + 1e-9


class TestSmoothnessTrace:
    def test_single_node_zero(self):
        ng = ag.normalize(ag.build_graph(1, []))
        assert ag.smoothness_trace(ng, np.array([[3.7]])) == 0.0

    def test_unit_edge_hand_value(self, unit_edge_pair):
        assert ag.smoothness_trace(unit_edge_pair, np.array([[1.0], [0.0]])) == 1.0

    def test_constant_rows_zero(self):
        rng = np.random.default_rng(1)
        g = make_random_graph(rng, 8)
        ng = ag.normalize(g)
        h = np.tile(rng.normal(size=(1, 4)), (8, 1))
        assert abs(ag.smoothness_trace(ng, h)) <= 1e-12

    def test_matches_dense_trace_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 51))
            g = make_random_graph(rng, n)
            ng = ag.normalize(g)
            h = rng.normal(size=(n, int(rng.integers(1, 6))))
            expected = float(np.trace(h.T @ ng.laplacian.to_dense() @ h))
            got = ag.smoothness_trace(ng, h)
            assert got >= 0.0
            assert abs(got - expected) <= 1e-9 * max(1.0, abs(expected))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        g = make_random_graph(rng, 10)
        ng = ag.normalize(g)
        h = rng.normal(size=(10, 3))
        base = ag.smoothness_trace(ng, h)
        for _ in range(10):
            perm = rng.permutation(10)
            adj = g.adjacency
            rows = perm[adj.row_indices()]
            cols = perm[adj.indices]
            edges = [
                (int(i), int(j), float(w))
                for i, j, w in zip(rows, cols, adj.data)
                if i < j
            ]
            pg = ag.normalize(ag.build_graph(10, edges))
            ph = np.empty_like(h)
            ph[perm] = h
            assert abs(ag.smoothness_trace(pg, ph) - base) <= 1e-9 * max(1.0, abs(base))

    def test_zero_iff_constant_per_component(self):
        # two components: 0-1-2 and 3-4
        g = ag.build_graph(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)])
        ng = ag.normalize(g)
        h = np.array([[2.0], [2.0], [2.0], [-1.0], [-1.0]])
        assert ag.smoothness_trace(ng, h) == 0.0
        h2 = h.copy()
        h2[2, 0] = 2.5  # break constancy within a component
        assert ag.smoothness_trace(ng, h2) > 0.0

    def test_row_count_mismatch(self, unit_edge_pair):
        with pytest.raises(ValueError):
            ag.smoothness_trace(unit_edge_pair, np.zeros((3, 1)))


class TestSmoothnessGradient:
    def test_constant_rows_zero_gradient(self):
        rng = np.random.default_rng(2)
        g = make_random_graph(rng, 6)
        ng = ag.normalize(g)
        h = np.tile(rng.normal(size=(1, 3)), (6, 1))
        assert np.abs(ag.smoothness_trace_gradient(ng, h)).max() <= 1e-12

    def test_unit_edge_hand_value(self, unit_edge_pair):
        grad = ag.smoothness_trace_gradient(unit_edge_pair, np.array([[1.0], [0.0]]))
        assert np.allclose(grad, [[2.0], [-2.0]], atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        g = make_random_graph(rng, 5)
        ng = ag.normalize(g)
        h = rng.normal(size=(5, 3))
        grad = ag.smoothness_trace_gradient(ng, h)
        step = 1e-5
        fd = np.zeros_like(h)
        for i in range(5):
            for j in range(3):
                hp = h.copy()
                hp[i, j] += step
                hm = h.copy()
                hm[i, j] -= step
                fd[i, j] = (ag.smoothness_trace(ng, hp) - ag.smoothness_trace(ng, hm)) / (2 * step)
        assert np.abs(grad - fd).max() <= 1e-6 * max(1.0, np.abs(fd).max())


class TestKnnGraph:
    def test_collinear_points(self):
        x = np.array([[0.0], [1.0], [3.0]])
        g = ag.knn_graph(x, 1)
        dense = g.adjacency.to_dense()
        expected = np.zeros((3, 3))
        expected[0, 1] = expected[1, 0] = 1.0
        expected[1, 2] = expected[2, 1] = 1.0
        assert np.array_equal(dense, expected)

    def test_two_points(self):
        g = ag.knn_graph(np.array([[0.0], [5.0]]), 1)
        assert g.adjacency.get(0, 1) == 1.0

    def test_duplicate_points_tie_rule(self):
        x = np.zeros((4, 2))
        g = ag.knn_graph(x, 1)
        dense = g.adjacency.to_dense()
        # every node picks the lowest-index other node: 0->1, others->0
        expected = np.zeros((4, 4))
        for j in (1, 2, 3):
            expected[0, j] = expected[j, 0] = 1.0
        assert np.array_equal(dense, expected)

    def test_errors(self):
        with pytest.raises(ag.graph.GraphError):
            ag.knn_graph(np.zeros((3, 2)), 3)
        with pytest.raises(ag.graph.GraphError):
            ag.knn_graph(np.array([[np.nan, 0.0], [0.0, 1.0]]), 1)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(30, 4))
        g1 = ag.knn_graph(x, 3)
        g2 = ag.knn_graph(x, 3)
        assert np.array_equal(g1.adjacency.indices, g2.adjacency.indices)
        assert np.array_equal(g1.adjacency.indptr, g2.adjacency.indptr)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(8)
        x = rng.integers(0, 10, size=(12, 3)).astype(float)
        k = 2
        expected_pairs = set()
        for i in range(12):
            dists = []
            for j in range(12):
                if j == i:
                    continue
                d = sum((x[i, t] - x[j, t]) ** 2 for t in range(3))
                dists.append((d, j))
            dists.sort()
            for _, j in dists[:k]:
                expected_pairs.add((min(i, j), max(i, j)))
        g = ag.knn_graph(x, k)
        got_pairs = {
            (int(i), int(j))
            for i, j in zip(g.adjacency.row_indices(), g.adjacency.indices)
            if i < j
        }
        assert got_pairs == expected_pairs
