import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import holonet.digraph as dg
from holonet import (
    OperatorKind,
    build_graph,
    characteristic_operator,
    load_graph,
    weighted_adjoint,
    weighted_inner,
    weighted_norm,
    write_graph,
)
from holonet.errors import (
    ConfigError,
    IndexOutOfRangeError,
    NegativeWeightError,
    NonpositiveNodeWeightError,
    ShapeMismatchError,
)
from .conftest import random_digraph


class TestBuildGraph:
    def test_directed_path_adjacency(self, path_graph):
        w = path_graph.adjacency
        expected = np.zeros((3, 3))
        expected[1, 0] = 1.0
        expected[2, 1] = 1.0
        np.testing.assert_array_equal(w, expected)

    def test_empty_edge_list(self):
        g = build_graph([], n_nodes=2)
        np.testing.assert_array_equal(g.adjacency, np.zeros((2, 2)))
        np.testing.assert_array_equal(g.node_weights, np.ones(2))

    def test_overlap_graph_degrees_match_hand_count(self, overlap_graph):
        # brute-force recount from the edge list 0->1, 1->2, 3->4, 4->5, 5->1
        edges = [(0, 1), (1, 2), (3, 4), (4, 5), (5, 1)]
        din = np.zeros(6)
        dout = np.zeros(6)
        for s, d in edges:
            din[d] += 1
            dout[s] += 1
        np.testing.assert_array_equal(overlap_graph.in_degrees(), din)
        np.testing.assert_array_equal(overlap_graph.out_degrees(), dout)

    def test_duplicate_edges_accumulate(self):
        g = build_graph([(0, 1, 1.0), (0, 1, 0.5)], n_nodes=2)
        assert g.adjacency[1, 0] == 1.5

    def test_negative_weight_rejected(self):
        with pytest.raises(NegativeWeightError):
            build_graph([(0, 1, -1.0)], n_nodes=2)

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRangeError):
            build_graph([(0, 5, 1.0)], n_nodes=2)

    def test_nonpositive_node_weight(self):
        with pytest.raises(NonpositiveNodeWeightError):
            build_graph([(0, 1, 1.0)], n_nodes=2, node_weights=[1.0, 0.0])


class TestWeightedInner:
    def test_all_ones(self):
        g = build_graph([], n_nodes=4)
        x = np.ones((4, 1))
        assert weighted_inner(x, x, g) == pytest.approx(4.0)

    def test_basis_orthogonality(self):
        g = build_graph([], n_nodes=3)
        e1 = np.zeros((3, 1))
        e1[0] = 1.0
        e2 = np.zeros((3, 1))
        e2[1] = 1.0
        assert weighted_inner(e1, e2, g) == 0.0

    def test_matches_brute_force_trace_formula(self):
        rng = np.random.default_rng(7)
        mu = np.array([1.0, 2.0, 3.0, 4.0])
        g = build_graph([], n_nodes=4, node_weights=mu)
        x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        y = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        expected = 0.0
        for i in range(4):
            for j in range(2):
                expected += np.conj(x[i, j]) * y[i, j] * mu[i]
        assert weighted_inner(x, y, g) == pytest.approx(expected)

    def test_shape_mismatch(self):
        g = build_graph([], n_nodes=3)
        with pytest.raises(ShapeMismatchError):
            weighted_inner(np.ones((2, 1)), np.ones((2, 1)), g)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_conjugate_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 8))
        g = build_graph([], n_nodes=n,
                        node_weights=rng.uniform(0.1, 3.0, n))
        x = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
        y = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
        assert weighted_inner(x, y, g) == pytest.approx(
            np.conj(weighted_inner(y, x, g)))

    def test_norm_two_ways_agree(self):
        rng = np.random.default_rng(3)
        n = 9
        g = random_digraph(rng, n, weighted_nodes=True)
        x = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
        via_inner = np.sqrt(weighted_inner(x, x, g).real)
        explicit = np.sqrt(
            sum(abs(x[i, j]) ** 2 * g.node_weights[i]
                for i in range(n) for j in range(3)))
        assert abs(via_inner - weighted_norm(x, g)) <= 1e-12
        assert abs(explicit - weighted_norm(x, g)) <= 1e-12


class TestCharacteristicOperator:
    def test_path_laplacian_rows(self, path_graph):
        lap = characteristic_operator(
            path_graph, OperatorKind.IN_DEGREE_LAPLACIAN).dense()
        expected = np.array([[0.0, 0.0, 0.0],
                             [-1.0, 1.0, 0.0],
                             [0.0, -1.0, 1.0]])
        np.testing.assert_array_equal(lap, expected)

    def test_zero_graph_gives_zero_operators(self):
        g = build_graph([], n_nodes=3)
        for kind in OperatorKind:
            mat = characteristic_operator(g, kind).dense()
            np.testing.assert_array_equal(mat, np.zeros((3, 3)))

    def test_two_cycle_normalized_equals_adjacency(self):
        g = build_graph([(0, 1, 1.0), (1, 0, 1.0)], n_nodes=2)
        t = characteristic_operator(
            g, OperatorKind.FABERNET_NORMALIZED).dense()
        np.testing.assert_allclose(t, g.adjacency, atol=1e-15)

    def test_zero_degree_rows_and_columns_vanish(self, path_graph):
        # node 0 has no in-edges, node 2 no out-edges
        t = characteristic_operator(
            path_graph, OperatorKind.FABERNET_NORMALIZED).dense()
        assert np.all(np.isfinite(t))
        np.testing.assert_array_equal(t[0, :], np.zeros(3))
        np.testing.assert_array_equal(t[:, 2], np.zeros(3))

    def test_zero_diagonal_preserved(self):
        rng = np.random.default_rng(11)
        g = random_digraph(rng, 8)
        t = characteristic_operator(
            g, OperatorKind.FABERNET_NORMALIZED).dense()
        np.testing.assert_array_equal(np.diag(t), np.zeros(8))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_laplacian_annihilates_constants(self, seed):
        rng = np.random.default_rng(seed)
        g = random_digraph(rng, int(rng.integers(2, 12)), weighted_nodes=True)
        lap = characteristic_operator(
            g, OperatorKind.IN_DEGREE_LAPLACIAN).dense()
        np.testing.assert_allclose(lap @ np.ones(g.n_nodes), 0.0, atol=1e-12)

    def test_all_kinds_purely_real(self):
        rng = np.random.default_rng(5)
        g = random_digraph(rng, 6, weighted_nodes=True)
        for kind in OperatorKind:
            assert not np.iscomplexobj(characteristic_operator(g, kind).dense())

    def test_laplacian_spectrum_right_half_plane(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            g = random_digraph(rng, int(rng.integers(3, 50)),
                               weighted_nodes=True)
            lap = characteristic_operator(
                g, OperatorKind.IN_DEGREE_LAPLACIAN).dense()
            eigs = np.linalg.eigvals(lap)
            assert eigs.real.min() >= -1e-10


class TestWeightedAdjoint:
    def test_adjoint_identity_in_weighted_inner(self):
        rng = np.random.default_rng(23)
        n = 7
        g = random_digraph(rng, n, weighted_nodes=True)
        t = characteristic_operator(g, OperatorKind.IN_DEGREE_LAPLACIAN).dense()
        t_adj = weighted_adjoint(t, g.node_weights)
        x = rng.standard_normal((n, 2))
        y = rng.standard_normal((n, 2))
        assert weighted_inner(x, t @ y, g) == pytest.approx(
            weighted_inner(t_adj @ x, y, g))

    def test_reduces_to_transpose_for_unit_weights(self):
        rng = np.random.default_rng(29)
        t = rng.standard_normal((5, 5))
        np.testing.assert_allclose(weighted_adjoint(t, np.ones(5)), t.T)


class TestGraphFiles:
    def test_roundtrip(self, tmp_path, overlap_graph):
        path = tmp_path / "g.tsv"
        write_graph(overlap_graph, path, tmp_path / "g.mu")
        back = load_graph(path, tmp_path / "g.mu")
        np.testing.assert_allclose(back.adjacency,
                                   overlap_graph.adjacency)
        np.testing.assert_allclose(back.node_weights,
                                   overlap_graph.node_weights)

    def test_sibling_mu_autodetected(self, tmp_path):
        (tmp_path / "g.tsv").write_text("# nodes 2\n0\t1\t2.0\n")
        (tmp_path / "g.mu").write_text("0\t3.0\n1\t4.0\n")
        g = load_graph(tmp_path / "g.tsv")
        np.testing.assert_array_equal(g.node_weights, [3.0, 4.0])

    def test_missing_file_mentions_path(self, tmp_path):
        missing = tmp_path / "nope.tsv"
        with pytest.raises(ConfigError, match="nope.tsv"):
            load_graph(missing)

    def test_rejects_negative_weight(self, tmp_path):
        path = tmp_path / "g.tsv"
        path.write_text("0\t1\t-2.0\n")
        with pytest.raises(ConfigError):
            load_graph(path)

    def test_rejects_nan_weight(self, tmp_path):
        path = tmp_path / "g.tsv"
        path.write_text("0\t1\tnan\n")
        with pytest.raises(ConfigError):
            load_graph(path)

    def test_header_only_graph(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("# nodes 3\n")
        g = load_graph(path)
        assert g.n_nodes == 3
        np.testing.assert_array_equal(g.adjacency, np.zeros((3, 3)))

    def test_shipped_demo_loads(self, data_dir):
        g = load_graph(data_dir / "overlapping_reaches.tsv")
        assert g.n_nodes == 6


class TestSparseStorage:
    def test_large_graphs_stored_sparse_and_match_dense(self, monkeypatch):
        rng = np.random.default_rng(31)
        edges = [(int(s), int(d), float(w)) for s, d, w in
                 zip(rng.integers(0, 12, 40), rng.integers(0, 12, 40),
                     rng.uniform(0.1, 1.0, 40))]
        dense = build_graph(edges, n_nodes=12)
        monkeypatch.setattr(dg, "DENSE_NODE_LIMIT", 8)
        sparse = build_graph(edges, n_nodes=12)
        assert sparse.is_sparse and not dense.is_sparse
        np.testing.assert_allclose(sparse.dense_adjacency(), dense.adjacency)
        np.testing.assert_allclose(sparse.in_degrees(), dense.in_degrees())
        np.testing.assert_allclose(sparse.out_degrees(), dense.out_degrees())
        for kind in OperatorKind:
            np.testing.assert_allclose(
                characteristic_operator(sparse, kind).dense(),
                characteristic_operator(dense, kind).dense(), atol=1e-14)
