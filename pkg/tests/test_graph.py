import io
import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, path_graph, random_connected_graph
from sparsecut.graph import (DegenerateSetError, GraphFormatError, WeightedGraph,
                             all_pairs_distances, check_graph, components, conductance,
                             cut_weight, diameter, exterior_boundary, is_bipartite,
                             is_connected, load_graph, mutual_conductance,
                             shortest_path_distances, transition_matrix)


class TestLoad:
    def test_path_from_text(self):
        g = load_graph("0 1\n1 2")
        assert g.n == 3
        np.testing.assert_array_equal(g.omega, [1, 2, 1])

    def test_duplicates_are_summed(self):
        g = load_graph("0 1 2.5\n1 0 2.5")
        assert g.n_edges == 1
        assert list(g.edges()) == [(0, 1, 5.0)]

    @pytest.mark.parametrize("text, line", [("0 1 -1", 1), ("0 1\n1 2 0", 2), ("0 1\n2 2", 2)])
    def test_rejects_with_line(self, text, line):
        with pytest.raises(GraphFormatError) as exc:
            load_graph(text)
        assert exc.value.line == line

    def test_nonpositive_message(self):
        with pytest.raises(GraphFormatError, match="nonpositive"):
            load_graph("0 1 -1")

    def test_comments_and_blank_lines(self):
        g = load_graph("# header\n0 1 # trailing\n\n1 2 3\n")
        assert g.n == 3 and g.adjacency[1, 2] == 3.0

    @pytest.mark.parametrize("text", ["0", "0 1 2 3", "a b", "0 -1"])
    def test_malformed(self, text):
        with pytest.raises(GraphFormatError):
            load_graph(text)

    def test_isolated_ids_rejected(self):
        with pytest.raises(GraphFormatError, match="isolated"):
            load_graph("0 2\n")

    def test_file_and_handle(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 1\n1 2\n")
        assert load_graph(p).n == 3
        assert load_graph(str(p)).n == 3
        assert load_graph(io.StringIO("0 1\n")).n == 2

    def test_edgelist_round_trip(self, rng):
        g = random_connected_graph(rng, 12)
        h = load_graph(g.to_edgelist())
        assert abs(g.adjacency - h.adjacency).max() == 0


class TestWeightedGraph:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            WeightedGraph(sp.csr_matrix(np.array([[0, 1.0], [2.0, 0]])))

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            WeightedGraph(sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 0]])))

    def test_check_graph_dense(self):
        g = check_graph(np.array([[0, 2.0], [2.0, 0]]))
        assert g.n == 2 and g.omega.tolist() == [2.0, 2.0]
        with pytest.raises(ValueError):
            check_graph(np.ones((2, 3)))
        with pytest.raises(ValueError):
            check_graph(np.array([[0, -1.0], [-1.0, 0]]))

    def test_immutable(self):
        g = path_graph(3)
        with pytest.raises(Exception):
            g.adjacency = None


class TestConductance:
    def test_k4_pair(self):
        assert conductance(complete_graph(4), [0, 1]) == pytest.approx(4 / 6)

    def test_p3_leaf(self):
        assert conductance(path_graph(3), [0]) == pytest.approx(1.0)

    @pytest.mark.parametrize("S", [[], [0, 1, 2, 3]])
    def test_degenerate(self, S):
        with pytest.raises(DegenerateSetError):
            conductance(complete_graph(4), S)

    def test_complement_symmetry_all_subsets(self, rng):
        for trial in range(5):
            n = int(rng.integers(3, 11))
            g = random_connected_graph(rng, n)
            V = set(range(n))
            for r in range(1, n):
                for S in itertools.combinations(range(n), r):
                    assert conductance(g, S) == pytest.approx(
                        conductance(g, sorted(V - set(S))), abs=1e-14)

    def test_mutual_p4(self):
        assert mutual_conductance(path_graph(4), [0, 1], [2, 3]) == pytest.approx(1 / 3)

    def test_mutual_components(self):
        g = WeightedGraph.from_edges(4, [(0, 1), (2, 3)])
        assert mutual_conductance(g, [0, 1], [2, 3]) == 0.0

    def test_mutual_overlap(self):
        with pytest.raises(DegenerateSetError):
            mutual_conductance(path_graph(4), [0, 1], [1, 2])

    def test_mutual_symmetric(self, rng):
        g = random_connected_graph(rng, 15)
        A, B = [0, 3, 5], [1, 2, 9, 14]
        assert mutual_conductance(g, A, B) == mutual_conductance(g, B, A)

    def test_cut_weight(self):
        assert cut_weight(path_graph(4), [0, 1], [2, 3]) == 1.0


class TestDistances:
    def test_path(self):
        np.testing.assert_array_equal(shortest_path_distances(path_graph(4), 0), [0, 1, 2, 3])

    def test_complete(self):
        for v in range(4):
            d = shortest_path_distances(complete_graph(4), v)
            assert sorted(d.tolist()) == [0, 1, 1, 1]

    def test_unreachable(self):
        g = WeightedGraph.from_edges(4, [(0, 1), (2, 3)])
        assert np.isinf(shortest_path_distances(g, 0)[2])
        assert not is_connected(g)
        assert len(components(g)) == 2

    def test_hops_ignore_weights(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 100.0), (1, 2, 0.01), (0, 2, 5.0)])
        np.testing.assert_array_equal(shortest_path_distances(g, 0), [0, 1, 1])

    def test_set_source(self):
        d = shortest_path_distances(path_graph(5), [0, 4])
        np.testing.assert_array_equal(d, [0, 1, 2, 1, 0])

    def test_triangle_inequality(self, rng):
        for _ in range(100):
            g = random_connected_graph(rng, int(rng.integers(2, 16)), p=0.2)
            D = all_pairs_distances(g)
            # d(x, z) <= d(x, y) + d(y, z) for all x, y, z
            assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :])

    def test_diameter(self):
        assert diameter(path_graph(6)) == 5


class TestBoundaryAndKernel:
    def test_boundary_p4(self):
        np.testing.assert_array_equal(exterior_boundary(path_graph(4), [1, 2]), [0, 3])

    def test_boundary_full(self):
        assert exterior_boundary(path_graph(4), range(4)).size == 0

    def test_boundary_k4(self):
        np.testing.assert_array_equal(exterior_boundary(complete_graph(4), [2]), [0, 1, 3])

    def test_p3_rows(self):
        P = transition_matrix(path_graph(3)).toarray()
        assert P[1, 0] == P[1, 2] == 0.5

    def test_weighted_ratio(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 1.0), (0, 2, 3.0)])
        np.testing.assert_allclose(transition_matrix(g).toarray()[0], [0, 0.25, 0.75])

    def test_stochastic_and_reversible(self, rng):
        for _ in range(20):
            g = random_connected_graph(rng, int(rng.integers(2, 25)))
            P = transition_matrix(g).toarray()
            np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
            flow = g.omega[:, None] * P
            assert np.max(np.abs(flow - flow.T)) <= 1e-12
            assert np.array_equal(P > 0, g.adjacency.toarray() > 0)

    def test_bipartite(self):
        assert is_bipartite(path_graph(5))
        assert not is_bipartite(complete_graph(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 32 - 1), st.data())
def test_conductance_in_unit_interval(n, seed, data):
    g = random_connected_graph(np.random.default_rng(seed), n)
    S = data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n - 1))
    phi = conductance(g, sorted(S))
    assert 0 < phi <= 1 + 1e-12
