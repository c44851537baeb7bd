import numpy as np
import pytest
from numpy.polynomial import chebyshev as npcheb

from conftest import complete_graph, path_graph, random_connected_graph
from sparsecut.diagnose import _series_terms
from sparsecut.graph import WeightedGraph, transition_matrix
from sparsecut.identities import (DivergentGreenError, chebyshev_poly, chebyshev_sequence,
                                  escape_probability, green_return_identity, killed_green,
                                  killed_green_series, last_exit_identity, verify_duality)
from sparsecut.oracle import mc_hit_probability


def _random_instance(rng, n_max=40):
    n = int(rng.integers(3, n_max + 1))
    g = random_connected_graph(rng, n, p=float(rng.uniform(0.05, 0.4)))
    A = np.sort(rng.choice(n, size=int(rng.integers(1, n)), replace=False))
    return g, A


class TestKilledGreen:
    def test_p3_single(self):
        assert killed_green(path_graph(3), [1])(1, 1) == pytest.approx(1.0)

    def test_p5_middle(self):
        assert killed_green(path_graph(5), [1, 2, 3])(2, 2) == pytest.approx(2.0, abs=1e-12)

    def test_whole_component_diverges(self):
        with pytest.raises(DivergentGreenError):
            killed_green(path_graph(4), range(4))

    def test_trapped_component_diverges(self):
        g = WeightedGraph.from_edges(5, [(0, 1), (2, 3), (3, 4)])
        with pytest.raises(DivergentGreenError):
            killed_green(g, [0, 1, 2])

    def test_diagonal_at_least_one(self, rng):
        for _ in range(20):
            g, A = _random_instance(rng)
            assert np.all(np.diag(killed_green(g, A).matrix) >= 1 - 1e-12)

    def test_outside_domain(self):
        G = killed_green(path_graph(5), [1, 2])
        with pytest.raises(KeyError):
            G(0, 1)

    def test_series_matches_inverse(self, rng):
        for _ in range(20):
            g, A = _random_instance(rng, 15)
            Q = transition_matrix(g)[A][:, A].toarray()
            diff = killed_green(g, A).matrix - killed_green_series(g, A, _series_terms(Q))
            assert np.max(np.abs(diff)) <= 1e-8


class TestGreenReturn:
    def test_random(self, rng):
        for _ in range(30):
            g, A = _random_instance(rng)
            c = int(rng.choice(A))
            assert green_return_identity(g, A, c).residual <= 1e-10

    def test_c_must_be_in_A(self):
        with pytest.raises(ValueError):
            green_return_identity(path_graph(4), [1, 2], 0)

    def test_escape_against_monte_carlo(self):
        # leaving A before returning to c, simulated as: first step then hit (V\A) before c
        g = path_graph(5)
        A, c = [1, 2, 3], 2
        esc = escape_probability(g, A, c)
        assert esc == pytest.approx(0.5)
        assert killed_green(g, A)(c, c) * esc == pytest.approx(1.0)

    def test_escape_mc_weighted(self, rng):
        g = random_connected_graph(rng, 10, p=0.3)
        A = np.arange(6)
        c = 0
        esc = escape_probability(g, A, c)
        # 1 - esc = return to c before exit; estimate as hitting {c} from each neighbour
        P = transition_matrix(g).toarray()
        back = 0.0
        for y in np.flatnonzero(P[c]):
            if y in A:
                est = mc_hit_probability(g, A, [c], int(y), 20_000, seed=int(y))
                back += P[c, y] * est.mean
        assert abs((1 - esc) - back) <= 0.02


class TestLastExit:
    def test_p5(self):
        assert last_exit_identity(path_graph(5), [2], [1, 2, 3]).residual <= 1e-12

    def test_random(self, rng):
        for _ in range(30):
            g, B = _random_instance(rng)
            A = np.sort(rng.choice(B, size=int(rng.integers(1, B.size + 1)), replace=False))
            chk = last_exit_identity(g, A, B)
            assert chk.lhs.shape == (B.size,)
            assert chk.residual <= 1e-10

    def test_not_subset(self):
        with pytest.raises(ValueError):
            last_exit_identity(path_graph(5), [0], [1, 2])

    def test_lhs_is_one_on_A(self):
        chk = last_exit_identity(path_graph(6), [2, 3], [1, 2, 3, 4])
        np.testing.assert_allclose(chk.lhs[[1, 2]], 1.0)


class TestChebyshev:
    @pytest.mark.parametrize("k", range(8))
    def test_scalar_against_numpy(self, k):
        t = np.linspace(-1, 1, 11)
        ref = npcheb.chebval(t, [0] * k + [1])
        ours = [chebyshev_poly(k, float(x)) for x in t]
        np.testing.assert_allclose(ours, ref, atol=1e-12)

    def test_scalar_outside_interval(self):
        assert chebyshev_poly(3, 2.0) == pytest.approx(npcheb.chebval(2.0, [0, 0, 0, 1]))

    def test_matrix_against_numpy_on_eigenvalues(self, rng):
        g = random_connected_graph(rng, 12)
        P = transition_matrix(g).toarray()
        s = 1 / np.sqrt(g.omega)
        lam, U = np.linalg.eigh((g.adjacency.toarray() * s[:, None]) * s[None, :])
        H = chebyshev_sequence(6, P)
        for k in range(7):
            Hk_sym = (U * npcheb.chebval(lam, [0] * k + [1])) @ U.T
            expected = (Hk_sym * s[:, None]) / s[None, :]
            np.testing.assert_allclose(H[k], expected, atol=1e-10)
        np.testing.assert_allclose(chebyshev_poly(4, P), H[4])

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            chebyshev_poly(-1, 0.3)


class TestDuality:
    def test_random(self, rng):
        for _ in range(10):
            g = random_connected_graph(rng, int(rng.integers(2, 21)))
            P = transition_matrix(g)
            for n in range(9):
                assert verify_duality(P, n) <= 1e-8

    def test_complete_graph_exact_small(self):
        P = transition_matrix(complete_graph(3))
        assert verify_duality(P, 0) == 0.0
        assert verify_duality(P, 1) <= 1e-15
