import numpy as np
import pytest

from conftest import complete_graph, path_graph, random_connected_graph
from sparsecut.graph import shortest_path_distances
from sparsecut.oracle import exact_discrepancy_probability
from sparsecut.walks import (KernelSampler, MrpConfig, discrepancy_probability,
                             rw_step_distribution, simulate_mrp, simulate_walk)


class TestSimulateWalk:
    def test_zero_steps(self):
        assert simulate_walk(path_graph(3), 1, 0, seed=1).vertices.tolist() == [1]

    def test_invalid_start(self):
        with pytest.raises(ValueError):
            simulate_walk(path_graph(3), 3, 5, seed=1)
        with pytest.raises(ValueError):
            simulate_walk(path_graph(3), -1, 5, seed=1)

    def test_p3_step_frequencies(self):
        n = 100_000
        # every other step from the middle vertex: read off the steps leaving vertex 1
        path = simulate_walk(path_graph(3), 1, 2 * n, seed=7).vertices
        after_middle = path[1::2]
        freq = np.mean(after_middle == 0)
        sigma = np.sqrt(0.25 / n)
        assert abs(freq - 0.5) <= 3 * sigma

    def test_same_seed_same_path(self, rng):
        g = random_connected_graph(rng, 20)
        a = simulate_walk(g, 3, 500, seed=11).vertices
        b = simulate_walk(g, 3, 500, seed=11).vertices
        c = simulate_walk(g, 3, 500, seed=12).vertices
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_steps_follow_edges(self, rng):
        g = random_connected_graph(rng, 25)
        p = simulate_walk(g, 0, 2000, seed=3).vertices
        A = g.adjacency.toarray()
        assert np.all(A[p[:-1], p[1:]] > 0)

    def test_weighted_frequencies(self):
        from sparsecut.graph import WeightedGraph
        g = WeightedGraph.from_edges(3, [(0, 1, 1.0), (0, 2, 3.0)])
        p = simulate_walk(g, 0, 40_000, seed=5).vertices
        out = p[1:][p[:-1] == 0]
        freq = np.mean(out == 2)
        assert abs(freq - 0.75) <= 4 * np.sqrt(0.75 * 0.25 / out.size)


class TestKernelSampler:
    def test_scalar_and_batched_agree(self, rng):
        g = random_connected_graph(rng, 30)
        s = KernelSampler(g)
        pos = rng.integers(0, g.n, size=5000)
        u = rng.random(5000)
        batched = s.step_many(pos, u)
        scalar = [s.step(int(v), float(x)) for v, x in zip(pos, u)]
        assert batched.tolist() == scalar


class TestMrp:
    def test_scale_zero_matches_plain_walk(self, rng):
        g = random_connected_graph(rng, 15)
        cfg = MrpConfig(scale=0, threshold=300)
        mrp = simulate_mrp(g, 2, cfg, seed=9)
        plain = simulate_walk(g, 2, 300, seed=9)
        assert np.array_equal(mrp.vertices, plain.vertices)
        assert mrp.clock.tolist() == list(range(301))

    def test_threshold_one(self):
        p = simulate_mrp(complete_graph(5), 0, MrpConfig(scale=3, threshold=1), seed=1)
        assert len(p) == 2

    def test_default_threshold(self):
        assert MrpConfig(scale=2).threshold_time == 1600
        assert MrpConfig(scale=0).threshold_time == 100

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            MrpConfig(scale=-1)
        with pytest.raises(ValueError):
            MrpConfig(scale=1, threshold=0)

    def test_observed_on_underlying_walk(self, rng):
        g = random_connected_graph(rng, 12)
        cfg = MrpConfig(scale=2, threshold=200)
        p = simulate_mrp(g, 0, cfg, seed=4)
        under = simulate_walk(g, 0, int(p.clock[-1]), seed=4).vertices
        assert np.array_equal(p.vertices, under[p.clock])
        incr = np.diff(p.clock)
        assert incr.min() >= 1 and incr.max() <= 4
        assert p.clock[-2] < 200 <= p.clock[-1]

    def test_custom_increment_law(self):
        cfg = MrpConfig(scale=1, threshold=30, increment_law=lambda r, k: np.full(k, 3))
        p = simulate_mrp(path_graph(4), 0, cfg, seed=0)
        assert p.clock.tolist() == list(range(0, 31, 3))

    @pytest.mark.slow
    def test_wald_length(self):
        g = complete_graph(4)
        sampler = KernelSampler(g)
        cfg = MrpConfig(scale=2)
        root = np.random.SeedSequence(2024)
        lengths = [len(simulate_mrp(g, 0, cfg, seed=s, sampler=sampler)) - 1
                   for s in root.spawn(10_000)]
        expected = cfg.threshold_time / 2.5
        assert abs(np.mean(lengths) - expected) <= 0.05 * expected


class TestStepDistribution:
    def test_n2(self):
        law = rw_step_distribution(2, 0.5)
        assert law == {-2: 0.25, 0: 0.5, 2: 0.25}

    @pytest.mark.parametrize("n", [0, 1, 5, 13])
    def test_deterministic(self, n):
        assert rw_step_distribution(n, 1.0)[n] == 1.0

    def test_normalized(self):
        for n in range(30):
            assert sum(rw_step_distribution(n, 0.3).values()) == pytest.approx(1.0)


class TestDiscrepancy:
    def test_inside_target(self):
        est = discrepancy_probability(path_graph(3), 1, [1], 0.5, 100, seed=0)
        assert est.mean == 0.0

    def test_forced_first_step(self):
        est = discrepancy_probability(path_graph(3), 0, [1], 0.5, 1000, seed=0)
        assert est.mean == 0.0

    def test_against_exact(self, rng):
        for _ in range(8):
            g = random_connected_graph(rng, int(rng.integers(4, 11)), p=0.15)
            x = 0
            D = shortest_path_distances(g, x)
            far = int(np.argmax(D))
            omega = [far]
            C = float(rng.uniform(0.5, 3.0))
            exact = exact_discrepancy_probability(g, x, omega, C)
            est = discrepancy_probability(g, x, omega, C, 10_000, seed=int(rng.integers(1 << 30)))
            sigma = np.sqrt(max(exact * (1 - exact), 1e-12) / est.samples)
            assert abs(est.mean - exact) <= 4 * sigma + 1e-12

    def test_deterministic(self):
        g = path_graph(6)
        a = discrepancy_probability(g, 0, [5], 1.0, 500, seed=3)
        b = discrepancy_probability(g, 0, [5], 1.0, 500, seed=3)
        assert a == b
