import numpy as np
import pytest

from sparsecut.graph import WeightedGraph


def path_graph(n):
    return WeightedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return WeightedGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def cliques_with_bridge(k, bridge_weight=1.0):
    """Two k-cliques on ``0..k-1`` and ``k..2k-1`` joined by the edge ``(k-1, k)``."""
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(i + k, j + k) for i, j in edges]
    edges.append((k - 1, k, bridge_weight))
    return WeightedGraph.from_edges(2 * k, edges)


def random_connected_graph(rng, n, p=0.3, weighted=True):
    """Random spanning tree plus Erdos-Renyi extras; weights in [0.5, 2] if ``weighted``."""
    order = rng.permutation(n)
    edges = {}
    for i in range(1, n):
        u, v = int(order[i]), int(order[rng.integers(i)])
        edges[(min(u, v), max(u, v))] = 1.0
    iu, ju = np.triu_indices(n, k=1)
    for u, v in zip(iu[rng.random(iu.size) < p], ju[rng.random(iu.size) < p]):
        if u != v:
            edges[(int(min(u, v)), int(max(u, v)))] = 1.0
    if weighted:
        edges = {e: float(rng.uniform(0.5, 2.0)) for e in edges}
    return WeightedGraph.from_edges(n, [(u, v, w) for (u, v), w in edges.items()])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            for key, value in rep.user_properties:
                if key == "acceptance":
                    rows.append((value, outcome))
    if rows:
        terminalreporter.section("acceptance criteria")
        for value, outcome in sorted(rows):
            terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {value}")
