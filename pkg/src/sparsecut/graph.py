"""Weighted undirected graphs and the primitives built on them.

Vertex weights are ``omega[u] = sum_v w(u, v)``; volumes, conductances and the
random-walk kernel are all derived from them. Distances are hop counts: edge
weights only influence the walk, never the metric.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


class GraphFormatError(ValueError):
    """Raised when an edge list cannot be parsed into a valid graph."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateSetError(ValueError):
    """Raised for vertex sets on which a quantity is undefined."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable undirected graph with strictly positive edge weights.

    Parameters
    ----------
    adjacency : scipy.sparse.csr_matrix, shape (n, n)
        Symmetric weight matrix with an empty diagonal.

    Attributes
    ----------
    n : int
        Number of vertices.
    omega : ndarray, shape (n,)
        Vertex weights, the row sums of ``adjacency``.
    """

    adjacency: sp.csr_matrix
    omega: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=float)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got {A.shape}")
        if A.nnz and A.data.min() <= 0:
            raise ValueError("edge weights must be strictly positive")
        if A.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if A.nnz and abs(A - A.T).max() > 1e-12 * A.data.max():
            raise ValueError("adjacency must be symmetric")
        omega = np.asarray(A.sum(axis=1)).ravel()
        if A.shape[0] and omega.min() <= 0:
            isolated = np.flatnonzero(omega <= 0)
            raise ValueError(f"isolated vertices are not allowed: {isolated[:10].tolist()}")
        A.data.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "omega", omega)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple]) -> "WeightedGraph":
        """Build a graph from ``(u, v)`` or ``(u, v, w)`` tuples; duplicates are summed."""
        rows, cols, vals = [], [], []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            rows += [u, v]
            cols += [v, u]
            vals += [w, w]
        A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        return cls(A)

    def edges(self):
        """Yield ``(u, v, w)`` with ``u < v``."""
        A = self.adjacency.tocoo()
        mask = A.row < A.col
        for u, v, w in zip(A.row[mask], A.col[mask], A.data[mask]):
            yield int(u), int(v), float(w)

    def neighbors(self, u: int) -> np.ndarray:
        A = self.adjacency
        return A.indices[A.indptr[u]:A.indptr[u + 1]]

    def volume(self, S) -> float:
        return float(self.omega[as_vertex_set(S, self.n)].sum())

    def subgraph_adjacency(self, S) -> sp.csr_matrix:
        S = as_vertex_set(S, self.n)
        return self.adjacency[S][:, S]

    def to_edgelist(self) -> str:
        return "".join(f"{u} {v} {w:.17g}\n" for u, v, w in self.edges())


def as_vertex_set(S, n=None) -> np.ndarray:
    """Return ``S`` as a sorted, duplicate-free integer array."""
    arr = np.unique(np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=np.int64))
    if n is not None and arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError(f"vertex ids must lie in [0, {n})")
    return arr


def check_graph(X) -> WeightedGraph:
    """Validate estimator input and convert it to a :class:`WeightedGraph`.

    Accepts a ``WeightedGraph``, a dense square array or a scipy sparse
    matrix of edge weights.
    """
    if isinstance(X, WeightedGraph):
        return X
    if sp.issparse(X):
        return WeightedGraph(sp.csr_matrix(X))
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square weight matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("weight matrix contains non-finite entries")
    if (arr < 0).any():
        raise ValueError("weight matrix contains negative entries")
    return WeightedGraph(sp.csr_matrix(arr))


def load_graph(source) -> WeightedGraph:
    """Parse whitespace-separated ``u v [w]`` lines into a graph.

    ``source`` is the edge-list text, an open text file, or a path. Lines
    starting with ``#`` (and trailing ``#`` comments) are ignored.
    """
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source
                                           and os.path.exists(source)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, io.IOBase):
        text = source.read()
    else:
        text = str(source)

    edges = []
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"expected 'u v [w]', got {raw!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"vertex ids must be integers, got {raw!r}", lineno) from None
        if u < 0 or v < 0:
            raise GraphFormatError("vertex ids must be nonnegative", lineno)
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}", lineno)
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"invalid weight {parts[2]!r}", lineno) from None
            if not np.isfinite(w) or w <= 0:
                raise GraphFormatError(f"nonpositive weight {parts[2]}", lineno)
        edges.append((u, v, w))
        max_id = max(max_id, u, v)

    n = max_id + 1
    seen = np.zeros(n, dtype=bool)
    for u, v, _ in edges:
        seen[u] = seen[v] = True
    if not seen.all():
        missing = np.flatnonzero(~seen)
        raise GraphFormatError(f"isolated vertex ids: {missing[:10].tolist()}")
    return WeightedGraph.from_edges(n, edges)


def cut_weight(g: WeightedGraph, A, B) -> float:
    """Total weight of edges between vertex sets ``A`` and ``B``."""
    A = as_vertex_set(A, g.n)
    B = as_vertex_set(B, g.n)
    return float(g.adjacency[A][:, B].sum())


def conductance(g: WeightedGraph, S) -> float:
    """Cut weight of ``S`` over ``min(vol S, vol V\\S)``."""
    S = as_vertex_set(S, g.n)
    if S.size == 0 or S.size == g.n:
        raise DegenerateSetError("conductance needs a nonempty proper subset")
    inside = np.zeros(g.n, dtype=bool)
    inside[S] = True
    cut = float(g.adjacency[inside][:, ~inside].sum())
    vol_s = float(g.omega[inside].sum())
    vol_c = float(g.omega[~inside].sum())
    return cut / min(vol_s, vol_c)


def mutual_conductance(g: WeightedGraph, A, B) -> float:
    """Edge weight between disjoint ``A`` and ``B`` over ``min(vol A, vol B)``."""
    A = as_vertex_set(A, g.n)
    B = as_vertex_set(B, g.n)
    if A.size == 0 or B.size == 0:
        raise DegenerateSetError("mutual conductance needs nonempty sets")
    if np.intersect1d(A, B).size:
        raise DegenerateSetError("sets must be disjoint")
    if A[0] > B[0]:
        # fixed summation order keeps the value exactly symmetric
        A, B = B, A
    return cut_weight(g, A, B) / min(g.volume(A), g.volume(B))


def shortest_path_distances(g: WeightedGraph, source) -> np.ndarray:
    """Hop distances from ``source`` (an int or a vertex set); ``inf`` if unreachable."""
    if np.ndim(source) == 0:
        idx = int(source)
        if not 0 <= idx < g.n:
            raise IndexError(f"vertex {idx} out of range")
        return csgraph.shortest_path(g.adjacency, directed=False, unweighted=True, indices=idx)
    src = as_vertex_set(source, g.n)
    if src.size == 0:
        return np.full(g.n, np.inf)
    return csgraph.dijkstra(g.adjacency, directed=False, unweighted=True,
                            indices=src, min_only=True)


def all_pairs_distances(g: WeightedGraph) -> np.ndarray:
    return csgraph.shortest_path(g.adjacency, directed=False, unweighted=True)


def diameter(g: WeightedGraph) -> int:
    """Largest finite hop distance."""
    D = all_pairs_distances(g)
    return int(D[np.isfinite(D)].max()) if g.n else 0


def is_connected(g: WeightedGraph) -> bool:
    return csgraph.connected_components(g.adjacency, directed=False)[0] <= 1


def components(g: WeightedGraph, S=None) -> list[np.ndarray]:
    """Connected components of ``g`` (or of the subgraph induced by ``S``), as vertex sets."""
    verts = np.arange(g.n) if S is None else as_vertex_set(S, g.n)
    if verts.size == 0:
        return []
    _, labels = csgraph.connected_components(g.adjacency[verts][:, verts], directed=False)
    return [verts[labels == k] for k in range(labels.max() + 1)]


def is_bipartite(g: WeightedGraph) -> bool:
    color = np.full(g.n, -1)
    for root in range(g.n):
        if color[root] >= 0:
            continue
        color[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for v in g.neighbors(u):
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    return False
    return True


def exterior_boundary(g: WeightedGraph, B) -> np.ndarray:
    """Vertices outside ``B`` at hop distance exactly one from it."""
    B = as_vertex_set(B, g.n)
    inside = np.zeros(g.n, dtype=bool)
    inside[B] = True
    touched = np.asarray(g.adjacency[inside].sum(axis=0)).ravel() > 0
    return np.flatnonzero(touched & ~inside)


def transition_matrix(g: WeightedGraph) -> sp.csr_matrix:
    """Row-stochastic kernel ``p(u, v) = w(u, v) / omega[u]``."""
    return sp.csr_matrix(sp.diags(1.0 / g.omega) @ g.adjacency)
