"""Killed Green functions and exact checks of the walk identities used by the
clustering algorithms: return probability, last exit decomposition and the
Chebyshev duality between a kernel and the simple walk on the integers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse import csgraph

from .graph import WeightedGraph, as_vertex_set, transition_matrix
from .walks import rw_step_distribution


class DivergentGreenError(ValueError):
    """The walk cannot leave the domain from some state, so G_A is infinite."""


@dataclass(frozen=True)
class KilledGreen:
    """Expected visit counts ``G[x, y]`` of the walk killed on leaving ``domain``.

    Rows and columns are indexed by position in ``domain``.
    """

    domain: np.ndarray
    matrix: np.ndarray

    def __call__(self, x: int, y: int) -> float:
        i = np.searchsorted(self.domain, x)
        j = np.searchsorted(self.domain, y)
        if i >= self.domain.size or self.domain[i] != x or j >= self.domain.size or self.domain[j] != y:
            raise KeyError(f"({x}, {y}) outside the domain")
        return float(self.matrix[i, j])


class IdentityCheck(NamedTuple):
    lhs: object
    rhs: object
    residual: float


def _restricted_kernel(P, A):
    return P[A][:, A]


def _check_escapable(g: WeightedGraph, A: np.ndarray):
    """Every state of ``A`` must reach the complement through ``A``."""
    inside = np.zeros(g.n, dtype=bool)
    inside[A] = True
    leaks = np.asarray(g.adjacency[A][:, ~inside].sum(axis=1)).ravel() > 0
    if not leaks.any():
        raise DivergentGreenError("no state of the domain can leave it")
    sub = g.adjacency[A][:, A]
    # reverse reachability from leaking states inside the induced subgraph
    n_comp, labels = csgraph.connected_components(sub, directed=False)
    good = np.zeros(n_comp, dtype=bool)
    good[labels[leaks]] = True
    if not good[labels].all():
        stuck = A[~good[labels]]
        raise DivergentGreenError(f"states {stuck[:10].tolist()} cannot leave the domain")


def killed_green(g: WeightedGraph, A) -> KilledGreen:
    """Green function ``(I - P|_A)^{-1}`` of the walk killed on exiting ``A``."""
    A = as_vertex_set(A, g.n)
    if A.size == 0:
        raise ValueError("domain must be nonempty")
    _check_escapable(g, A)
    Q = _restricted_kernel(transition_matrix(g), A).toarray()
    G = la.solve(np.eye(A.size) - Q, np.eye(A.size))
    return KilledGreen(A, G)


def killed_green_series(g: WeightedGraph, A, n_terms: int) -> np.ndarray:
    """Truncated series ``sum_{n < n_terms} (P|_A)^n``; a reference for :func:`killed_green`."""
    A = as_vertex_set(A, g.n)
    Q = _restricted_kernel(transition_matrix(g), A).toarray()
    total = np.zeros_like(Q)
    term = np.eye(A.size)
    for _ in range(n_terms):
        total += term
        term = term @ Q
    return total


def _hit_before_exit(P, hit, domain, n):
    """``h(x) = P^x[reach hit before leaving domain]`` for every vertex.

    ``hit`` must be contained in ``domain``; ``h = 1`` on ``hit`` and ``0``
    outside ``domain``.
    """
    h = np.zeros(n)
    h[hit] = 1.0
    free = np.setdiff1d(domain, hit)
    if free.size:
        Q = P[free][:, free].toarray()
        b = np.asarray(P[free][:, hit].sum(axis=1)).ravel()
        h[free] = la.solve(np.eye(free.size) - Q, b)
    return h


def escape_probability(g: WeightedGraph, A, c: int) -> float:
    """``P^c(tau_A < T_c^+)``: leave ``A`` before returning to ``c``."""
    A = as_vertex_set(A, g.n)
    P = transition_matrix(g)
    inside = np.zeros(g.n, dtype=bool)
    inside[A] = True
    # stay probability: return to c before leaving A
    back = _hit_before_exit(P, np.array([c]), A, g.n)
    row = P[c].toarray().ravel()
    return float(row[~inside].sum() + row[inside] @ (1.0 - back[inside]))


def green_return_identity(g: WeightedGraph, A, c: int) -> IdentityCheck:
    """Check ``G_A(c, c) * P^c(tau_A < T_c^+) = 1``."""
    A = as_vertex_set(A, g.n)
    if c not in A:
        raise ValueError("c must belong to A")
    G = killed_green(g, A)(c, c)
    esc = escape_probability(g, A, c)
    return IdentityCheck(G, esc, abs(G * esc - 1.0))


def last_exit_identity(g: WeightedGraph, A, B) -> IdentityCheck:
    """Check the last-exit decomposition for ``A`` inside ``B``.

    For every start ``x`` in ``B``::

        P^x[hit A at some time >= 0 before leaving B]
            = sum_{y in A} G_B(x, y) P^y[no return to A (times >= 1) before leaving B]

    Returns per-start arrays (aligned with sorted ``B``) and their max gap.
    """
    A = as_vertex_set(A, g.n)
    B = as_vertex_set(B, g.n)
    if A.size == 0:
        raise ValueError("A must be nonempty")
    if np.setdiff1d(A, B).size:
        raise ValueError("A must be a subset of B")
    G = killed_green(g, B)
    P = transition_matrix(g)

    lhs = _hit_before_exit(P, A, B, g.n)[B]

    # escape from y in A: first step leaves B, or lands in B\A and exits before hitting A
    inside_B = np.zeros(g.n, dtype=bool)
    inside_B[B] = True
    free = np.setdiff1d(B, A)
    exit_first = np.zeros(g.n)
    exit_first[~inside_B] = 1.0
    if free.size:
        Q = P[free][:, free].toarray()
        b = np.asarray(P[free][:, ~inside_B].sum(axis=1)).ravel()
        exit_first[free] = la.solve(np.eye(free.size) - Q, b)
    esc = P[A] @ exit_first

    cols = np.searchsorted(B, A)
    rhs = G.matrix[:, cols] @ esc
    return IdentityCheck(lhs, rhs, float(np.max(np.abs(lhs - rhs))))


def chebyshev_poly(k: int, t):
    """Chebyshev polynomial ``H_k`` evaluated at a scalar or a square matrix.

    Scalars in ``[-1, 1]`` use ``cos(k arccos t)``; matrices use the
    three-term recurrence ``H_{k+1} = 2 t H_k - H_{k-1}``.
    """
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if np.ndim(t) == 0:
        t = float(t)
        if abs(t) <= 1.0:
            return float(np.cos(k * np.arccos(t)))
        prev, cur = 1.0, t
        if k == 0:
            return prev
        for _ in range(k - 1):
            prev, cur = cur, 2.0 * t * cur - prev
        return cur
    return chebyshev_sequence(k, t)[k]


def chebyshev_sequence(k_max: int, M) -> list:
    """``[H_0(M), ..., H_{k_max}(M)]`` for a square matrix ``M``."""
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    out = [np.eye(M.shape[0])]
    if k_max >= 1:
        out.append(M.copy())
    for _ in range(k_max - 1):
        out.append(2.0 * M @ out[-1] - out[-2])
    return out


def verify_duality(P, n: int) -> float:
    """Max-entry gap between ``P^n`` and ``sum_k P(S_n = k) H_|k|(P)``.

    ``S_n`` is the simple symmetric walk on the integers.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    P = P.toarray() if sp.issparse(P) else np.asarray(P, dtype=float)
    H = chebyshev_sequence(n, P)
    rhs = np.zeros_like(P)
    for k, prob in rw_step_distribution(n, 0.5).items():
        rhs += prob * H[abs(k)]
    lhs = np.linalg.matrix_power(P, n)
    return float(np.max(np.abs(lhs - rhs)))
