"""Optimal stopping on graph walks and the beta-entropy score built from it.

For a start vertex ``x`` and a ball ``Omega_i`` of a covering, the value
``V_i(x)`` is the best expected reward of a walk from ``x`` that collects one
unit per step spent in ``Omega_i`` and, when stopped at ``y``, is paid the hop
distance ``d(x, y)``. Values use a finite horizon ``N``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .graph import WeightedGraph, all_pairs_distances, as_vertex_set, diameter, transition_matrix


class Ball(NamedTuple):
    center: int
    radius: int
    vertices: np.ndarray


@dataclass(frozen=True)
class Covering:
    balls: tuple

    def __len__(self):
        return len(self.balls)

    def indicator(self, n: int) -> np.ndarray:
        """``(n, len(self))`` 0/1 matrix of ball membership."""
        out = np.zeros((n, len(self.balls)))
        for i, b in enumerate(self.balls):
            out[b.vertices, i] = 1.0
        return out


def ball_cover(g: WeightedGraph, radius: int, D: Optional[np.ndarray] = None) -> Covering:
    """Greedy cover by hop balls, each centred at the lowest-id uncovered vertex."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if D is None:
        D = all_pairs_distances(g)
    covered = np.zeros(g.n, dtype=bool)
    balls = []
    while not covered.all():
        c = int(np.argmin(covered))
        members = np.flatnonzero(D[c] <= radius)
        balls.append(Ball(c, int(radius), members))
        covered[members] = True
    return Covering(tuple(balls))


def _as_dense(P):
    return P.toarray() if sp.issparse(P) else np.asarray(P, dtype=float)


def stopping_values(P, payoff, reward, N: int) -> np.ndarray:
    """Backward induction for a stopping problem with running reward.

    ``V_N = M``; ``V_n = max(M, reward + P V_{n+1})``. ``payoff`` and
    ``reward`` have shape ``(S,)`` or ``(S, k)`` for ``k`` problems solved at
    once. Returns ``V_0``.
    """
    if N < 0:
        raise ValueError("horizon must be nonnegative")
    M = np.asarray(payoff, dtype=float)
    R = np.asarray(reward, dtype=float)
    if R.ndim == 2 and M.ndim == 1:
        M = M[:, None]
    V = np.broadcast_to(M, np.broadcast_shapes(M.shape, R.shape)).copy()
    for _ in range(N):
        V = np.maximum(M, R + P @ V)
    return V


def _distance_payoff(D, x):
    d = D[x].copy()
    # unreachable vertices are never visited; any finite payoff will do
    d[~np.isfinite(d)] = 0.0
    return d


def value_function(g: WeightedGraph, x: int, ball, N: int, P=None, D=None) -> float:
    """Optimal value ``V_i(x)`` for the ball ``ball`` and horizon ``N``."""
    if P is None:
        P = transition_matrix(g)
    if D is None:
        D = all_pairs_distances(g)
    L = np.zeros(g.n)
    L[as_vertex_set(ball, g.n)] = 1.0
    return float(stopping_values(P, _distance_payoff(D, x), L, N)[x])


@dataclass(frozen=True)
class SnellEnvelope:
    """``values[n, s] = B_n^N(s)`` for payoff table ``payoff[n, s] = M_n(s)``."""

    values: np.ndarray
    payoff: np.ndarray
    kernel: np.ndarray

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1


def snell_envelope(payoff, kernel, N: int) -> SnellEnvelope:
    """``B_N = M_N``; ``B_n = max(M_n, E[B_{n+1} | X_n])`` for a Markov chain."""
    P = _as_dense(kernel)
    S = P.shape[0]
    M = np.asarray(payoff, dtype=float)
    if M.ndim == 1:
        M = np.broadcast_to(M, (N + 1, S))
    if M.shape != (N + 1, S):
        raise ValueError(f"payoff must have shape {(N + 1, S)}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("payoff must be finite")
    B = np.empty((N + 1, S))
    B[N] = M[N]
    for n in range(N - 1, -1, -1):
        B[n] = np.maximum(M[n], P @ B[n + 1])
    return SnellEnvelope(B, np.array(M), P)


def optimal_stop_rule(env: SnellEnvelope) -> np.ndarray:
    """Stop table ``stop[n, s]``: stop at the first time the envelope touches the payoff."""
    stop = env.values == env.payoff
    stop[-1] = True
    return stop


def expected_stopped_payoff(env: SnellEnvelope, stop: np.ndarray, start: int) -> float:
    """``E[M_tau]`` for the Markov rule ``stop`` from ``start``, by forward propagation."""
    mass = np.zeros(env.kernel.shape[0])
    mass[start] = 1.0
    total = 0.0
    for n in range(env.horizon + 1):
        total += float(mass[stop[n]] @ env.payoff[n][stop[n]])
        mass = np.where(stop[n], 0.0, mass) @ env.kernel
    return total


def stopped_martingale_residual(env: SnellEnvelope, stop: np.ndarray) -> float:
    """Largest ``|E[B_{tau ^ (k+1)} | X_k] - B_{tau ^ k}|`` over unstopped ``(k, s)``.

    Already-stopped paths contribute zero by construction.
    """
    worst = 0.0
    for k in range(env.horizon):
        live = ~stop[k]
        if live.any():
            gap = env.kernel[live] @ env.values[k + 1] - env.values[k][live]
            worst = max(worst, float(np.max(np.abs(gap))))
    return worst


def augmented_payoff(kernel, payoff, reward, N: int):
    """Fold a running reward into a time-dependent payoff.

    With ``h_n`` the expected reward still to be collected when never
    stopping, ``payoff - h_n`` is Markov and its envelope plus ``h_0`` equals
    the value with running reward. Returns ``(table, h)``.
    """
    P = _as_dense(kernel)
    M = np.asarray(payoff, dtype=float)
    L = np.asarray(reward, dtype=float)
    h = np.zeros((N + 1, P.shape[0]))
    for n in range(N - 1, -1, -1):
        h[n] = L + P @ h[n + 1]
    return M[None, :] - h, h


def xlogx(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


class BetaEntropy:
    """Beta-entropy scorer for one graph, covering and horizon.

    A vertex set ``K`` is scored with the covering restricted to ``K``: the
    running reward of ball ``i`` is collected only on ``Omega_i & K``, and
    empty pieces are dropped. The score is the mean over ``x`` in ``K``.
    """

    def __init__(self, g: WeightedGraph, cov: Covering, N: int):
        if N < 1:
            raise ValueError("horizon must be >= 1")
        self.g = g
        self.cov = cov
        self.N = N
        self._P = transition_matrix(g)
        self._D = all_pairs_distances(g)
        self._L = cov.indicator(g.n)

    def value_table(self, K) -> np.ndarray:
        """``V[a, i]``: value for start ``K[a]`` and the ``i``-th nonempty piece."""
        K = as_vertex_set(K, self.g.n)
        if K.size == 0:
            raise ValueError("vertex set must be nonempty")
        L = np.zeros_like(self._L)
        L[K] = self._L[K]
        L = L[:, L.any(axis=0)]
        k, m = K.size, L.shape[1]
        M = self._D[K].T.copy()
        M[~np.isfinite(M)] = 0.0
        # all starts and pieces in one induction: column (a, i) <-> start K[a], piece i
        Mb = np.repeat(M, m, axis=1)
        Lb = np.tile(L, (1, k))
        V = stopping_values(self._P, Mb, Lb, self.N)
        return V[K, :].reshape(k, k, m)[np.arange(k), np.arange(k)]

    def vertex(self, x: int) -> float:
        """Pointwise beta-entropy of ``x`` over the full covering."""
        V = stopping_values(self._P, _distance_payoff(self._D, x), self._L, self.N)
        return float(xlogx(V[x]).mean())

    def score(self, K) -> float:
        return float(xlogx(self.value_table(K)).mean(axis=1).mean())


def default_horizon(g: WeightedGraph) -> int:
    return max(1, 4 * diameter(g))


def beta_entropy(g: WeightedGraph, K, cov: Covering, N: int) -> float:
    """Mean over ``x`` in ``K`` of ``(1/n) sum_i V_i(x) log V_i(x)``.

    The balls are intersected with ``K``; with ``K`` the whole vertex set this
    is the plain average of the pointwise entropies.
    """
    return BetaEntropy(g, cov, N).score(K)


class RankedSet(NamedTuple):
    index: int
    vertices: np.ndarray
    score: float


def cluster_entropy(g: WeightedGraph, cardinality: int, n_sets: int = 200, top_m: int = 5,
                    radius: int = 1, horizon: Optional[int] = None, seed=None,
                    n_jobs: Optional[int] = None) -> list[RankedSet]:
    """Rank random vertex sets of fixed size by beta-entropy; keep the best ``top_m``.

    Ties are broken by draw order, so a fixed ``seed`` gives a fixed ranking.
    """
    if not 1 <= cardinality <= g.n:
        raise ValueError(f"cardinality must lie in [1, {g.n}]")
    if not 1 <= top_m <= n_sets:
        raise ValueError("need 1 <= top_m <= n_sets")
    N = default_horizon(g) if horizon is None else int(horizon)
    rng = np.random.default_rng(seed)
    sets = [np.sort(rng.choice(g.n, size=cardinality, replace=False)) for _ in range(n_sets)]
    scorer = BetaEntropy(g, ball_cover(g, radius), N)
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            scores = list(pool.map(scorer.score, sets))
    else:
        scores = [scorer.score(K) for K in sets]
    ranked = [RankedSet(i, K, s) for i, (K, s) in enumerate(zip(sets, scores))]
    ranked.sort(key=lambda r: (-r.score, r.index))
    return ranked[:top_m]
