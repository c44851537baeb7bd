"""Independent reference computations and benchmark instances.

Everything here is deliberately naive: Monte-Carlo simulation, exhaustive
enumeration of stopping rules, and state-space powering. The test suite
trusts these over the main code paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.metrics import adjusted_rand_score

from .graph import (WeightedGraph, as_vertex_set, exterior_boundary, is_connected,
                    shortest_path_distances, transition_matrix)
from .walks import KernelSampler, MonteCarloEstimate

#: largest ``states * horizon`` accepted by the stopping-rule enumeration
ENUMERATION_CAP = 20


def mc_hit_probability(g: WeightedGraph, B, U, start: int, samples: int, seed=None,
                       max_steps: int = 1_000_000) -> MonteCarloEstimate:
    """Frequency with which walks from ``start`` reach ``U`` before leaving ``B``."""
    B = as_vertex_set(B, g.n)
    U = as_vertex_set(U, g.n)
    if start not in B or start in U:
        raise ValueError("start must lie in B \\ U")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if U.size == 0 and exterior_boundary(g, B).size == 0:
        raise ValueError("neither U nor the boundary of B is reachable")
    in_B = np.zeros(g.n, dtype=bool)
    in_B[B] = True
    in_U = np.zeros(g.n, dtype=bool)
    in_U[U] = True
    sampler = KernelSampler(g)
    rng = np.random.default_rng(seed)
    pos = np.full(samples, int(start), dtype=np.int64)
    active = np.arange(samples)
    for _ in range(max_steps):
        if active.size == 0:
            break
        pos[active] = sampler.step_many(pos[active], rng.random(active.size))
        p = pos[active]
        active = active[in_B[p] & ~in_U[p]]
    else:
        raise RuntimeError("walks did not terminate")
    p = float(in_U[pos].mean())
    return MonteCarloEstimate(p, math.sqrt(p * (1 - p) / samples), samples)


def exact_discrepancy_probability(g: WeightedGraph, x: int, omega, C: float) -> float:
    """``P(T > floor((1 + C) d))`` by powering the walk killed on ``omega``."""
    omega = as_vertex_set(omega, g.n)
    d = shortest_path_distances(g, omega)[x]
    if d == 0:
        return 0.0
    if not np.isfinite(d):
        return 1.0
    P = transition_matrix(g).toarray()
    P[:, omega] = 0.0
    mass = np.zeros(g.n)
    mass[x] = 1.0
    for _ in range(math.floor((1.0 + C) * d)):
        mass = mass @ P
    return float(mass.sum())


def brute_force_stopping_value(kernel, payoff, L=None, N: int = 1, start: int = 0) -> float:
    """Best expected reward over every Markov stopping rule, by enumeration.

    A rule marks each ``(time, state)`` with ``time < N`` as stop or go;
    time ``N`` always stops. Stopping at ``(n, y)`` pays ``payoff[n, y]``;
    each step taken from ``y`` first collects ``L[y]``.

    Parameters
    ----------
    kernel : array-like, shape (S, S)
    payoff : array-like, shape (N + 1, S) or (S,)
    L : array-like, shape (S,), optional
        Running reward, zero by default.
    """
    P = kernel.toarray() if sp.issparse(kernel) else np.asarray(kernel, dtype=float)
    S = P.shape[0]
    if S * N > ENUMERATION_CAP:
        raise ValueError(f"enumeration over 2^{S * N} rules exceeds the cap 2^{ENUMERATION_CAP}")
    M = np.asarray(payoff, dtype=float)
    if M.ndim == 1:
        M = np.broadcast_to(M, (N + 1, S))
    reward = np.zeros(S) if L is None else np.asarray(L, dtype=float)
    masks = ((np.arange(2 ** S)[:, None] >> np.arange(S)[None, :]) & 1).astype(bool)

    # rows of W enumerate every rule on times n..N; column = current state
    W = M[N][None, :]
    for n in range(N - 1, -1, -1):
        go = reward[None, :] + W @ P.T
        W = np.where(masks[:, None, :], M[n][None, None, :], go[None, :, :]).reshape(-1, S)
    return float(W[:, start].max())


@dataclass(frozen=True)
class SbmSpec:
    """Planted partition: blocks of given sizes, edge probabilities ``p_in`` / ``p_out``."""

    sizes: Sequence[int]
    p_in: float
    p_out: float
    seed: Optional[int] = 0

    def __post_init__(self):
        if not (0.0 <= self.p_out < self.p_in <= 1.0):
            raise ValueError("need 0 <= p_out < p_in <= 1")
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("block sizes must be positive")


@dataclass(frozen=True)
class SbmSample:
    graph: WeightedGraph
    labels: np.ndarray
    connected: bool
    attempts: int


def _draw_sbm(spec, labels, rng):
    n = labels.size
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], spec.p_in, spec.p_out)
    keep = rng.random(iu.size) < prob
    return iu[keep], ju[keep]


def generate_sbm(spec: SbmSpec, max_attempts: int = 50) -> SbmSample:
    """Sample a unit-weight stochastic block model graph.

    Disconnected draws are resampled from derived seeds; if every attempt
    is disconnected the last one is returned with ``connected=False``.
    Draws with isolated vertices are never returned.
    """
    labels = np.repeat(np.arange(len(spec.sizes)), spec.sizes)
    n = labels.size
    root = np.random.SeedSequence(spec.seed)
    fallback = None
    for attempt in range(max_attempts):
        rng = np.random.default_rng(
            root if attempt == 0 else np.random.SeedSequence(root.entropy, spawn_key=(attempt,)))
        i, j = _draw_sbm(spec, labels, rng)
        deg = np.bincount(np.concatenate((i, j)), minlength=n)
        if (deg == 0).any():
            continue
        g = WeightedGraph.from_edges(n, zip(i.tolist(), j.tolist()))
        if is_connected(g):
            return SbmSample(g, labels, True, attempt + 1)
        fallback = SbmSample(g, labels, False, attempt + 1)
    if fallback is None:
        raise ValueError("every draw had isolated vertices; increase p_in or block sizes")
    return fallback


def labels_from(clustering, n: Optional[int] = None) -> np.ndarray:
    """Label vector from a clustering object, a label array, or a list of vertex sets.

    Negative labels (unassigned vertices) become singleton classes.
    """
    if hasattr(clustering, "to_labels"):
        lab = np.asarray(clustering.to_labels(), dtype=np.int64)
    elif isinstance(clustering, (list, tuple)) and clustering and np.ndim(clustering[0]) == 1:
        if n is None:
            raise ValueError("n is required for a list of vertex sets")
        lab = np.full(n, -1, dtype=np.int64)
        for k, c in enumerate(clustering):
            lab[np.asarray(c, dtype=np.int64)] = k
    else:
        lab = np.asarray(clustering, dtype=np.int64)
    lab = lab.copy()
    loose = np.flatnonzero(lab < 0)
    lab[loose] = lab.max(initial=-1) + 1 + np.arange(loose.size)
    return lab


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement of two partitions of the same vertex set."""
    la_, lb_ = labels_from(a), labels_from(b)
    if la_.shape != lb_.shape:
        raise ValueError(f"partitions cover different universes: {la_.size} vs {lb_.size}")
    return float(adjusted_rand_score(la_, lb_))
