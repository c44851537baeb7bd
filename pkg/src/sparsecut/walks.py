"""Random-walk simulation: plain walks, subordinated (multiscale ring) walks,
the simple-walk step law on the integers, and Monte-Carlo hitting statistics.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .graph import WeightedGraph, as_vertex_set, shortest_path_distances


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    samples: int


@dataclass(frozen=True)
class WalkPath:
    """A realised walk. ``clock`` holds the underlying times of each entry."""

    start: int
    vertices: np.ndarray
    seed: object = None
    clock: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.vertices)


class KernelSampler:
    """Draws transitions of the walk on ``g`` from uniform variates.

    A uniform ``u`` at vertex ``v`` maps to the first neighbour whose
    cumulative transition probability exceeds ``u``; the scalar and batched
    paths use the same rule so they agree draw for draw.
    """

    def __init__(self, g: WeightedGraph):
        A = g.adjacency
        self.indptr = A.indptr
        self.indices = A.indices
        local = np.empty(A.nnz)
        rows = []
        for v in range(g.n):
            lo, hi = A.indptr[v], A.indptr[v + 1]
            c = np.cumsum(A.data[lo:hi]) / g.omega[v]
            c[-1] = 1.0
            local[lo:hi] = c
            rows.append(c.tolist())
        self._rows = rows
        self._nbrs = [A.indices[A.indptr[v]:A.indptr[v + 1]].tolist() for v in range(g.n)]
        row_of = np.repeat(np.arange(g.n), np.diff(A.indptr))
        self._global = row_of + local

    def step(self, v: int, u: float) -> int:
        return self._nbrs[v][bisect_right(self._rows[v], u)]

    def step_many(self, positions: np.ndarray, u: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self._global, positions + u, side="right")
        k = np.minimum(k, self.indptr[positions + 1] - 1)
        return self.indices[k]


def _check_vertex(g, v):
    if not (isinstance(v, (int, np.integer)) and 0 <= v < g.n):
        raise ValueError(f"invalid start vertex {v!r} for a graph on {g.n} vertices")
    return int(v)


def _seed_sequence(seed):
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _walk(sampler, start, u):
    out = [start]
    v = start
    step = sampler.step
    for x in u.tolist():
        v = step(v, x)
        out.append(v)
    return np.asarray(out, dtype=np.int64)


def simulate_walk(g: WeightedGraph, start: int, steps: int, seed=None,
                  sampler: Optional[KernelSampler] = None) -> WalkPath:
    """Simulate ``steps`` transitions of the random walk from ``start``.

    The same ``seed`` always reproduces the same path.
    """
    start = _check_vertex(g, start)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    sampler = sampler or KernelSampler(g)
    rng = np.random.Generator(np.random.PCG64(_seed_sequence(seed)))
    return WalkPath(start, _walk(sampler, start, rng.random(steps)), seed)


@dataclass(frozen=True)
class MrpConfig:
    """Parameters of the walk observed at random increment times.

    Parameters
    ----------
    scale : int
        Length scale ``s``; increments default to uniform on ``{1, ..., 2**s}``.
    threshold : int, optional
        Clock value at which the process stops; defaults to ``100 * 4**s``.
    increment_law : callable, optional
        ``increment_law(rng, size) -> int array`` of positive increments.
    """

    scale: int = 0
    threshold: Optional[int] = None
    increment_law: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if self.threshold is not None and self.threshold < 1:
            raise ValueError("threshold must be at least 1")

    @property
    def threshold_time(self) -> int:
        return self.threshold if self.threshold is not None else 100 * 4 ** self.scale

    def draw_increments(self, rng, size):
        if self.increment_law is not None:
            r = np.asarray(self.increment_law(rng, size), dtype=np.int64)
            if (r < 1).any():
                raise ValueError("increments must be positive integers")
            return r
        if self.scale == 0:
            return np.ones(size, dtype=np.int64)
        return rng.integers(1, 2 ** self.scale, size=size, endpoint=True)


def simulate_mrp(g: WeightedGraph, start: int, cfg: MrpConfig, seed=None,
                 sampler: Optional[KernelSampler] = None) -> WalkPath:
    """Simulate the subordinated walk ``Y_n = S_{tau_n}`` until ``tau_n >= threshold``.

    The underlying walk consumes its random stream exactly as
    :func:`simulate_walk` does, so at scale 0 the two coincide for equal seeds.
    """
    start = _check_vertex(g, start)
    ss = _seed_sequence(seed)
    walk_rng = np.random.Generator(np.random.PCG64(ss))
    inc_ss = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (0,))
    inc_rng = np.random.Generator(np.random.PCG64(inc_ss))

    T = cfg.threshold_time
    # increments are >= 1, so T draws always reach the threshold
    tau = np.cumsum(cfg.draw_increments(inc_rng, T))
    n_stop = int(np.searchsorted(tau, T)) + 1
    clock = np.concatenate(([0], tau[:n_stop]))

    sampler = sampler or KernelSampler(g)
    under = _walk(sampler, start, walk_rng.random(int(clock[-1])))
    return WalkPath(start, under[clock], seed, clock)


def rw_step_distribution(n: int, p_up: float = 0.5) -> dict:
    """Law of ``S_n`` for the walk on the integers with up-probability ``p_up``.

    Returns ``{k: P(S_n = k)}`` over ``k = -n, -n + 2, ..., n``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0.0 <= p_up <= 1.0:
        raise ValueError("p_up must lie in [0, 1]")
    q = 1.0 - p_up
    return {2 * j - n: math.comb(n, j) * p_up ** j * q ** (n - j) for j in range(n + 1)}


def discrepancy_probability(g: WeightedGraph, x: int, omega, C: float, samples: int,
                            seed=None) -> MonteCarloEstimate:
    """Estimate ``P(T - d > C d)`` for the hitting time ``T`` of ``omega`` from ``x``.

    ``d`` is the hop distance from ``x`` to ``omega``. Walks are cut off at
    ``floor((1 + C) d) + 1`` steps, after which the event is already decided.
    """
    omega = as_vertex_set(omega, g.n)
    x = _check_vertex(g, x)
    if omega.size == 0:
        raise ValueError("target set must be nonempty")
    if C <= 0:
        raise ValueError("C must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = shortest_path_distances(g, omega)[x]
    if d == 0:
        return MonteCarloEstimate(0.0, 0.0, samples)
    if not np.isfinite(d):
        return MonteCarloEstimate(1.0, 0.0, samples)

    limit = math.floor((1.0 + C) * d)
    target = np.zeros(g.n, dtype=bool)
    target[omega] = True
    sampler = KernelSampler(g)
    rng = np.random.default_rng(seed)
    pos = np.full(samples, x, dtype=np.int64)
    alive = np.ones(samples, dtype=bool)
    for _ in range(limit):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        pos[idx] = sampler.step_many(pos[idx], rng.random(idx.size))
        alive[idx[target[pos[idx]]]] = False
    p = alive.mean()
    return MonteCarloEstimate(float(p), float(np.sqrt(p * (1 - p) / samples)), samples)
