"""Solar systems: concentric hop-distance rings around a center, cut into
angular blocks, and the per-block harmonic solve that decides which random
candidate sets are safe.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import (WeightedGraph, as_vertex_set, components, exterior_boundary,
                    is_connected, shortest_path_distances, transition_matrix)

N_RINGS = 10


@dataclass(frozen=True)
class PolarEmbedding:
    center: int
    radius: np.ndarray
    angle: np.ndarray


def spectral_coordinates(g: WeightedGraph) -> np.ndarray:
    """Eigenvectors 2 and 3 of the normalized Laplacian, shape ``(n, 2)``.

    Signs are fixed so the first nonzero coordinate of each vector is positive.
    Missing eigenvectors (``n < 3``) are zero.
    """
    coords = np.zeros((g.n, 2))
    if g.n < 2:
        return coords
    s = 1.0 / np.sqrt(g.omega)
    L = np.eye(g.n) - (g.adjacency.toarray() * s[:, None]) * s[None, :]
    _, vecs = la.eigh(L)
    for j in range(min(2, g.n - 1)):
        v = vecs[:, j + 1].copy()
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size and v[nz[0]] < 0:
            v = -v
        coords[:, j] = v
    return coords


def polar_embed(g: WeightedGraph, center: int, coords: Optional[np.ndarray] = None) -> PolarEmbedding:
    """Hop radius from ``center`` and spectral angle in ``[0, 2 pi)`` per vertex."""
    if not 0 <= center < g.n:
        raise ValueError(f"invalid center {center}")
    if not is_connected(g):
        raise ValueError("graph must be connected")
    if coords is None:
        coords = spectral_coordinates(g)
    radius = shortest_path_distances(g, center)
    x, y = coords[:, 0], coords[:, 1]
    tie = (np.abs(x) <= 1e-12) & (np.abs(y) <= 1e-12)
    angle = np.where(tie, 0.0, np.mod(np.arctan2(y, x), 2.0 * np.pi))
    return PolarEmbedding(int(center), radius, angle)


@dataclass(frozen=True)
class SolarSystem:
    """Rings ``1..10`` around ``center``; ring ``i`` holds radii in ``[(i-1) 2^s, i 2^s)``.

    ``blocks[r][b]`` is block ``b`` of ring ``r`` (0-based); every ring has
    the same number of blocks, some possibly empty.
    """

    center: int
    scale: int
    rings: tuple
    blocks: tuple

    @property
    def n_blocks(self) -> int:
        return len(self.blocks[0]) if self.blocks else 0

    @property
    def vertices(self) -> np.ndarray:
        return np.sort(np.concatenate(self.rings)) if self.rings else np.array([], dtype=np.int64)

    def ring_of(self) -> dict:
        return {int(v): r for r, ring in enumerate(self.rings) for v in ring}

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "scale": self.scale,
            "rings": [ring.tolist() for ring in self.rings],
            "blocks": [[b.tolist() for b in ring] for ring in self.blocks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_solar_system(g: WeightedGraph, center: int, s: int, n_b: int,
                       embedding: Optional[PolarEmbedding] = None,
                       available=None) -> SolarSystem:
    """Partition the ball of radius ``10 * 2**s`` around ``center`` into rings and blocks.

    Blocks are contiguous runs of a ring sorted by ``(angle, id)``, sized as
    evenly as possible with the larger blocks first. ``available`` restricts
    membership to a subset of vertices (used to keep systems disjoint).
    """
    if not 0 <= center < g.n:
        raise ValueError(f"invalid center {center}")
    if s < 0 or n_b < 1:
        raise ValueError("need s >= 0 and n_b >= 1")
    if embedding is None:
        embedding = polar_embed(g, center)
    width = 2 ** s
    mask = np.isfinite(embedding.radius) & (embedding.radius < N_RINGS * width)
    if available is not None:
        avail = np.zeros(g.n, dtype=bool)
        avail[as_vertex_set(available, g.n)] = True
        mask &= avail
    ring_idx = np.full(g.n, -1)
    ring_idx[mask] = (embedding.radius[mask] // width).astype(int)
    rings, blocks = [], []
    for r in range(N_RINGS):
        members = np.flatnonzero(ring_idx == r)
        rings.append(members)
        order = np.lexsort((members, embedding.angle[members]))
        blocks.append(tuple(np.sort(chunk) for chunk in np.array_split(members[order], n_b)))
    return SolarSystem(int(center), int(s), tuple(rings), tuple(blocks))


@dataclass(frozen=True)
class HarmonicField:
    """Hitting probabilities ``q`` on a block, ``1`` on ``U`` and ``0`` on the boundary.

    ``q`` is indexed by vertex id and is zero off ``block``.
    """

    block: np.ndarray
    target: np.ndarray
    boundary: np.ndarray
    q: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        return np.setdiff1d(self.block, self.target)


class EmptyBoundaryError(ValueError):
    """The block has no exterior boundary, so the walk never leaves it."""


def harmonic_hit_probability(g: WeightedGraph, B, U, P=None) -> HarmonicField:
    """Solve ``q(i) = P^i[T_U < T_boundary]`` on block ``B``.

    ``q`` is harmonic for the walk kernel on ``B \\ U``, equal to one on ``U``
    and zero on the exterior boundary of ``B``. Only ``B \\ U`` is solved for.
    """
    B = as_vertex_set(B, g.n)
    U = as_vertex_set(U, g.n)
    if np.setdiff1d(U, B).size:
        raise ValueError("U must be a subset of B")
    boundary = exterior_boundary(g, B)
    if boundary.size == 0:
        raise EmptyBoundaryError("block has an empty exterior boundary")
    q = np.zeros(g.n)
    q[U] = 1.0
    free = np.setdiff1d(B, U)
    if U.size and free.size:
        if P is None:
            P = transition_matrix(g)
        rows = P[free]
        Q = rows[:, free]
        b = np.asarray(rows[:, U].sum(axis=1)).ravel()
        M = sp.identity(free.size, format="csc") - Q.tocsc()
        if free.size <= 64:
            q[free] = la.solve(M.toarray(), b)
        else:
            q[free] = spla.spsolve(M, b)
    return HarmonicField(B, U, boundary, q)


def harmonic_residual(g: WeightedGraph, field: HarmonicField, P=None) -> float:
    """Largest ``|sum_j p(i, j) (q(i) - q(j))|`` over the interior of the block."""
    interior = field.interior
    if interior.size == 0:
        return 0.0
    if P is None:
        P = transition_matrix(g)
    return float(np.max(np.abs(field.q[interior] - P[interior] @ field.q)))


def relative_absorption(g: WeightedGraph, B, U, field: HarmonicField) -> float:
    """``sum_{i in B \\ U} q(i) / max(1, d(i, boundary))``."""
    B = as_vertex_set(B, g.n)
    U = as_vertex_set(U, g.n)
    free = np.setdiff1d(B, U)
    if free.size == 0:
        return 0.0
    if field.boundary.size:
        depth = shortest_path_distances(g, field.boundary)[free]
    else:
        depth = np.full(free.size, np.inf)
    return float(np.sum(field.q[free] / np.maximum(1.0, depth)))


@dataclass
class CandidateSet:
    ring: int
    block: int
    vertices: np.ndarray
    connected: bool = True
    shrunk: bool = False
    ra: float = math.nan
    safe: bool = False
    error: Optional[str] = None


def _induced_connected(g: WeightedGraph, S) -> bool:
    return len(components(g, S)) <= 1


def _grow(g, comp, size, rng):
    """Randomized breadth-first growth inside ``comp`` from a random seed vertex."""
    allowed = set(comp.tolist())
    start = int(rng.choice(comp))
    chosen = [start]
    taken = {start}
    frontier = [int(v) for v in g.neighbors(start) if int(v) in allowed]
    while len(chosen) < size and frontier:
        k = int(rng.integers(len(frontier)))
        v = frontier.pop(k)
        if v in taken:
            continue
        taken.add(v)
        chosen.append(v)
        frontier.extend(int(w) for w in g.neighbors(v) if int(w) in allowed and int(w) not in taken)
    return np.sort(np.asarray(chosen, dtype=np.int64))


def sample_candidate_set(g: WeightedGraph, block, fraction: float = 0.5, max_tries: int = 50,
                         seed=None) -> CandidateSet:
    """Draw a connected random subset holding ``ceil(fraction * |block|)`` vertices.

    Uniform subsets are tried ``max_tries`` times; after that the set is
    grown breadth-first from a random vertex. If no connected subset of that
    size exists, the largest component of the block is returned and the
    candidate is marked ``shrunk``.
    """
    block = as_vertex_set(block, g.n)
    if block.size == 0:
        raise ValueError("block must be nonempty")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    size = min(block.size, math.ceil(fraction * block.size - 1e-12))
    for _ in range(max_tries):
        U = np.sort(rng.choice(block, size=size, replace=False))
        if _induced_connected(g, U):
            return CandidateSet(-1, -1, U)
    comps = components(g, block)
    big = [c for c in comps if c.size >= size]
    if big:
        # pick the component containing a uniformly random vertex among eligible ones
        pool = np.concatenate(big)
        v = rng.choice(pool)
        comp = next(c for c in big if v in c)
        return CandidateSet(-1, -1, _grow(g, comp, size, rng))
    largest = max(comps, key=lambda c: (c.size, -c[0]))
    return CandidateSet(-1, -1, largest, shrunk=True)


def _block_seed(seed, ring, block):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (ring, block))


def evaluate_block(g: WeightedGraph, block, ring: int, index: int, fraction: float,
                   ra_threshold: float, seed, P=None, max_tries: int = 50) -> CandidateSet:
    """Sample, solve and score the candidate set of one block; errors become flags."""
    cand = sample_candidate_set(g, block, fraction, max_tries, seed)
    cand.ring, cand.block = ring, index
    try:
        field = harmonic_hit_probability(g, block, cand.vertices, P)
    except EmptyBoundaryError as exc:
        cand.error = str(exc)
        return cand
    cand.ra = relative_absorption(g, block, cand.vertices, field)
    cand.safe = bool(cand.ra < ra_threshold)
    return cand


def find_safe_sets(g: WeightedGraph, ss: SolarSystem, fraction: float = 0.5,
                   ra_threshold: float = 1.0, seed=None, n_jobs: Optional[int] = None,
                   max_tries: int = 50) -> list[CandidateSet]:
    """One scored candidate per nonempty block, ordered by ``(ring, block)``.

    Each block draws from its own seed stream derived from ``seed`` and its
    position, so the result is independent of ``n_jobs``.
    """
    if ra_threshold < 0:
        raise ValueError("ra_threshold must be nonnegative")
    P = transition_matrix(g)
    tasks = [(r, b, blk) for r, ring in enumerate(ss.blocks) for b, blk in enumerate(ring) if blk.size]

    def run(task):
        r, b, blk = task
        return evaluate_block(g, blk, r, b, fraction, ra_threshold,
                              _block_seed(seed, r, b), P, max_tries)

    if n_jobs is None or n_jobs <= 1 or len(tasks) <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(run, tasks))
