"""Galaxy-of-solar-systems clustering.

Each repeat samples one connected candidate set per block of every solar
system, keeps those whose relative absorption is below ``ra_threshold``,
and merges safe sets of the same system whose mutual conductance exceeds
``phi_threshold``. The repeat with the lowest mean cluster conductance wins.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import (DegenerateSetError, WeightedGraph, as_vertex_set, components, conductance,
                    is_connected, shortest_path_distances)
from .oracle import adjusted_rand_index
from .solar import SolarSystem, build_solar_system, find_safe_sets, polar_embed, spectral_coordinates

logger = logging.getLogger(__name__)

#: merged sets touching at least this many rings are reported as giant components
GIANT_RING_SPAN = 3


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb] or (self.size[ra] == self.size[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return sorted(out.values(), key=lambda grp: grp[0])


def merge_groups(g: WeightedGraph, sets, phi_threshold: float):
    """Group indices of ``sets`` linked by mutual conductance above ``phi_threshold``.

    Overlapping sets are joined first. Returns ``(groups, n_merges)`` where
    ``n_merges`` counts unions made by the conductance rule.
    """
    sets = [as_vertex_set(s, g.n) for s in sets]
    m = len(sets)
    uf = UnionFind(m)
    if m == 0:
        return [], 0
    rows = np.concatenate(sets)
    cols = np.repeat(np.arange(m), [s.size for s in sets])
    X = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(g.n, m))
    overlap = (X.T @ X).tocoo()
    for i, j in zip(overlap.row, overlap.col):
        if i < j:
            uf.union(int(i), int(j))
    vol = X.T @ g.omega
    between = (X.T @ g.adjacency @ X).toarray()
    n_merges = 0
    for i in range(m):
        for j in range(i + 1, m):
            if between[i, j] > 0 and between[i, j] / min(vol[i], vol[j]) > phi_threshold:
                n_merges += uf.union(i, j)
    return uf.groups(), n_merges


def merge_safe_sets(g: WeightedGraph, sets, phi_threshold: float) -> list[np.ndarray]:
    """Union-find merge of safe sets by mutual conductance."""
    groups, _ = merge_groups(g, sets, phi_threshold)
    return [np.unique(np.concatenate([as_vertex_set(sets[i], g.n) for i in grp])) for grp in groups]


@dataclass
class Clustering:
    """Disjoint clusters over ``n`` vertices; the rest are unassigned.

    ``provenance[k]`` is ``(center, tag)`` with tag ``"giant"`` or ``"safe-merge"``.
    """

    n: int
    clusters: list
    provenance: list = field(default_factory=list)

    @property
    def unassigned(self) -> np.ndarray:
        lab = self.to_labels()
        return np.flatnonzero(lab < 0)

    def to_labels(self) -> np.ndarray:
        lab = np.full(self.n, -1, dtype=np.int64)
        for k, c in enumerate(self.clusters):
            lab[c] = k
        return lab

    def to_dict(self) -> dict:
        return {
            "clusters": [c.tolist() for c in self.clusters],
            "unassigned": self.unassigned.tolist(),
            "provenance": [{"center": int(c), "tag": t} for c, t in self.provenance],
        }

    def check(self):
        seen = np.zeros(self.n, dtype=int)
        for c in self.clusters:
            seen[c] += 1
        if (seen > 1).any():
            raise AssertionError("clusters overlap")


@dataclass(frozen=True)
class MrpParams:
    """Parameters of the galaxy clustering; see :class:`sparsecut.MRPClustering`."""

    n_centers: int = 4
    scale: int = 2
    n_blocks: int = 8
    fraction: float = 0.5
    ra_threshold: float = 1.0
    phi_threshold: float = 0.1
    n_repeats: int = 3
    seed: Optional[int] = 0
    absorb: bool = True
    max_tries: int = 50

    def __post_init__(self):
        if self.n_centers < 1 or self.n_repeats < 1 or self.n_blocks < 1:
            raise ValueError("n_centers, n_repeats and n_blocks must be >= 1")
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if not 0 < self.fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")
        if not self.ra_threshold > 0 or not self.phi_threshold > 0:
            raise ValueError("thresholds must be positive")
        if self.max_tries < 0:
            raise ValueError("max_tries must be nonnegative")

    def to_dict(self):
        return asdict(self)


def select_centers(g: WeightedGraph, n_centers: int) -> list[int]:
    """Farthest-point sampling in hop distance, starting from the heaviest vertex."""
    centers = [int(np.argmax(g.omega))]
    nearest = shortest_path_distances(g, centers[0])
    while len(centers) < min(n_centers, g.n):
        far = np.where(np.isfinite(nearest), nearest, np.inf)
        c = int(np.argmax(far))
        if far[c] <= 0:
            break
        centers.append(c)
        nearest = np.minimum(nearest, shortest_path_distances(g, c))
    return centers


@dataclass
class Galaxy:
    systems: list
    skipped_centers: list

    @property
    def complete(self) -> bool:
        return not self.skipped_centers


def build_galaxy(g: WeightedGraph, params: MrpParams, coords: Optional[np.ndarray] = None) -> Galaxy:
    """Disjoint solar systems around farthest-point centers.

    Vertices are claimed by the first system that reaches them; a center
    already claimed yields no system and is listed in ``skipped_centers``.
    """
    if not is_connected(g):
        raise ValueError("graph must be connected")
    if coords is None:
        coords = spectral_coordinates(g)
    claimed = np.zeros(g.n, dtype=bool)
    systems, skipped = [], []
    for c in select_centers(g, params.n_centers):
        if claimed[c]:
            skipped.append(c)
            continue
        emb = polar_embed(g, c, coords)
        ss = build_solar_system(g, c, params.scale, params.n_blocks, emb,
                                available=np.flatnonzero(~claimed))
        claimed[ss.vertices] = True
        systems.append(ss)
    if skipped:
        logger.info("galaxy: %d of %d centers fall inside earlier systems", len(skipped),
                    params.n_centers)
    return Galaxy(systems, skipped)


def absorb_unassigned(g: WeightedGraph, labels: np.ndarray, n_clusters: int) -> np.ndarray:
    """Attach unassigned vertices to the adjacent cluster they share most weight with.

    Rounds are synchronous, so the result does not depend on vertex order;
    ties go to the lower cluster index.
    """
    labels = labels.copy()
    if n_clusters == 0:
        return labels
    while True:
        loose = np.flatnonzero(labels < 0)
        if loose.size == 0:
            break
        hit = labels >= 0
        onehot = sp.csr_matrix((np.ones(hit.sum()), (np.flatnonzero(hit), labels[hit])),
                               shape=(g.n, n_clusters))
        pull = (g.adjacency[loose] @ onehot).toarray()
        best = pull.max(axis=1)
        move = best > 0
        if not move.any():
            break
        labels[loose[move]] = np.argmax(pull[move], axis=1)
    return labels


def _mean_conductance(g, clusters):
    vals = []
    for c in clusters:
        try:
            vals.append(conductance(g, c))
        except DegenerateSetError:
            continue
    return float(np.mean(vals)) if vals else math.inf


@dataclass
class RepeatResult:
    clustering: Clustering
    score: float
    n_merges: int
    n_candidates: int
    n_safe: int
    n_flagged: int


def _system_clusters(g, ss: SolarSystem, params: MrpParams, seed, n_jobs):
    cands = find_safe_sets(g, ss, params.fraction, params.ra_threshold, seed, n_jobs,
                           params.max_tries)
    safe = [c for c in cands if c.safe]
    groups, n_merges = merge_groups(g, [c.vertices for c in safe], params.phi_threshold)
    out = []
    for grp in groups:
        members = np.unique(np.concatenate([safe[i].vertices for i in grp]))
        span = len({safe[i].ring for i in grp})
        tag = "giant" if span >= GIANT_RING_SPAN else "safe-merge"
        # safe sets are connected and merges follow edges, but guard anyway
        for part in components(g, members):
            out.append((part, (ss.center, tag)))
    flagged = sum(c.error is not None or c.shrunk for c in cands)
    return out, n_merges, len(cands), len(safe), flagged


def _run_repeat(g, galaxy: Galaxy, params: MrpParams, repeat: int, n_jobs) -> RepeatResult:
    root = np.random.SeedSequence(params.seed)
    seeds = [np.random.SeedSequence(root.entropy, spawn_key=(repeat, k))
             for k in range(len(galaxy.systems))]

    def run(k):
        return _system_clusters(g, galaxy.systems[k], params, seeds[k], n_jobs)

    ks = range(len(galaxy.systems))
    if n_jobs and n_jobs > 1 and len(galaxy.systems) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_system = list(pool.map(run, ks))
    else:
        per_system = [run(k) for k in ks]

    found = [item for res in per_system for item in res[0]]
    clusters = [c for c, _ in found]
    provenance = [p for _, p in found]
    labels = np.full(g.n, -1, dtype=np.int64)
    for k, c in enumerate(clusters):
        labels[c] = k
    if params.absorb:
        labels = absorb_unassigned(g, labels, len(clusters))
        clusters = [np.flatnonzero(labels == k) for k in range(len(clusters))]
    clustering = Clustering(g.n, clusters, provenance)
    return RepeatResult(
        clustering,
        _mean_conductance(g, clusters),
        sum(r[1] for r in per_system),
        sum(r[2] for r in per_system),
        sum(r[3] for r in per_system),
        sum(r[4] for r in per_system),
    )


@dataclass
class MrpResult:
    clustering: Clustering
    galaxy: Galaxy
    repeats: list
    best_repeat: int

    @property
    def n_merges(self) -> int:
        return self.repeats[self.best_repeat].n_merges


def cluster_mrp(g: WeightedGraph, params: MrpParams, n_jobs: Optional[int] = None) -> MrpResult:
    """Run every repeat and keep the one with the lowest mean cluster conductance.

    Output depends only on ``g`` and ``params``; ``n_jobs`` bounds the
    worker threads used for solar systems and blocks.
    """
    if not is_connected(g):
        raise ValueError("graph must be connected")
    galaxy = build_galaxy(g, params)
    repeats = [_run_repeat(g, galaxy, params, r, n_jobs) for r in range(params.n_repeats)]
    best = min(range(len(repeats)), key=lambda r: (repeats[r].score, r))
    repeats[best].clustering.check()
    return MrpResult(repeats[best].clustering, galaxy, repeats, best)


def evaluate_clustering(g: WeightedGraph, c: Clustering, reference=None) -> dict:
    """Per-cluster conductance, coverage and, given a reference, the adjusted Rand index.

    Clusters equal to the whole vertex set have no conductance and are omitted.
    """
    per = []
    for k, cl in enumerate(c.clusters):
        try:
            per.append({"cluster": k, "size": int(cl.size), "conductance": conductance(g, cl)})
        except DegenerateSetError:
            continue
    covered = sum(int(cl.size) for cl in c.clusters)
    out = {
        "n_clusters": len(c.clusters),
        "coverage": covered / g.n if g.n else 0.0,
        "conductance": per,
        "mean_conductance": float(np.mean([p["conductance"] for p in per])) if per else None,
    }
    if reference is not None:
        out["ari"] = adjusted_rand_index(c, reference)
    return out
