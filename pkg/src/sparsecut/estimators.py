"""scikit-learn compatible front ends.

``X`` is a graph: a :class:`~sparsecut.graph.WeightedGraph`, or a square
dense or sparse matrix of nonnegative edge weights.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .cluster import MrpParams, cluster_mrp
from .entropy import cluster_entropy
from .graph import check_graph


def _seed_from(random_state):
    if random_state is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(2 ** 63))
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(2 ** 31))
    raise ValueError(f"cannot derive a seed from {random_state!r}")


class MRPClustering(ClusterMixin, BaseEstimator):
    """Sparse-cut clustering from random safe sets in multiscale solar systems.

    Parameters
    ----------
    n_centers : int, default=4
        Number of solar-system centers, picked by farthest-point sampling.
    scale : int, default=2
        Ring width is ``2**scale`` hops; ten rings per system.
    n_blocks : int, default=8
        Angular blocks per ring.
    fraction : float, default=0.5
        Share of each block drawn into its candidate set.
    ra_threshold : float, default=1.0
        Candidates with relative absorption below this are safe.
    phi_threshold : float, default=0.1
        Safe sets merge when their mutual conductance exceeds this.
    n_repeats : int, default=3
        Independent randomizations; the lowest mean conductance wins.
    absorb : bool, default=True
        Attach vertices left outside every safe set to their heaviest
        neighbouring cluster.
    random_state : int, Generator or None
    n_jobs : int or None
        Worker threads; never changes the result.

    Attributes
    ----------
    labels_ : ndarray of shape (n_vertices,)
        Cluster index per vertex, ``-1`` for unassigned vertices.
    clustering_ : Clustering
    solar_systems_ : list of SolarSystem
    n_merges_ : int
    """

    def __init__(self, n_centers=4, scale=2, n_blocks=8, fraction=0.5, ra_threshold=1.0,
                 phi_threshold=0.1, n_repeats=3, absorb=True, random_state=None, n_jobs=None):
        self.n_centers = n_centers
        self.scale = scale
        self.n_blocks = n_blocks
        self.fraction = fraction
        self.ra_threshold = ra_threshold
        self.phi_threshold = phi_threshold
        self.n_repeats = n_repeats
        self.absorb = absorb
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _params(self):
        return MrpParams(
            n_centers=self.n_centers, scale=self.scale, n_blocks=self.n_blocks,
            fraction=self.fraction, ra_threshold=self.ra_threshold,
            phi_threshold=self.phi_threshold, n_repeats=self.n_repeats,
            seed=_seed_from(self.random_state), absorb=self.absorb,
        )

    def fit(self, X, y=None):
        g = check_graph(X)
        result = cluster_mrp(g, self._params(), n_jobs=self.n_jobs)
        self.clustering_ = result.clustering
        self.labels_ = result.clustering.to_labels()
        self.solar_systems_ = result.galaxy.systems
        self.n_merges_ = result.n_merges
        self.repeat_scores_ = np.array([r.score for r in result.repeats])
        return self


class EntropyClustering(BaseEstimator):
    """Rank random fixed-size vertex sets by beta-entropy.

    Parameters
    ----------
    cardinality : int, default=10
    n_sets : int, default=200
    top_m : int, default=5
    radius : int, default=1
        Hop radius of the covering balls.
    horizon : int or None
        Stopping horizon; ``4 * diameter`` when None.
    random_state : int, Generator or None
    n_jobs : int or None

    Attributes
    ----------
    sets_ : list of ndarray
        The ``top_m`` highest-entropy sets, best first.
    scores_ : ndarray of shape (top_m,)
    """

    def __init__(self, cardinality=10, n_sets=200, top_m=5, radius=1, horizon=None,
                 random_state=None, n_jobs=None):
        self.cardinality = cardinality
        self.n_sets = n_sets
        self.top_m = top_m
        self.radius = radius
        self.horizon = horizon
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        g = check_graph(X)
        ranked = cluster_entropy(g, self.cardinality, self.n_sets, self.top_m, self.radius,
                                 self.horizon, _seed_from(self.random_state), self.n_jobs)
        self.ranked_ = ranked
        self.sets_ = [r.vertices for r in ranked]
        self.scores_ = np.array([r.score for r in ranked])
        return self

    def transform(self, X):
        """Membership matrix of shape ``(n_vertices, top_m)`` for the fitted sets."""
        check_is_fitted(self, "sets_")
        g = check_graph(X)
        out = np.zeros((g.n, len(self.sets_)))
        for j, s in enumerate(self.sets_):
            out[s, j] = 1.0
        return out
