import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import cliques_with_bridge, random_connected_graph
from sparsecut import EntropyClustering, MRPClustering


def test_mrp_params_round_trip():
    est = MRPClustering(n_centers=2, phi_threshold=0.3, random_state=4)
    params = est.get_params()
    assert params["n_centers"] == 2 and params["phi_threshold"] == 0.3
    assert clone(est).get_params() == params
    est.set_params(scale=1)
    assert est.scale == 1


def test_mrp_fit_predict_on_dense_and_sparse():
    g = cliques_with_bridge(8)
    dense = g.adjacency.toarray()
    a = MRPClustering(random_state=0).fit_predict(dense)
    b = MRPClustering(random_state=0).fit(sp.csr_matrix(dense)).labels_
    c = MRPClustering(random_state=0).fit(g).labels_
    assert np.array_equal(a, b) and np.array_equal(b, c)
    assert len(set(a[:8])) == 1 and len(set(a[8:])) == 1 and a[0] != a[8]


def test_mrp_attributes():
    est = MRPClustering(random_state=1).fit(cliques_with_bridge(6))
    assert est.labels_.shape == (12,)
    assert est.repeat_scores_.shape == (3,)
    assert est.solar_systems_


def test_mrp_invalid_params():
    with pytest.raises(ValueError):
        MRPClustering(ra_threshold=-1).fit(cliques_with_bridge(5))


def test_mrp_rejects_bad_input():
    with pytest.raises(ValueError):
        MRPClustering().fit(np.ones((3, 4)))
    with pytest.raises(ValueError):
        MRPClustering().fit(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_random_state_forms(rng):
    g = cliques_with_bridge(6)
    a = MRPClustering(random_state=np.random.default_rng(3)).fit(g).labels_
    b = MRPClustering(random_state=np.random.default_rng(3)).fit(g).labels_
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        MRPClustering(random_state="x").fit(g)


def test_entropy_fit_transform(rng):
    g = random_connected_graph(rng, 20)
    est = EntropyClustering(cardinality=4, n_sets=10, top_m=3, random_state=0)
    with pytest.raises(NotFittedError):
        est.transform(g)
    M = est.fit(g).transform(g)
    assert M.shape == (20, 3)
    assert np.all(M.sum(axis=0) == 4)
    assert np.all(np.diff(est.scores_) <= 0)
    assert est.get_params()["cardinality"] == 4
