import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dimal.estimators import (
    DIMAL,
    SMACOF,
    ClassicalScaling,
    LandmarkIsomap,
    attached_geodesics,
    drlim_pairs,
    neighbor_graph,
    smacof_landmark_embedding,
)
from dimal.geodesics import DisconnectedGraphError, farthest_point_sampling, geodesic_rows
from dimal.geometry import gen_helical_ribbon, gen_s_curve
from dimal.mds import StressSpec, classical_scaling, relative_stress
from oracles import pairwise


@pytest.fixture(scope="module")
def s_curve():
    return gen_s_curve(300, seed=0).points


def test_dimal_params_roundtrip():
    est = DIMAL(n_landmarks=30, hidden_layer_sizes=(10,), max_iter=5)
    assert est.get_params()["n_landmarks"] == 30
    twin = clone(est).set_params(n_landmarks=12)
    assert twin.n_landmarks == 12 and est.n_landmarks == 30


def test_dimal_fit_transform(s_curve):
    est = DIMAL(n_landmarks=30, hidden_layer_sizes=(20, 20), max_iter=200, n_restarts=2, random_state=3)
    Y = est.fit_transform(s_curve)
    assert Y.shape == (300, 2)
    assert est.landmarks_.K == 30
    assert len(est.train_result_.histories) == 2
    assert len(est.loss_history_) == 201
    assert est.n_features_in_ == 3
    again = DIMAL(**est.get_params()).fit_transform(s_curve)
    assert np.array_equal(Y, again)
    assert np.array_equal(est.transform(s_curve[:5]), est.transform(s_curve[:5]))
    with pytest.raises(ValueError):
        est.transform(np.zeros((2, 4)))


def test_dimal_validation(s_curve):
    with pytest.raises(NotFittedError):
        DIMAL().transform(s_curve)
    bad = s_curve.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        DIMAL(n_landmarks=5, max_iter=1).fit(bad)
    with pytest.raises(ValueError):
        DIMAL(network="rnn").fit(s_curve)


def test_dimal_disconnected_graph():
    X = np.vstack([np.zeros((10, 2)) + np.arange(10)[:, None] * 0.1, 100 + np.arange(10)[:, None] * 0.1 + np.zeros((10, 2))])
    with pytest.raises(DisconnectedGraphError):
        DIMAL(n_landmarks=4, n_neighbors=3, max_iter=1).fit(X)


def test_dimal_helical_ribbon_training_set_size():
    X = gen_helical_ribbon(800, seed=1).points
    est = DIMAL(n_landmarks=100, hidden_layer_sizes=(8,), max_iter=1, n_restarts=1).fit(X)
    assert est.landmarks_.K == 100
    assert est.landmarks_.D_s.shape == (100, 100)
    from dimal.neuralnet import PairDataset

    pairs = PairDataset.from_distance_matrix(X[est.landmarks_.indices], est.landmarks_.D_s)
    assert len(pairs) == 4950


def test_dimal_hinge_labels_from_graph(s_curve):
    g = neighbor_graph(s_curve, 10)
    idx = np.arange(0, 300, 3)
    pairs = drlim_pairs(s_curve[idx], g, idx)
    adj = g.to_csr()[idx][:, idx].toarray() > 0
    for p in range(len(pairs)):
        assert pairs.lam[p] == adj[pairs.i[p], pairs.j[p]]
    est = DIMAL(n_landmarks=40, hidden_layer_sizes=(10,), max_iter=30, n_restarts=1, loss="hinge").fit(s_curve)
    assert np.all(np.isfinite(est.transform(s_curve)))


def test_dimal_cnn_on_images():
    from dimal.geometry import HorizonParams, gen_horizon_dataset

    X = gen_horizon_dataset(150, HorizonParams(), seed=0).points
    est = DIMAL(n_landmarks=15, n_neighbors=8, network="cnn", max_iter=5, n_restarts=1).fit(X)
    assert est.network_spec_.n_params == 4627
    assert est.transform(X).shape == (150, 2)
    with pytest.raises(ValueError, match="image_shape"):
        DIMAL(network="cnn", n_landmarks=5).fit(np.random.default_rng(0).normal(size=(20, 12)))


# --- Landmark Isomap ---------------------------------------------------------------------------


def test_landmark_isomap_all_points_equals_classical(s_curve):
    X = s_curve[:200]
    g = neighbor_graph(X, 10)
    est = LandmarkIsomap(n_landmarks=200).fit(X, graph=g)
    D = geodesic_rows(g, np.arange(200))
    D = 0.5 * (D + D.T)
    ref = classical_scaling(D, 2).coords
    emb = est.embedding_
    signs = np.sign(np.sum(emb * ref, axis=0))
    assert np.max(np.abs(emb * signs - ref)) < 1e-8


def test_landmark_isomap_transform_training_points(s_curve):
    est = LandmarkIsomap(n_landmarks=40).fit(s_curve)
    assert np.allclose(est.transform(s_curve), est.embedding_, atol=1e-9)
    assert est.transform(np.zeros((0, 3))).shape == (0, 2)


def test_landmark_isomap_union_mode(s_curve):
    est = LandmarkIsomap(n_landmarks=40, out_of_sample="union").fit(s_curve[:250])
    Y = est.transform(s_curve[250:])
    assert Y.shape == (50, 2) and np.all(np.isfinite(Y))
    with pytest.raises(ValueError):
        LandmarkIsomap(out_of_sample="teleport", n_landmarks=10).fit(s_curve).transform(s_curve[:2])


def test_attached_geodesics_bruteforce(s_curve):
    Xtr, Xnew = s_curve[:200], s_curve[200:220]
    g = neighbor_graph(Xtr, 8)
    rows = geodesic_rows(g, [0, 50, 120])
    got = attached_geodesics(Xtr, g, rows, Xnew, 8)
    for q in range(20):
        d = np.linalg.norm(Xtr - Xnew[q], axis=1)
        near = np.argsort(d)[:8]
        want = np.min(rows[:, near] + d[near][None, :], axis=1)
        assert np.allclose(got[:, q], want, atol=1e-12)


def test_smacof_landmarks_improves_on_isomap(s_curve):
    g = neighbor_graph(s_curve, 10)
    lands = farthest_point_sampling(g, 30, seed=0)
    X, state = smacof_landmark_embedding(lands, lands.to_all, 2)
    spec = StressSpec.from_matrix(lands.D_s)
    assert relative_stress(X[lands.indices], spec) <= relative_stress(classical_scaling(lands.D_s, 2), spec)
    assert np.all(np.isfinite(X))


# --- MDS estimators -------------------------------------------------------------------------------


def test_classical_scaling_estimator():
    P = np.random.default_rng(0).normal(size=(12, 2))
    a = ClassicalScaling(dissimilarity="euclidean").fit_transform(P)
    b = ClassicalScaling().fit_transform(pairwise(P))
    assert np.allclose(a, b, atol=1e-8)
    assert np.allclose(pairwise(a), pairwise(P), atol=1e-8)
    with pytest.raises(ValueError):
        ClassicalScaling(dissimilarity="cosine").fit(P)


def test_smacof_estimator():
    P = np.random.default_rng(1).normal(size=(15, 2))
    D = pairwise(P)
    est = SMACOF(init="random", max_iter=500, rel_tol=0.0)
    Y = est.fit_transform(D)
    assert relative_stress(Y, StressSpec.from_matrix(D)) < 1e-6
    assert est.stress_ == est.state_.stress_history[-1]
    W = np.ones_like(D)
    Yw = SMACOF(max_iter=50).fit_transform(D, weights=W)
    assert np.all(np.isfinite(Yw))
