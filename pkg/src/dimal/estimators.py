"""scikit-learn compatible estimators wrapping the DIMAL pipeline and baselines."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.neighbors import NearestNeighbors
from sklearn.utils.validation import check_array, check_is_fitted

from dimal.geodesics import (
    DisconnectedGraphError,
    LandmarkSet,
    conformal_rescale,
    farthest_point_sampling,
    geodesic_rows,
)
from dimal.geometry import NeighborGraph, build_knn_graph
from dimal.mds import (
    Embedding,
    StressSpec,
    centered_gram,
    classical_scaling,
    embedding_from_gram,
    landmark_isomap_extend,
    smacof,
)
from dimal.neuralnet import (
    NetworkSpec,
    PairDataset,
    TrainConfig,
    TrainResult,
    cnn_spec,
    mlp_spec,
    predict,
    train_siamese,
)

__all__ = [
    "DIMAL",
    "LandmarkIsomap",
    "ClassicalScaling",
    "SMACOF",
    "neighbor_graph",
    "train_on_landmarks",
    "drlim_pairs",
    "landmark_isomap_from_rows",
    "smacof_landmark_embedding",
    "attached_geodesics",
]


def neighbor_graph(X, k: int, conformal: bool = False) -> NeighborGraph:
    """kNN graph (optionally C-Isomap rescaled), required to be connected."""
    graph = build_knn_graph(X, k)
    if conformal:
        graph = conformal_rescale(graph, X, k)
    if not graph.is_connected():
        raise DisconnectedGraphError(
            f"{k}-NN graph has {graph.n_components()} connected components; increase n_neighbors"
        )
    return graph


def train_on_landmarks(X, lands: LandmarkSet, spec: NetworkSpec, cfg: TrainConfig, graph=None) -> TrainResult:
    """Siamese training on every landmark pair.

    The stress loss uses the landmark geodesics as targets. The hinge loss
    instead labels a pair similar when the two landmarks are graph neighbors.
    """
    inputs = np.asarray(X)[lands.indices]
    if cfg.loss == "hinge":
        if graph is None:
            raise ValueError("hinge loss needs the neighbor graph for pair labels")
        pairs = drlim_pairs(inputs, graph, lands.indices)
    else:
        pairs = PairDataset.from_distance_matrix(inputs, lands.D_s)
    return train_siamese(spec, pairs, cfg)


def drlim_pairs(inputs, graph: NeighborGraph, indices) -> PairDataset:
    """All pairs of ``indices`` labelled 1 when adjacent in ``graph``."""
    indices = np.asarray(indices)
    adj = graph.to_csr()[indices][:, indices].toarray() > 0
    return PairDataset.from_distance_matrix(
        inputs, np.zeros((indices.size, indices.size)), lam=adj.astype(float)
    )


def landmark_isomap_from_rows(lands: LandmarkSet, rows: np.ndarray, m: int, solver: str = "jacobi"):
    """Classical scaling of the landmarks, then triangulate every column of ``rows``.

    ``rows`` is ``K x n``: geodesic distances from each landmark to the
    points being embedded.
    """
    gram = centered_gram(lands.D_s, solver)
    land_emb = embedding_from_gram(gram, m)
    return landmark_isomap_extend(lands, land_emb, gram, np.asarray(rows).T ** 2), gram


def smacof_landmark_embedding(
    lands: LandmarkSet, rows, m: int, max_iter: int = 300, n_place: int = 50, pin_landmarks: bool = True
):
    """SMACOF on the landmarks, then place the other points against them.

    Each remaining point minimizes its own stress to the fixed landmark
    configuration by single-point majorization, started from the
    Landmark-Isomap estimate. With ``pin_landmarks`` the columns of ``rows``
    are taken to index the same cloud as ``lands.indices``.
    """
    land_spec = StressSpec.from_matrix(lands.D_s)
    init = classical_scaling(lands.D_s, m)
    state = smacof(land_spec, lands.K, m, init=init, max_iter=max_iter)
    Y = state.X
    rows = np.asarray(rows, dtype=float)
    start, _ = landmark_isomap_from_rows(lands, rows, m)
    # Re-express the Isomap start in the SMACOF frame via least squares.
    A = np.hstack([init.coords, np.ones((lands.K, 1))])
    T, *_ = np.linalg.lstsq(A, Y, rcond=None)
    X = np.hstack([start, np.ones((start.shape[0], 1))]) @ T
    D = rows.T  # n x K
    for _ in range(n_place):
        diff = X[:, None, :] - Y[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        ratio = np.where(r > 1e-9, D / np.where(r > 1e-9, r, 1.0), 0.0)
        X = (Y[None, :, :] + ratio[:, :, None] * diff).mean(axis=1)
    if pin_landmarks:
        X[lands.indices] = Y
    return X, state


class DIMAL(TransformerMixin, BaseEstimator):
    """Deep isometric manifold learning.

    Builds a kNN graph over the training samples, picks ``n_landmarks`` by
    geodesic farthest point sampling, and trains a network in a Siamese
    configuration so that Euclidean distances between outputs match the
    landmark geodesic distances. Embedding new data is a forward pass.

    Parameters
    ----------
    n_landmarks : int
        Number of farthest point samples used for training.
    n_neighbors : int
        k of the neighbor graph.
    network : {"mlp", "cnn"} or NetworkSpec
        Architecture. ``"mlp"`` uses ``hidden_layer_sizes``; ``"cnn"`` uses
        the two-convolution image network and needs ``image_shape``.
    conformal : bool
        Rescale edges by the C-Isomap local scale before computing geodesics.
    loss : {"stress", "hinge"}
        ``"hinge"`` trains the contrastive baseline with neighbor labels.
    """

    def __init__(
        self,
        n_landmarks=200,
        n_neighbors=10,
        n_components=2,
        network="mlp",
        hidden_layer_sizes=(70, 70),
        image_shape=None,
        max_iter=1000,
        learning_rate=0.01,
        beta1=0.95,
        beta2=0.99,
        n_restarts=5,
        loss="stress",
        margin=1.0,
        conformal=False,
        initial_landmark=None,
        random_state=0,
        n_jobs=1,
    ):
        self.n_landmarks = n_landmarks
        self.n_neighbors = n_neighbors
        self.n_components = n_components
        self.network = network
        self.hidden_layer_sizes = hidden_layer_sizes
        self.image_shape = image_shape
        self.max_iter = max_iter
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.n_restarts = n_restarts
        self.loss = loss
        self.margin = margin
        self.conformal = conformal
        self.initial_landmark = initial_landmark
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _network_spec(self, n_features: int) -> NetworkSpec:
        if isinstance(self.network, NetworkSpec):
            return self.network
        if self.network == "mlp":
            return mlp_spec(n_features, tuple(self.hidden_layer_sizes), self.n_components)
        if self.network == "cnn":
            shape = self.image_shape
            if shape is None:
                side = int(round(np.sqrt(n_features)))
                if side * side != n_features:
                    raise ValueError("image_shape is required for non-square images")
                shape = (side, side)
            return cnn_spec(tuple(shape), output_dim=self.n_components)
        raise ValueError(f"unknown network {self.network!r}")

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            iterations=self.max_iter,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            restarts=self.n_restarts,
            loss=self.loss,
            margin=self.margin,
            seed=int(self.random_state or 0),
        )

    def fit(self, X, y=None, landmarks: LandmarkSet | None = None, graph: NeighborGraph | None = None):
        """Fit on ``X``. A precomputed ``graph`` and/or ``landmarks`` may be passed."""
        X = check_array(X, ensure_min_samples=2)
        spec = self._network_spec(X.shape[1])
        if spec.input_size != X.shape[1]:
            raise ValueError(f"network expects {spec.input_size} features, X has {X.shape[1]}")
        if graph is None:
            graph = neighbor_graph(X, self.n_neighbors, self.conformal)
        if landmarks is None:
            landmarks = farthest_point_sampling(
                graph, self.n_landmarks, self.initial_landmark, int(self.random_state or 0)
            )
        self.graph_ = graph
        self.landmarks_ = landmarks
        self.network_spec_ = spec
        self.train_result_ = train_on_landmarks(X, landmarks, spec, self.train_config(), graph)
        self.params_ = self.train_result_.params
        self.loss_history_ = self.train_result_.histories[self.train_result_.best_restart]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, ensure_min_samples=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        return predict(self.params_, X)


def attached_geodesics(X_train, graph: NeighborGraph, rows, X_new, k: int, conformal: bool = False):
    """Geodesics from new samples to the landmarks through their training neighbors.

    ``d(x, l) = min_j (|x - x_j| + d(x_j, l))`` over the ``k`` nearest
    training samples ``x_j``. With ``conformal`` the attaching edges get the
    same ``1/sqrt(M(x) M(j))`` rescaling as the training graph, with ``M(x)``
    measured against the training samples.
    """
    nn = NearestNeighbors(n_neighbors=k, algorithm="brute").fit(X_train)
    dist, idx = nn.kneighbors(X_new)
    if conformal:
        m_train = nn.kneighbors()[0].mean(axis=1)
        m_new = dist.mean(axis=1)
        dist = dist / np.sqrt(m_new[:, None] * m_train[idx])
    # rows: K x N_train -> result K x n_new
    return np.min(rows[:, idx] + dist[None, :, :], axis=2)


class LandmarkIsomap(TransformerMixin, BaseEstimator):
    """Landmark Isomap: classical scaling on landmarks plus triangulation.

    New samples need geodesic distances to the landmarks. With
    ``out_of_sample="attach"`` each new sample is hooked onto its ``k``
    nearest training samples; with ``"union"`` the neighbor graph of training
    and new samples together is rebuilt and searched.
    """

    def __init__(self, n_landmarks=200, n_neighbors=10, n_components=2, conformal=False,
                 initial_landmark=None, out_of_sample="attach", random_state=0, n_jobs=1):
        self.n_landmarks = n_landmarks
        self.n_neighbors = n_neighbors
        self.n_components = n_components
        self.conformal = conformal
        self.initial_landmark = initial_landmark
        self.out_of_sample = out_of_sample
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None, landmarks: LandmarkSet | None = None, graph: NeighborGraph | None = None):
        X = check_array(X, ensure_min_samples=2)
        if graph is None:
            graph = neighbor_graph(X, self.n_neighbors, self.conformal)
        if landmarks is None:
            landmarks = farthest_point_sampling(
                graph, self.n_landmarks, self.initial_landmark, int(self.random_state or 0)
            )
        rows = landmarks.to_all
        if rows is None or rows.shape[1] != X.shape[0]:
            rows = geodesic_rows(graph, landmarks.indices, n_jobs=self.n_jobs)
        self.embedding_, self.gram_ = landmark_isomap_from_rows(landmarks, rows, self.n_components)
        self.graph_ = graph
        self.landmarks_ = landmarks
        self.rows_ = rows
        self.X_fit_ = X
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, **fit_params).embedding_

    def landmark_distances(self, X):
        """``K x n`` geodesic distances from the landmarks to new samples."""
        check_is_fitted(self, "embedding_")
        X = check_array(X, ensure_min_samples=0)
        if self.out_of_sample == "attach":
            return attached_geodesics(self.X_fit_, self.graph_, self.rows_, X, self.n_neighbors, self.conformal)
        if self.out_of_sample == "union":
            union = np.vstack([self.X_fit_, X])
            graph = neighbor_graph(union, self.n_neighbors, self.conformal)
            rows = geodesic_rows(graph, self.landmarks_.indices, n_jobs=self.n_jobs)
            new = rows[:, self.X_fit_.shape[0]:]
            if not np.all(np.isfinite(new)):
                raise DisconnectedGraphError("some new samples are not connected to the landmarks")
            return new
        raise ValueError(f"unknown out_of_sample mode {self.out_of_sample!r}")

    def transform(self, X):
        X = check_array(X, ensure_min_samples=0)
        if X.shape[0] == 0:
            return np.zeros((0, self.n_components))
        new = self.landmark_distances(X)
        land_emb = Embedding(self.embedding_[self.landmarks_.indices])
        return landmark_isomap_extend(self.landmarks_, land_emb, self.gram_, new.T ** 2)


class ClassicalScaling(BaseEstimator):
    """Classical scaling of a precomputed distance matrix (or Euclidean data)."""

    def __init__(self, n_components=2, dissimilarity="precomputed", solver="jacobi"):
        self.n_components = n_components
        self.dissimilarity = dissimilarity
        self.solver = solver

    def fit(self, X, y=None):
        X = check_array(X)
        if self.dissimilarity == "euclidean":
            sq = np.sum(X * X, axis=1)
            D = np.sqrt(np.clip(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0, None))
            np.fill_diagonal(D, 0.0)
        elif self.dissimilarity == "precomputed":
            D = X
        else:
            raise ValueError(f"unknown dissimilarity {self.dissimilarity!r}")
        self.gram_ = centered_gram(D, self.solver)
        self.embedding_ = embedding_from_gram(self.gram_, self.n_components).coords
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


class SMACOF(BaseEstimator):
    """Least-squares MDS of a precomputed distance matrix by majorization."""

    def __init__(self, n_components=2, max_iter=1000, rel_tol=1e-9, init="classical", random_state=0):
        self.n_components = n_components
        self.max_iter = max_iter
        self.rel_tol = rel_tol
        self.init = init
        self.random_state = random_state

    def fit(self, D, y=None, weights=None):
        D = check_array(D)
        n = D.shape[0]
        spec = StressSpec.from_matrix(D, weights)
        if isinstance(self.init, str) and self.init == "classical":
            init = classical_scaling(D, self.n_components)
        elif isinstance(self.init, str) and self.init == "random":
            init = None
        else:
            init = np.asarray(self.init)
        self.state_ = smacof(spec, n, self.n_components, init, self.max_iter, self.rel_tol,
                             int(self.random_state or 0))
        self.embedding_ = self.state_.X
        self.stress_ = self.state_.stress_history[-1]
        return self

    def fit_transform(self, D, y=None, weights=None):
        return self.fit(D, weights=weights).embedding_
