"""Experiment drivers: the DIMAL pipeline, full-dataset stress and comparisons."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dimal._io import dump_json, format_float
from dimal.estimators import (
    DIMAL,
    LandmarkIsomap,
    landmark_isomap_from_rows,
    neighbor_graph,
    smacof_landmark_embedding,
    train_on_landmarks,
)
from dimal.geodesics import (
    DisconnectedGraphError,
    LandmarkSet,
    farthest_point_sampling,
    geodesic_rows,
)
from dimal.geometry import NeighborGraph, PointCloud
from dimal.mds import Embedding, StressSpec, classical_scaling, relative_stress
from dimal.neuralnet import NetworkParams, NetworkSpec, TrainConfig, predict

__all__ = [
    "AccuracyFit",
    "ExperimentReport",
    "METHODS",
    "evaluation_pairs",
    "full_stress",
    "run_dimal",
    "order_of_accuracy",
    "accuracy_sweep",
    "run_generalization",
    "compare_methods",
    "split_by_height",
]

METHODS = ("dimal", "classical_full", "smacof_landmarks", "landmark_isomap")
DEFAULT_STRESS_PAIRS = 200_000
# Above this size the auto solver for classical_full switches to LAPACK.
JACOBI_MAX_N = 400


@dataclass
class AccuracyFit:
    """Least-squares fit of ``log E = log C + P log h`` with ``h = 1/sqrt(K)``."""

    samples: list[tuple[int, float]]
    slope: float
    log_c: float
    r_squared: float


@dataclass
class ExperimentReport:
    config: dict = field(default_factory=dict)
    stress: dict[str, float] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    embeddings: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    models: dict[str, NetworkParams] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "stress": self.stress,
            "timings": self.timings,
            "artifacts": self.artifacts,
            "rows": self.rows,
            "extra": self.extra,
        }

    def save(self, path) -> None:
        dump_json(self.to_dict(), path)

    def write_stress_csv(self, path) -> None:
        lines = ["method,K,relative_stress,seconds"]
        for row in self.rows:
            lines.append(
                f"{row['method']},{row['K']},{format_float(row['relative_stress'])},"
                f"{format_float(row['seconds'])}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Stress over the whole dataset
# ---------------------------------------------------------------------------


def _unrank_pairs(ranks: np.ndarray, n: int):
    """Map linear ranks of pairs ``i < j`` (row-major) back to ``(i, j)``."""
    starts = np.concatenate([[0], np.cumsum(np.arange(n - 1, 0, -1))])
    i = np.searchsorted(starts, ranks, side="right") - 1
    j = ranks - starts[i] + i + 1
    return i, j


def evaluation_pairs(
    graph: NeighborGraph,
    mode: str = "sampled",
    n_pairs: int = DEFAULT_STRESS_PAIRS,
    seed: int = 0,
    n_jobs: int = 1,
) -> StressSpec:
    """Geodesic targets for the stress evaluation.

    ``"all_pairs"`` uses every pair ``i < j``. ``"sampled"`` draws ``n_pairs``
    distinct pairs uniformly with ``seed``; when that covers every pair it is
    the same set as ``"all_pairs"``.
    """
    n = graph.num_nodes
    total = n * (n - 1) // 2
    if mode == "all_pairs" or (mode == "sampled" and n_pairs >= total):
        i, j = np.triu_indices(n, k=1)
    elif mode == "sampled":
        ranks = np.sort(np.random.default_rng(seed).choice(total, size=n_pairs, replace=False))
        i, j = _unrank_pairs(ranks, n)
    else:
        raise ValueError(f"unknown stress mode {mode!r}")
    sources = np.unique(i)
    d = np.empty(i.size)
    chunk = 256
    for start in range(0, sources.size, chunk):
        block = sources[start : start + chunk]
        rows = geodesic_rows(graph, block, n_jobs=n_jobs)
        lo, hi = np.searchsorted(i, block[0]), np.searchsorted(i, block[-1], side="right")
        pos = np.searchsorted(block, i[lo:hi])
        d[lo:hi] = rows[pos, j[lo:hi]]
    if not np.all(np.isfinite(d)):
        raise DisconnectedGraphError("stress evaluation graph is disconnected")
    return StressSpec(i, j, d, np.ones(i.size))


def full_stress(
    emb,
    graph: NeighborGraph | None = None,
    mode: str = "sampled",
    n_pairs: int = DEFAULT_STRESS_PAIRS,
    seed: int = 0,
    targets: StressSpec | None = None,
) -> float:
    """Relative stress of ``emb`` against geodesics of ``graph``.

    Pass precomputed ``targets`` (from :func:`evaluation_pairs`) to score
    several embeddings on the same pairs.
    """
    X = emb.coords if isinstance(emb, Embedding) else np.asarray(emb, dtype=float)
    if targets is None:
        if graph is None:
            raise ValueError("need a graph or precomputed targets")
        if graph.num_nodes != X.shape[0]:
            raise ValueError(f"embedding has {X.shape[0]} rows, graph has {graph.num_nodes} nodes")
        targets = evaluation_pairs(graph, mode, n_pairs, seed)
    return relative_stress(X, targets)


# ---------------------------------------------------------------------------
# DIMAL pipeline
# ---------------------------------------------------------------------------


def _points(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)


def run_dimal(
    cloud,
    k_nn: int,
    K: int,
    spec: NetworkSpec,
    cfg: TrainConfig = TrainConfig(),
    initial: int | None = None,
    conformal: bool = False,
    stress_mode: str = "sampled",
    stress_pairs: int = DEFAULT_STRESS_PAIRS,
    n_jobs: int = 1,
) -> tuple[NetworkParams, Embedding, ExperimentReport]:
    """Graph, landmarks, landmark geodesics, Siamese training, forward pass."""
    X = _points(cloud)
    t0 = time.perf_counter()
    model = DIMAL(
        n_landmarks=K, n_neighbors=k_nn, n_components=spec.output_dim, network=spec,
        max_iter=cfg.iterations, learning_rate=cfg.learning_rate, beta1=cfg.beta1,
        beta2=cfg.beta2, n_restarts=cfg.restarts, loss=cfg.loss, margin=cfg.margin,
        conformal=conformal, initial_landmark=initial, random_state=cfg.seed, n_jobs=n_jobs,
    )
    emb = Embedding(model.fit_transform(X))
    t_fit = time.perf_counter() - t0
    t0 = time.perf_counter()
    rel = full_stress(emb, model.graph_, stress_mode, stress_pairs, cfg.seed)
    t_eval = time.perf_counter() - t0
    lands = model.landmarks_
    report = ExperimentReport(
        stress={"dimal": rel},
        timings={"fit": t_fit, "evaluate": t_eval},
        rows=[{"method": "dimal", "K": K, "relative_stress": rel, "seconds": t_fit}],
        extra={
            "n_points": int(X.shape[0]),
            "n_landmarks": int(lands.K),
            "n_training_pairs": int(lands.K * (lands.K - 1) // 2),
            "landmarks": lands.indices.tolist(),
            "final_training_loss": model.train_result_.final_loss,
            "failed_restarts": model.train_result_.failed,
            "best_restart": model.train_result_.best_restart,
            "loss_history": [float(v) for v in model.loss_history_],
        },
        embeddings={"dimal": emb.coords},
        models={"dimal": model.params_},
    )
    return model.params_, emb, report


# ---------------------------------------------------------------------------
# Order of accuracy
# ---------------------------------------------------------------------------


def order_of_accuracy(runs: Sequence[tuple[int, float]]) -> AccuracyFit:
    runs = [(int(K), float(E)) for K, E in runs]
    if len(runs) < 3:
        raise ValueError("need at least 3 (K, E) samples")
    K = np.array([r[0] for r in runs], dtype=float)
    E = np.array([r[1] for r in runs])
    if np.any(E <= 0) or np.any(K <= 0):
        raise ValueError("K and E must be positive")
    x = np.log(1.0 / np.sqrt(K))
    y = np.log(E)
    A = np.column_stack([np.ones_like(x), x])
    (log_c, slope), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (log_c + slope * x)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return AccuracyFit(runs, float(slope), float(log_c), float(r2))


def accuracy_sweep(
    cloud,
    K_values: Sequence[int],
    specs: dict[str, NetworkSpec],
    cfg: TrainConfig = TrainConfig(),
    k_nn: int = 10,
    initial: int | None = None,
    stress_mode: str = "sampled",
    stress_pairs: int = DEFAULT_STRESS_PAIRS,
    n_jobs: int = 1,
) -> ExperimentReport:
    """Train each named architecture for every K and fit its order of accuracy.

    All K use prefixes of one farthest point sequence, so the landmark sets
    are nested, and every run is scored on the same evaluation pairs. The
    fits land in ``extra["order_of_accuracy"]``.
    """
    X = _points(cloud)
    K_values = [int(K) for K in K_values]
    graph = neighbor_graph(X, k_nn)
    targets = evaluation_pairs(graph, stress_mode, stress_pairs, cfg.seed, n_jobs)
    full = farthest_point_sampling(graph, max(K_values), initial, cfg.seed)
    report = ExperimentReport(extra={"n_points": int(X.shape[0]), "n_eval_pairs": targets.n_pairs})
    fits = {}
    for name, spec in specs.items():
        runs = []
        for K in K_values:
            t0 = time.perf_counter()
            result = train_on_landmarks(X, _prefix(full, K), spec, cfg, graph)
            coords = predict(result.params, X)
            seconds = time.perf_counter() - t0
            rel = relative_stress(coords, targets)
            runs.append((K, rel))
            report.rows.append({"method": name, "K": K, "relative_stress": rel, "seconds": seconds})
            report.stress[f"{name}@{K}"] = rel
        report.embeddings[name] = coords
        report.models[name] = result.params
        fit = order_of_accuracy(runs)
        fits[name] = {"slope": fit.slope, "log_c": fit.log_c, "r_squared": fit.r_squared}
    report.extra["order_of_accuracy"] = fits
    return report


def _prefix(lands: LandmarkSet, K: int) -> LandmarkSet:
    rows = None if lands.to_all is None else lands.to_all[:K]
    return LandmarkSet(lands.indices[:K], lands.D_s[:K, :K], lands.source_graph_id, rows)


# ---------------------------------------------------------------------------
# Generalization and method comparison
# ---------------------------------------------------------------------------


def split_by_height(cloud: PointCloud, fraction: float, axis: int = 2) -> PointCloud:
    """Keep samples whose coordinate ``axis`` lies in the lowest ``fraction`` of its range."""
    z = cloud.points[:, axis]
    cut = z.min() + fraction * (z.max() - z.min())
    return cloud.subset(np.flatnonzero(z <= cut))


def run_generalization(
    train_cloud,
    test_cloud,
    K: int,
    spec: NetworkSpec,
    cfg: TrainConfig = TrainConfig(),
    k_nn: int = 10,
    conformal: bool = False,
    initial: int | None = None,
    out_of_sample: str = "attach",
    stress_mode: str = "sampled",
    stress_pairs: int = DEFAULT_STRESS_PAIRS,
    n_jobs: int = 1,
) -> ExperimentReport:
    """Train on ``train_cloud`` only and score both methods on ``test_cloud``.

    DIMAL embeds test samples by a forward pass. Landmark Isomap, given the
    same landmarks and landmark geodesics, needs geodesics from each test
    sample to the landmarks (see :class:`LandmarkIsomap`). Test stress uses
    the neighbor graph of the test samples alone.
    """
    Xtr, Xte = _points(train_cloud), _points(test_cloud)
    graph = neighbor_graph(Xtr, k_nn, conformal)
    lands = farthest_point_sampling(graph, K, initial, cfg.seed)

    t0 = time.perf_counter()
    result = train_on_landmarks(Xtr, lands, spec, cfg, graph)
    Y_dimal = predict(result.params, Xte)
    t_dimal = time.perf_counter() - t0

    t0 = time.perf_counter()
    liso = LandmarkIsomap(n_neighbors=k_nn, n_components=spec.output_dim, conformal=conformal,
                          out_of_sample=out_of_sample, n_jobs=n_jobs)
    liso.fit(Xtr, landmarks=lands, graph=graph)
    Y_liso = liso.transform(Xte)
    t_liso = time.perf_counter() - t0

    test_graph = neighbor_graph(Xte, k_nn, conformal)
    targets = evaluation_pairs(test_graph, stress_mode, stress_pairs, cfg.seed, n_jobs)
    s_dimal = relative_stress(Y_dimal, targets)
    s_liso = relative_stress(Y_liso, targets)
    return ExperimentReport(
        stress={"dimal": s_dimal, "landmark_isomap": s_liso},
        timings={"dimal": t_dimal, "landmark_isomap": t_liso},
        rows=[
            {"method": "dimal", "K": K, "relative_stress": s_dimal, "seconds": t_dimal},
            {"method": "landmark_isomap", "K": K, "relative_stress": s_liso, "seconds": t_liso},
        ],
        extra={
            "n_train": int(Xtr.shape[0]),
            "n_test": int(Xte.shape[0]),
            "n_eval_pairs": targets.n_pairs,
            "landmarks": lands.indices.tolist(),
            "loss_history": [float(v) for v in result.histories[result.best_restart]],
        },
        embeddings={"dimal": Y_dimal, "landmark_isomap": Y_liso},
        models={"dimal": result.params},
    )


def compare_methods(
    cloud,
    K,
    methods: Sequence[str] = METHODS,
    cfg: TrainConfig = TrainConfig(),
    spec: NetworkSpec | None = None,
    k_nn: int = 10,
    conformal: bool = False,
    initial: int | None = None,
    m: int = 2,
    stress_mode: str = "sampled",
    stress_pairs: int = DEFAULT_STRESS_PAIRS,
    full_solver: str = "auto",
    n_jobs: int = 1,
) -> ExperimentReport:
    """Relative full stress of each method for each landmark count.

    Every method receives the same landmark set and the same landmark
    geodesics (a prefix of one farthest point sequence). ``classical_full``
    ignores K and scales the full geodesic matrix; it runs once.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    X = _points(cloud)
    K_values = [int(K)] if np.isscalar(K) else [int(k) for k in K]
    if "dimal" in methods and spec is None:
        raise ValueError("dimal needs a network spec")
    graph = neighbor_graph(X, k_nn, conformal)
    targets = evaluation_pairs(graph, stress_mode, stress_pairs, cfg.seed, n_jobs)
    full = farthest_point_sampling(graph, max(K_values), initial, cfg.seed)
    report = ExperimentReport(extra={"n_points": int(X.shape[0]), "n_eval_pairs": targets.n_pairs})

    def record(method, K, coords, seconds):
        rel = relative_stress(coords, targets)
        report.rows.append({"method": method, "K": K, "relative_stress": rel, "seconds": seconds})
        report.stress[f"{method}@{K}"] = rel
        report.embeddings[f"{method}@{K}"] = coords

    if "classical_full" in methods:
        t0 = time.perf_counter()
        D = geodesic_rows(graph, np.arange(X.shape[0]), n_jobs=n_jobs)
        D = 0.5 * (D + D.T)
        solver = full_solver if full_solver != "auto" else ("jacobi" if X.shape[0] <= JACOBI_MAX_N else "lapack")
        coords = classical_scaling(D, m, solver=solver).coords
        seconds = time.perf_counter() - t0
        for K in K_values:
            record("classical_full", K, coords, seconds)

    for K in K_values:
        lands = _prefix(full, K)
        for method in methods:
            t0 = time.perf_counter()
            if method == "dimal":
                result = train_on_landmarks(X, lands, spec, cfg, graph)
                coords = predict(result.params, X)
                report.models[f"dimal@{K}"] = result.params
            elif method == "landmark_isomap":
                coords, _ = landmark_isomap_from_rows(lands, lands.to_all, m)
            elif method == "smacof_landmarks":
                coords, _ = smacof_landmark_embedding(lands, lands.to_all, m)
            else:
                continue
            record(method, K, coords, time.perf_counter() - t0)
    # Rows in declared method order, then K.
    order = {mth: i for i, mth in enumerate(methods)}
    report.rows.sort(key=lambda r: (order[r["method"]], r["K"]))
    return report
