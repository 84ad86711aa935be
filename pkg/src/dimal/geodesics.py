"""Graph geodesics, farthest point landmark sampling and conformal rescaling."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import dijkstra
from sklearn.neighbors import NearestNeighbors

from dimal._io import read_matrix_csv, write_matrix_csv
from dimal.geometry import NeighborGraph, PointCloud

__all__ = [
    "DisconnectedGraphError",
    "GeodesicField",
    "LandmarkSet",
    "dijkstra_from",
    "geodesic_rows",
    "farthest_point_sampling",
    "landmark_geodesics",
    "conformal_rescale",
]


class DisconnectedGraphError(RuntimeError):
    """Raised when a computation needs geodesics between unreachable nodes."""


@dataclass(frozen=True)
class GeodesicField:
    source: int
    dist: np.ndarray

    @property
    def reachable(self) -> np.ndarray:
        return np.isfinite(self.dist)


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Landmark indices in selection order and their geodesic distance matrix.

    ``D_s`` holds plain (unsquared) geodesic lengths. ``to_all`` optionally
    caches the ``K x N`` landmark-to-every-node distances it was cut from;
    it is not serialized.
    """

    indices: np.ndarray
    D_s: np.ndarray
    source_graph_id: str = ""
    to_all: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        D = np.asarray(self.D_s, dtype=float)
        if len(np.unique(idx)) != idx.size:
            raise ValueError("landmark indices must be distinct")
        if D.shape != (idx.size, idx.size):
            raise ValueError(f"D_s has shape {D.shape}, expected {(idx.size, idx.size)}")
        if not np.all(np.isfinite(D)) or np.any(D < 0):
            raise ValueError("D_s entries must be finite and non-negative")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "D_s", D)

    @property
    def K(self) -> int:
        return int(self.indices.size)

    def save(self, json_path, csv_path=None) -> None:
        json_path = Path(json_path)
        csv_path = Path(csv_path) if csv_path else json_path.with_suffix(".csv")
        json_path.write_text(
            json.dumps(
                {
                    "indices": self.indices.tolist(),
                    "source_graph_id": self.source_graph_id,
                    "distances_csv": csv_path.name,
                }
            )
        )
        write_matrix_csv(csv_path, self.D_s)

    @classmethod
    def load(cls, json_path) -> LandmarkSet:
        json_path = Path(json_path)
        blob = json.loads(json_path.read_text())
        D = read_matrix_csv(json_path.parent / blob["distances_csv"], has_header=False)
        K = len(blob["indices"])
        return cls(np.asarray(blob["indices"]), D.reshape(K, K), blob.get("source_graph_id", ""))


def _check_source(graph: NeighborGraph, source) -> None:
    src = np.atleast_1d(source)
    if src.size and (src.min() < 0 or src.max() >= graph.num_nodes):
        raise IndexError(f"source index out of range for graph with {graph.num_nodes} nodes")


def dijkstra_from(graph: NeighborGraph, source: int) -> GeodesicField:
    """Exact single-source shortest paths; unreachable nodes get ``inf``."""
    _check_source(graph, source)
    dist = dijkstra(graph.to_csr(), directed=False, indices=int(source))
    return GeodesicField(int(source), np.asarray(dist, dtype=float))


def geodesic_rows(graph: NeighborGraph, sources, n_jobs: int = 1, chunk: int = 256) -> np.ndarray:
    """Shortest-path distances from each source to every node, ``len(sources) x N``.

    Sources are processed in fixed chunks so the result does not depend on
    ``n_jobs``.
    """
    sources = np.asarray(sources, dtype=np.int64).reshape(-1)
    _check_source(graph, sources)
    if sources.size == 0:
        return np.zeros((0, graph.num_nodes))
    csr = graph.to_csr()
    blocks = [sources[i : i + chunk] for i in range(0, sources.size, chunk)]

    def run(block):
        return np.atleast_2d(dijkstra(csr, directed=False, indices=block))

    if n_jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.vstack(parts)


def _landmark_set(graph, indices, rows) -> LandmarkSet:
    D = rows[:, indices]
    if not np.all(np.isfinite(D)):
        raise DisconnectedGraphError(
            "landmarks lie in different connected components; increase the neighbor count k"
        )
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return LandmarkSet(indices, D, graph.graph_id, to_all=rows)


def landmark_geodesics(graph: NeighborGraph, indices, n_jobs: int = 1) -> LandmarkSet:
    """One Dijkstra per landmark; returns the symmetrized ``K x K`` matrix."""
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    if len(np.unique(indices)) != indices.size:
        raise ValueError("landmark indices must be distinct")
    rows = geodesic_rows(graph, indices, n_jobs=n_jobs)
    return _landmark_set(graph, indices, rows)


def farthest_point_sampling(
    graph: NeighborGraph, K: int, initial: int | None = None, seed: int = 0
) -> LandmarkSet:
    """Greedy geodesic farthest point sampling.

    Starting from ``initial`` (drawn from ``seed`` when omitted), repeatedly
    picks the node maximizing the geodesic distance to the current selection
    and folds its distance field into the running minimum. Ties go to the
    lowest index. Uses exactly K single-source Dijkstra runs.
    """
    n = graph.num_nodes
    if not 1 <= K <= n:
        raise ValueError(f"K must satisfy 1 <= K <= N={n}, got K={K}")
    if initial is None:
        initial = int(np.random.default_rng(seed).integers(n))
    _check_source(graph, initial)

    rows = np.empty((K, n))
    rows[0] = dijkstra_from(graph, initial).dist
    if not np.all(np.isfinite(rows[0])):
        raise DisconnectedGraphError(
            f"neighbor graph has {graph.n_components()} components; "
            "farthest point sampling needs a connected graph, increase k"
        )
    selected = [int(initial)]
    taken = np.zeros(n, dtype=bool)
    taken[initial] = True
    d = rows[0].copy()
    for step in range(1, K):
        # Selected nodes are masked so duplicates at distance 0 are never re-picked.
        nxt = int(np.argmax(np.where(taken, -1.0, d)))
        selected.append(nxt)
        taken[nxt] = True
        rows[step] = dijkstra_from(graph, nxt).dist
        np.minimum(d, rows[step], out=d)
    return _landmark_set(graph, np.asarray(selected), rows)


def conformal_rescale(graph: NeighborGraph, cloud, k: int | None = None) -> NeighborGraph:
    """C-Isomap edge rescaling ``w_ij / sqrt(M(i) M(j))``.

    ``M(i)`` is the mean Euclidean distance from point ``i`` to its ``k``
    nearest neighbors (default: the graph's own ``k``).
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.shape[0] != graph.num_nodes:
        raise ValueError("cloud and graph sizes differ")
    k = k or graph.k
    if not k or k < 1:
        raise ValueError("k must be >= 1")
    nn = NearestNeighbors(n_neighbors=k, algorithm="brute").fit(pts)
    dist, idx = nn.kneighbors()
    zero = np.flatnonzero(dist[:, 0] == 0.0)
    if zero.size:
        i = int(zero[0])
        raise ValueError(f"duplicate points: sample {i} coincides with sample {int(idx[i, 0])}")
    M = dist.mean(axis=1)
    w = graph.weights / np.sqrt(M[graph.rows] * M[graph.cols])
    return graph.with_weights(w)
