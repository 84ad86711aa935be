"""Seeded dataset generators, image ingestion and kNN graph construction."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from sklearn.neighbors import NearestNeighbors

from dimal._io import format_float

__all__ = [
    "PointCloud",
    "HorizonParams",
    "NeighborGraph",
    "gen_s_curve",
    "gen_helical_ribbon",
    "gen_swiss_roll",
    "gen_horizon_dataset",
    "render_horizon",
    "gen_fishbowl",
    "load_image_directory",
    "image_directory_shape",
    "build_knn_graph",
    "DEFAULT_K_POINTS",
    "DEFAULT_K_IMAGES",
]

DEFAULT_K_POINTS = 10
DEFAULT_K_IMAGES = 8

# Exact duplicates (common among coarse binary images) would give zero-length
# edges, which sparse graph routines drop. They are floored to this length.
MIN_EDGE_LENGTH = 1e-12


@dataclass(frozen=True)
class PointCloud:
    """N samples in ambient dimension M, with optional ground-truth parameters.

    ``meta`` holds one row of generating parameters per point (e.g. ``(t, y)``
    for the S-curve), and ``meta_names`` labels its columns.
    """

    points: np.ndarray
    meta: np.ndarray | None = None
    meta_names: tuple[str, ...] = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-D array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        object.__setattr__(self, "points", pts)
        if self.meta is not None:
            meta = np.asarray(self.meta, dtype=float)
            if meta.ndim == 1:
                meta = meta[:, None]
            if meta.shape[0] != pts.shape[0]:
                raise ValueError(
                    f"meta has {meta.shape[0]} rows but there are {pts.shape[0]} points"
                )
            object.__setattr__(self, "meta", meta)
        object.__setattr__(self, "meta_names", tuple(self.meta_names))

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n_points

    def subset(self, index) -> PointCloud:
        index = np.asarray(index)
        meta = None if self.meta is None else self.meta[index]
        return PointCloud(self.points[index], meta, self.meta_names)

    def to_csv(self, path) -> None:
        """Write points as CSV and, when present, meta as a JSON sidecar."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x{i}" for i in range(self.dim)])
            for row in self.points:
                writer.writerow([format_float(v) for v in row])
        if self.meta is not None:
            sidecar = {"names": list(self.meta_names), "values": self.meta.tolist()}
            path.with_suffix(".meta.json").write_text(json.dumps(sidecar))

    @classmethod
    def from_csv(cls, path) -> PointCloud:
        path = Path(path)
        points = _read_numeric_csv(path)
        meta, names = None, ()
        sidecar = path.with_suffix(".meta.json")
        if sidecar.exists():
            blob = json.loads(sidecar.read_text())
            meta = np.asarray(blob["values"], dtype=float).reshape(len(points), -1)
            names = tuple(blob.get("names", ()))
        return cls(points, meta, names)


def _read_numeric_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] and not _is_number(rows[0][0]):
        header, rows = rows[0], rows[1:]
        width = len(header)
    else:
        width = len(rows[0]) if rows else 0
    rows = [r for r in rows if r]
    if not rows:
        return np.zeros((0, width))
    return np.array([[float(v) for v in r] for r in rows], dtype=float)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def gen_s_curve(n: int, seed: int = 0) -> PointCloud:
    """Sample the S-curve ``(sin t, y, sign(t)(cos t - 1))``.

    ``t`` is uniform on ``[-3pi/2, 3pi/2]`` and ``y`` on ``[0, 2]``. The surface
    unrolls isometrically onto a ``3pi x 2`` rectangle.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(-1.5 * np.pi, 1.5 * np.pi, size=n)
    y = rng.uniform(0.0, 2.0, size=n)
    pts = np.column_stack([np.sin(t), y, np.sign(t) * (np.cos(t) - 1.0)])
    return PointCloud(pts.reshape(n, 3), np.column_stack([t, y]), ("t", "y"))


def gen_helical_ribbon(n: int, seed: int = 0) -> PointCloud:
    """Sample the helical ribbon ``(cos t, sin t, 0.4 t + s)``.

    ``t`` is uniform on ``[0, 4pi]`` (two turns) and ``s`` on ``[0, 1]``.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 4.0 * np.pi, size=n)
    s = rng.uniform(0.0, 1.0, size=n)
    pts = np.column_stack([np.cos(t), np.sin(t), 0.4 * t + s])
    return PointCloud(pts.reshape(n, 3), np.column_stack([t, s]), ("t", "s"))


def gen_swiss_roll(n: int, seed: int = 0) -> PointCloud:
    rng = np.random.default_rng(seed)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=n)
    y = rng.uniform(0.0, 20.0, size=n)
    pts = np.column_stack([t * np.cos(t), y, t * np.sin(t)])
    return PointCloud(pts.reshape(n, 3), np.column_stack([t, y]), ("t", "y"))


@dataclass(frozen=True)
class HorizonParams:
    """Raster and basis settings for horizon articulation images.

    The articulation amplitudes are not stored here; they are drawn per image
    and passed to :func:`render_horizon`.
    """

    omega1: float = 2.0
    omega2: float = 4.0
    width: int = 50
    height: int = 50

    def __post_init__(self):
        if self.omega1 == self.omega2:
            raise ValueError("omega1 and omega2 must differ")
        if self.width < 2 or self.height < 2:
            raise ValueError("width and height must be at least 2")

    @property
    def u(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.width) / self.width

    @property
    def v(self) -> np.ndarray:
        # Row 0 is the top of the image; pixel centres are symmetric about v=0.
        return 2.0 - (np.arange(self.height) + 0.5) * 4.0 / self.height

    @property
    def image_shape(self) -> tuple[int, int]:
        return (self.height, self.width)


def render_horizon(alpha1, alpha2, hp: HorizonParams = HorizonParams()) -> np.ndarray:
    """Rasterize ``1{v <= a1 sin(w1 u) + a2 sin(w2 u)}`` as flattened rows.

    Accepts scalar or array amplitudes; returns shape ``(n, height*width)``.
    """
    a1 = np.atleast_1d(np.asarray(alpha1, dtype=float))
    a2 = np.atleast_1d(np.asarray(alpha2, dtype=float))
    u, v = hp.u, hp.v
    psi = a1[:, None] * np.sin(hp.omega1 * u)[None, :] + a2[:, None] * np.sin(hp.omega2 * u)[None, :]
    images = (v[None, :, None] <= psi[:, None, :]).astype(float)
    return images.reshape(len(a1), hp.height * hp.width)


def gen_horizon_dataset(
    n: int,
    hp: HorizonParams = HorizonParams(),
    alpha_range=((0.0, 1.0), (0.0, 1.0)),
    seed: int = 0,
) -> PointCloud:
    """Binary horizon images with amplitudes uniform on ``alpha_range``."""
    (lo1, hi1), (lo2, hi2) = alpha_range
    rng = np.random.default_rng(seed)
    a1 = rng.uniform(lo1, hi1, size=n)
    a2 = rng.uniform(lo2, hi2, size=n)
    images = render_horizon(a1, a2, hp) if n else np.zeros((0, hp.width * hp.height))
    return PointCloud(images, np.column_stack([a1, a2]), ("alpha1", "alpha2"))


def gen_fishbowl(n: int, rim_fraction: float = 1.0, seed: int = 0) -> PointCloud:
    """Conformal fishbowl: uniform disk samples lifted onto the unit sphere.

    ``(a, b)`` uniform on the unit disk is mapped by inverse stereographic
    projection from the north pole, which lands on the lower hemisphere.
    Only points with ``z <= -1 + rim_fraction`` are kept (``rim_fraction=1``
    keeps the whole hemisphere). The sphere density grows like
    ``1 / (1 - z)^2``, so the bowl is sparse at the bottom and dense at the rim.
    """
    if not 0.0 < rim_fraction <= 1.0:
        raise ValueError("rim_fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    z_rim = -1.0 + rim_fraction
    # Disk radius whose image is exactly the rim circle.
    r_max = np.sqrt((1.0 + z_rim) / (1.0 - z_rim))
    a_parts, b_parts, kept = [], [], 0
    while kept < n:
        r = np.sqrt(rng.uniform(0.0, 1.0, size=max(n, 16)))  # uniform in area
        theta = rng.uniform(0.0, 2.0 * np.pi, size=r.size)
        ok = r <= r_max
        a_parts.append((r * np.cos(theta))[ok])
        b_parts.append((r * np.sin(theta))[ok])
        kept += int(ok.sum())
    a = np.concatenate(a_parts)[:n] if a_parts else np.zeros(0)
    b = np.concatenate(b_parts)[:n] if b_parts else np.zeros(0)
    r2 = a * a + b * b
    pts = np.column_stack([2 * a, 2 * b, r2 - 1.0]) / (1.0 + r2)[:, None]
    return PointCloud(pts.reshape(len(a), 3), np.column_stack([a, b]), ("a", "b"))


def load_image_directory(path, grayscale: bool = True) -> PointCloud:
    """Load every PNG in ``path`` (sorted by filename), scaled to ``[0, 1]``."""
    from PIL import Image, UnidentifiedImageError

    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"image directory does not exist: {path}")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise ValueError(f"no images found in {path}")
    rows, shape = [], None
    for f in files:
        try:
            with Image.open(f) as img:
                img = img.convert("L" if grayscale else "RGB")
                arr = np.asarray(img, dtype=float) / 255.0
        except (UnidentifiedImageError, OSError) as exc:
            raise ValueError(f"cannot decode image {f.name}: {exc}") from exc
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise ValueError(
                f"image {f.name} has shape {arr.shape}, expected {shape} like {files[0].name}"
            )
        rows.append(arr.reshape(-1))
    return PointCloud(np.vstack(rows))


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected weighted graph stored as unique edges ``i < j``."""

    num_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    k: int = 0
    _csr: sparse.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        w = np.asarray(self.weights, dtype=float)
        if not (rows.shape == cols.shape == w.shape):
            raise ValueError("rows, cols and weights must have equal length")
        if np.any(rows == cols):
            raise ValueError("graph contains self-loops")
        if w.size and (not np.all(np.isfinite(w)) or np.any(w <= 0)):
            raise ValueError("edge weights must be positive and finite")
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        if lo.size and (lo.min() < 0 or hi.max() >= self.num_nodes):
            raise ValueError("edge endpoint out of range")
        order = np.lexsort((hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if dup.any():
                raise ValueError("duplicate undirected edge")
        object.__setattr__(self, "rows", lo)
        object.__setattr__(self, "cols", hi)
        object.__setattr__(self, "weights", w)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.rows, self.cols, self.weights)]

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    def to_csr(self) -> sparse.csr_matrix:
        """Symmetric sparse adjacency matrix (cached)."""
        if self._csr is None:
            n = self.num_nodes
            data = np.concatenate([self.weights, self.weights])
            r = np.concatenate([self.rows, self.cols])
            c = np.concatenate([self.cols, self.rows])
            mat = sparse.csr_matrix((data, (r, c)), shape=(n, n))
            object.__setattr__(self, "_csr", mat)
        return self._csr

    @property
    def graph_id(self) -> str:
        h = hashlib.sha1()
        h.update(np.int64(self.num_nodes).tobytes())
        for arr in (self.rows, self.cols, self.weights):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    def with_weights(self, weights) -> NeighborGraph:
        return NeighborGraph(self.num_nodes, self.rows, self.cols, weights, self.k)

    def subgraph(self, nodes) -> NeighborGraph:
        """Induced subgraph; node ``nodes[p]`` becomes node ``p``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        relabel = np.full(self.num_nodes, -1, dtype=np.int64)
        relabel[nodes] = np.arange(nodes.size)
        a, b = relabel[self.rows], relabel[self.cols]
        keep = (a >= 0) & (b >= 0)
        return NeighborGraph(nodes.size, a[keep], b[keep], self.weights[keep], self.k)

    def n_components(self) -> int:
        from scipy.sparse.csgraph import connected_components

        return int(connected_components(self.to_csr(), directed=False)[0])

    def is_connected(self) -> bool:
        return self.num_nodes <= 1 or self.n_components() == 1


def build_knn_graph(cloud, k: int = DEFAULT_K_POINTS) -> NeighborGraph:
    """Exact kNN graph, symmetrized by union, with Euclidean edge lengths.

    ``cloud`` may be a :class:`PointCloud` or an ``(N, M)`` array.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points to build a neighbor graph")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N={n}, got k={k}")
    nn = NearestNeighbors(n_neighbors=k, algorithm="brute").fit(pts)
    _, idx = nn.kneighbors()
    src = np.repeat(np.arange(n), k)
    dst = idx.reshape(-1)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    pairs = np.unique(np.column_stack([lo, hi]), axis=0)
    lo, hi = pairs[:, 0], pairs[:, 1]
    # Recompute lengths directly so weights are exact pairwise distances.
    w = np.sqrt(np.sum((pts[lo] - pts[hi]) ** 2, axis=1))
    w = np.maximum(w, MIN_EDGE_LENGTH)
    return NeighborGraph(n, lo, hi, w, k)


def image_directory_shape(path, grayscale: bool = True) -> tuple[int, ...]:
    """Pixel array shape of the first PNG in ``path``: ``(H, W)`` or ``(H, W, 3)``."""
    from PIL import Image

    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise ValueError(f"no images found in {path}")
    with Image.open(files[0]) as img:
        return np.asarray(img.convert("L" if grayscale else "RGB")).shape
