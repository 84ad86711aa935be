"""Stress, classical scaling, SMACOF and the Landmark-Isomap extension.

Distance matrices passed around here hold plain geodesic lengths; squaring
for the double-centred Gram matrix happens inside :func:`centered_gram`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from dimal._io import read_column_csv, read_matrix_csv, write_column_csv, write_matrix_csv

__all__ = [
    "Embedding",
    "StressSpec",
    "CenteredGram",
    "SmacofState",
    "jacobi_eigh",
    "stress",
    "relative_stress",
    "centered_gram",
    "classical_scaling",
    "smacof",
    "landmark_isomap_extend",
    "NegativeEigenvalueWarning",
]

COINCIDENT_TOL = 1e-9


class NegativeEigenvalueWarning(UserWarning):
    """Gram matrix of a non-Euclidean distance matrix had negative eigenvalues."""


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.coords, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError(f"coords must be N x m with m >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("embedding has non-finite coordinates")
        object.__setattr__(self, "coords", X)

    @property
    def target_dim(self) -> int:
        return self.coords.shape[1]

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    def to_csv(self, path) -> None:
        write_matrix_csv(path, self.coords, header=[f"dim{i}" for i in range(self.target_dim)])

    @classmethod
    def from_csv(cls, path) -> Embedding:
        return cls(read_matrix_csv(path, has_header=True))


@dataclass(frozen=True, eq=False)
class StressSpec:
    """Weighted target distances over unordered pairs ``i != j``."""

    i: np.ndarray
    j: np.ndarray
    d: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.int64).reshape(-1)
        j = np.asarray(self.j, dtype=np.int64).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        w = np.broadcast_to(np.asarray(self.w, dtype=float), d.shape).copy()
        if not (i.shape == j.shape == d.shape):
            raise ValueError("pair arrays must have equal length")
        if np.any(i == j):
            raise ValueError("pairs must join distinct points")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(w))):
            raise ValueError("distances and weights must be finite")
        if np.any(d < 0) or np.any(w < 0):
            raise ValueError("distances and weights must be non-negative")
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        if lo.size and np.unique(np.column_stack([lo, hi]), axis=0).shape[0] != lo.size:
            raise ValueError("duplicate unordered pair")
        for name, val in (("i", i), ("j", j), ("d", d), ("w", w)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_matrix(cls, D, W=None) -> StressSpec:
        """All pairs ``i < j`` of a square distance matrix (weights default to 1)."""
        D = np.asarray(D, dtype=float)
        i, j = np.triu_indices(D.shape[0], k=1)
        w = np.ones(i.size) if W is None else np.asarray(W, dtype=float)[i, j]
        return cls(i, j, D[i, j], w)

    @property
    def n_pairs(self) -> int:
        return int(self.i.size)

    @property
    def pairs(self):
        return list(zip(self.i.tolist(), self.j.tolist(), self.d.tolist(), self.w.tolist()))


def _pair_distances(X: np.ndarray, i, j) -> np.ndarray:
    diff = X[i] - X[j]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _coords(emb) -> np.ndarray:
    return emb.coords if isinstance(emb, Embedding) else np.asarray(emb, dtype=float)


def stress(emb, spec: StressSpec) -> float:
    """Raw stress ``sum w_ij (||x_i - x_j|| - d_ij)^2``."""
    X = _coords(emb)
    if spec.n_pairs and max(spec.i.max(), spec.j.max()) >= X.shape[0]:
        raise IndexError("stress pair index out of range for the embedding")
    r = _pair_distances(X, spec.i, spec.j)
    return float(np.sum(spec.w * (r - spec.d) ** 2))


def relative_stress(emb, spec: StressSpec) -> float:
    """Raw stress normalized by ``sum w_ij d_ij^2``."""
    denom = float(np.sum(spec.w * spec.d**2))
    if denom == 0.0:
        raise ValueError("relative stress undefined: all weighted targets are zero")
    return stress(emb, spec) / denom


# ---------------------------------------------------------------------------
# Symmetric eigensolver
# ---------------------------------------------------------------------------


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Circle-method schedule: n-1 rounds of n/2 disjoint index pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for a, b in zip(players[: m // 2], reversed(players[m // 2 :])):
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.int64), np.array(q, dtype=np.int64)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, tol: float = 1e-11, max_sweeps: int = 60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, grouped into rounds of
    disjoint pairs whose rotations are applied together. Iteration stops when
    the off-diagonal Frobenius norm falls below ``tol * ||A||_F``.

    Returns
    -------
    eigvals : (n,) array, descending
    eigvecs : (n, n) array with orthonormal columns
    """
    A = np.array(A, dtype=float, copy=True)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("jacobi_eigh needs a square matrix")
    V = np.eye(n)
    if n <= 1:
        return np.diag(A).copy(), V
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), V
    threshold = tol * scale
    # Entries this small cannot keep the off-diagonal norm above threshold.
    negligible = 1e-2 * threshold / n
    schedule = _round_robin(n)
    for _ in range(max_sweeps):
        off = A.copy()
        off[np.diag_indices(n)] = 0.0
        if np.linalg.norm(off) < threshold:
            break
        for p, q in schedule:
            apq = A[p, q]
            active = np.abs(apq) > negligible
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            app, aqq = A[p, p], A[q, q]
            theta = (aqq - app) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta_s = np.where(big, 1.0, theta)
            t = np.sign(theta_s) / (np.abs(theta_s) + np.sqrt(theta_s * theta_s + 1.0))
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J with J the block rotation of all (p, q) pairs.
            Ap, Aq = A[p, :], A[q, :]
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Ap, Aq = A[:, p], A[:, q]
            A[:, p] = Ap * c - Aq * s
            A[:, q] = Ap * s + Aq * c
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p], V[:, q]
            V[:, p] = Vp * c - Vq * s
            V[:, q] = Vp * s + Vq * c
    else:
        warnings.warn("Jacobi eigensolver hit max_sweeps before converging", RuntimeWarning)
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def _eigh_desc(G, solver: str):
    if solver == "jacobi":
        return jacobi_eigh(G)
    if solver == "lapack":
        w, V = np.linalg.eigh(G)
        return w[::-1].copy(), V[:, ::-1].copy()
    raise ValueError(f"unknown eigensolver {solver!r}")


# ---------------------------------------------------------------------------
# Classical scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CenteredGram:
    """``G = -1/2 H D^2 H`` with its eigenpairs sorted by decreasing eigenvalue."""

    G: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    sq_dist_mean: np.ndarray = field(repr=False)

    @property
    def n_negative(self) -> int:
        tol = 1e-10 * max(1.0, float(np.abs(self.eigvals).max(initial=0.0)))
        return int(np.sum(self.eigvals < -tol))


def _check_distance_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    if np.any(D < 0):
        raise ValueError("distance matrix has negative entries")
    scale = max(1.0, float(np.abs(D).max(initial=0.0)))
    if not np.allclose(D, D.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("distance matrix is not symmetric")
    if np.any(np.abs(np.diag(D)) > 1e-10 * scale):
        raise ValueError("distance matrix has a non-zero diagonal")
    return D


def centered_gram(D, solver: str = "jacobi") -> CenteredGram:
    """Double-centre the squared distances and eigendecompose."""
    D = _check_distance_matrix(D)
    sq = D * D
    row = sq.mean(axis=0)
    G = -0.5 * (sq - row[None, :] - row[:, None] + row.mean())
    G = 0.5 * (G + G.T)
    w, V = _eigh_desc(G, solver)
    # Fix signs so each eigenvector's largest-magnitude entry is positive.
    if V.size:
        lead = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
        V = V * np.where(lead < 0, -1.0, 1.0)[None, :]
    return CenteredGram(G, w, V, row)


def embedding_from_gram(gram: CenteredGram, m: int) -> Embedding:
    lam = gram.eigvals[:m]
    if gram.n_negative:
        warnings.warn(
            f"{gram.n_negative} negative Gram eigenvalues clamped to zero",
            NegativeEigenvalueWarning,
            stacklevel=2,
        )
    coords = gram.eigvecs[:, :m] * np.sqrt(np.clip(lam, 0.0, None))[None, :]
    return Embedding(coords)


def classical_scaling(D, m: int = 2, solver: str = "jacobi") -> Embedding:
    """Classical (Torgerson) scaling of a plain distance matrix into ``R^m``.

    Uses the ``m`` leading eigenpairs of the centred Gram matrix; negative
    eigenvalues are clamped to zero with a :class:`NegativeEigenvalueWarning`.
    """
    D = _check_distance_matrix(D)
    if D.shape[0] < m + 1:
        raise ValueError(f"need at least m+1={m + 1} points, got {D.shape[0]}")
    return embedding_from_gram(centered_gram(D, solver), m)


# ---------------------------------------------------------------------------
# SMACOF
# ---------------------------------------------------------------------------


@dataclass
class SmacofState:
    X: np.ndarray
    stress_history: list[float]
    V_pinv: np.ndarray | None
    B: np.ndarray
    n_iter: int = 0
    converged: bool = False

    @property
    def embedding(self) -> Embedding:
        return Embedding(self.X)

    def save_history(self, path) -> None:
        write_column_csv(path, self.stress_history)

    @staticmethod
    def load_history(path) -> np.ndarray:
        return read_column_csv(path)


def _b_matrix(X, spec: StressSpec, n: int) -> np.ndarray:
    r = _pair_distances(X, spec.i, spec.j)
    ratio = np.zeros_like(r)
    far = r >= COINCIDENT_TOL
    ratio[far] = spec.d[far] / r[far]
    b = -spec.w * ratio
    B = np.zeros((n, n))
    np.add.at(B, (spec.i, spec.j), b)
    np.add.at(B, (spec.j, spec.i), b)
    B[np.diag_indices(n)] = -B.sum(axis=1)
    return B


def _v_matrix(spec: StressSpec, n: int) -> np.ndarray:
    V = np.zeros((n, n))
    np.add.at(V, (spec.i, spec.j), -spec.w)
    np.add.at(V, (spec.j, spec.i), -spec.w)
    V[np.diag_indices(n)] = -V.sum(axis=1)
    return V


def _is_uniform_complete(spec: StressSpec, n: int) -> bool:
    return spec.n_pairs == n * (n - 1) // 2 and np.all(spec.w == 1.0)


def smacof(
    spec: StressSpec,
    n_points: int,
    m: int = 2,
    init=None,
    max_iter: int = 1000,
    rel_tol: float = 1e-9,
    seed: int = 0,
) -> SmacofState:
    """Least-squares scaling by majorization (Guttman transform iterations).

    ``init`` may be an :class:`Embedding`/array, or ``None`` for a seeded
    uniform random start. Stops after ``max_iter`` updates or when the
    relative stress decrease drops below ``rel_tol``.
    """
    if spec.n_pairs == 0 or not np.any(spec.w > 0):
        raise ValueError("SMACOF needs at least one pair with positive weight")
    if max(spec.i.max(), spec.j.max()) >= n_points:
        raise IndexError("stress pair index exceeds n_points")
    if init is None:
        X = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n_points, m))
    else:
        X = np.array(_coords(init), dtype=float, copy=True)
        if X.shape != (n_points, m):
            raise ValueError(f"init has shape {X.shape}, expected {(n_points, m)}")
        if not np.all(np.isfinite(X)):
            raise ValueError("init has non-finite coordinates")

    uniform = _is_uniform_complete(spec, n_points)
    V_pinv = None
    if not uniform:
        # 1 1^T / N keeps the matrix invertible on the centred subspace; B has
        # zero row sums, so the extra term leaves the update unchanged.
        A = _v_matrix(spec, n_points) + np.full((n_points, n_points), 1.0 / n_points)
        lam, U = jacobi_eigh(A)
        keep = lam > 1e-12 * max(1.0, lam.max())
        V_pinv = (U[:, keep] / lam[keep]) @ U[:, keep].T

    history = [stress(X, spec)]
    B = _b_matrix(X, spec, n_points)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        X = (B @ X) / n_points if uniform else V_pinv @ (B @ X)
        history.append(stress(X, spec))
        B = _b_matrix(X, spec, n_points)
        prev, cur = history[-2], history[-1]
        if prev == 0.0 or (prev - cur) / prev < rel_tol:
            converged = True
            break
    return SmacofState(X, history, V_pinv, B, n_iter=it, converged=converged)


# ---------------------------------------------------------------------------
# Landmark Isomap
# ---------------------------------------------------------------------------


def landmark_isomap_extend(lands, land_emb, eigpairs: CenteredGram, delta_x) -> np.ndarray:
    """Triangulate new points from squared geodesic distances to the landmarks.

    Coordinate ``j`` is ``(v_j . (mean_sq - delta_x)) / (2 sqrt(lambda_j))``,
    where ``mean_sq`` is the column mean of the squared landmark distances.
    ``delta_x`` may be one length-K vector or an ``(n, K)`` array; the output
    has shape ``(m,)`` or ``(n, m)`` accordingly.
    """
    m = _coords(land_emb).shape[1]
    lam = eigpairs.eigvals[:m]
    if np.any(lam <= 0):
        raise ValueError("landmark Gram matrix has non-positive leading eigenvalues")
    delta = np.asarray(delta_x, dtype=float)
    K = eigpairs.eigvecs.shape[0]
    if lands is not None and K != lands.K:
        raise ValueError("eigenpairs do not match the landmark set")
    if delta.shape[-1] != K:
        raise ValueError(f"delta_x must have {K} entries per point, got {delta.shape[-1]}")
    pinv = eigpairs.eigvecs[:, :m] / (2.0 * np.sqrt(lam))[None, :]
    return (eigpairs.sq_dist_mean - delta) @ pinv
