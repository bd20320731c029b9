# geometry_core.py
"""
Dense real-vector helpers shared by every other module.

Public API:
    - Tolerances(feas_tol, solve_tol, max_iter)
    - PointSet(points, ids)
    - as_vector(p, dim=None) -> np.ndarray
    - as_points(points, dim=None) -> np.ndarray
    - project_ball(p, center, radius) -> np.ndarray
    - project_halfspace(p, normal, offset) -> np.ndarray
    - project_hull(p, generators) -> (np.ndarray, np.ndarray)
    - hull_distance(p, generators) -> float
    - rigid_embed(distances, target_dim, feas_tol=...) -> PointSet
    - pairwise_distances(a, b=None) -> np.ndarray
    - farthest_pair(points) -> (float, int, int)
    - diameter(points) -> float

Everything here is pure: no module state is mutated, so the functions are safe
to call from several threads at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

logger = logging.getLogger(__name__)

# ---- Constants ----

DEFAULT_FEAS_TOL = 1e-7
DEFAULT_SOLVE_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000

# Wolfe's min-norm-point loop: weights at or below this are dropped from the corral.
_CORRAL_EPS = 1e-14


class GeometryError(ValueError):
    pass


# ---- Types ----

@dataclass(frozen=True)
class Tolerances:
    """Numerical slack shared by the solvers.

    feas_tol bounds how far a point may sit outside a constraint and still
    count as satisfying it; solve_tol is the iterate-change stopping
    threshold; max_iter caps every iterative loop.
    """

    feas_tol: float = DEFAULT_FEAS_TOL
    solve_tol: float = DEFAULT_SOLVE_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if not (self.solve_tol > 0):
            raise GeometryError(f"solve_tol must be positive, got {self.solve_tol}")
        if self.feas_tol < self.solve_tol:
            raise GeometryError(
                f"feas_tol ({self.feas_tol}) must be >= solve_tol ({self.solve_tol})"
            )
        if int(self.max_iter) < 1:
            raise GeometryError(f"max_iter must be a positive integer, got {self.max_iter}")

    def to_dict(self) -> dict:
        return {"feas_tol": self.feas_tol, "solve_tol": self.solve_tol, "max_iter": int(self.max_iter)}


@dataclass(frozen=True)
class PointSet:
    """Indexed points of uniform dimension (rows of ``points``)."""

    points: np.ndarray
    ids: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        pts = as_points(self.points)
        object.__setattr__(self, "points", pts)
        ids = tuple(str(i) for i in self.ids) if self.ids else tuple(str(i) for i in range(len(pts)))
        if len(ids) != len(pts):
            raise GeometryError(f"{len(ids)} ids given for {len(pts)} points")
        if len(set(ids)) != len(ids):
            raise GeometryError("point ids must be unique")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, indices: Iterable[int]) -> "PointSet":
        idx = list(indices)
        return PointSet(self.points[idx], tuple(self.ids[i] for i in idx))


# ---- Validation ----

def as_vector(p, dim: Optional[int] = None) -> np.ndarray:
    """Return ``p`` as a finite 1-D float array, checking its dimension."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise GeometryError(f"expected a vector, got array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("vector entries must be finite")
    if dim is not None and arr.shape[0] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


def as_points(points, dim: Optional[int] = None) -> np.ndarray:
    """Return ``points`` as a finite k x d float array (k may be zero)."""
    if isinstance(points, PointSet):
        arr = points.points
    else:
        arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, dim or 0)
    if arr.ndim != 2:
        raise GeometryError(f"expected a k x d array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("point coordinates must be finite")
    if dim is not None and arr.shape[0] > 0 and arr.shape[1] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[1]}")
    return arr


# ---- Elementary projections ----

def project_ball(p, center, radius: float) -> np.ndarray:
    """Nearest point of the closed ball B(center, radius) to ``p``."""
    c = as_vector(center)
    x = as_vector(p, c.shape[0])
    if radius < 0:
        raise GeometryError(f"negative radius {radius}")
    d = x - c
    dist = float(np.linalg.norm(d))
    if dist <= radius:
        return x
    return c + (radius / dist) * d


def project_halfspace(p, normal, offset: float) -> np.ndarray:
    """Nearest point of {y : <normal, y> >= offset} to ``p``."""
    n = as_vector(normal)
    x = as_vector(p, n.shape[0])
    nn = float(n @ n)
    if nn == 0.0:
        raise GeometryError("half-space normal must be nonzero")
    slack = float(n @ x) - offset
    if slack >= 0:
        return x
    return x - (slack / nn) * n


def _affine_minimizer(corral: np.ndarray) -> np.ndarray:
    """Weights (summing to one) of the min-norm point of the affine hull of the rows."""
    k = corral.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = corral @ corral.T
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:k]


def project_hull(p, generators) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest point of Conv(generators) to ``p`` and simplex weights realising it.

    Wolfe's min-norm-point method on the shifted generators ``g_i - p``: a
    corral (affinely independent active subset) is grown by the most
    violating generator and shrunk by line searches whenever the affine
    minimiser leaves the simplex.
    """
    gens = as_points(generators)
    if gens.shape[0] == 0:
        raise GeometryError("convex hull of an empty generator list")
    x0 = as_vector(p, gens.shape[1])
    k = gens.shape[0]
    shifted = gens - x0
    scale = max(1.0, float(np.max(np.einsum("ij,ij->i", shifted, shifted))))

    start = int(np.argmin(np.einsum("ij,ij->i", shifted, shifted)))
    corral = [start]
    lam = np.array([1.0])
    x = shifted[start].copy()

    for _ in range(50 * k + 50):
        xx = float(x @ x)
        if xx <= 1e-30 * scale:
            break
        scores = shifted @ x
        j = int(np.argmin(scores))
        if scores[j] >= xx - 1e-13 * scale or j in corral:
            break
        before = list(corral)
        corral.append(j)
        lam = np.append(lam, 0.0)

        while True:
            alpha = _affine_minimizer(shifted[corral])
            if np.all(alpha > _CORRAL_EPS):
                lam = alpha
                break
            # Line search from lam toward alpha, stopping where a weight hits zero.
            neg = alpha <= _CORRAL_EPS
            denom = lam[neg] - alpha[neg]
            ratios = np.where(denom > 0, lam[neg] / np.where(denom > 0, denom, 1.0), 1.0)
            theta = float(np.clip(np.min(ratios), 0.0, 1.0))
            lam = theta * alpha + (1.0 - theta) * lam
            drop = np.flatnonzero(lam <= _CORRAL_EPS)
            if drop.size == 0:
                drop = np.flatnonzero(neg)[:1]
            keep = [i for i in range(len(corral)) if i not in set(drop.tolist())]
            corral = [corral[i] for i in keep]
            lam = lam[keep]
            lam = lam / lam.sum()
            if len(corral) == 1:
                lam = np.array([1.0])
                break
        x = lam @ shifted[corral]
        if corral == before:
            # No progress at machine precision.
            break
    else:
        logger.warning(f"hull projection stopped after {50 * k + 50} corral updates ({k} generators)")

    weights = np.zeros(k)
    weights[corral] = np.clip(lam, 0.0, None)
    weights /= weights.sum()
    return weights @ gens, weights


def hull_distance(p, generators) -> float:
    """Distance from ``p`` to Conv(generators)."""
    point, _ = project_hull(p, generators)
    return float(np.linalg.norm(as_vector(p) - point))


# ---- Metric configurations ----

def rigid_embed(distances, target_dim: int, feas_tol: float = DEFAULT_FEAS_TOL) -> PointSet:
    """Place k points in R^target_dim realising a Euclidean distance matrix.

    The Gram matrix relative to the first point is factored; eigenvalues down
    to -feas_tol are accepted and clipped to zero, so the first point lands
    at the origin.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise GeometryError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise GeometryError("distances must be finite and non-negative")
    if np.max(np.abs(d - d.T), initial=0.0) > feas_tol:
        raise GeometryError("distance matrix is not symmetric")
    if target_dim < 1:
        raise GeometryError(f"target_dim must be positive, got {target_dim}")
    k = d.shape[0]
    if k == 0:
        raise GeometryError("empty distance matrix")
    sq = (0.5 * (d + d.T)) ** 2
    gram = 0.5 * (sq[0][None, :] + sq[:, 0][:, None] - sq)
    evals, evecs = np.linalg.eigh(gram)
    if evals.size and evals[0] < -feas_tol:
        raise GeometryError(
            f"distance matrix is not Euclidean (Gram eigenvalue {evals[0]:.3e} < -{feas_tol:g})"
        )
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    rank = int(np.sum(evals > feas_tol))
    if rank > target_dim:
        raise GeometryError(f"configuration needs dimension {rank} > target_dim {target_dim}")
    used = min(target_dim, k)
    coords = np.zeros((k, target_dim))
    coords[:, :used] = evecs[:, :used] * np.sqrt(evals[:used])
    coords -= coords[0]
    return PointSet(coords)


def pairwise_distances(a, b=None) -> np.ndarray:
    """Euclidean distance matrix between the rows of ``a`` (and ``b``)."""
    pa = as_points(a)
    pb = pa if b is None else as_points(b, pa.shape[1])
    return cdist(pa, pb)


def farthest_pair(points) -> Tuple[float, int, int]:
    """Diameter with the first lexicographic pair (i < j) attaining it."""
    pts = as_points(points)
    k = pts.shape[0]
    if k == 0:
        raise GeometryError("diameter of an empty set")
    if k == 1:
        return 0.0, 0, 0
    condensed = pdist(pts)
    pos = int(np.argmax(condensed))
    i, j = np.triu_indices(k, 1)
    return float(condensed[pos]), int(i[pos]), int(j[pos])


def diameter(points) -> float:
    return farthest_pair(points)[0]


def simplex_point(weights: Sequence[float], rows) -> np.ndarray:
    """Convex combination sum_i weights_i * rows_i."""
    return np.asarray(weights, dtype=float) @ as_points(rows)
