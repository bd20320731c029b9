# simplex_quadratic.py
"""
Exact optimisation of q(t) = t'Qt + b't + c over the standard simplex.

Q may be indefinite, so no local method is trusted: every nonempty face of
the simplex is visited, the stationarity system of q restricted to the
face's affine hull is solved, and stationary points with nonnegative
coordinates are kept as candidates (every vertex is a one-element face).
The best candidate wins; ties go to the lexicographically smallest face.

Public API:
    - SimplexQuadratic(Q, b, c)
    - StationaryWitness(face, t, value)
    - maximize_over_simplex(q) -> StationaryWitness
    - minimize_over_simplex(q) -> StationaryWitness
    - brute_force_over_simplex(q, resolution) -> float
    - project_simplex(y) -> np.ndarray
    - polish_over_simplex(q, t0, ...) -> StationaryWitness
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# ---- Constants ----

FACE_ENUMERATION_CAP = 24
SYMMETRY_TOL = 1e-12
# Stationary points with a coordinate below -this are outside their face.
FACE_COORD_TOL = 1e-12
DEFAULT_POLISH_STEPS = 20_000


class SimplexQuadraticError(ValueError):
    pass


# ---- Types ----

@dataclass(frozen=True)
class SimplexQuadratic:
    Q: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self) -> None:
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if Q.shape[0] != Q.shape[1]:
            raise SimplexQuadraticError(f"Q must be square, got shape {Q.shape}")
        if b.shape[0] != Q.shape[0]:
            raise SimplexQuadraticError(f"b has length {b.shape[0]}, expected {Q.shape[0]}")
        if Q.shape[0] < 1:
            raise SimplexQuadraticError("quadratic needs at least one weight")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(b)) and np.isfinite(self.c)):
            raise SimplexQuadraticError("coefficients must be finite")
        if np.max(np.abs(Q - Q.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(Q)))):
            raise SimplexQuadraticError("Q is not symmetric")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @property
    def k(self) -> int:
        return self.b.shape[0]

    def __call__(self, t) -> float:
        t = np.asarray(t, dtype=float)
        return float(t @ self.Q @ t + self.b @ t + self.c)

    def gradient(self, t) -> np.ndarray:
        return 2.0 * self.Q @ np.asarray(t, dtype=float) + self.b

    def __neg__(self) -> "SimplexQuadratic":
        return SimplexQuadratic(-self.Q, -self.b, -self.c)

    @classmethod
    def zero(cls, k: int) -> "SimplexQuadratic":
        return cls(np.zeros((k, k)), np.zeros(k), 0.0)


@dataclass(frozen=True)
class StationaryWitness:
    face: Tuple[int, ...]
    t: np.ndarray
    value: float

    def to_dict(self) -> dict:
        return {"face": list(self.face), "t": self.t.tolist(), "value": self.value}


# ---- Exact face enumeration ----

def _faces(k: int) -> Iterator[Tuple[int, ...]]:
    # Size-major, then lexicographic within a size.
    for size in range(1, k + 1):
        yield from itertools.combinations(range(k), size)


def _face_stationary_point(q: SimplexQuadratic, face: Tuple[int, ...]) -> Optional[np.ndarray]:
    """Stationary point of q on aff(face), or None if singular or outside the face."""
    f = list(face)
    s = len(f)
    t = np.zeros(q.k)
    if s == 1:
        t[f[0]] = 1.0
        return t
    # [2Q_FF  -1][t_F]   [-b_F]
    # [ 1'     0][mu ] = [  1 ]
    kkt = np.zeros((s + 1, s + 1))
    kkt[:s, :s] = 2.0 * q.Q[np.ix_(f, f)]
    kkt[:s, s] = -1.0
    kkt[s, :s] = 1.0
    rhs = np.concatenate([-q.b[f], [1.0]])
    if np.linalg.matrix_rank(kkt) < s + 1:
        return None
    sol = np.linalg.solve(kkt, rhs)
    tf = sol[:s]
    if np.any(tf < -FACE_COORD_TOL):
        return None
    tf = np.clip(tf, 0.0, None)
    total = tf.sum()
    if total <= 0:
        return None
    t[f] = tf / total
    return t


def maximize_over_simplex(q: SimplexQuadratic) -> StationaryWitness:
    """Global maximum of ``q`` over the simplex with an argmax."""
    if q.k > FACE_ENUMERATION_CAP:
        raise SimplexQuadraticError(
            f"k={q.k} exceeds the face enumeration cap {FACE_ENUMERATION_CAP}"
        )
    best: Optional[StationaryWitness] = None
    skipped = 0
    for face in _faces(q.k):
        t = _face_stationary_point(q, face)
        if t is None:
            skipped += 1
            continue
        value = q(t)
        if best is None or value > best.value or (value == best.value and face < best.face):
            best = StationaryWitness(face, t, value)
    logger.debug(f"simplex max over k={q.k}: value={best.value:.6g}, {skipped} faces skipped")
    return best


def minimize_over_simplex(q: SimplexQuadratic) -> StationaryWitness:
    w = maximize_over_simplex(-q)
    return StationaryWitness(w.face, w.t, q(w.t))


# ---- Oracles and local refinement ----

def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    # Stars and bars: nonnegative integer vectors of length ``parts`` summing to ``total``.
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for bar in bars:
            out.append(bar - prev - 1)
            prev = bar
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All simplex points with denominator ``resolution``, one per row."""
    if resolution < 1:
        raise SimplexQuadraticError(f"resolution must be >= 1, got {resolution}")
    return np.array(list(_compositions(resolution, k)), dtype=float) / resolution


def brute_force_over_simplex(q: SimplexQuadratic, resolution: int) -> float:
    grid = simplex_grid(q.k, resolution)
    values = np.einsum("ij,jk,ik->i", grid, q.Q, grid) + grid @ q.b + q.c
    return float(np.max(values))


def grid_argmax(q: SimplexQuadratic, resolution: int) -> np.ndarray:
    grid = simplex_grid(q.k, resolution)
    values = np.einsum("ij,jk,ik->i", grid, q.Q, grid) + grid @ q.b + q.c
    return grid[int(np.argmax(values))]


def project_simplex(y) -> np.ndarray:
    """Euclidean projection onto the standard simplex (sort-and-threshold)."""
    v = np.asarray(y, dtype=float).reshape(-1)
    if v.size == 0:
        raise SimplexQuadraticError("cannot project an empty vector onto the simplex")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u - css / idx > 0)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def polish_over_simplex(
    q: SimplexQuadratic,
    t0=None,
    *,
    steps: int = DEFAULT_POLISH_STEPS,
    tol: float = 1e-14,
) -> StationaryWitness:
    """Projected-gradient ascent from ``t0`` (uniform weights by default).

    A local method: globally exact only when q is concave.
    """
    t = np.full(q.k, 1.0 / q.k) if t0 is None else project_simplex(t0)
    lip = 2.0 * float(np.linalg.norm(q.Q, 2))
    step = 1.0 / lip if lip > 0 else 1.0
    for _ in range(int(steps)):
        nxt = project_simplex(t + step * q.gradient(t))
        if np.linalg.norm(nxt - t) < tol:
            t = nxt
            break
        t = nxt
    face = tuple(int(i) for i in np.flatnonzero(t > 0))
    return StationaryWitness(face, t, q(t))
