# convex_bodies.py
"""
The offset body K and the shifted copies v(x) + K.

Three variants are understood: a closed Euclidean ball, a finite
intersection of half-spaces {y : <n_i, y> >= b_i}, and the whole space.
Each knows its membership test, nearest-point projection, distance, negation
(-K) and a dict descriptor used by the problem-file schema.

Public API:
    - Ball, HalfspaceIntersection, WholeSpace, ShiftedBody
    - contains(body, p, tol) -> bool
    - project(body, p, tol) -> np.ndarray
    - body_from_dict(desc, dim) -> ConvexBody
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.optimize import linprog

from lipext.geometry_core import (
    GeometryError,
    Tolerances,
    as_points,
    as_vector,
    project_ball,
    project_halfspace,
)

logger = logging.getLogger(__name__)


class ConvexBodyError(ValueError):
    pass


class EmptyBodyError(ConvexBodyError):
    """Raised when the inner projection loop of a polytope does not settle."""


class ConvexBody(ABC):
    @property
    @abstractmethod
    def dimension(self) -> int: ...

    @abstractmethod
    def contains(self, p, tol: float = 0.0) -> bool: ...

    @abstractmethod
    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray: ...

    @abstractmethod
    def negated(self) -> "ConvexBody": ...

    @abstractmethod
    def is_bounded(self) -> bool: ...

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]: ...

    def distance(self, p, tol: Optional[Tolerances] = None) -> float:
        x = self._check(p)
        return float(np.linalg.norm(x - self.project(x, tol)))

    def _check(self, p) -> np.ndarray:
        try:
            return as_vector(p, self.dimension)
        except GeometryError as e:
            raise ConvexBodyError(str(e)) from e


@dataclass(frozen=True)
class Ball(ConvexBody):
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_vector(self.center))
        if not np.isfinite(self.radius) or self.radius < 0:
            raise ConvexBodyError(f"ball radius must be finite and >= 0, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def contains(self, p, tol: float = 0.0) -> bool:
        x = self._check(p)
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol

    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        return project_ball(self._check(p), self.center, self.radius)

    def negated(self) -> "Ball":
        return Ball(-self.center, self.radius)

    def is_bounded(self) -> bool:
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class HalfspaceIntersection(ConvexBody):
    """{y : normals[i] . y >= offsets[i] for every i}; may be empty."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self) -> None:
        normals = as_points(self.normals)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if normals.shape[0] == 0:
            raise ConvexBodyError("half-space intersection needs at least one half-space")
        if offsets.shape[0] != normals.shape[0]:
            raise ConvexBodyError(
                f"{normals.shape[0]} normals but {offsets.shape[0]} offsets"
            )
        norms = np.linalg.norm(normals, axis=1)
        if np.any(norms == 0):
            raise ConvexBodyError(f"zero normal at half-space {int(np.argmin(norms))}")
        if not np.all(np.isfinite(offsets)):
            raise ConvexBodyError("half-space offsets must be finite")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]

    def slacks(self, p) -> np.ndarray:
        """Signed distance of ``p`` to each bounding hyperplane (>= 0 inside)."""
        x = self._check(p)
        return (self.normals @ x - self.offsets) / np.linalg.norm(self.normals, axis=1)

    def contains(self, p, tol: float = 0.0) -> bool:
        return bool(np.all(self.slacks(p) >= -tol))

    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        # Dykstra over the half-spaces; returns the nearest point, not just a member.
        tol = tol or Tolerances()
        x = self._check(p)
        if self.contains(x):
            return x
        incr = np.zeros_like(self.normals)
        for it in range(int(tol.max_iter)):
            prev = x
            for i in range(self.normals.shape[0]):
                y = x + incr[i]
                x = project_halfspace(y, self.normals[i], self.offsets[i])
                incr[i] = y - x
            if np.linalg.norm(x - prev) < tol.solve_tol and self.contains(x, tol.feas_tol):
                logger.debug(f"polytope projection settled after {it + 1} cycles")
                return x
        raise EmptyBodyError(
            f"polytope projection did not settle in {tol.max_iter} cycles; body possibly empty"
        )

    def negated(self) -> "HalfspaceIntersection":
        return HalfspaceIntersection(-self.normals, self.offsets.copy())

    def is_bounded(self) -> bool:
        """True iff the normals positively span the space (recession cone is {0})."""
        n, d = self.normals.shape
        if np.linalg.matrix_rank(self.normals) < d:
            return False
        # Some strictly positive combination of the normals must vanish.
        res = linprog(
            c=np.zeros(n),
            A_eq=self.normals.T,
            b_eq=np.zeros(d),
            bounds=[(1.0, None)] * n,
            method="highs",
        )
        return bool(res.status == 0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "halfspaces",
            "normals": self.normals.tolist(),
            "offsets": self.offsets.tolist(),
        }


@dataclass(frozen=True)
class WholeSpace(ConvexBody):
    dim: int

    def __post_init__(self) -> None:
        if int(self.dim) < 1:
            raise ConvexBodyError(f"whole-space dimension must be positive, got {self.dim}")

    @property
    def dimension(self) -> int:
        return int(self.dim)

    def contains(self, p, tol: float = 0.0) -> bool:
        self._check(p)
        return True

    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        return self._check(p)

    def negated(self) -> "WholeSpace":
        return self

    def is_bounded(self) -> bool:
        return False

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "whole_space", "dim": self.dimension}


@dataclass(frozen=True)
class ShiftedBody(ConvexBody):
    """shift + body."""

    body: ConvexBody
    shift: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "shift", as_vector(self.shift, self.body.dimension))

    @property
    def dimension(self) -> int:
        return self.body.dimension

    def contains(self, p, tol: float = 0.0) -> bool:
        return self.body.contains(self._check(p) - self.shift, tol)

    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        return self.shift + self.body.project(self._check(p) - self.shift, tol)

    def negated(self) -> "ShiftedBody":
        return ShiftedBody(self.body.negated(), -self.shift)

    def is_bounded(self) -> bool:
        return self.body.is_bounded()

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "shifted", "body": self.body.to_dict(), "shift": self.shift.tolist()}


# ---- Functional surface ----

def contains(body: ConvexBody, p, tol: float = 0.0) -> bool:
    return body.contains(p, tol)


def project(body: ConvexBody, p, tol: Optional[Tolerances] = None) -> np.ndarray:
    return body.project(p, tol)


def body_from_dict(desc: Dict[str, Any], dim: int) -> ConvexBody:
    """Build a body from its descriptor, checking it lives in R^dim."""
    if not isinstance(desc, dict):
        raise ConvexBodyError("body descriptor must be an object")
    kind = str(desc.get("type", "")).lower()
    if kind == "ball":
        center = desc.get("center", [0.0] * dim)
        if len(center) != dim:
            raise ConvexBodyError(f"ball center has length {len(center)}, expected {dim}")
        return Ball(np.asarray(center, dtype=float), float(desc["radius"]))
    if kind == "halfspaces":
        normals = as_points(desc.get("normals", []))
        if normals.shape[0] and normals.shape[1] != dim:
            raise ConvexBodyError(f"half-space normals have length {normals.shape[1]}, expected {dim}")
        return HalfspaceIntersection(normals, np.asarray(desc.get("offsets", []), dtype=float))
    if kind == "whole_space":
        return WholeSpace(dim)
    if kind == "shifted":
        return ShiftedBody(body_from_dict(desc["body"], dim), np.asarray(desc["shift"], dtype=float))
    raise ConvexBodyError(f"unknown body type '{desc.get('type')}'")
