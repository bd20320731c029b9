# feasibility_solver.py
"""
Nonemptiness of a finite intersection of convex sets, with a point in it.

dykstra_solve runs Dykstra's cyclic projections (best approximation of the
start point); infeasibility_probe runs averaged projections, i.e. descent on
F(y) = sum_i dist(y, S_i)^2, and reports how far its stationary point stays
from the sets. polish_solve minimises the largest violation with SLSQP.
solve composes the three.

Public API:
    - Ball (from convex_bodies), Halfspace, Hull, Shifted
    - ConstraintSystem(sets, dimension)
    - FeasibilityOutcome
    - default_start(sys) -> np.ndarray
    - dykstra_solve(sys, start, tol) -> FeasibilityOutcome
    - infeasibility_probe(sys, start, tol) -> ProbeResult
    - polish_solve(sys, start, tol) -> FeasibilityOutcome
    - solve(sys, start=None, tol=None) -> FeasibilityOutcome
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from lipext.convex_bodies import Ball, ConvexBody, ShiftedBody
from lipext.geometry_core import (
    GeometryError,
    Tolerances,
    as_points,
    as_vector,
    project_halfspace,
    project_hull,
)

logger = logging.getLogger(__name__)

FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
UNKNOWN = "Unknown"

# Residual checks every STALL_WINDOW cycles; shrinking by less than 1 - STALL_RATIO counts as stalled.
STALL_WINDOW = 50
STALL_RATIO = 0.9
POLISH_FTOL = 1e-15
POLISH_MAX_ITER = 200

Shifted = ShiftedBody


class FeasibilityError(ValueError):
    pass


# ---- Constraint sets not already covered by convex_bodies ----

@dataclass(frozen=True)
class Halfspace(ConvexBody):
    """{y : <normal, y> >= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self) -> None:
        n = as_vector(self.normal)
        if float(n @ n) == 0.0:
            raise FeasibilityError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.normal.shape[0]

    def contains(self, p, tol: float = 0.0) -> bool:
        x = self._check(p)
        return (float(self.normal @ x) - self.offset) / float(np.linalg.norm(self.normal)) >= -tol

    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        return project_halfspace(self._check(p), self.normal, self.offset)

    def negated(self) -> "Halfspace":
        return Halfspace(-self.normal, self.offset)

    def is_bounded(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {"type": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True)
class Hull(ConvexBody):
    """Convex hull of the rows of ``generators``."""

    generators: np.ndarray

    def __post_init__(self) -> None:
        gens = as_points(self.generators)
        if gens.shape[0] == 0:
            raise FeasibilityError("hull constraint needs at least one generator")
        object.__setattr__(self, "generators", gens)

    @property
    def dimension(self) -> int:
        return self.generators.shape[1]

    def contains(self, p, tol: float = 0.0) -> bool:
        return self.distance(p) <= tol

    def project(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        return project_hull(self._check(p), self.generators)[0]

    def weights(self, p) -> np.ndarray:
        return project_hull(self._check(p), self.generators)[1]

    def negated(self) -> "Hull":
        return Hull(-self.generators)

    def is_bounded(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"type": "hull", "generators": self.generators.tolist()}


# ---- Systems and outcomes ----

@dataclass(frozen=True)
class ConstraintSystem:
    sets: Sequence[ConvexBody]
    dimension: int

    def __post_init__(self) -> None:
        sets = tuple(self.sets)
        if int(self.dimension) < 1:
            raise FeasibilityError(f"system dimension must be positive, got {self.dimension}")
        for i, s in enumerate(sets):
            if s.dimension != self.dimension:
                raise FeasibilityError(
                    f"set {i} ({type(s).__name__}) has dimension {s.dimension}, "
                    f"system has {self.dimension}"
                )
        object.__setattr__(self, "sets", sets)

    def __len__(self) -> int:
        return len(self.sets)

    def distances(self, p, tol: Optional[Tolerances] = None) -> np.ndarray:
        return np.array([s.distance(p, tol) for s in self.sets])

    def residual(self, p, tol: Optional[Tolerances] = None) -> float:
        return float(np.max(self.distances(p, tol))) if self.sets else 0.0


@dataclass
class ProbeResult:
    residual_lb: float
    witness: np.ndarray
    converged: bool
    iterations: int
    max_residual: float = 0.0


@dataclass
class FeasibilityOutcome:
    status: str
    point: np.ndarray
    residual: float
    iterations: int
    residual_lb: Optional[float] = None
    witness: Optional[np.ndarray] = None
    probe_converged: Optional[bool] = None
    notes: List[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def to_dict(self) -> dict:
        out = {
            "status": self.status,
            "point": self.point.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
        }
        if self.residual_lb is not None:
            out["residual_lb"] = self.residual_lb
            out["witness"] = None if self.witness is None else self.witness.tolist()
            out["probe_converged"] = self.probe_converged
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _check_start(sys: ConstraintSystem, start) -> np.ndarray:
    try:
        return as_vector(start, sys.dimension)
    except GeometryError as e:
        raise FeasibilityError(f"start point: {e}") from e


def default_start(sys: ConstraintSystem) -> np.ndarray:
    """Average of ball centers and hull generators; the origin if there are none."""
    anchors = []
    for s in sys.sets:
        if isinstance(s, Ball):
            anchors.append(s.center[None, :])
        elif isinstance(s, Hull):
            anchors.append(s.generators)
        elif isinstance(s, ShiftedBody) and isinstance(s.body, Ball):
            anchors.append((s.shift + s.body.center)[None, :])
    if not anchors:
        return np.zeros(sys.dimension)
    return np.vstack(anchors).mean(axis=0)


# ---- Solvers ----

def dykstra_solve(sys: ConstraintSystem, start, tol: Optional[Tolerances] = None) -> FeasibilityOutcome:
    """Dykstra's cyclic projections from ``start``.

    Stops when one full cycle moves the iterate by less than solve_tol, when
    the residual has stopped shrinking over a window of cycles, or after
    max_iter cycles. Feasible iff the final residual is within feas_tol;
    otherwise Unknown.
    """
    tol = tol or Tolerances()
    x = _check_start(sys, start)
    if len(sys) == 0:
        return FeasibilityOutcome(FEASIBLE, x, 0.0, 0)
    incr = np.zeros((len(sys), sys.dimension))
    cycles = 0
    stalled = False
    watch = np.inf
    for cycles in range(1, int(tol.max_iter) + 1):
        prev = x
        for i, s in enumerate(sys.sets):
            y = x + incr[i]
            x = s.project(y, tol)
            incr[i] = y - x
        if np.linalg.norm(x - prev) < tol.solve_tol:
            break
        if cycles % STALL_WINDOW == 0:
            res = sys.residual(x, tol)
            if res > tol.feas_tol and res > STALL_RATIO * watch:
                stalled = True
                break
            watch = res
    residual = sys.residual(x, tol)
    status = FEASIBLE if residual <= tol.feas_tol else UNKNOWN
    logger.debug(f"dykstra: {status} after {cycles} cycles, residual={residual:.3e}")
    outcome = FeasibilityOutcome(status, x, residual, cycles)
    if status == UNKNOWN and stalled:
        outcome.notes.append(f"residual stalled at {residual:.3e} after {cycles} cycles")
    elif status == UNKNOWN and cycles >= tol.max_iter:
        outcome.notes.append(f"max_iter={tol.max_iter} reached")
    return outcome


def infeasibility_probe(sys: ConstraintSystem, start, tol: Optional[Tolerances] = None) -> ProbeResult:
    """Averaged projections y <- mean_i P_i(y), i.e. gradient steps on F/2N.

    At a minimiser of F every point of space has max-distance at least
    sqrt(F/N), so that value is the reported lower bound.
    """
    tol = tol or Tolerances()
    y = _check_start(sys, start)
    if len(sys) == 0:
        return ProbeResult(0.0, y, True, 0)
    converged = False
    it = 0
    for it in range(1, int(tol.max_iter) + 1):
        nxt = np.mean([s.project(y, tol) for s in sys.sets], axis=0)
        step = float(np.linalg.norm(nxt - y))
        y = nxt
        if step < tol.solve_tol:
            converged = True
            break
        if it % STALL_WINDOW == 0:
            rms = float(np.sqrt(np.mean(sys.distances(y, tol) ** 2)))
            # Already within reach of every set: no separation to certify.
            if rms <= tol.feas_tol:
                break
    dists = sys.distances(y, tol)
    result = ProbeResult(
        residual_lb=float(np.sqrt(np.mean(dists ** 2))),
        witness=y,
        converged=converged,
        iterations=it,
        max_residual=float(np.max(dists)),
    )
    if not converged and it >= tol.max_iter:
        logger.warning(f"infeasibility probe stopped at max_iter={tol.max_iter} without converging")
    logger.debug(f"probe: residual_lb={result.residual_lb:.3e} after {it} steps")
    return result


def _slack_constraints(sys: ConstraintSystem, to_point, dpoint: np.ndarray, skip: Optional[int]) -> List[dict]:
    """One inequality per set in the variables z = (w, s): violation of set i is at most s."""
    cons = []
    for i, body in enumerate(sys.sets):
        if i == skip:
            continue
        if isinstance(body, ShiftedBody) and isinstance(body.body, Ball):
            body = Ball(body.shift + body.body.center, body.body.radius)
        if isinstance(body, Ball):
            def fun(z, c=body.center, r=body.radius):
                d = to_point(z) - c
                return (r + z[-1]) ** 2 - float(d @ d)

            def jac(z, c=body.center, r=body.radius):
                d = to_point(z) - c
                return np.append(-2.0 * (dpoint @ d), 2.0 * (r + z[-1]))

        elif isinstance(body, Halfspace):
            unit = body.normal / np.linalg.norm(body.normal)
            shift = body.offset / np.linalg.norm(body.normal)

            def fun(z, unit=unit, shift=shift):
                return float(unit @ to_point(z)) - shift + z[-1]

            def jac(z, unit=unit):
                return np.append(dpoint @ unit, 1.0)

        else:
            def fun(z, body=body):
                return z[-1] - body.distance(to_point(z))

            jac = None
        con = {"type": "ineq", "fun": fun}
        if jac is not None:
            con["jac"] = jac
        cons.append(con)
    return cons


def polish_solve(sys: ConstraintSystem, start, tol: Optional[Tolerances] = None) -> FeasibilityOutcome:
    """Minimise the largest violation with SLSQP, warm-started at ``start``.

    A single Hull set is handled exactly through simplex weights; every other
    set becomes a smooth inequality with a shared slack. Reaches points that
    Dykstra only creeps toward, such as the touching point of tangent balls.
    """
    tol = tol or Tolerances()
    x0 = _check_start(sys, start)
    if len(sys) == 0:
        return FeasibilityOutcome(FEASIBLE, x0, 0.0, 0)
    hulls = [i for i, s in enumerate(sys.sets) if isinstance(s, Hull)]
    skip = hulls[0] if len(hulls) == 1 else None
    if skip is not None:
        gens = sys.sets[skip].generators
        w0 = sys.sets[skip].weights(x0)
        k = gens.shape[0]

        def to_point(z):
            return z[:k] @ gens

        dpoint = gens
        bounds = [(0.0, 1.0)] * k + [(0.0, None)]
        simplex = [{
            "type": "eq",
            "fun": lambda z: float(np.sum(z[:k])) - 1.0,
            "jac": lambda z: np.append(np.ones(k), 0.0),
        }]
    else:
        w0 = x0
        k = x0.shape[0]

        def to_point(z):
            return z[:k]

        dpoint = np.eye(k)
        bounds = [(None, None)] * k + [(0.0, None)]
        simplex = []

    z0 = np.append(w0, sys.residual(to_point(np.append(w0, 0.0)), tol))
    res = minimize(
        lambda z: z[-1],
        z0,
        jac=lambda z: np.append(np.zeros(k), 1.0),
        method="SLSQP",
        bounds=bounds,
        constraints=_slack_constraints(sys, to_point, dpoint, skip) + simplex,
        options={"ftol": POLISH_FTOL, "maxiter": POLISH_MAX_ITER},
    )
    z = np.asarray(res.x, dtype=float)
    if skip is not None:
        w = np.clip(z[:k], 0.0, None)
        z = np.append(w / w.sum(), 0.0) if w.sum() > 0 else np.append(w0, 0.0)
    x = to_point(z)
    residual = sys.residual(x, tol)
    status = FEASIBLE if residual <= tol.feas_tol else UNKNOWN
    logger.debug(f"polish: {status} after {res.nit} SLSQP steps, residual={residual:.3e}")
    outcome = FeasibilityOutcome(status, x, residual, int(res.nit))
    if status == UNKNOWN:
        outcome.notes.append(f"SLSQP polish ended at residual {residual:.3e}: {res.message}")
    return outcome


def solve(sys: ConstraintSystem, start=None, tol: Optional[Tolerances] = None) -> FeasibilityOutcome:
    """Dykstra, then an SLSQP polish; an Unknown becomes Infeasible when the probe converges away from the sets."""
    tol = tol or Tolerances()
    x0 = default_start(sys) if start is None else start
    outcome = dykstra_solve(sys, x0, tol)
    if outcome.status != UNKNOWN:
        return outcome
    polished = polish_solve(sys, outcome.point, tol)
    if polished.feasible:
        polished.iterations += outcome.iterations
        polished.notes = outcome.notes + ["polished with SLSQP"]
        return polished
    probe = infeasibility_probe(sys, outcome.point, tol)
    outcome.residual_lb = probe.residual_lb
    outcome.witness = probe.witness
    outcome.probe_converged = probe.converged
    if probe.converged and probe.residual_lb > tol.feas_tol:
        outcome.status = INFEASIBLE
    elif probe.residual_lb <= tol.feas_tol:
        retry = polish_solve(sys, probe.witness, tol)
        if retry.feasible:
            retry.iterations += outcome.iterations + probe.iterations
            retry.notes = outcome.notes + ["polished from the averaged-projection witness"]
            return retry
        outcome.notes.append("averaged projections found a near-feasible point; left as Unknown")
    else:
        outcome.notes.append("averaged projections did not converge; left as Unknown")
    return outcome
