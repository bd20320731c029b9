# extension_engine.py
"""
Greedy pointwise extension of a partial map u on A to all of X.

Points of X outside A are processed one at a time. For each new x the
offset y = u(x) - v(x) is searched inside the convex hull of the offsets
already assigned, intersected with one constraint per processed point:

    lipschitz: |v(x) + y - u(x_i)| <= |x - x_i|          (a ball in y)
    monotone:  <v(x) + y - u(x_i), x - x_i> >= 0          (a half-space in y)

Every offset therefore stays in the hull of the offsets on A, which lies in
K because K is convex. Strain extensions go through the monotone path on
id - u, id - v and -K.

Public API:
    - ExtensionProblem, OrderStrategy, ExtensionResult, PointLog
    - extend_lipschitz(p, order, tol) -> ExtensionResult
    - extend_monotone(p, order, tol) -> ExtensionResult
    - extend_strain(p, order, tol) -> ExtensionResult
    - extend(p, order, tol) -> ExtensionResult   (dispatch on p.mode)
    - kirszbraun_extend(domain, a_indices, u_partial, order, tol) -> ExtensionResult
    - verify_extension(result, problem, tol) -> VerificationReport
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from lipext.condition_checker import MODES, VectorFieldSample, mode_violations
from lipext.convex_bodies import Ball, ConvexBody
from lipext.feasibility_solver import (
    FeasibilityOutcome,
    Halfspace,
    Hull,
    ConstraintSystem,
    solve,
)
from lipext.geometry_core import PointSet, Tolerances, as_points, hull_distance, pairwise_distances

logger = logging.getLogger(__name__)

# ---- Constants ----

ORDER_KINDS = ("input", "nearest", "farthest", "seeded")
DEFAULT_ORDER = "nearest"

_CHECK_HINT = {
    "lipschitz": "check_lipschitz_condition",
    "monotone": "check_monotone_condition",
    "strain": "check_strain_condition",
}


class ExtensionError(RuntimeError):
    pass


class FeasibilityFailed(ExtensionError):
    """No admissible offset was found for one point.

    Carries the point index, the solver outcome and the extension built so
    far (rows of unprocessed points are NaN).
    """

    def __init__(self, index: int, point_id: str, mode: str, outcome: FeasibilityOutcome, partial: np.ndarray):
        self.index = index
        self.point_id = point_id
        self.mode = mode
        self.outcome = outcome
        self.partial = partial
        super().__init__(
            f"no admissible value for point '{point_id}' (index {index}): solver returned "
            f"{outcome.status} with residual {outcome.residual:.3e}; the reference map may violate "
            f"the {mode} condition (run {_CHECK_HINT.get(mode, 'the condition check')}) "
            f"or the tolerances are too tight"
        )


# ---- Types ----

@dataclass(frozen=True)
class OrderStrategy:
    kind: str = DEFAULT_ORDER
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ORDER_KINDS:
            raise ExtensionError(f"unknown order '{self.kind}', expected one of {ORDER_KINDS}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed}


@dataclass(frozen=True)
class ExtensionProblem:
    sample: VectorFieldSample
    a_indices: Tuple[int, ...]
    u_partial: np.ndarray
    body: ConvexBody
    mode: str = "lipschitz"

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.a_indices)
        n_pts = len(self.sample)
        if not idx:
            raise ExtensionError("A must contain at least one point")
        if len(set(idx)) != len(idx):
            raise ExtensionError("A has repeated indices")
        bad = [i for i in idx if not 0 <= i < n_pts]
        if bad:
            raise ExtensionError(f"A indices out of range: {bad}")
        u = as_points(self.u_partial)
        if u.shape != (len(idx), self.sample.m):
            raise ExtensionError(
                f"u on A has shape {u.shape}, expected ({len(idx)}, {self.sample.m})"
            )
        if self.body.dimension != self.sample.m:
            raise ExtensionError(
                f"body K lives in R^{self.body.dimension}, values live in R^{self.sample.m}"
            )
        if self.mode not in MODES:
            raise ExtensionError(f"unknown mode '{self.mode}', expected one of {MODES}")
        object.__setattr__(self, "a_indices", idx)
        object.__setattr__(self, "u_partial", u)

    @property
    def offsets_on_a(self) -> np.ndarray:
        return self.u_partial - self.sample.values[list(self.a_indices)]


@dataclass
class PointLog:
    index: int
    outcome: FeasibilityOutcome
    hull_weights: np.ndarray

    def to_dict(self, ids: Optional[Sequence[str]] = None) -> dict:
        out = {
            "index": self.index,
            "status": self.outcome.status,
            "residual": self.outcome.residual,
            "iterations": self.outcome.iterations,
            "hull_weights": self.hull_weights.tolist(),
        }
        if ids is not None:
            out["id"] = ids[self.index]
        return out


@dataclass
class ExtensionResult:
    mode: str
    u_full: np.ndarray
    order: List[int] = field(default_factory=list)
    per_point_log: List[PointLog] = field(default_factory=list)
    sup_dist_A: float = 0.0
    sup_dist_X: float = 0.0
    mode_violations: List[Tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self, ids: Optional[Sequence[str]] = None) -> dict:
        return {
            "mode": self.mode,
            "u_full": self.u_full.tolist(),
            "order": list(self.order),
            "sup_dist_A": self.sup_dist_A,
            "sup_dist_X": self.sup_dist_X,
            "mode_violations": [list(v) for v in self.mode_violations],
            "per_point_log": [p.to_dict(ids) for p in self.per_point_log],
        }


@dataclass
class VerificationReport:
    mode: str
    passed: bool
    pair_violations: List[Tuple[int, int, float]]
    max_pair_residual: float
    a_mismatch: float
    body_violations: List[Tuple[int, float]]
    max_hull_distance: float
    sup_dist_A: float
    sup_dist_X: float
    ball_radius: Optional[float] = None
    findings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "pair_violations": [list(v) for v in self.pair_violations],
            "max_pair_residual": self.max_pair_residual,
            "a_mismatch": self.a_mismatch,
            "body_violations": [list(v) for v in self.body_violations],
            "max_hull_distance": self.max_hull_distance,
            "sup_dist_A": self.sup_dist_A,
            "sup_dist_X": self.sup_dist_X,
            "ball_radius": self.ball_radius,
            "findings": list(self.findings),
        }


# ---- Helpers ----

def _preflight(p: ExtensionProblem, tol: Tolerances) -> None:
    """Offsets on A must lie in K and u must satisfy the mode inequality on A."""
    offsets = p.offsets_on_a
    outside = [
        p.sample.ids[i]
        for i, y in zip(p.a_indices, offsets)
        if not p.body.contains(y, tol.feas_tol)
    ]
    if outside:
        raise ExtensionError(f"offsets u(x) - v(x) outside K at {outside}")
    a_points = p.sample.points[list(p.a_indices)]
    bad = mode_violations(a_points, p.u_partial, p.mode, tol.feas_tol)
    if bad:
        i, j, r = bad[0]
        ids = [p.sample.ids[k] for k in p.a_indices]
        raise ExtensionError(
            f"u is not {p.mode} on A: {len(bad)} violating pairs, e.g. "
            f"('{ids[i]}', '{ids[j]}') by {r:.3e}"
        )


def _processing_order(points: np.ndarray, a_indices: Sequence[int], order: OrderStrategy) -> List[int]:
    n_pts = points.shape[0]
    a_set = set(a_indices)
    remaining = [i for i in range(n_pts) if i not in a_set]
    if order.kind == "input" or not remaining:
        return remaining
    if order.kind == "seeded":
        rng = np.random.default_rng(order.seed)
        return [remaining[i] for i in rng.permutation(len(remaining))]
    # Greedy by distance to the processed set; ties go to the smaller index.
    dist = pairwise_distances(points[remaining], points[list(a_indices)]).min(axis=1)
    out: List[int] = []
    left = list(range(len(remaining)))
    while left:
        d = dist[left]
        pos = int(np.argmin(d)) if order.kind == "nearest" else int(np.argmax(d))
        pick = left.pop(pos)
        out.append(remaining[pick])
        if left:
            new = pairwise_distances(points[[remaining[k] for k in left]], points[[remaining[pick]]])[:, 0]
            dist[left] = np.minimum(dist[left], new)
    return out


def _point_system(
    mode: str,
    x: np.ndarray,
    v_x: np.ndarray,
    done_x: np.ndarray,
    done_u: np.ndarray,
    done_offsets: np.ndarray,
) -> ConstraintSystem:
    sets: List[ConvexBody] = [Hull(done_offsets)]
    if mode == "lipschitz":
        radii = np.linalg.norm(done_x - x, axis=1)
        sets.extend(Ball(u_i - v_x, r) for u_i, r in zip(done_u, radii))
    else:
        for x_i, u_i in zip(done_x, done_u):
            normal = x - x_i
            if not np.any(normal):
                continue
            sets.append(Halfspace(normal, float((u_i - v_x) @ normal)))
    return ConstraintSystem(sets, v_x.shape[0])


def _greedy(p: ExtensionProblem, mode: str, order: OrderStrategy, tol: Tolerances) -> ExtensionResult:
    pts = p.sample.points
    vals = p.sample.values
    n_pts = len(p.sample)
    u_full = np.full((n_pts, p.sample.m), np.nan)
    u_full[list(p.a_indices)] = p.u_partial
    done = list(p.a_indices)
    sequence = _processing_order(pts, p.a_indices, order)
    result = ExtensionResult(mode=p.mode, u_full=u_full, order=sequence)

    for idx in sequence:
        offsets = u_full[done] - vals[done]
        system = _point_system(mode, pts[idx], vals[idx], pts[done], u_full[done], offsets)
        outcome = solve(system, None, tol)
        if not outcome.feasible:
            raise FeasibilityFailed(idx, p.sample.ids[idx], p.mode, outcome, u_full.copy())
        y = outcome.point
        u_full[idx] = vals[idx] + y
        result.per_point_log.append(PointLog(idx, outcome, system.sets[0].weights(y)))
        done.append(idx)
        logger.debug(
            f"{p.mode}: point {p.sample.ids[idx]} assigned after {outcome.iterations} cycles, "
            f"residual {outcome.residual:.2e}"
        )

    dist = np.linalg.norm(u_full - vals, axis=1)
    result.sup_dist_A = float(np.max(dist[list(p.a_indices)]))
    result.sup_dist_X = float(np.max(dist))
    return result


def _finish(result: ExtensionResult, p: ExtensionProblem, tol: Tolerances) -> ExtensionResult:
    result.mode_violations = mode_violations(p.sample.points, result.u_full, p.mode, tol.feas_tol)
    if result.mode_violations:
        logger.warning(
            f"{p.mode} extension finished with {len(result.mode_violations)} pairwise violations "
            f"above feas_tol"
        )
    logger.info(
        f"{p.mode} extension: {len(result.order)} points added, "
        f"sup_A={result.sup_dist_A:.6g}, sup_X={result.sup_dist_X:.6g}"
    )
    return result


def _require_mode(p: ExtensionProblem, mode: str) -> None:
    if p.mode != mode:
        raise ExtensionError(f"problem mode is '{p.mode}', expected '{mode}'")


def _require_square_bounded(p: ExtensionProblem) -> None:
    if p.sample.n != p.sample.m:
        raise ExtensionError(
            f"{p.mode} extension needs equal dimensions, got domain {p.sample.n} and values {p.sample.m}"
        )
    if not p.body.is_bounded():
        raise ExtensionError(f"{p.mode} extension needs a bounded body K")


# ---- Public engines ----

def extend_lipschitz(
    p: ExtensionProblem,
    order: Optional[OrderStrategy] = None,
    tol: Optional[Tolerances] = None,
) -> ExtensionResult:
    order = order or OrderStrategy()
    tol = tol or Tolerances()
    _require_mode(p, "lipschitz")
    _preflight(p, tol)
    return _finish(_greedy(p, "lipschitz", order, tol), p, tol)


def extend_monotone(
    p: ExtensionProblem,
    order: Optional[OrderStrategy] = None,
    tol: Optional[Tolerances] = None,
) -> ExtensionResult:
    order = order or OrderStrategy()
    tol = tol or Tolerances()
    _require_mode(p, "monotone")
    _require_square_bounded(p)
    _preflight(p, tol)
    return _finish(_greedy(p, "monotone", order, tol), p, tol)


def strain_to_monotone(p: ExtensionProblem) -> ExtensionProblem:
    """u' = id - u, v' = id - v, K' = -K; u - v in K iff u' - v' in -K."""
    pts = p.sample.points
    return ExtensionProblem(
        sample=p.sample.with_values(pts - p.sample.values),
        a_indices=p.a_indices,
        u_partial=pts[list(p.a_indices)] - p.u_partial,
        body=p.body.negated(),
        mode="monotone",
    )


def extend_strain(
    p: ExtensionProblem,
    order: Optional[OrderStrategy] = None,
    tol: Optional[Tolerances] = None,
) -> ExtensionResult:
    order = order or OrderStrategy()
    tol = tol or Tolerances()
    _require_mode(p, "strain")
    _require_square_bounded(p)
    mono = strain_to_monotone(p)
    try:
        inner = extend_monotone(mono, order, tol)
    except FeasibilityFailed as e:
        partial = p.sample.points - e.partial
        raise FeasibilityFailed(e.index, e.point_id, "strain", e.outcome, partial) from e
    except ExtensionError as e:
        raise ExtensionError(f"strain extension (via id - u): {e}") from e
    result = ExtensionResult(
        mode="strain",
        u_full=p.sample.points - inner.u_full,
        order=inner.order,
        per_point_log=inner.per_point_log,
        sup_dist_A=inner.sup_dist_A,
        sup_dist_X=inner.sup_dist_X,
    )
    return _finish(result, p, tol)


def extend(
    p: ExtensionProblem,
    order: Optional[OrderStrategy] = None,
    tol: Optional[Tolerances] = None,
) -> ExtensionResult:
    engines = {"lipschitz": extend_lipschitz, "monotone": extend_monotone, "strain": extend_strain}
    return engines[p.mode](p, order, tol)


def kirszbraun_problem(domain, a_indices: Sequence[int], u_partial) -> ExtensionProblem:
    """v = 0 and K = B(0, R) with R = max |u| on A."""
    ps = domain if isinstance(domain, PointSet) else PointSet(domain)
    u = as_points(u_partial)
    radius = float(np.max(np.linalg.norm(u, axis=1))) if u.shape[0] else 0.0
    sample = VectorFieldSample(ps, np.zeros((len(ps), u.shape[1])))
    return ExtensionProblem(sample, tuple(a_indices), u, Ball(np.zeros(u.shape[1]), radius), "lipschitz")


def kirszbraun_extend(
    domain,
    a_indices: Sequence[int],
    u_partial,
    order: Optional[OrderStrategy] = None,
    tol: Optional[Tolerances] = None,
) -> ExtensionResult:
    """1-Lipschitz extension of u from A to the whole domain, valued in Conv u(A)."""
    p = kirszbraun_problem(domain, a_indices, u_partial)
    try:
        return extend_lipschitz(p, order, tol)
    except FeasibilityFailed as e:
        # A 1-Lipschitz u always extends; this is a numerical failure.
        logger.error(f"Kirszbraun extension failed at point '{e.point_id}'; possible solver bug: {e}")
        raise


# ---- Verification ----

def verify_extension(
    result: ExtensionResult,
    problem: ExtensionProblem,
    tol: Optional[Tolerances] = None,
) -> VerificationReport:
    """Re-check a finished extension from scratch; lists every finding."""
    tol = tol or Tolerances()
    pts = problem.sample.points
    vals = problem.sample.values
    u = as_points(result.u_full, problem.sample.m)
    a_idx = list(problem.a_indices)
    findings: List[str] = []

    pairs = mode_violations(pts, u, problem.mode, tol.feas_tol)
    all_pairs = mode_violations(pts, u, problem.mode, -np.inf)
    max_pair = max((r for _, _, r in all_pairs), default=0.0)
    for i, j, r in pairs:
        findings.append(
            f"{problem.mode} inequality violated at ('{problem.sample.ids[i]}', "
            f"'{problem.sample.ids[j]}') by {r:.3e}"
        )

    a_mismatch = float(np.max(np.abs(u[a_idx] - problem.u_partial)))
    if a_mismatch > 0:
        findings.append(f"extension differs from u on A by {a_mismatch:.3e}")

    offsets = u - vals
    body_bad: List[Tuple[int, float]] = []
    for i, y in enumerate(offsets):
        if not problem.body.contains(y, tol.feas_tol):
            d = problem.body.distance(y, tol)
            body_bad.append((i, d))
            findings.append(f"offset at '{problem.sample.ids[i]}' lies {d:.3e} outside K")

    initial = problem.offsets_on_a
    max_hull = max(hull_distance(y, initial) for y in offsets)
    if max_hull > tol.feas_tol:
        findings.append(f"an offset lies {max_hull:.3e} outside the hull of the offsets on A")

    dist = np.linalg.norm(offsets, axis=1)
    sup_a = float(np.max(dist[a_idx]))
    sup_x = float(np.max(dist))
    radius = None
    radius_ok = True
    if isinstance(problem.body, Ball):
        radius = problem.body.radius
        if not np.allclose(problem.body.center, 0.0):
            findings.append("K is a ball not centred at 0; sup_X |u - v| is compared with sup_A only")
        elif sup_x > radius + tol.feas_tol:
            radius_ok = False
            findings.append(f"sup_X |u - v| = {sup_x:.6g} exceeds the radius {radius:.6g}")
        if sup_x > sup_a + tol.feas_tol:
            findings.append(f"sup_X |u - v| = {sup_x:.6g} exceeds sup_A |u - v| = {sup_a:.6g}")

    passed = not pairs and a_mismatch <= tol.feas_tol and not body_bad and radius_ok
    return VerificationReport(
        mode=problem.mode,
        passed=passed,
        pair_violations=pairs,
        max_pair_residual=float(max_pair),
        a_mismatch=a_mismatch,
        body_violations=body_bad,
        max_hull_distance=float(max_hull),
        sup_dist_A=sup_a,
        sup_dist_X=sup_x,
        ball_radius=radius,
        findings=findings,
    )
