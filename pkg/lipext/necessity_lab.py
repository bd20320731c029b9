# necessity_lab.py
"""
Constructions behind the necessity of the averaged-Lipschitz condition.

A violating tuple (x_1..x_m, x_{m+1}, t) with m <= 3 is turned into an
obstruction: an isometry u on {x_1..x_m} is placed with every offset
u(x_i) - v(x_i) having height sqrt(delta) along w, and then no point can be
within |x_{m+1} - x_i| of each u(x_i) and within sqrt(delta + C) of
v(x_{m+1}) once delta clears the threshold. The lab also carries the
midpoint (affinity) probe and the unit-square example where the placement
fails for four points.

Public API:
    - delta_threshold(diam_a, C, gap) -> float
    - construct_offset_isometry(points, v_values, w, delta, target_dim=None, tol=None) -> PointSet
    - NecessityProbeInput, NecessityReport
    - necessity_probe(inp, tol) -> NecessityReport
    - necessity_sweep(sample, C, tol, ...) -> dict
    - affinity_probe(sample, triples, tol) -> dict
    - affine_isometry_extension(points_a, u_a, x) -> np.ndarray
    - diagonal_defect(values, quad) / parallelogram_residual(u_values)
    - square_demo(tol, seed=0) -> dict
    - averaged_offset_bound_check(u_values, v_values, points, delta, C, tol) -> dict
"""

from __future__ import annotations

import concurrent.futures
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq, minimize

from lipext.condition_checker import (
    EnumerationPolicy,
    VectorFieldSample,
    check_lipschitz_condition,
    check_pairwise_lipschitz,
    lipschitz_gap_quadratic,
)
from lipext.convex_bodies import Ball
from lipext.feasibility_solver import INFEASIBLE, FEASIBLE, ConstraintSystem, FeasibilityOutcome, solve
from lipext.geometry_core import (
    PointSet,
    Tolerances,
    as_points,
    as_vector,
    diameter,
    hull_distance,
    rigid_embed,
)
from lipext.simplex_quadratic import (
    SimplexQuadratic,
    brute_force_over_simplex,
    maximize_over_simplex,
    minimize_over_simplex,
)

logger = logging.getLogger(__name__)

# ---- Constants ----

DELTA_MARGIN = 0.01
MAX_BASE_POINTS = 3
DEFAULT_SWEEP_LIMIT = 20_000
DEFAULT_MAX_WORKERS = 4
BOUND_GRID_RESOLUTION = 20
SQUARE_POINTS = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
SQUARE_C_VALUES = (0.1, 0.2)
SQUARE_SEARCH_SAMPLES = 4000
SQUARE_POLISH_STARTS = 8
_BRENT_XTOL = 1e-14

VIOLATION_CONFIRMED = "ViolationConfirmed"
NO_VIOLATION = "NoViolationDetected"
INCONCLUSIVE = "Inconclusive"


class NecessityLabError(ValueError):
    pass


class GeometryInconsistencyError(NecessityLabError):
    """A sign bracket required by the construction does not hold."""


# ---- Threshold ----

def delta_threshold(diam_a: float, C: float, gap: float) -> float:
    """8 diam^2 + 3C + ((8 diam^2 + 2C) / gap)^2."""
    if not diam_a >= 0:
        raise NecessityLabError(f"diam_a must be >= 0, got {diam_a}")
    if not C > 0:
        raise NecessityLabError(f"C must be > 0, got {C}")
    if not gap > 0:
        raise NecessityLabError(f"gap must be > 0, got {gap}")
    d2 = 8.0 * diam_a * diam_a
    return d2 + 3.0 * C + ((d2 + 2.0 * C) / gap) ** 2


# ---- Offset isometry ----

def _orthogonal_unit(basis: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """A unit vector orthogonal to ``basis`` (orthonormal), from the standard basis."""
    best, best_norm = None, -1.0
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        for b in basis:
            e = e - (e @ b) * b
        nrm = float(np.linalg.norm(e))
        if nrm > best_norm + 1e-12:
            best, best_norm = e, nrm
    if best_norm <= 1e-12:
        raise GeometryInconsistencyError(f"no direction orthogonal to {len(basis)} vectors in R^{dim}")
    return best / best_norm


def _bracketed_root(fn, lo: float, hi: float, tol: float, what: str) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi < 0:
        return brentq(fn, lo, hi, xtol=_BRENT_XTOL)
    # Same sign at both ends: accept an endpoint only within tolerance.
    if min(abs(f_lo), abs(f_hi)) <= tol:
        return lo if abs(f_lo) <= abs(f_hi) else hi
    raise GeometryInconsistencyError(
        f"{what}: no sign change on [{lo:g}, {hi:g}] (values {f_lo:.3e}, {f_hi:.3e})"
    )


def _check_triple_condition(x: np.ndarray, v: np.ndarray, tol: float) -> None:
    # |sum s_i v_i| <= |sum s_i x_i| whenever sum s_i = 0, i.e. Gram(dv) <= Gram(dx).
    dx = x[:2] - x[2]
    dv = v[:2] - v[2]
    lowest = float(np.min(np.linalg.eigvalsh(dx @ dx.T - dv @ dv.T)))
    if lowest < -tol:
        raise NecessityLabError(
            f"v contracts differences of the three points by less than required (eigenvalue {lowest:.3e})"
        )


def construct_offset_isometry(
    points,
    v_values,
    w,
    delta: float,
    target_dim: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> PointSet:
    """Isometric u on m <= 3 points with <u(x_i) - v(x_i), w> = sqrt(delta).

    u(x_1) = v(x_1) + sqrt(delta) w exactly. For m = 2 the second value is
    found on the circle of radius |x_1 - x_2| about u(x_1) in the plane
    u(x_1) + span{w, v(x_2) - v(x_1)}; for m = 3 the third value is found on
    the circle of points at the right distances from u(x_1), u(x_2).
    """
    tol = tol or Tolerances()
    ids = points.ids if isinstance(points, PointSet) else ()
    x = as_points(points)
    v = as_points(v_values)
    m = x.shape[0]
    dim = v.shape[1] if target_dim is None else int(target_dim)
    if v.shape != (m, dim):
        raise NecessityLabError(f"v values have shape {v.shape}, expected ({m}, {dim})")
    w = as_vector(w, dim)
    if abs(float(np.linalg.norm(w)) - 1.0) > tol.feas_tol:
        raise NecessityLabError(f"w must be a unit vector, |w| = {np.linalg.norm(w):.12g}")
    if m < 1 or m > min(dim, MAX_BASE_POINTS):
        raise NecessityLabError(f"need 1 <= m <= min(target_dim={dim}, {MAX_BASE_POINTS}), got m={m}")
    if not delta > 0:
        raise NecessityLabError(f"delta must be > 0, got {delta}")
    dx = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    dv = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)
    if np.any(dv > dx + tol.feas_tol):
        i, j = np.unravel_index(int(np.argmax(dv - dx)), dx.shape)
        raise NecessityLabError(f"v is not 1-Lipschitz on the points (pair {i}, {j})")

    s = math.sqrt(delta)
    u = np.zeros((m, dim))
    u[0] = v[0] + s * w

    if m >= 2:
        d12 = float(dx[0, 1])
        if d12 == 0.0:
            raise NecessityLabError("the first two points coincide")
        diff = v[1] - v[0]
        perp = diff - (diff @ w) * w
        if np.linalg.norm(perp) > 1e-12:
            e = perp / np.linalg.norm(perp)
        else:
            e = _orthogonal_unit([w], dim)
        shift = float((v[0] - v[1]) @ w)
        theta = _bracketed_root(
            lambda th: shift + d12 * math.cos(th), 0.0, math.pi, tol.feas_tol, "second point"
        )
        u[1] = u[0] + d12 * (math.cos(theta) * w + math.sin(theta) * e)

    if m == 3:
        _check_triple_condition(x, v, tol.feas_tol)
        tri = rigid_embed(dx, 2, tol.feas_tol).points
        axis = tri[1] / np.linalg.norm(tri[1])
        along = float(tri[2] @ axis)
        height = float(np.linalg.norm(tri[2] - along * axis))
        e12 = (u[1] - u[0]) / d12
        center = u[0] + along * e12
        # p spans the plane's direction orthogonal to e12, oriented with <p, w> >= 0.
        p = -math.sin(theta) * w + math.cos(theta) * e
        if p @ w < 0:
            p = -p
        f = _orthogonal_unit([w, e], dim)
        base = float((center - v[2]) @ w) - s
        lift = float(p @ w)

        # Constant in phi when u(x_2) - u(x_1) is parallel to w; then it must vanish.
        phi = _bracketed_root(
            lambda ph: base + height * math.cos(ph) * lift, 0.0, math.pi, tol.feas_tol, "third point"
        )
        u[2] = center + height * (math.cos(phi) * p + math.sin(phi) * f)

    du = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=2)
    dist_res = float(np.max(np.abs(du - dx)))
    height_res = float(np.max(np.abs((u - v) @ w - s)))
    if dist_res > tol.feas_tol or height_res > tol.feas_tol:
        raise GeometryInconsistencyError(
            f"constructed values miss the constraints (distance residual {dist_res:.3e}, "
            f"height residual {height_res:.3e})"
        )
    return PointSet(u, ids)


# ---- Probe ----

@dataclass(frozen=True)
class NecessityProbeInput:
    sample: VectorFieldSample
    base_indices: Tuple[int, ...]
    extra_index: int
    t: np.ndarray
    C: float

    def __post_init__(self) -> None:
        base = tuple(int(i) for i in self.base_indices)
        t = np.asarray(self.t, dtype=float).reshape(-1)
        n_pts = len(self.sample)
        if not 1 <= len(base) <= MAX_BASE_POINTS:
            raise NecessityLabError(f"need 1 to {MAX_BASE_POINTS} base points, got {len(base)}")
        if any(not 0 <= i < n_pts for i in base + (int(self.extra_index),)):
            raise NecessityLabError("tuple index out of range")
        if t.shape[0] != len(base):
            raise NecessityLabError(f"t has length {t.shape[0]}, expected {len(base)}")
        if np.any(t < -1e-12) or abs(float(t.sum()) - 1.0) > 1e-9:
            raise NecessityLabError("t must lie on the simplex")
        if not self.C > 0:
            raise NecessityLabError(f"C must be > 0, got {self.C}")
        object.__setattr__(self, "base_indices", base)
        object.__setattr__(self, "extra_index", int(self.extra_index))
        object.__setattr__(self, "t", t)


@dataclass
class NecessityReport:
    base_indices: Tuple[int, ...]
    extra_index: int
    t: np.ndarray
    C: float
    gap: float
    delta_v: np.ndarray
    delta_x_norm: float
    verdict: str
    C_eff: Optional[float] = None
    delta_used: Optional[float] = None
    w: Optional[np.ndarray] = None
    isometry: Optional[PointSet] = None
    extension_outcome: Optional[FeasibilityOutcome] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "base_indices": list(self.base_indices),
            "extra_index": self.extra_index,
            "t": self.t.tolist(),
            "C": self.C,
            "C_eff": self.C_eff,
            "gap": self.gap,
            "delta_v": self.delta_v.tolist(),
            "delta_x_norm": self.delta_x_norm,
            "delta_used": self.delta_used,
            "w": None if self.w is None else self.w.tolist(),
            "isometry": None if self.isometry is None else self.isometry.points.tolist(),
            "extension_outcome": None if self.extension_outcome is None else self.extension_outcome.to_dict(),
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def necessity_probe(
    inp: NecessityProbeInput,
    tol: Optional[Tolerances] = None,
    margin: float = DELTA_MARGIN,
) -> NecessityReport:
    tol = tol or Tolerances()
    s = inp.sample
    base = list(inp.base_indices)
    m = len(base)
    if m > s.m:
        raise NecessityLabError(f"m={m} base points exceed the value dimension {s.m}")
    delta_v = s.values[inp.extra_index] - inp.t @ s.values[base]
    delta_x = s.points[inp.extra_index] - inp.t @ s.points[base]
    nv = float(np.linalg.norm(delta_v))
    nx = float(np.linalg.norm(delta_x))
    gap = nv - nx
    report = NecessityReport(inp.base_indices, inp.extra_index, inp.t, inp.C, gap, delta_v, nx, NO_VIOLATION)
    if gap <= tol.feas_tol:
        return report

    w = -delta_v / nv
    diam = diameter(s.points[base])
    c_eff = max(inp.C, 4.0 * diam * diam)
    delta = delta_threshold(diam, c_eff, gap) * (1.0 + margin)
    report.w, report.C_eff, report.delta_used = w, c_eff, delta

    u = construct_offset_isometry(s.points[base], s.values[base], w, delta, tol=tol)
    report.isometry = u
    radii = np.linalg.norm(s.points[base] - s.points[inp.extra_index], axis=1)
    sets = [Ball(u_i, r) for u_i, r in zip(u.points, radii)]
    sets.append(Ball(s.values[inp.extra_index], math.sqrt(delta + c_eff)))
    outcome = solve(ConstraintSystem(sets, s.m), None, tol)
    report.extension_outcome = outcome

    if outcome.status == INFEASIBLE:
        report.verdict = VIOLATION_CONFIRMED
    elif outcome.status == FEASIBLE:
        report.verdict = INCONCLUSIVE
        report.notes.append("extension found above the threshold: tolerance conflict")
        logger.warning(
            f"necessity probe at base {inp.base_indices}, extra {inp.extra_index}: feasible point "
            f"found for delta={delta:.6g} above the threshold; check tolerances"
        )
    else:
        report.verdict = INCONCLUSIVE
        report.notes.append("solver returned Unknown")
    logger.debug(f"necessity probe {inp.base_indices}->{inp.extra_index}: gap={gap:.4g}, {report.verdict}")
    return report


def necessity_sweep(
    sample: VectorFieldSample,
    C: float,
    tol: Optional[Tolerances] = None,
    m_cap: int = MAX_BASE_POINTS,
    limit: int = DEFAULT_SWEEP_LIMIT,
    max_workers: int = DEFAULT_MAX_WORKERS,
    margin: float = DELTA_MARGIN,
) -> dict:
    """Probe every base tuple of size m <= min(m_cap, dim) with every extra point.

    t is the exact maximiser of the gap quadratic for the tuple.
    """
    tol = tol or Tolerances()
    m_top = min(m_cap, sample.m, MAX_BASE_POINTS)
    n_pts = len(sample)
    tuples: List[Tuple[Tuple[int, ...], int]] = []
    truncated = False
    candidates = (
        (base, extra)
        for m in range(1, m_top + 1)
        for base in itertools.combinations(range(n_pts), m)
        for extra in range(n_pts)
        if extra not in base
    )
    for item in candidates:
        if len(tuples) >= limit:
            truncated = True
            break
        tuples.append(item)

    def _task(item: Tuple[Tuple[int, ...], int]) -> dict:
        base, extra = item
        t = maximize_over_simplex(lipschitz_gap_quadratic(sample, extra, base)).t
        try:
            rep = necessity_probe(NecessityProbeInput(sample, base, extra, t, C), tol, margin)
        except NecessityLabError as e:
            return {"base_indices": list(base), "extra_index": extra, "verdict": INCONCLUSIVE, "notes": [str(e)]}
        return rep.to_dict()

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as ex:
        results = list(ex.map(_task, tuples))

    counts = {VIOLATION_CONFIRMED: 0, NO_VIOLATION: 0, INCONCLUSIVE: 0}
    for r in results:
        counts[r["verdict"]] += 1
    logger.info(f"necessity sweep: {len(results)} tuples, m <= {m_top}, {counts}")
    return {
        "m_checked": m_top,
        "tuples": len(results),
        "truncated": truncated,
        "counts": counts,
        "probes": [r for r in results if r["verdict"] != NO_VIOLATION],
    }


# ---- Affinity ----

def affinity_probe(
    s: VectorFieldSample,
    triples: Sequence[Tuple[int, int, int]],
    tol: Optional[Tolerances] = None,
) -> dict:
    """Midpoint defects |v(mid) - (v(i) + v(j))/2| and the pairwise Lipschitz status."""
    tol = tol or Tolerances()
    rows = []
    for i, j, mid in triples:
        want = 0.5 * (s.points[i] + s.points[j])
        off = float(np.linalg.norm(s.points[mid] - want))
        if off > 1e-12 * max(1.0, float(np.linalg.norm(want))):
            raise NecessityLabError(
                f"point '{s.ids[mid]}' is not the midpoint of '{s.ids[i]}' and '{s.ids[j]}' (off by {off:.3e})"
            )
        defect = float(np.linalg.norm(s.values[mid] - 0.5 * (s.values[i] + s.values[j])))
        rows.append({"i": int(i), "j": int(j), "mid": int(mid), "defect": defect})
    pairwise = check_pairwise_lipschitz(s, tol)
    max_defect = max((r["defect"] for r in rows), default=0.0)
    return {
        "triples": rows,
        "max_defect": max_defect,
        "pairwise_status": pairwise.status,
        "consistent_with_affine_lipschitz": max_defect <= tol.feas_tol and pairwise.satisfied,
    }


def affine_isometry_extension(points_a, u_a, x) -> np.ndarray:
    """Value at x of the affine map agreeing with u on A (x in the affine hull of A)."""
    a = as_points(points_a)
    ua = as_points(u_a)
    xv = as_vector(x, a.shape[1])
    lhs = np.vstack([a.T, np.ones(a.shape[0])])
    rhs = np.concatenate([xv, [1.0]])
    lam, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    miss = float(np.linalg.norm(lhs @ lam - rhs))
    if miss > 1e-9 * max(1.0, float(np.linalg.norm(rhs))):
        raise NecessityLabError(f"point lies {miss:.3e} outside the affine hull of A")
    return lam @ ua


def diagonal_defect(values, quad: Sequence[int]) -> float:
    """|(v(p0) + v(p3))/2 - (v(p1) + v(p2))/2| for a parallelogram p0 p1 p3 p2 with diagonals p0p3, p1p2."""
    v = as_points(values)
    p0, p1, p2, p3 = quad
    return float(np.linalg.norm(0.5 * (v[p0] + v[p3]) - 0.5 * (v[p1] + v[p2])))


def parallelogram_residual(u_values) -> float:
    """|u(1,1) - (u(0,1) + u(1,0) - u(0,0))| for values ordered like SQUARE_POINTS."""
    u = as_points(u_values)
    return float(np.linalg.norm(u[3] - (u[1] + u[2] - u[0])))


# ---- Unit-square example ----

def square_sample(dim: int = 3, w=None) -> VectorFieldSample:
    """Square vertices with v = 0, 0, 0, w/sqrt(2)."""
    w = np.eye(dim)[dim - 1] if w is None else as_vector(w, dim)
    values = np.zeros((4, dim))
    values[3] = w / math.sqrt(2.0)
    return VectorFieldSample.from_arrays(SQUARE_POINTS, values, ("a1", "a2", "a3", "a4"))


def _random_frame(rng: np.random.Generator, dim: int, cols: int) -> np.ndarray:
    skew = rng.normal(size=(dim, dim))
    return expm(skew - skew.T)[:, :cols]


def _frame_from_params(params: np.ndarray, dim: int, cols: int) -> np.ndarray:
    skew = np.zeros((dim, dim))
    skew[np.triu_indices(dim, 1)] = params
    return expm(skew - skew.T)[:, :cols]


def _height_misfit(frame: np.ndarray, w: np.ndarray, v_heights: np.ndarray) -> float:
    # u(x) = u(a1) + R x, u(a1) - v(a1) = delta w: height offsets are <Rx, w> - <v(x), w>.
    return float(np.max(np.abs(SQUARE_POINTS @ (frame.T @ w) - v_heights)))


def _square_placement_search(w: np.ndarray, v_heights: np.ndarray, seed: int) -> dict:
    dim = w.shape[0]
    rng = np.random.default_rng(seed)
    scored = []
    for _ in range(SQUARE_SEARCH_SAMPLES):
        skew = rng.normal(size=dim * (dim - 1) // 2)
        frame = _frame_from_params(skew, dim, 2)
        scored.append((_height_misfit(frame, w, v_heights), skew))
    scored.sort(key=lambda item: item[0])
    best = scored[0][0]
    for _, start in scored[:SQUARE_POLISH_STARTS]:
        res = minimize(
            lambda p: _height_misfit(_frame_from_params(p, dim, 2), w, v_heights),
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
        )
        best = min(best, float(res.fun))
    return {"samples": SQUARE_SEARCH_SAMPLES, "polish_starts": SQUARE_POLISH_STARTS, "min_misfit": best}


def square_demo(tol: Optional[Tolerances] = None, seed: int = 0) -> dict:
    """Reproduce the unit-square example: a satisfied condition with no affine extension."""
    tol = tol or Tolerances()
    sample = square_sample(3)
    check = check_lipschitz_condition(sample, EnumerationPolicy(m_max=3, seed=seed), tol)

    hull_dists = [
        hull_distance(SQUARE_POINTS[i], np.delete(SQUARE_POINTS, i, axis=0)) for i in range(4)
    ]
    min_hull = float(min(hull_dists))

    # Add the common midpoint of both diagonals, valued as the a2-a3 average.
    center_value = 0.5 * (sample.values[1] + sample.values[2])
    augmented = VectorFieldSample.from_arrays(
        np.vstack([SQUARE_POINTS, [[0.5, 0.5]]]),
        np.vstack([sample.values, center_value]),
        sample.ids + ("center",),
    )
    affinity = affinity_probe(augmented, [(0, 3, 4), (1, 2, 4)], tol)

    forbidden_below = 1.0 / (5.0 * math.sqrt(2.0))
    chains = []
    w4 = np.eye(4)[3]
    v_heights = np.array([0.0, 0.0, 0.0, 1.0 / math.sqrt(2.0)])
    search = _square_placement_search(w4, v_heights, seed)
    for C in SQUARE_C_VALUES:
        lower = 1.0 / math.sqrt(2.0) - 4.0 * C
        chains.append({
            "C": C,
            "vertex_bound": C,
            "far_vertex_bound": 3.0 * C,
            "lower_bound": lower,
            "upper_bound": C,
            "chain_forbids": lower > C,
            "placement_found": search["min_misfit"] <= C,
        })

    rng = np.random.default_rng(seed)
    residuals = []
    forced = []
    for _ in range(16):
        frame = _random_frame(rng, 4, 2)
        shift = rng.normal(size=4)
        u = shift + SQUARE_POINTS @ frame.T
        residuals.append(parallelogram_residual(u))
        forced.append(float(np.linalg.norm(affine_isometry_extension(SQUARE_POINTS[:3], u[:3], SQUARE_POINTS[3]) - u[3])))

    logger.info(f"square demo: hull distance {min_hull:.12g}, defect {affinity['max_defect']:.12g}")
    return {
        "condition_check": check.to_dict(sample.ids),
        "min_vertex_hull_distance": min_hull,
        "vertex_hull_distances": hull_dists,
        "affinity": affinity,
        "diagonal_defect": diagonal_defect(sample.values, (0, 1, 2, 3)),
        "forbidden_C_below": forbidden_below,
        "bound_chains": chains,
        "placement_search": search,
        "parallelogram_residual_max": float(max(residuals)),
        "affine_extension_residual_max": float(max(forced)),
    }


# ---- Averaged offsets ----

def averaged_offset_bound_check(
    u_values,
    v_values,
    points,
    delta: float,
    C: float,
    tol: Optional[Tolerances] = None,
    resolution: int = BOUND_GRID_RESOLUTION,
) -> dict:
    """Max over simplex weights of ||sum t_i (u_i - v_i)||^2 - delta| against 8 diam^2 + 3C."""
    tol = tol or Tolerances()
    u = as_points(u_values)
    v = as_points(v_values, u.shape[1])
    x = as_points(points)
    if u.shape != v.shape or u.shape[0] != x.shape[0] or u.shape[0] == 0:
        raise NecessityLabError(f"shape mismatch: u {u.shape}, v {v.shape}, points {x.shape}")
    offsets = u - v
    pointwise = np.abs(np.einsum("ij,ij->i", offsets, offsets) - delta)
    if np.any(pointwise > C + tol.feas_tol):
        k = int(np.argmax(pointwise))
        raise NecessityLabError(
            f"pointwise hypothesis fails at point {k}: ||u - v|^2 - delta| = {pointwise[k]:.6g} > C = {C:.6g}"
        )
    q = SimplexQuadratic(offsets @ offsets.T, np.zeros(offsets.shape[0]), -delta)
    exact = max(maximize_over_simplex(q).value, -minimize_over_simplex(q).value)
    grid = max(brute_force_over_simplex(q, resolution), brute_force_over_simplex(-q, resolution))
    bound = 8.0 * diameter(x) ** 2 + 3.0 * C
    observed = max(exact, grid)
    return {"max_observed": observed, "exact": exact, "grid": grid, "bound": bound, "holds": observed <= bound + tol.feas_tol}
