import numpy as np
import pytest

from lipext import extension_engine as ee
from lipext.condition_checker import VectorFieldSample
from lipext.convex_bodies import Ball, HalfspaceIntersection, WholeSpace
from lipext.feasibility_solver import INFEASIBLE
from lipext.geometry_core import Tolerances, hull_distance
from lipext.necessity_lab import affine_isometry_extension


def _one_lipschitz(rng, x, m):
    """Random values on the rows of x, rescaled by the worst pairwise ratio."""
    u = rng.normal(size=(x.shape[0], m))
    ratios = [
        np.linalg.norm(u[i] - u[j]) / np.linalg.norm(x[i] - x[j])
        for i in range(len(x)) for j in range(i + 1, len(x))
    ]
    return u / max(ratios) if ratios else u


def _rigid(rng, n, m):
    """x -> q x + shift with orthonormal columns in q (m >= n)."""
    q, _ = np.linalg.qr(rng.normal(size=(m, n)))
    return q, rng.normal(size=m)


def test_lipschitz_line(line_problem, tol):
    result = ee.extend_lipschitz(line_problem, ee.OrderStrategy("input"), tol)
    assert result.order == [1, 2]
    assert np.allclose(result.u_full[[0, 3]], [[0.0], [2.0]])
    report = ee.verify_extension(result, line_problem, tol)
    assert report.passed, report.findings
    assert result.sup_dist_X <= 2.0 + 1e-7
    assert len(result.per_point_log) == 2
    assert result.per_point_log[0].hull_weights.sum() == pytest.approx(1.0)


def test_monotone_line_keeps_constant_offset(monotone_line_problem, tol):
    result = ee.extend_monotone(monotone_line_problem, tol=tol)
    assert np.allclose(result.u_full, [[0.5], [1.5], [2.5], [3.5]], atol=1e-9)
    assert ee.verify_extension(result, monotone_line_problem, tol).passed


def test_processing_orders():
    pts = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    for kind, want in (("input", [1, 2, 3, 4]), ("nearest", [1, 2, 3, 4]), ("farthest", [4, 3, 1, 2])):
        result = ee.kirszbraun_extend(pts, [0], [[0.0]], ee.OrderStrategy(kind))
        assert result.order == want
    seeded = ee.kirszbraun_extend(pts, [0], [[0.0]], ee.OrderStrategy("seeded", 3)).order
    assert sorted(seeded) == [1, 2, 3, 4]
    assert seeded == ee.kirszbraun_extend(pts, [0], [[0.0]], ee.OrderStrategy("seeded", 3)).order
    with pytest.raises(ee.ExtensionError):
        ee.OrderStrategy("random")


def test_infeasible_point_raises_with_partial_result(tol):
    sample = VectorFieldSample.from_arrays([[0.0], [1.0], [2.0]], [[0.0], [3.0], [0.0]], ("a", "b", "c"))
    problem = ee.ExtensionProblem(sample, (0, 2), [[0.0], [0.0]], Ball([0.0], 0.0))
    with pytest.raises(ee.FeasibilityFailed) as info:
        ee.extend_lipschitz(problem, tol=tol)
    err = info.value
    assert err.point_id == "b" and err.index == 1
    assert err.outcome.status == INFEASIBLE
    assert np.isnan(err.partial[1, 0])
    assert "check_lipschitz_condition" in str(err)


def test_preflight_rejects_bad_partial_maps(tol):
    sample = VectorFieldSample.from_arrays([[0.0], [1.0], [2.0]], np.zeros((3, 1)))
    not_lipschitz = ee.ExtensionProblem(sample, (0, 1), [[0.0], [2.0]], Ball([0.0], 5.0))
    with pytest.raises(ee.ExtensionError, match="not lipschitz"):
        ee.extend_lipschitz(not_lipschitz, tol=tol)
    outside = ee.ExtensionProblem(sample, (0, 1), [[0.0], [0.5]], Ball([0.0], 0.1))
    with pytest.raises(ee.ExtensionError, match="outside K"):
        ee.extend_lipschitz(outside, tol=tol)


def test_problem_validation():
    sample = VectorFieldSample.from_arrays([[0.0], [1.0]], np.zeros((2, 1)))
    with pytest.raises(ee.ExtensionError):
        ee.ExtensionProblem(sample, (), np.zeros((0, 1)), Ball([0.0], 1.0))
    with pytest.raises(ee.ExtensionError):
        ee.ExtensionProblem(sample, (0, 0), [[0.0], [0.0]], Ball([0.0], 1.0))
    with pytest.raises(ee.ExtensionError):
        ee.ExtensionProblem(sample, (0,), [[0.0]], Ball([0.0, 0.0], 1.0))
    with pytest.raises(ee.ExtensionError):
        ee.ExtensionProblem(sample, (0,), [[0.0]], Ball([0.0], 1.0), "convex")


def test_monotone_needs_bounded_square_problem(monotone_line_problem, tol):
    unbounded = ee.ExtensionProblem(
        monotone_line_problem.sample,
        monotone_line_problem.a_indices,
        monotone_line_problem.u_partial,
        WholeSpace(1),
        "monotone",
    )
    with pytest.raises(ee.ExtensionError, match="bounded"):
        ee.extend_monotone(unbounded, tol=tol)
    with pytest.raises(ee.ExtensionError):
        ee.extend_lipschitz(monotone_line_problem, tol=tol)


def test_isometric_square_fills_the_interior_point(tol):
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    c, s = np.cos(0.7), np.sin(0.7)
    image = x @ np.array([[c, -s], [s, c]]).T + [2.0, -1.0]
    result = ee.kirszbraun_extend(x, [0, 1, 2], image[:3], tol=tol)
    report = ee.verify_extension(result, ee.kirszbraun_problem(x, [0, 1, 2], image[:3]), tol)
    assert report.passed, report.findings
    assert np.allclose(result.u_full[3], image[3], atol=1e-5)


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3), (3, 3)])
def test_isometric_simplices_extend_affinely(n, m):
    # Every interior point sits where its constraint balls only touch.
    rng = np.random.default_rng(300 + 10 * n + m)
    tol = Tolerances()
    for _ in range(4):
        verts = rng.normal(size=(n + 1, n))
        x = np.vstack([verts, rng.dirichlet(np.ones(n + 1), size=3) @ verts])
        q, shift = _rigid(rng, n, m)
        u_a = verts @ q.T + shift
        a_idx = list(range(n + 1))
        result = ee.kirszbraun_extend(x, a_idx, u_a, tol=tol)
        report = ee.verify_extension(result, ee.kirszbraun_problem(x, a_idx, u_a), tol)
        assert report.passed, report.findings
        for i in range(n + 1, len(x)):
            assert np.allclose(result.u_full[i], affine_isometry_extension(verts, u_a, x[i]), atol=1e-5)


def test_kirszbraun_suite():
    rng = np.random.default_rng(1234)
    tol = Tolerances()
    for trial in range(200):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        size = int(rng.integers(3, 41))
        a_size = int(rng.integers(2, size))
        if trial % 5 == 0:
            # Exactly isometric data.
            n, m = min(n, m), max(n, m)
        x = rng.normal(size=(size, n))
        if trial % 5 == 0:
            q, shift = _rigid(rng, n, m)
            u_a = x[:a_size] @ q.T + shift
        else:
            u_a = _one_lipschitz(rng, x[:a_size], m)
        a_idx = list(range(a_size))
        result = ee.kirszbraun_extend(x, a_idx, u_a, tol=tol)
        problem = ee.kirszbraun_problem(x, a_idx, u_a)
        report = ee.verify_extension(result, problem, tol)
        assert report.passed, (trial, report.findings)
        assert report.max_pair_residual <= 1e-7
        for value in result.u_full:
            assert hull_distance(value, u_a) <= 1e-7


def test_distance_preservation_suite():
    rng = np.random.default_rng(99)
    tol = Tolerances()
    for _ in range(100):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        size = int(rng.integers(3, 16))
        a_size = int(rng.integers(2, size))
        x = rng.normal(size=(size, n))
        M = rng.normal(size=(m, n))
        M /= max(1.0, np.linalg.norm(M, 2))
        v = x @ M.T + rng.normal(size=m)
        u_a = _one_lipschitz(rng, x[:a_size], m)
        delta = float(np.max(np.linalg.norm(u_a - v[:a_size], axis=1)))
        sample = VectorFieldSample.from_arrays(x, v)
        problem = ee.ExtensionProblem(sample, tuple(range(a_size)), u_a, Ball(np.zeros(m), delta))
        result = ee.extend_lipschitz(problem, tol=tol)
        assert result.sup_dist_X <= delta + 1e-7
        assert ee.verify_extension(result, problem, tol).passed


def _monotone_instance(rng):
    n = int(rng.integers(1, 4))
    size, a_size = int(rng.integers(4, 9)), int(rng.integers(2, 4))
    x = rng.normal(size=(size, n))
    b = rng.normal(size=(n, n))
    S = b @ b.T
    p = rng.normal(size=(n, n))
    P = p @ p.T
    # u = grad of a convex quadratic on A.
    u_a = x[:a_size] @ P.T + rng.normal(size=n)
    v = x @ S.T
    radius = float(np.max(np.linalg.norm(u_a - v[:a_size], axis=1)))
    sample = VectorFieldSample.from_arrays(x, v)
    return ee.ExtensionProblem(sample, tuple(range(a_size)), u_a, Ball(np.zeros(n), radius), "monotone")


def _strain_problem(mono):
    x = mono.sample.points
    return ee.ExtensionProblem(
        mono.sample.with_values(x - mono.sample.values),
        mono.a_indices,
        x[list(mono.a_indices)] - mono.u_partial,
        mono.body.negated(),
        "strain",
    )


def test_monotone_and_strain_suites():
    rng = np.random.default_rng(7)
    tol = Tolerances(feas_tol=1e-10, solve_tol=1e-13)
    for _ in range(100):
        mono = _monotone_instance(rng)
        x = mono.sample.points
        result = ee.extend_monotone(mono, tol=tol)
        du = result.u_full[:, None, :] - result.u_full[None, :, :]
        dx = x[:, None, :] - x[None, :, :]
        assert np.min(np.einsum("ijk,ijk->ij", du, dx)) >= -1e-9
        offsets = result.u_full - mono.sample.values
        assert np.all(np.linalg.norm(offsets, axis=1) <= mono.body.radius + 1e-7)

        strain = ee.extend_strain(_strain_problem(mono), tol=tol)
        assert strain.mode == "strain"
        ds = strain.u_full[:, None, :] - strain.u_full[None, :, :]
        assert np.max(np.einsum("ijk,ijk->ij", ds, dx) - np.einsum("ijk,ijk->ij", dx, dx)) <= 1e-9
        assert np.allclose(strain.u_full, x - result.u_full, atol=1e-9)


def test_strain_to_monotone_round_trip(monotone_line_problem):
    strain = _strain_problem(monotone_line_problem)
    back = ee.strain_to_monotone(strain)
    assert back.mode == "monotone"
    assert np.allclose(back.u_partial, monotone_line_problem.u_partial)
    assert np.allclose(back.sample.values, monotone_line_problem.sample.values)


def test_polytope_body_monotone():
    pts = np.array([[0.0], [1.0], [2.0]])
    sample = VectorFieldSample.from_arrays(pts, pts.copy())
    box = HalfspaceIntersection([[1.0], [-1.0]], [-0.5, -0.5])
    problem = ee.ExtensionProblem(sample, (0, 2), [[0.25], [1.75]], box, "monotone")
    result = ee.extend(problem)
    assert ee.verify_extension(result, problem).passed


def test_verify_flags_tampered_extension(line_problem, tol):
    result = ee.extend_lipschitz(line_problem, tol=tol)
    result.u_full = result.u_full.copy()
    result.u_full[1] = [3.0]
    report = ee.verify_extension(result, line_problem, tol)
    assert not report.passed
    assert report.pair_violations
    assert report.body_violations
    assert any("outside K" in f for f in report.findings)
