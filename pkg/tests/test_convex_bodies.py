import numpy as np
import pytest

from lipext import convex_bodies as cb
from lipext.geometry_core import Tolerances


def test_ball_membership():
    ball = cb.Ball([0.0, 0.0], 1.0)
    assert cb.contains(ball, [1.0, 0.0], 0.0)
    assert not cb.contains(ball, [1.1, 0.0], 0.05)
    assert ball.contains(ball.center)


def test_halfspace_membership_within_tol():
    quadrant = cb.HalfspaceIntersection([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    assert cb.contains(quadrant, [-1e-9, 0.5], 1e-8)
    assert not cb.contains(quadrant, [-1e-3, 0.5], 1e-8)


def test_whole_space_and_dimension_checks():
    ws = cb.WholeSpace(2)
    assert ws.contains([1e6, -1e6])
    assert np.allclose(ws.project([3.0, 4.0]), [3.0, 4.0])
    with pytest.raises(cb.ConvexBodyError):
        ws.contains([1.0, 2.0, 3.0])
    with pytest.raises(cb.ConvexBodyError):
        cb.Ball([0.0, 0.0], 1.0).contains([1.0])


def test_project_examples():
    assert np.allclose(cb.project(cb.Ball([0.0, 0.0], 2.0), [4.0, 0.0]), [2.0, 0.0])
    box = cb.HalfspaceIntersection(
        [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [0.0, -1.0, 0.0, -1.0]
    )
    assert np.allclose(cb.project(box, [2.0, 2.0]), [1.0, 1.0], atol=1e-8)
    assert np.allclose(cb.project(box, [0.5, -3.0]), [0.5, 0.0], atol=1e-8)


def test_polytope_projection_is_nearest_point():
    # Plain alternating projections stop at (1.5, 1.5).
    wedge = cb.HalfspaceIntersection([[0.0, 1.0], [-1.0, 1.0]], [0.0, 0.0])
    got = wedge.project([3.0, -1.0])
    assert np.allclose(got, [1.0, 1.0], atol=1e-8)


def test_empty_polytope_raises():
    empty = cb.HalfspaceIntersection([[1.0], [-1.0]], [1.0, 0.0])
    with pytest.raises(cb.EmptyBodyError):
        empty.project([5.0], Tolerances(max_iter=200))


def test_shifted_body():
    shifted = cb.ShiftedBody(cb.Ball([0.0, 0.0], 1.0), [3.0, 0.0])
    assert shifted.contains([3.5, 0.0])
    assert not shifted.contains([1.5, 0.0])
    assert np.allclose(shifted.project([0.0, 0.0]), [2.0, 0.0])


def test_negation():
    ball = cb.Ball([1.0, 2.0], 0.5).negated()
    assert np.allclose(ball.center, [-1.0, -2.0])
    half = cb.HalfspaceIntersection([[1.0, 0.0]], [1.0])
    neg = half.negated()
    assert neg.contains([-2.0, 0.0])
    assert not neg.contains([2.0, 0.0])


def test_boundedness():
    assert cb.Ball([0.0], 1.0).is_bounded()
    assert not cb.WholeSpace(2).is_bounded()
    simplex = cb.HalfspaceIntersection([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], [0.0, 0.0, -1.0])
    assert simplex.is_bounded()
    quadrant = cb.HalfspaceIntersection([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    assert not quadrant.is_bounded()


def test_invalid_bodies():
    with pytest.raises(cb.ConvexBodyError):
        cb.Ball([0.0], -1.0)
    with pytest.raises(cb.ConvexBodyError):
        cb.HalfspaceIntersection([[0.0, 0.0]], [1.0])
    with pytest.raises(cb.ConvexBodyError):
        cb.HalfspaceIntersection([[1.0, 0.0]], [1.0, 2.0])


def test_body_from_dict():
    ball = cb.body_from_dict({"type": "ball", "radius": 2.0}, 3)
    assert isinstance(ball, cb.Ball) and np.allclose(ball.center, 0.0) and ball.radius == 2.0
    poly = cb.body_from_dict({"type": "halfspaces", "normals": [[1.0, 0.0]], "offsets": [0.0]}, 2)
    assert isinstance(poly, cb.HalfspaceIntersection)
    assert isinstance(cb.body_from_dict({"type": "whole_space"}, 2), cb.WholeSpace)
    shifted = cb.body_from_dict({"type": "shifted", "shift": [1.0], "body": {"type": "ball", "radius": 1.0}}, 1)
    assert shifted.contains([2.0])
    for body in (ball, poly, shifted):
        assert cb.body_from_dict(body.to_dict(), body.dimension).to_dict() == body.to_dict()
    with pytest.raises(cb.ConvexBodyError):
        cb.body_from_dict({"type": "ball", "center": [0.0], "radius": 1.0}, 2)
    with pytest.raises(cb.ConvexBodyError):
        cb.body_from_dict({"type": "cube"}, 2)
