import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from lipext.condition_checker import VectorFieldSample  # noqa: E402
from lipext.convex_bodies import Ball  # noqa: E402
from lipext.extension_engine import ExtensionProblem  # noqa: E402
from lipext.geometry_core import Tolerances  # noqa: E402
from lipext.necessity_lab import square_sample  # noqa: E402


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def square():
    """Unit-square vertices in R^2 with v = 0, 0, 0, e3/sqrt(2) in R^3."""
    return square_sample(3)


@pytest.fixture
def doubling_pair():
    """Two points on the line with v = 2x: violates the Lipschitz condition."""
    return VectorFieldSample.from_arrays([[0.0], [1.0]], [[0.0], [2.0]], ("x0", "x1"))


@pytest.fixture
def identity_sample():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(6, 2))
    return VectorFieldSample.from_arrays(pts, pts.copy())


@pytest.fixture
def line_problem():
    """1-D Lipschitz problem: A = {0, 3} with u = 0, 2; v = 0; K = [-2, 2]."""
    sample = VectorFieldSample.from_arrays([[0.0], [1.0], [2.0], [3.0]], np.zeros((4, 1)), ("a", "b", "c", "d"))
    return ExtensionProblem(sample, (0, 3), [[0.0], [2.0]], Ball([0.0], 2.0), "lipschitz")


@pytest.fixture
def monotone_line_problem():
    """1-D monotone problem: v(x) = x, u = v + 0.5 on A = {0, 3}."""
    pts = np.array([[0.0], [1.0], [2.0], [3.0]])
    sample = VectorFieldSample.from_arrays(pts, pts.copy(), ("a", "b", "c", "d"))
    return ExtensionProblem(sample, (0, 3), [[0.5], [3.5]], Ball([0.0], 0.5), "monotone")


def problem_dict(**overrides):
    """A small valid problem-file document."""
    doc = {
        "dim_domain": 2,
        "dim_target": 2,
        "mode": "lipschitz",
        "points": [
            {"id": "p0", "x": [0.0, 0.0], "v": [0.0, 0.0], "u": [0.0, 0.0], "in_A": True},
            {"id": "p1", "x": [1.0, 0.0], "v": [1.0, 0.0], "u": [0.8, 0.6], "in_A": True},
            {"id": "p2", "x": [0.0, 1.0], "v": [0.0, 1.0]},
            {"id": "p3", "x": [1.0, 1.0], "v": [1.0, 1.0]},
        ],
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def problem_doc():
    return problem_dict()


@pytest.fixture
def make_problem():
    return problem_dict
