import itertools

import numpy as np
import pytest

from lipext import condition_checker as cc
from lipext.simplex_quadratic import brute_force_over_simplex


def test_doubling_pair_gives_one_certificate(doubling_pair):
    report = cc.check_lipschitz_condition(doubling_pair)
    assert report.status == "Violated"
    assert len(report.certificates) == 1
    cert = report.certificates[0]
    assert (cert.base_index, cert.tuple_indices) == (0, (1,))
    assert cert.margin == pytest.approx(3.0)
    assert cc.certificate_margin(doubling_pair, cert) == pytest.approx(cert.margin)


def test_identity_is_satisfied(identity_sample):
    report = cc.check_lipschitz_condition(identity_sample)
    assert report.satisfied
    assert report.m_checked == 2
    assert not report.probabilistic
    assert report.max_margin == pytest.approx(0.0, abs=1e-9)


def test_square_is_satisfied_at_m3(square):
    report = cc.check_lipschitz_condition(square, cc.EnumerationPolicy(m_max=3))
    assert report.satisfied
    assert report.m_checked == 3


def test_contraction_satisfied_and_pairwise_agrees():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(7, 3))
    a = rng.normal(size=(3, 3))
    a /= np.linalg.norm(a, 2)
    s = cc.VectorFieldSample.from_arrays(pts, pts @ a.T + 0.3)
    assert cc.check_lipschitz_condition(s).satisfied
    assert cc.check_pairwise_lipschitz(s).satisfied


def test_averaged_violation_with_pairwise_lipschitz():
    # Pairwise 1-Lipschitz, but v at the midpoint differs from the average.
    pts = [[0.0], [2.0], [1.0]]
    vals = [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
    s = cc.VectorFieldSample.from_arrays(pts, vals)
    assert cc.check_pairwise_lipschitz(s).satisfied
    report = cc.check_lipschitz_condition(s, cc.EnumerationPolicy(m_max=2))
    assert report.status == "Violated"
    best = report.certificates[0]
    assert best.base_index == 2 and best.tuple_indices == (0, 1)
    assert np.allclose(best.weights, [0.5, 0.5])
    assert best.margin == pytest.approx(1.0)


def test_certificates_are_sorted_and_capped():
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(8, 2))
    s = cc.VectorFieldSample.from_arrays(pts, 3.0 * pts)
    report = cc.check_lipschitz_condition(s, cc.EnumerationPolicy(m_max=2, max_certificates=5))
    assert len(report.certificates) == 5
    assert report.violations_found > 5
    margins = [c.margin for c in report.certificates]
    assert margins == sorted(margins, reverse=True)
    for c in report.certificates:
        assert cc.certificate_margin(s, c) == pytest.approx(c.margin, rel=1e-9)


def test_sampling_above_cap_is_flagged():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(6, 2))
    s = cc.VectorFieldSample.from_arrays(pts, 0.5 * pts)
    report = cc.check_lipschitz_condition(s, cc.EnumerationPolicy(exhaustive_cap=10, sample_count=40, seed=3))
    assert report.probabilistic
    assert report.tuples_sampled == 80
    assert report.satisfied


def test_sampling_is_reproducible():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(6, 2))
    s = cc.VectorFieldSample.from_arrays(pts, 2.0 * pts)
    policy = cc.EnumerationPolicy(exhaustive_cap=10, sample_count=50, seed=5)
    a = cc.check_lipschitz_condition(s, policy).to_dict()
    b = cc.check_lipschitz_condition(s, policy).to_dict()
    assert a == b


def test_monotone_condition():
    pts = np.array([[0.0], [1.0], [2.0]])
    assert cc.check_monotone_condition(cc.VectorFieldSample.from_arrays(pts, 2.0 * pts)).satisfied
    report = cc.check_monotone_condition(cc.VectorFieldSample.from_arrays(pts, -pts))
    assert report.status == "Violated"
    assert report.certificates[0].margin == pytest.approx(4.0)


def test_strain_condition_goes_through_id_minus_v():
    pts = np.array([[0.0], [1.0], [2.0]])
    ok = cc.check_strain_condition(cc.VectorFieldSample.from_arrays(pts, 0.5 * pts))
    assert ok.satisfied and ok.mode == "strain"
    bad = cc.check_strain_condition(cc.VectorFieldSample.from_arrays(pts, 2.0 * pts))
    assert bad.status == "Violated"
    cert = bad.certificates[0]
    assert cert.mode == "strain"
    # <dv, dx> - |dx|^2 for the pair (0, 2): 8 - 4
    assert cert.margin == pytest.approx(4.0)


def test_square_modes_need_equal_dimensions(square):
    with pytest.raises(cc.ConditionCheckError):
        cc.check_monotone_condition(square)
    with pytest.raises(cc.ConditionCheckError):
        cc.check_condition(square, "convex")


def test_m_max_cannot_exceed_value_dimension(doubling_pair):
    with pytest.raises(cc.ConditionCheckError):
        cc.check_lipschitz_condition(doubling_pair, cc.EnumerationPolicy(m_max=2))


def test_pairwise_mode_margins():
    pts = [[0.0], [1.0]]
    i, j, res = cc.pairwise_mode_margins(pts, [[0.0], [3.0]], "lipschitz")
    assert (i.tolist(), j.tolist()) == ([0], [1])
    assert res[0] == pytest.approx(2.0)
    assert cc.pairwise_mode_margins(pts, [[0.0], [3.0]], "monotone")[2][0] == pytest.approx(-3.0)
    assert cc.pairwise_mode_margins(pts, [[0.0], [3.0]], "strain")[2][0] == pytest.approx(2.0)
    assert cc.mode_violations(pts, [[0.0], [3.0]], "lipschitz", 1e-7) == [(0, 1, pytest.approx(2.0))]


def _kicked_sample(rng):
    """Contracting values, then either nothing, one pairwise kick, or one kick at a grid-weighted midpoint."""
    size, n, m = int(rng.integers(3, 9)), int(rng.integers(1, 5)), int(rng.integers(1, 5))
    x = rng.normal(size=(size, n))
    a = rng.normal(size=(m, n))
    a *= 0.8 / np.linalg.norm(a, 2)
    v = x @ a.T
    kind = int(rng.integers(0, 3))
    if kind == 1:
        kick = rng.normal(size=m)
        diam = np.max(np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2))
        # Every pair through the last point now violates.
        v[-1] += kick * (3.0 * diam + 1.0) / np.linalg.norm(kick)
    elif kind == 2 and size >= 3:
        t = int(rng.integers(1, 50)) / 50
        x[-1] = t * x[0] + (1 - t) * x[1]
        v = x @ a.T
        kick = rng.normal(size=m)
        v[-1] += 0.2 * kick / np.linalg.norm(kick)
    return cc.VectorFieldSample.from_arrays(x, v), int(rng.integers(1, min(m, 3) + 1))


def _grid_oracle(s, m_max):
    best = -np.inf
    for k in range(1, m_max + 1):
        for base in range(len(s)):
            for idx in itertools.combinations_with_replacement(range(len(s)), k):
                best = max(best, brute_force_over_simplex(cc.lipschitz_gap_quadratic(s, base, idx), 50))
    return best


def test_status_agrees_with_grid_oracle():
    rng = np.random.default_rng(31)
    compared = 0
    for _ in range(60):
        s, m_max = _kicked_sample(rng)
        report = cc.check_lipschitz_condition(s, cc.EnumerationPolicy(m_max=m_max))
        assert not report.probabilistic
        oracle = _grid_oracle(s, m_max)
        assert oracle <= report.max_margin + 1e-9
        if abs(report.max_margin) > 1e-4:
            compared += 1
            assert report.status == ("Violated" if oracle > 1e-7 else "Satisfied")
    assert compared > 0


def test_verdict_is_monotone_in_m_max():
    rng = np.random.default_rng(32)
    for _ in range(40):
        s, _ = _kicked_sample(rng)
        top = min(s.m, 3)
        reports = [cc.check_lipschitz_condition(s, cc.EnumerationPolicy(m_max=k)) for k in range(1, top + 1)]
        for lower, higher in zip(reports, reports[1:]):
            assert lower.max_margin <= higher.max_margin + 1e-9 * max(1.0, abs(higher.max_margin))
            if lower.status == "Violated":
                assert higher.status == "Violated"
            if higher.satisfied:
                assert lower.satisfied


def test_midpoint_violation_appears_only_at_m2():
    s = cc.VectorFieldSample.from_arrays([[0.0], [2.0], [1.0]], [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    statuses = [cc.check_lipschitz_condition(s, cc.EnumerationPolicy(m_max=k)).status for k in (1, 2)]
    assert statuses == ["Satisfied", "Violated"]
