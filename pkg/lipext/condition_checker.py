# condition_checker.py
"""
Checks of the averaged conditions on a finite vector-field sample.

For a base point x and a tuple x_1..x_k the averaged-Lipschitz gap

    g(t) = |v(x) - sum t_i v(x_i)|^2 - |x - sum t_i x_i|^2

is a quadratic form in the simplex weights t (rows v(x) - v(x_i) and
x - x_i), so its exact maximum comes from simplex_quadratic. The monotone
form h(t) = <v(x) - sum t_i v(x_i), x - sum t_i x_i> is handled the same way
and minimised. The strain check runs the monotone check on x - v(x).

Public API:
    - VectorFieldSample(domain, values)
    - EnumerationPolicy(m_max, exhaustive_cap, sample_count, seed, ...)
    - ViolationCertificate, ConditionReport
    - check_lipschitz_condition(s, policy, tol) -> ConditionReport
    - check_monotone_condition(s, policy, tol) -> ConditionReport
    - check_strain_condition(s, policy, tol) -> ConditionReport
    - check_pairwise_lipschitz(s, tol) -> ConditionReport
    - lipschitz_gap_quadratic / monotone_gap_quadratic / certificate_margin
    - pairwise_mode_margins(domain, values, mode)
"""

from __future__ import annotations

import concurrent.futures
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from lipext.geometry_core import GeometryError, PointSet, Tolerances, as_points
from lipext.simplex_quadratic import (
    FACE_ENUMERATION_CAP,
    SimplexQuadratic,
    maximize_over_simplex,
    minimize_over_simplex,
)

logger = logging.getLogger(__name__)

# ---- Constants ----

MODES = ("lipschitz", "monotone", "strain")
DEFAULT_M_MAX_CAP = 3
DEFAULT_EXHAUSTIVE_CAP = 20_000
DEFAULT_SAMPLE_COUNT = 5_000
DEFAULT_SEED = 0
MAX_CERTIFICATES = 16
DEFAULT_MAX_WORKERS = 4
# Tuples handed to one worker at a time.
_CHUNK = 256


class ConditionCheckError(ValueError):
    pass


# ---- Types ----

@dataclass(frozen=True)
class VectorFieldSample:
    """Points x of X (rows of domain) and values v(x) (rows of values)."""

    domain: PointSet
    values: np.ndarray

    def __post_init__(self) -> None:
        domain = self.domain if isinstance(self.domain, PointSet) else PointSet(self.domain)
        try:
            values = as_points(self.values)
        except GeometryError as e:
            raise ConditionCheckError(f"values: {e}") from e
        if values.shape[0] != len(domain):
            raise ConditionCheckError(
                f"{values.shape[0]} values given for {len(domain)} domain points"
            )
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_arrays(cls, points, values, ids: Sequence[str] = ()) -> "VectorFieldSample":
        return cls(PointSet(np.asarray(points, dtype=float), tuple(ids)), values)

    def __len__(self) -> int:
        return len(self.domain)

    @property
    def points(self) -> np.ndarray:
        return self.domain.points

    @property
    def ids(self) -> Tuple[str, ...]:
        return self.domain.ids

    @property
    def n(self) -> int:
        return self.domain.dim

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "VectorFieldSample":
        return VectorFieldSample(self.domain, values)


@dataclass(frozen=True)
class EnumerationPolicy:
    m_max: Optional[int] = None
    exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP
    sample_count: int = DEFAULT_SAMPLE_COUNT
    seed: int = DEFAULT_SEED
    max_certificates: int = MAX_CERTIFICATES
    max_workers: int = DEFAULT_MAX_WORKERS

    def __post_init__(self) -> None:
        if self.m_max is not None and int(self.m_max) < 1:
            raise ConditionCheckError(f"m_max must be >= 1, got {self.m_max}")
        if self.exhaustive_cap < 1:
            raise ConditionCheckError("exhaustive_cap must be positive")
        if self.sample_count < 0:
            raise ConditionCheckError("sample_count must be nonnegative")
        if self.max_certificates < 1 or self.max_workers < 1:
            raise ConditionCheckError("max_certificates and max_workers must be positive")

    def resolve_m_max(self, m: int) -> int:
        m_max = min(m, DEFAULT_M_MAX_CAP) if self.m_max is None else int(self.m_max)
        if m_max > min(m, FACE_ENUMERATION_CAP):
            raise ConditionCheckError(
                f"m_max={m_max} exceeds min(dim of values={m}, {FACE_ENUMERATION_CAP})"
            )
        return m_max

    def to_dict(self) -> dict:
        return {
            "m_max": self.m_max,
            "exhaustive_cap": self.exhaustive_cap,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "max_certificates": self.max_certificates,
            "max_workers": self.max_workers,
        }


@dataclass(frozen=True)
class ViolationCertificate:
    """Reduced witness: tuple_indices are the distinct support of the weights."""

    mode: str
    base_index: int
    tuple_indices: Tuple[int, ...]
    weights: np.ndarray
    margin: float

    def key(self) -> Tuple:
        # A one-point witness is the unordered pair {x, x_1}.
        if len(self.tuple_indices) == 1:
            return ("pair",) + tuple(sorted((self.base_index, self.tuple_indices[0])))
        return ("tuple", self.base_index) + self.tuple_indices

    def sort_key(self) -> Tuple:
        return (-self.margin, self.base_index, self.tuple_indices)

    def to_dict(self, ids: Optional[Sequence[str]] = None) -> dict:
        out = {
            "mode": self.mode,
            "base_index": self.base_index,
            "tuple_indices": list(self.tuple_indices),
            "weights": self.weights.tolist(),
            "margin": self.margin,
        }
        if ids is not None:
            out["base_id"] = ids[self.base_index]
            out["tuple_ids"] = [ids[i] for i in self.tuple_indices]
        return out


@dataclass
class ConditionReport:
    mode: str
    status: str
    certificates: List[ViolationCertificate] = field(default_factory=list)
    violations_found: int = 0
    max_margin: float = -math.inf
    tuples_enumerated: int = 0
    tuples_sampled: int = 0
    probabilistic: bool = False
    m_checked: int = 0

    @property
    def satisfied(self) -> bool:
        return self.status == "Satisfied"

    def to_dict(self, ids: Optional[Sequence[str]] = None) -> dict:
        return {
            "mode": self.mode,
            "status": self.status,
            "m_checked": self.m_checked,
            "tuples_enumerated": self.tuples_enumerated,
            "tuples_sampled": self.tuples_sampled,
            "probabilistic": self.probabilistic,
            "violations_found": self.violations_found,
            "max_margin": self.max_margin if math.isfinite(self.max_margin) else None,
            "certificates": [c.to_dict(ids) for c in self.certificates],
        }


# ---- Gap quadratics ----

def _rows(sample: VectorFieldSample, base: int, idx: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    idx = list(idx)
    dx = sample.points[base] - sample.points[idx]
    dv = sample.values[base] - sample.values[idx]
    return dx, dv


def lipschitz_gap_quadratic(sample: VectorFieldSample, base: int, idx: Sequence[int]) -> SimplexQuadratic:
    """g(t) = |v(x) - sum t_i v(x_i)|^2 - |x - sum t_i x_i|^2 as t'Qt."""
    dx, dv = _rows(sample, base, idx)
    Q = dv @ dv.T - dx @ dx.T
    return SimplexQuadratic(0.5 * (Q + Q.T), np.zeros(len(idx)), 0.0)


def monotone_gap_quadratic(sample: VectorFieldSample, base: int, idx: Sequence[int]) -> SimplexQuadratic:
    """h(t) = <v(x) - sum t_i v(x_i), x - sum t_i x_i> as t'Qt."""
    dx, dv = _rows(sample, base, idx)
    Q = dv @ dx.T
    return SimplexQuadratic(0.5 * (Q + Q.T), np.zeros(len(idx)), 0.0)


def _strain_values(sample: VectorFieldSample) -> VectorFieldSample:
    return sample.with_values(sample.points - sample.values)


def certificate_margin(sample: VectorFieldSample, cert: ViolationCertificate) -> float:
    """Re-evaluate a certificate's margin directly from the sample."""
    t = np.asarray(cert.weights, dtype=float)
    idx = list(cert.tuple_indices)
    dx = sample.points[cert.base_index] - t @ sample.points[idx]
    dv = sample.values[cert.base_index] - t @ sample.values[idx]
    if cert.mode == "lipschitz":
        return float(dv @ dv - dx @ dx)
    if cert.mode == "monotone":
        return float(-(dv @ dx))
    if cert.mode == "strain":
        return float(dv @ dx - dx @ dx)
    raise ConditionCheckError(f"unknown mode '{cert.mode}'")


# ---- Enumeration ----

def _level_count(num_points: int, k: int) -> int:
    return num_points * math.comb(num_points + k - 1, k)


def _level_tuples(num_points: int, k: int) -> Iterator[Tuple[int, Tuple[int, ...]]]:
    for base in range(num_points):
        for idx in itertools.combinations_with_replacement(range(num_points), k):
            yield base, idx


def _sampled_tuples(num_points: int, k: int, count: int, rng: np.random.Generator) -> List[Tuple[int, Tuple[int, ...]]]:
    bases = rng.integers(0, num_points, size=count)
    idx = np.sort(rng.integers(0, num_points, size=(count, k)), axis=1)
    return [(int(b), tuple(int(i) for i in row)) for b, row in zip(bases, idx)]


def _reduce(mode: str, base: int, idx: Tuple[int, ...], t: np.ndarray, margin: float) -> ViolationCertificate:
    support: Dict[int, float] = {}
    for i, w in zip(idx, t):
        if w > 0:
            support[i] = support.get(i, 0.0) + float(w)
    keys = tuple(sorted(support))
    weights = np.array([support[i] for i in keys])
    return ViolationCertificate(mode, base, keys, weights / weights.sum(), float(margin))


def _evaluate(sample: VectorFieldSample, mode: str, base: int, idx: Tuple[int, ...]) -> Tuple[float, np.ndarray]:
    if mode == "lipschitz":
        w = maximize_over_simplex(lipschitz_gap_quadratic(sample, base, idx))
        return w.value, w.t
    w = minimize_over_simplex(monotone_gap_quadratic(sample, base, idx))
    return -w.value, w.t


def _run_checks(
    sample: VectorFieldSample,
    mode: str,
    label: str,
    policy: EnumerationPolicy,
    tol: Tolerances,
    m_max: int,
) -> ConditionReport:
    """Evaluate every tuple up to size m_max and merge into one report.

    ``mode`` selects the quadratic evaluated on ``sample``; ``label`` is the
    condition name stamped on the certificates.
    """
    num_points = len(sample)
    rng = np.random.default_rng(policy.seed)
    report = ConditionReport(mode=label, status="Satisfied", m_checked=m_max)
    work: List[Tuple[int, Tuple[int, ...]]] = []
    for k in range(1, m_max + 1):
        count = _level_count(num_points, k)
        if count <= policy.exhaustive_cap:
            work.extend(_level_tuples(num_points, k))
            report.tuples_enumerated += count
        else:
            logger.info(
                f"{label}: level k={k} has {count} tuples > cap {policy.exhaustive_cap}; "
                f"sampling {policy.sample_count}"
            )
            work.extend(_sampled_tuples(num_points, k, policy.sample_count, rng))
            report.tuples_sampled += policy.sample_count
            report.probabilistic = True

    def _task(chunk: List[Tuple[int, Tuple[int, ...]]]) -> List[Tuple[int, Tuple[int, ...], float, np.ndarray]]:
        return [(b, idx) + _evaluate(sample, mode, b, idx) for b, idx in chunk]

    chunks = [work[i:i + _CHUNK] for i in range(0, len(work), _CHUNK)]
    best: Dict[Tuple, ViolationCertificate] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=policy.max_workers) as ex:
        # ex.map keeps submission order, so the merge below is deterministic.
        for results in ex.map(_task, chunks):
            for base, idx, margin, t in results:
                report.max_margin = max(report.max_margin, margin)
                if margin <= tol.feas_tol:
                    continue
                cert = _reduce(label, base, idx, t, margin)
                key = cert.key()
                prev = best.get(key)
                if prev is None or cert.sort_key() < prev.sort_key():
                    best[key] = cert

    ordered = sorted(best.values(), key=ViolationCertificate.sort_key)
    report.violations_found = len(ordered)
    report.certificates = ordered[: policy.max_certificates]
    if ordered:
        report.status = "Violated"
    logger.info(
        f"{label} check: {report.status}, {len(work)} tuples, m<= {m_max}, "
        f"{report.violations_found} distinct violations, max margin {report.max_margin:.3g}"
    )
    return report


def _validate(sample: VectorFieldSample, need_square: bool) -> None:
    if len(sample) == 0:
        raise ConditionCheckError("empty sample")
    if need_square and sample.n != sample.m:
        raise ConditionCheckError(
            f"domain dimension {sample.n} differs from value dimension {sample.m}"
        )


# ---- Public checks ----

def check_lipschitz_condition(
    s: VectorFieldSample,
    policy: Optional[EnumerationPolicy] = None,
    tol: Optional[Tolerances] = None,
) -> ConditionReport:
    policy = policy or EnumerationPolicy()
    tol = tol or Tolerances()
    _validate(s, need_square=False)
    return _run_checks(s, "lipschitz", "lipschitz", policy, tol, policy.resolve_m_max(s.m))


def check_monotone_condition(
    s: VectorFieldSample,
    policy: Optional[EnumerationPolicy] = None,
    tol: Optional[Tolerances] = None,
) -> ConditionReport:
    policy = policy or EnumerationPolicy()
    tol = tol or Tolerances()
    _validate(s, need_square=True)
    return _run_checks(s, "monotone", "monotone", policy, tol, policy.resolve_m_max(s.m))


def check_strain_condition(
    s: VectorFieldSample,
    policy: Optional[EnumerationPolicy] = None,
    tol: Optional[Tolerances] = None,
) -> ConditionReport:
    """Strain check through the monotone check of x - v(x).

    Margins carry over unchanged: -<d(x - v), dx> = <dv, dx> - |dx|^2.
    """
    policy = policy or EnumerationPolicy()
    tol = tol or Tolerances()
    _validate(s, need_square=True)
    return _run_checks(_strain_values(s), "monotone", "strain", policy, tol, policy.resolve_m_max(s.m))


def check_pairwise_lipschitz(s: VectorFieldSample, tol: Optional[Tolerances] = None) -> ConditionReport:
    """All pairs, margin |v(x)-v(y)|^2 - |x-y|^2; same units as the k=1 gap."""
    tol = tol or Tolerances()
    _validate(s, need_square=False)
    num_points = len(s)
    report = ConditionReport(mode="lipschitz", status="Satisfied", m_checked=1)
    if num_points < 2:
        report.max_margin = 0.0
        return report
    margins = pdist(s.values) ** 2 - pdist(s.points) ** 2
    ii, jj = np.triu_indices(num_points, 1)
    report.tuples_enumerated = int(margins.size)
    report.max_margin = float(np.max(margins))
    bad = np.flatnonzero(margins > tol.feas_tol)
    certs = [
        ViolationCertificate("lipschitz", int(ii[p]), (int(jj[p]),), np.array([1.0]), float(margins[p]))
        for p in bad
    ]
    certs.sort(key=ViolationCertificate.sort_key)
    report.violations_found = len(certs)
    report.certificates = certs[:MAX_CERTIFICATES]
    if certs:
        report.status = "Violated"
    return report


def check_condition(
    s: VectorFieldSample,
    mode: str,
    policy: Optional[EnumerationPolicy] = None,
    tol: Optional[Tolerances] = None,
) -> ConditionReport:
    checks = {
        "lipschitz": check_lipschitz_condition,
        "monotone": check_monotone_condition,
        "strain": check_strain_condition,
    }
    if mode not in checks:
        raise ConditionCheckError(f"unknown mode '{mode}', expected one of {MODES}")
    return checks[mode](s, policy, tol)


def pairwise_mode_margins(domain, values, mode: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair residual of the mode inequality (positive = violated).

    lipschitz: |du| - |dx|; monotone: -<du, dx>; strain: <du, dx> - |dx|^2.
    Returns (i, j, residual) over pairs i < j.
    """
    x = as_points(domain)
    u = as_points(values)
    k = x.shape[0]
    ii, jj = np.triu_indices(k, 1)
    if ii.size == 0:
        return ii, jj, np.zeros(0)
    dx = x[ii] - x[jj]
    du = u[ii] - u[jj]
    if mode == "lipschitz":
        res = pdist(u) - pdist(x)
    elif mode == "monotone":
        res = -np.einsum("ij,ij->i", du, dx)
    elif mode == "strain":
        res = np.einsum("ij,ij->i", du, dx) - np.einsum("ij,ij->i", dx, dx)
    else:
        raise ConditionCheckError(f"unknown mode '{mode}', expected one of {MODES}")
    return ii, jj, res


def mode_violations(domain, values, mode: str, tol: float) -> List[Tuple[int, int, float]]:
    ii, jj, res = pairwise_mode_margins(domain, values, mode)
    bad = np.flatnonzero(res > tol)
    return [(int(ii[p]), int(jj[p]), float(res[p])) for p in bad]
