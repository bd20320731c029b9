# problem_io.py
"""
Problem-file schema: parse, validate, serialize and turn into domain objects.

A problem file is one JSON object:

    {
      "dim_domain": 2, "dim_target": 2, "mode": "lipschitz",
      "body": {"type": "ball", "center": [0, 0], "radius": "auto"},
      "points": [{"id": "p0", "x": [0, 0], "v": [0, 0], "u": [0, 0], "in_A": true}, ...],
      "policy": {...}, "tolerances": {...}, "order": {...},
      "necessity": {"C": 1.0, "tuples": [{"base": ["p0"], "extra": "p1", "t": [1.0]}]}
    }

Every problem found is reported with its path; nothing is partially accepted.

Public API:
    - ProblemFileError(errors)
    - PointRecord, ProblemFile
    - parse_problem(text) -> ProblemFile
    - serialize_problem(pf) -> str
    - build_sample(pf) -> VectorFieldSample
    - build_body(pf, delta=None) -> ConvexBody
    - partial_map(pf) -> (A indices, u on A)
    - build_extension_problem(pf, delta=None, mode=None) -> ExtensionProblem
    - necessity_inputs(pf, C) -> list[NecessityProbeInput]
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from lipext.condition_checker import MODES, VectorFieldSample, lipschitz_gap_quadratic
from lipext.convex_bodies import Ball, ConvexBody, ConvexBodyError, body_from_dict
from lipext.extension_engine import ExtensionProblem
from lipext.geometry_core import PointSet
from lipext.necessity_lab import NecessityProbeInput
from lipext.simplex_quadratic import maximize_over_simplex

# ---- Constants ----

SECTION_KEYS = {
    "policy": {"m_max", "exhaustive_cap", "sample_count", "seed", "max_certificates", "max_workers"},
    "tolerances": {"feas_tol", "solve_tol", "max_iter"},
    "order": {"kind", "seed"},
    "necessity": {"C", "tuples"},
}
TOP_KEYS = {"dim_domain", "dim_target", "mode", "body", "points", "delta"} | set(SECTION_KEYS)
POINT_KEYS = {"id", "x", "v", "u", "in_A"}
AUTO = "auto"


class ProblemFileError(ValueError):
    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ---- Types ----

@dataclass(frozen=True)
class PointRecord:
    id: str
    x: Tuple[float, ...]
    v: Tuple[float, ...]
    u: Optional[Tuple[float, ...]] = None
    in_A: bool = False

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"id": self.id, "x": list(self.x), "v": list(self.v)}
        if self.u is not None:
            out["u"] = list(self.u)
        out["in_A"] = self.in_A
        return out


@dataclass(frozen=True)
class ProblemFile:
    dim_domain: int
    dim_target: int
    points: Tuple[PointRecord, ...]
    mode: str = "lipschitz"
    body: Optional[Dict[str, Any]] = None
    delta: Optional[float] = None
    policy: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, Any] = field(default_factory=dict)
    order: Dict[str, Any] = field(default_factory=dict)
    necessity: Dict[str, Any] = field(default_factory=dict)

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(p.id for p in self.points)

    def index_of(self, point_id: str) -> int:
        return self.ids.index(point_id)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "dim_domain": self.dim_domain,
            "dim_target": self.dim_target,
            "mode": self.mode,
        }
        if self.body is not None:
            out["body"] = self.body
        if self.delta is not None:
            out["delta"] = self.delta
        out["points"] = [p.to_dict() for p in self.points]
        for key in ("policy", "tolerances", "order", "necessity"):
            section = getattr(self, key)
            if section:
                out[key] = section
        return out


# ---- Validation helpers ----

def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _coords(raw: Any, dim: Optional[int], path: str, errors: List[str]) -> Optional[Tuple[float, ...]]:
    if not isinstance(raw, list) or not all(_is_number(c) for c in raw):
        errors.append(f"{path}: expected a list of finite numbers")
        return None
    if dim is not None and len(raw) != dim:
        errors.append(f"{path}: has length {len(raw)}, expected {dim}")
        return None
    return tuple(float(c) for c in raw)


def _positive_int(raw: Any, path: str, errors: List[str]) -> Optional[int]:
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 1:
        errors.append(f"{path}: expected a positive integer, got {raw!r}")
        return None
    return raw


def _section(data: Dict[str, Any], key: str, errors: List[str]) -> Dict[str, Any]:
    raw = data.get(key, {})
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        errors.append(f"{key}: expected an object")
        return {}
    for k in sorted(set(raw) - SECTION_KEYS[key]):
        errors.append(f"{key}.{k}: unknown field")
    return dict(raw)


def _check_body(raw: Any, dim: Optional[int], errors: List[str]) -> Optional[Dict[str, Any]]:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        errors.append("body: expected an object")
        return None
    if dim is None:
        return raw
    try:
        body_from_dict(_resolve_auto(raw, None, dim), dim)
    except (ConvexBodyError, KeyError, TypeError, ValueError) as e:
        errors.append(f"body: {e}")
    return raw


def _parse_points(raw: Any, n: Optional[int], m: Optional[int], errors: List[str]) -> List[PointRecord]:
    if not isinstance(raw, list) or not raw:
        errors.append("points: expected a nonempty list")
        return []
    records: List[PointRecord] = []
    seen: Dict[str, int] = {}
    for k, item in enumerate(raw):
        path = f"points[{k}]"
        if not isinstance(item, dict):
            errors.append(f"{path}: expected an object")
            continue
        pid = item.get("id")
        if not isinstance(pid, str) or not pid:
            errors.append(f"{path}.id: expected a nonempty string")
            continue
        path = f"points[{k}] (id '{pid}')"
        if pid in seen:
            errors.append(f"{path}: duplicate id (first at points[{seen[pid]}])")
        seen.setdefault(pid, k)
        for extra in sorted(set(item) - POINT_KEYS):
            errors.append(f"{path}.{extra}: unknown field")
        in_a = item.get("in_A", False)
        if not isinstance(in_a, bool):
            errors.append(f"{path}.in_A: expected true or false")
            in_a = False
        x = _coords(item.get("x"), n, f"{path}.x", errors)
        v = _coords(item.get("v"), m, f"{path}.v", errors)
        u = None
        if "u" in item and item["u"] is not None:
            u = _coords(item["u"], m, f"{path}.u", errors)
        elif in_a:
            errors.append(f"{path}: in_A is true but u is absent")
        if x is not None and v is not None:
            records.append(PointRecord(pid, x, v, u, in_a))
    return records


def _check_tuples(necessity: Dict[str, Any], ids: set, errors: List[str]) -> None:
    tuples = necessity.get("tuples", [])
    if not isinstance(tuples, list):
        errors.append("necessity.tuples: expected a list")
        return
    for k, tup in enumerate(tuples):
        path = f"necessity.tuples[{k}]"
        if not isinstance(tup, dict):
            errors.append(f"{path}: expected an object")
            continue
        base = tup.get("base")
        if not isinstance(base, list) or not 1 <= len(base) <= 3:
            errors.append(f"{path}.base: expected a list of 1 to 3 ids")
        else:
            for b in base:
                if b not in ids:
                    errors.append(f"{path}.base: unknown id {b!r}")
        if tup.get("extra") not in ids:
            errors.append(f"{path}.extra: unknown id {tup.get('extra')!r}")
        t = tup.get("t")
        if t is not None and isinstance(base, list):
            _coords(t, len(base), f"{path}.t", errors)
    if "C" in necessity and (not _is_number(necessity["C"]) or necessity["C"] <= 0):
        errors.append("necessity.C: expected a positive number")


# ---- Parse / serialize ----

def problem_from_dict(data: Any) -> ProblemFile:
    errors: List[str] = []
    if not isinstance(data, dict):
        raise ProblemFileError(["$: expected a JSON object"])
    for k in sorted(set(data) - TOP_KEYS):
        errors.append(f"{k}: unknown field")
    n = _positive_int(data.get("dim_domain"), "dim_domain", errors)
    m = _positive_int(data.get("dim_target"), "dim_target", errors)
    mode = data.get("mode", "lipschitz")
    if mode not in MODES:
        errors.append(f"mode: expected one of {list(MODES)}, got {mode!r}")
    body = _check_body(data.get("body"), m, errors)
    delta = data.get("delta")
    if delta is not None and (not _is_number(delta) or delta < 0):
        errors.append("delta: expected a nonnegative number")
    points = _parse_points(data.get("points"), n, m, errors)
    sections = {key: _section(data, key, errors) for key in SECTION_KEYS}
    _check_tuples(sections["necessity"], {p.id for p in points}, errors)
    if errors:
        raise ProblemFileError(errors)
    return ProblemFile(
        dim_domain=n,
        dim_target=m,
        points=tuple(points),
        mode=mode,
        body=body,
        delta=None if delta is None else float(delta),
        **sections,
    )


def parse_problem(text: str) -> ProblemFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError([f"$: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"]) from e
    return problem_from_dict(data)


def serialize_problem(pf: ProblemFile) -> str:
    # json writes floats with the shortest repr that round-trips.
    return json.dumps(pf.to_dict(), indent=2)


# ---- Domain objects ----

def build_sample(pf: ProblemFile) -> VectorFieldSample:
    return VectorFieldSample(
        PointSet(np.array([p.x for p in pf.points]), pf.ids),
        np.array([p.v for p in pf.points]),
    )


def partial_map(pf: ProblemFile) -> Tuple[List[int], np.ndarray]:
    a_idx = [k for k, p in enumerate(pf.points) if p.in_A]
    u = np.array([pf.points[k].u for k in a_idx], dtype=float).reshape(len(a_idx), pf.dim_target)
    return a_idx, u


def _resolve_auto(desc: Dict[str, Any], offsets: Optional[np.ndarray], dim: int) -> Dict[str, Any]:
    """Copy of ``desc`` with each auto ball radius set to the smallest one holding ``offsets`` (0 without them).

    Shifted bodies pass their offsets, minus the shift, down to the inner body.
    """
    out = dict(desc)
    kind = str(out.get("type", "")).lower()
    if kind == "ball" and out.get("radius", AUTO) in (None, AUTO):
        radius = 0.0
        if offsets is not None and len(offsets):
            center = np.asarray(out.get("center", [0.0] * dim), dtype=float)
            radius = float(np.max(np.linalg.norm(offsets - center, axis=1)))
        out["radius"] = radius
    elif kind == "shifted" and isinstance(out.get("body"), dict):
        inner = None if offsets is None else offsets - np.asarray(out.get("shift"), dtype=float)
        out["body"] = _resolve_auto(out["body"], inner, dim)
    return out


def build_body(pf: ProblemFile, delta: Optional[float] = None) -> ConvexBody:
    """K from the file. An auto ball radius, top-level or inside a shift, becomes
    the smallest radius holding every offset u - v on A; ``delta`` overrides a
    top-level ball's radius.
    """
    desc = dict(pf.body) if pf.body is not None else {"type": "ball", "radius": AUTO}
    if delta is None:
        delta = pf.delta
    if str(desc.get("type", "")).lower() == "ball" and delta is not None:
        center = np.asarray(desc.get("center", [0.0] * pf.dim_target), dtype=float)
        return Ball(center, float(delta))
    a_idx, u = partial_map(pf)
    v = np.array([pf.points[k].v for k in a_idx], dtype=float).reshape(u.shape)
    return body_from_dict(_resolve_auto(desc, u - v, pf.dim_target), pf.dim_target)


def build_extension_problem(pf: ProblemFile, delta: Optional[float] = None, mode: Optional[str] = None) -> ExtensionProblem:
    a_idx, u = partial_map(pf)
    return ExtensionProblem(
        sample=build_sample(pf),
        a_indices=tuple(a_idx),
        u_partial=u,
        body=build_body(pf, delta),
        mode=mode or pf.mode,
    )


def necessity_inputs(pf: ProblemFile, C: float) -> List[NecessityProbeInput]:
    """Probe inputs for the tuples named in the file; t defaults to the gap maximiser."""
    sample = build_sample(pf)
    out = []
    for tup in pf.necessity.get("tuples", []):
        base = tuple(pf.index_of(b) for b in tup["base"])
        extra = pf.index_of(tup["extra"])
        t = tup.get("t")
        if t is None:
            t = maximize_over_simplex(lipschitz_gap_quadratic(sample, extra, base)).t
        out.append(NecessityProbeInput(sample, base, extra, np.asarray(t, dtype=float), C))
    return out
