"""
Effective run configuration: module defaults, then problem-file overrides,
then command-line overrides. The merged dict is echoed into every report.
"""

import copy
from typing import Any, Dict, Optional

from lipext.condition_checker import (
    DEFAULT_EXHAUSTIVE_CAP,
    DEFAULT_MAX_WORKERS,
    DEFAULT_SAMPLE_COUNT,
    DEFAULT_SEED,
    MAX_CERTIFICATES,
    EnumerationPolicy,
)
from lipext.extension_engine import DEFAULT_ORDER, OrderStrategy
from lipext.geometry_core import DEFAULT_FEAS_TOL, DEFAULT_MAX_ITER, DEFAULT_SOLVE_TOL, Tolerances
from lipext.necessity_lab import DEFAULT_SWEEP_LIMIT, DELTA_MARGIN, MAX_BASE_POINTS

BASE_CONFIG = {
    "version": "v1",
    "config": {
        "mode": "lipschitz",
        "tolerances": {
            "feas_tol": DEFAULT_FEAS_TOL,
            "solve_tol": DEFAULT_SOLVE_TOL,
            "max_iter": DEFAULT_MAX_ITER,
        },
        "policy": {
            # None: min(dim of values, 3)
            "m_max": None,
            "exhaustive_cap": DEFAULT_EXHAUSTIVE_CAP,
            "sample_count": DEFAULT_SAMPLE_COUNT,
            "seed": DEFAULT_SEED,
            "max_certificates": MAX_CERTIFICATES,
            "max_workers": DEFAULT_MAX_WORKERS,
        },
        "order": {"kind": DEFAULT_ORDER, "seed": DEFAULT_SEED},
        "extension": {
            # None: K from the problem file
            "delta": None,
        },
        "necessity": {
            "C": None,
            "margin": DELTA_MARGIN,
            "m_cap": MAX_BASE_POINTS,
            "sweep_limit": DEFAULT_SWEEP_LIMIT,
        },
        "square_demo": {"seed": DEFAULT_SEED},
    },
}


def deep_merge(base: Dict[str, Any], override: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Return a copy of ``base`` with ``override`` merged in; None values do not override."""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def effective_config(
    file_overrides: Optional[Dict[str, Any]] = None,
    cli_overrides: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    cfg = deep_merge(BASE_CONFIG, {"config": file_overrides or {}})
    return deep_merge(cfg, {"config": cli_overrides or {}})


def tolerances_from(cfg: Dict[str, Any]) -> Tolerances:
    t = cfg["config"]["tolerances"]
    return Tolerances(float(t["feas_tol"]), float(t["solve_tol"]), int(t["max_iter"]))


def policy_from(cfg: Dict[str, Any]) -> EnumerationPolicy:
    return EnumerationPolicy(**cfg["config"]["policy"])


def order_from(cfg: Dict[str, Any]) -> OrderStrategy:
    o = cfg["config"]["order"]
    return OrderStrategy(o["kind"], int(o["seed"]))
