"""
Report documents: build, render as JSON or as plain-text key/value tables,
and write atomically.
"""

import json
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from lipext import __version__

TOOL_NAME = "lipext"
FORMATS = ("json", "text")


def build_report(
    command: str,
    status: str,
    config: Dict[str, Any],
    result: Any,
    problem: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Self-contained report: enough to re-run ``verify`` from the document alone."""
    report = {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "command": command,
        "status": status,
        "config": config,
        "result": result,
    }
    if problem is not None:
        report["problem"] = problem
    return report


def _plain(obj: Any) -> Any:
    """numpy values to built-ins; non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(report: Dict[str, Any]) -> str:
    return json.dumps(_plain(report), indent=2) + "\n"


def _flatten(prefix: str, value: Any) -> Iterable[Tuple[str, Any]]:
    if isinstance(value, dict):
        for k, v in value.items():
            yield from _flatten(f"{prefix}.{k}" if prefix else str(k), v)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            yield from _flatten(f"{prefix}[{i}]", v)
    else:
        yield prefix, value


def _format_value(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def render_text(report: Dict[str, Any]) -> str:
    """Two-column table per top-level section, keys dotted."""
    plain = _plain(report)
    lines: List[str] = [f"{TOOL_NAME} {plain['tool']['version']} {plain['command']}: {plain['status']}"]
    for section in ("result", "config", "problem"):
        if section not in plain:
            continue
        rows = list(_flatten("", plain[section]))
        if not rows:
            continue
        width = max(len(k) for k, _ in rows)
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in rows:
            lines.append(f"{key.ljust(width)}  {_format_value(value)}")
    return "\n".join(lines) + "\n"


def render(report: Dict[str, Any], fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown format '{fmt}', expected one of {FORMATS}")


def write_report(text: str, path: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".lipext-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
