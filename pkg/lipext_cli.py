"""
Command-line surface.

    python lipext_cli.py check --input problem.json
    python lipext_cli.py extend --input problem.json --order nearest --output report.json
    python lipext_cli.py verify --input report.json
    python lipext_cli.py square-demo --format text

Exit status: 0 success / Satisfied, 2 a negative mathematical finding
(Violated, Infeasible, ViolationConfirmed, failed verification), 1 error.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lipext.condition_checker import MODES, ConditionCheckError, check_condition
from lipext.convex_bodies import ConvexBodyError
from lipext.extension_engine import (
    ORDER_KINDS,
    ExtensionError,
    ExtensionProblem,
    ExtensionResult,
    FeasibilityFailed,
    extend,
    kirszbraun_extend,
    kirszbraun_problem,
    verify_extension,
)
from lipext.feasibility_solver import INFEASIBLE, FeasibilityError
from lipext.geometry_core import GeometryError
from lipext.necessity_lab import (
    INCONCLUSIVE,
    NO_VIOLATION,
    VIOLATION_CONFIRMED,
    NecessityLabError,
    necessity_probe,
    necessity_sweep,
    square_demo,
)
from lipext.problem_io import (
    ProblemFile,
    ProblemFileError,
    build_extension_problem,
    build_sample,
    parse_problem,
    partial_map,
    problem_from_dict,
    necessity_inputs,
)
from lipext.simplex_quadratic import SimplexQuadraticError
from report_utils import FORMATS, build_report, render, write_report
from run_config import BASE_CONFIG, deep_merge, effective_config, order_from, policy_from, tolerances_from

logger = logging.getLogger(__name__)

COMMANDS = ("check", "extend", "kirszbraun", "necessity", "square-demo", "verify")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
# Recorded and recomputed report residuals must agree this closely.
REPRODUCE_TOL = 1e-10

KNOWN_ERRORS = (
    ConditionCheckError,
    ConvexBodyError,
    ExtensionError,
    FeasibilityError,
    GeometryError,
    NecessityLabError,
    ProblemFileError,
    SimplexQuadraticError,
    OSError,
    json.JSONDecodeError,
)


class CommandError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise CommandError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgumentParser(prog="lipext", description="Averaged-Lipschitz condition checks and constrained extensions")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--mode", choices=MODES, help="override the problem file's mode")
    ap.add_argument("--m-max", type=int, dest="m_max", help="largest tuple size to check")
    ap.add_argument("--tol", type=float, help="feasibility tolerance (feas_tol)")
    ap.add_argument("--max-iter", type=int, dest="max_iter")
    ap.add_argument("--order", choices=ORDER_KINDS, help="processing order of the extension")
    ap.add_argument("--seed", type=int, help="seed for tuple sampling, seeded orders and the square demo")
    ap.add_argument("--delta", type=float, help="use K = Ball(center, delta) instead of the file's radius")
    ap.add_argument("--C", type=float, dest="C", help="slack C of the necessity probe")
    ap.add_argument("--input", help="problem file, or a report for verify; '-' reads stdin")
    ap.add_argument("--output", help="write the report here instead of stdout")
    ap.add_argument("--format", choices=FORMATS, default="json")
    ap.add_argument("--log-level", choices=LOG_LEVELS, default="WARNING", dest="log_level")
    return ap


# ---- Configuration ----

def _cli_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "mode": args.mode,
        "tolerances": {"feas_tol": args.tol, "max_iter": args.max_iter},
        "policy": {"m_max": args.m_max, "seed": args.seed},
        "order": {"kind": args.order, "seed": args.seed},
        "extension": {"delta": args.delta},
        "necessity": {"C": args.C},
        "square_demo": {"seed": args.seed},
    }


def _file_overrides(pf: ProblemFile) -> Dict[str, Any]:
    return {
        "mode": pf.mode,
        "tolerances": pf.tolerances,
        "policy": pf.policy,
        "order": pf.order,
        "extension": {"delta": pf.delta},
        "necessity": {"C": pf.necessity.get("C")},
    }


def _fit_solve_tol(cfg: Dict[str, Any]) -> Dict[str, Any]:
    # A --tol below solve_tol pulls solve_tol down with it.
    t = cfg["config"]["tolerances"]
    if t["feas_tol"] < t["solve_tol"]:
        t["solve_tol"] = t["feas_tol"]
    return cfg


def _read_input(args: argparse.Namespace) -> str:
    if not args.input:
        raise CommandError(f"{args.command} needs --input")
    if args.input == "-":
        return sys.stdin.read()
    with open(args.input, "r", encoding="utf-8") as fh:
        return fh.read()


def _with_ids(probe: Dict[str, Any], ids: Sequence[str]) -> Dict[str, Any]:
    probe["base_ids"] = [ids[i] for i in probe["base_indices"]]
    probe["extra_id"] = ids[probe["extra_index"]]
    return probe


def _extension_problem(command: str, pf: ProblemFile, cfg: Dict[str, Any]) -> ExtensionProblem:
    """The problem an extend / kirszbraun report was computed from."""
    if command == "kirszbraun":
        a_idx, u = partial_map(pf)
        return kirszbraun_problem(build_sample(pf).domain, a_idx, u)
    c = cfg["config"]
    return build_extension_problem(pf, c["extension"]["delta"], c["mode"])


# ---- Commands ----

Outcome = Tuple[str, Any, int]


def cmd_check(pf: ProblemFile, cfg: Dict[str, Any]) -> Outcome:
    sample = build_sample(pf)
    report = check_condition(sample, cfg["config"]["mode"], policy_from(cfg), tolerances_from(cfg))
    return report.status, report.to_dict(sample.ids), EXIT_OK if report.satisfied else EXIT_NEGATIVE


def _failure(e: FeasibilityFailed, ids: Sequence[str]) -> Outcome:
    partial = [None if np.any(np.isnan(row)) else row.tolist() for row in e.partial]
    result = {
        "failed_id": e.point_id,
        "failed_index": e.index,
        "message": str(e),
        "outcome": e.outcome.to_dict(),
        "partial": partial,
        "ids": list(ids),
    }
    if e.outcome.status != INFEASIBLE:
        sys.stderr.write(f"ERROR: {e}\n")
        return e.outcome.status, result, EXIT_ERROR
    return e.outcome.status, result, EXIT_NEGATIVE


def cmd_extend(pf: ProblemFile, cfg: Dict[str, Any]) -> Outcome:
    problem = _extension_problem("extend", pf, cfg)
    try:
        result = extend(problem, order_from(cfg), tolerances_from(cfg))
    except FeasibilityFailed as e:
        return _failure(e, problem.sample.ids)
    out = result.to_dict(problem.sample.ids)
    out["body"] = problem.body.to_dict()
    return "Extended", out, EXIT_OK


def cmd_kirszbraun(pf: ProblemFile, cfg: Dict[str, Any]) -> Outcome:
    sample = build_sample(pf)
    a_idx, u = partial_map(pf)
    try:
        result = kirszbraun_extend(sample.domain, a_idx, u, order_from(cfg), tolerances_from(cfg))
    except FeasibilityFailed as e:
        return _failure(e, sample.ids)
    return "Extended", result.to_dict(sample.ids), EXIT_OK


def cmd_necessity(pf: ProblemFile, cfg: Dict[str, Any]) -> Outcome:
    nec = cfg["config"]["necessity"]
    if nec["C"] is None:
        raise CommandError("necessity needs --C or necessity.C in the problem file")
    C = float(nec["C"])
    tol = tolerances_from(cfg)
    sample = build_sample(pf)
    if pf.necessity.get("tuples"):
        probes = [
            necessity_probe(inp, tol, float(nec["margin"])).to_dict()
            for inp in necessity_inputs(pf, C)
        ]
        counts = {VIOLATION_CONFIRMED: 0, NO_VIOLATION: 0, INCONCLUSIVE: 0}
        for p in probes:
            counts[p["verdict"]] += 1
        result = {"tuples": len(probes), "counts": counts, "probes": probes}
    else:
        result = necessity_sweep(
            sample,
            C,
            tol,
            m_cap=int(nec["m_cap"]),
            limit=int(nec["sweep_limit"]),
            max_workers=int(cfg["config"]["policy"]["max_workers"]),
            margin=float(nec["margin"]),
        )
    result["probes"] = [_with_ids(p, sample.ids) for p in result["probes"]]
    counts = result["counts"]
    if counts[VIOLATION_CONFIRMED]:
        return VIOLATION_CONFIRMED, result, EXIT_NEGATIVE
    if counts[INCONCLUSIVE]:
        return INCONCLUSIVE, result, EXIT_OK
    return NO_VIOLATION, result, EXIT_OK


def cmd_square_demo(cfg: Dict[str, Any]) -> Outcome:
    result = square_demo(tolerances_from(cfg), int(cfg["config"]["square_demo"]["seed"]))
    return "Completed", result, EXIT_OK


def cmd_verify(report: Dict[str, Any], cli: Dict[str, Any]) -> Tuple[str, Any, int, Dict[str, Any], Dict[str, Any]]:
    command = report.get("command")
    if command not in ("extend", "kirszbraun"):
        raise CommandError(f"verify needs an extend or kirszbraun report, got command {command!r}")
    result = report.get("result") or {}
    if "u_full" not in result or "problem" not in report:
        raise CommandError("report carries no completed extension (missing result.u_full or problem)")
    pf = problem_from_dict(report["problem"])
    cfg = _fit_solve_tol(deep_merge(deep_merge(BASE_CONFIG, report.get("config")), {"config": cli}))
    problem = _extension_problem(command, pf, cfg)
    try:
        u_full = np.asarray(result["u_full"], dtype=float)
    except (TypeError, ValueError) as e:
        raise CommandError(f"result.u_full is not a numeric matrix: {e}") from e
    recorded = ExtensionResult(mode=problem.mode, u_full=u_full)
    vr = verify_extension(recorded, problem, tolerances_from(cfg))

    out = vr.to_dict()
    passed = vr.passed
    reproduced: Dict[str, Any] = {}
    for key in ("sup_dist_A", "sup_dist_X"):
        if key not in result:
            continue
        diff = abs(float(result[key]) - out[key])
        reproduced[key] = {"recorded": result[key], "recomputed": out[key], "difference": diff}
        if diff > REPRODUCE_TOL:
            passed = False
            out["findings"].append(f"{key} recorded as {result[key]!r}, recomputed {out[key]!r}")
    out["reproduced"] = reproduced
    out["passed"] = passed
    return ("Passed" if passed else "Failed"), out, EXIT_OK if passed else EXIT_NEGATIVE, cfg, pf.to_dict()


def _dispatch(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    cli = _cli_overrides(args)
    if args.command == "square-demo":
        cfg = _fit_solve_tol(effective_config(None, cli))
        status, result, code = cmd_square_demo(cfg)
        return build_report(args.command, status, cfg, result), code

    text = _read_input(args)
    if args.command == "verify":
        status, result, code, cfg, problem = cmd_verify(json.loads(text), cli)
        return build_report(args.command, status, cfg, result, problem), code

    pf = parse_problem(text)
    cfg = _fit_solve_tol(effective_config(_file_overrides(pf), cli))
    handlers = {
        "check": cmd_check,
        "extend": cmd_extend,
        "kirszbraun": cmd_kirszbraun,
        "necessity": cmd_necessity,
    }
    status, result, code = handlers[args.command](pf, cfg)
    logger.info(f"{args.command}: {status}")
    return build_report(args.command, status, cfg, result, pf.to_dict()), code


def _error_message(e: Exception) -> str:
    if isinstance(e, ProblemFileError):
        return f"problem file has {len(e.errors)} error(s):\n" + "\n".join(f"  {msg}" for msg in e.errors)
    return str(e)


def run_command(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CommandError as e:
        sys.stderr.write(f"ERROR: {e}\n")
        return EXIT_ERROR
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    try:
        report, code = _dispatch(args)
        text = render(report, args.format)
        if args.output:
            write_report(text, args.output)
        else:
            sys.stdout.write(text)
        return code
    except (CommandError,) + KNOWN_ERRORS as e:
        sys.stderr.write(f"ERROR: {_error_message(e)}\n")
        return EXIT_ERROR
    except Exception as e:
        logger.exception("unexpected failure")
        sys.stderr.write(f"ERROR: unexpected {type(e).__name__}: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(run_command())
