"""Run method comparisons over problem lists and render the results.

``run_comparison`` executes every requested method on every problem (in
parallel across problems when asked) and returns one row per problem in
corpus order.  ``render_report`` serializes rows to CSV, JSON or a
markdown table; all three renderings are deterministic and the JSON form
(schema in docs/report-schema.md) can be re-rendered by the CLI without
re-running anything.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .complex_scalar import solve_complex
from .core import SolverConfig, SolverReport, Status
from .corpus import ProblemKind, ProblemSpec, format_complex_literal
from .scalar import Method, solve_scalar
from .systems import solve_system

REPORT_SCHEMA = "fdwfm-report/1"

FORMATS = ("csv", "json", "markdown")


@dataclass(frozen=True)
class MethodResult:
    """Either a solver report or the reason the method was skipped."""

    report: Optional[SolverReport] = None
    skipped: Optional[str] = None


@dataclass(frozen=True)
class ComparisonRow:
    """All requested methods applied to one problem under one config."""

    problem: ProblemSpec
    results: dict  # method name -> MethodResult, in requested order
    config: SolverConfig


def _why_skipped(problem: ProblemSpec, method: Method) -> Optional[str]:
    if problem.is_scalar:
        if method is Method.BROYDEN:
            return "system method"
        if method in (Method.SECANT, Method.FDWFM) and problem.x1 is None:
            return "no second starting point"
        if method in (Method.NEWTON, Method.WFM) and problem.derivative is None:
            return "no derivative expression"
    else:
        if method is Method.SECANT:
            return "one-dimensional method"
        if method in (Method.NEWTON, Method.WFM) and problem.jacobian is None:
            return "no analytic Jacobian"
    return None


def run_one(problem: ProblemSpec, method: Method,
            config: SolverConfig = SolverConfig()) -> MethodResult:
    """Apply one method to one problem; inapplicable pairs become skips."""
    reason = _why_skipped(problem, method)
    if reason is not None:
        return MethodResult(skipped=reason)
    solver_problem = problem.make_problem()
    if problem.kind is ProblemKind.REAL_SCALAR:
        report = solve_scalar(solver_problem, method, config)
    elif problem.kind is ProblemKind.COMPLEX_SCALAR:
        report = solve_complex(solver_problem, method, config)
    else:
        report = solve_system(solver_problem, method, config)
    return MethodResult(report=report)


def run_comparison(problems: Sequence[ProblemSpec], methods: Sequence[Method],
                   config: SolverConfig = SolverConfig(),
                   jobs: Optional[int] = None) -> list:
    """Run every method on every problem; rows come back in problem order.

    A failed run becomes a status cell in its row, never an exception.
    Problems execute concurrently (``jobs`` threads, default the machine's
    CPU count); each (problem, method) run is independent.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("at least one method is required")

    def row_for(problem: ProblemSpec) -> ComparisonRow:
        results = {m.value: run_one(problem, m, config) for m in methods}
        return ComparisonRow(problem=problem, results=results, config=config)

    problems = list(problems)
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(problems) <= 1:
        rows = [row_for(p) for p in problems]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(row_for, problems))
    return rows


# ---------------------------------------------------------------------------
# Serialization


def _point_to_json(kind: ProblemKind, point):
    if point is None:
        return None
    if kind is ProblemKind.REAL_SCALAR:
        return float(point)
    if kind is ProblemKind.COMPLEX_SCALAR:
        z = complex(point)
        return [z.real, z.imag]
    return [float(v) for v in np.asarray(point).ravel()]


def _config_to_json(config: SolverConfig) -> dict:
    return {
        "residual_tol": config.residual_tol,
        "step_tol": config.step_tol,
        "max_iter": config.max_iter,
        "denom_guard": config.denom_guard,
        "jacobian_init": config.jacobian_init.value,
        "on_singular": config.on_singular.value,
        "count_formal": config.count_formal,
        "fallback_to_secant": config.fallback_to_secant,
        "literal_step1": config.literal_step1,
    }


def payload_from_rows(rows: Sequence[ComparisonRow]) -> dict:
    """Pure-data form of a comparison, shared by all renderers."""
    if not rows:
        return {"schema": REPORT_SCHEMA, "config": None, "methods": [], "rows": []}
    config = rows[0].config
    if any(r.config != config for r in rows):
        raise ValueError("rows of one report must share a single config")
    methods = list(rows[0].results.keys())
    out_rows = []
    for row in rows:
        problem = row.problem
        kind = problem.kind
        results = {}
        for name, result in row.results.items():
            if result.skipped is not None:
                results[name] = {"skipped": result.skipped}
                continue
            report = result.report
            results[name] = {
                "status": report.status.value,
                "root": _point_to_json(kind, report.root),
                "iterations": report.iterations,
                "nfe": report.nfe,
                "coc": report.coc,
            }
        out_rows.append({
            "problem": problem.id,
            "kind": kind.value,
            "expressions": list(problem.expressions),
            "variables": list(problem.variables),
            "x0": _point_to_json(kind, problem.x0),
            "x1": _point_to_json(kind, problem.x1),
            "expected_root": _point_to_json(kind, problem.expected_root),
            "flags": sorted(problem.flags),
            "results": results,
        })
    return {"schema": REPORT_SCHEMA, "config": _config_to_json(config),
            "methods": methods, "rows": out_rows}


def _point_text(kind: str, value) -> str:
    if value is None:
        return ""
    if kind == "real":
        return repr(float(value))
    if kind == "complex":
        return format_complex_literal(complex(value[0], value[1]))
    return ";".join(repr(float(v)) for v in value)


def _render_csv(payload: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["problem", "kind", "method", "status", "iterations",
                     "nfe", "coc", "root", "expected_root"])
    for row in payload["rows"]:
        for name in payload["methods"]:
            cell = row["results"][name]
            if "skipped" in cell:
                writer.writerow([row["problem"], row["kind"], name,
                                 f"skipped ({cell['skipped']})", "", "", "", "",
                                 _point_text(row["kind"], row["expected_root"])])
                continue
            writer.writerow([
                row["problem"], row["kind"], name, cell["status"],
                cell["iterations"], cell["nfe"],
                "" if cell["coc"] is None else repr(cell["coc"]),
                _point_text(row["kind"], cell["root"]),
                _point_text(row["kind"], row["expected_root"]),
            ])
    return buffer.getvalue()


def _short_point(kind: str, value) -> str:
    if value is None:
        return "-"
    if kind == "real":
        return f"{value:.7g}"
    if kind == "complex":
        re_part, im_part = value
        sign = "+" if im_part >= 0 else "-"
        return f"{re_part:.7g}{sign}{abs(im_part):.7g}i"
    return "(" + ", ".join(f"{v:.7g}" for v in value) + ")"


def _render_markdown(payload: dict) -> str:
    lines = []
    config = payload["config"]
    if config is not None:
        lines.append(f"Config: residual_tol={config['residual_tol']:g}, "
                     f"step_tol={config['step_tol']:g}, max_iter={config['max_iter']}, "
                     f"denom_guard={config['denom_guard']:g}, "
                     f"jacobian_init={config['jacobian_init']}, "
                     f"on_singular={config['on_singular']}")
        lines.append("")
    methods = payload["methods"]
    header = ["Problem", "Function", "X0", "X1"]
    for name in methods:
        header += [f"i ({name})", f"COC ({name})", f"NFE ({name})", f"Root ({name})"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in payload["rows"]:
        kind = row["kind"]
        cells = [
            row["problem"],
            "; ".join(row["expressions"]),
            _short_point(kind, row["x0"]),
            _short_point(kind, row["x1"]),
        ]
        for name in methods:
            cell = row["results"][name]
            if "skipped" in cell:
                cells += ["-", "-", "-", f"skipped ({cell['skipped']})"]
                continue
            coc = "-" if cell["coc"] is None else f"{cell['coc']:.5g}"
            if cell["status"] == "converged":
                root = _short_point(kind, cell["root"])
            else:
                root = f"({cell['status']})"
            cells += [str(cell["iterations"]), coc, str(cell["nfe"]), root]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_payload(payload: dict, format: str) -> str:
    if format == "json":
        return json.dumps(payload, indent=2) + "\n"
    if format == "csv":
        return _render_csv(payload)
    if format == "markdown":
        return _render_markdown(payload)
    raise ValueError(f"unknown report format {format!r}; choose from {FORMATS}")


def render_report(rows: Sequence[ComparisonRow], format: str) -> str:
    """Render comparison rows as csv, json or markdown text."""
    return render_payload(payload_from_rows(rows), format)
