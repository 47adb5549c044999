"""Command-line front end.

Subcommands:
  solve   solve one problem given inline expressions
  bench   run the benchmark corpus (or a problem file) and emit a report
  report  re-render a saved JSON report as csv/markdown/json

Everything except the report body goes to stderr; the report body goes to
stdout or the --out file, so output can be piped.  Exit codes: solve 0 on
convergence, 2 on non-convergence, 1 on usage errors; bench 0 even when
individual problems fail (3 with --strict when any row fails), 1 on I/O or
usage errors.  Full flag reference in docs/cli.md.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .complex_scalar import ComplexProblem, solve_complex
from .core import JacobianInit, SolverConfig, Status
from .corpus import (
    ProblemKind,
    ValidationError,
    FormatError,
    builtin_corpus,
    corpus_table,
    format_complex_literal,
    load_problems,
    parse_complex_literal,
)
from .expr import EvalError, ParseError, eval_complex, eval_real, free_names, parse
from .report import FORMATS, payload_from_rows, render_payload, run_comparison
from .scalar import Method, ScalarProblem, solve_scalar
from .systems import SystemProblem, solve_system


class UsageError(Exception):
    pass


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=None,
                        help="residual tolerance (default 1e-10)")
    parser.add_argument("--step-tol", type=float, default=None,
                        help="step-size tolerance (default 1e-12)")
    parser.add_argument("--max-iter", type=int, default=None,
                        help="iteration cap (default 100)")
    parser.add_argument("--a0", choices=["fd", "identity"], default=None,
                        help="initial matrix for quasi-Newton system methods")
    parser.add_argument("--count-formal", action="store_true",
                        help="count every function call (disable the memo)")
    parser.add_argument("--fallback-to-secant", action="store_true",
                        help="recover from degenerate correction steps")
    parser.add_argument("--literal-step1", action="store_true",
                        help="use the literal (non-convergent) first step of the "
                             "system predictor-corrector; for comparison only")


def _config_from_args(args) -> SolverConfig:
    kwargs = {}
    if args.tol is not None:
        kwargs["residual_tol"] = args.tol
    if args.step_tol is not None:
        kwargs["step_tol"] = args.step_tol
    if args.max_iter is not None:
        kwargs["max_iter"] = args.max_iter
    if args.a0 is not None:
        kwargs["jacobian_init"] = JacobianInit(args.a0)
    kwargs["count_formal"] = args.count_formal
    kwargs["fallback_to_secant"] = args.fallback_to_secant
    kwargs["literal_step1"] = args.literal_step1
    try:
        return SolverConfig(**kwargs)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _parse_method(text: str) -> Method:
    try:
        return Method(text.lower())
    except ValueError:
        names = ", ".join(m.value for m in Method)
        raise UsageError(f"unknown method {text!r} (choose from: {names})") from None


# ---------------------------------------------------------------------------
# solve


def _infer_variable(expressions, declared):
    if declared:
        return declared
    names = []
    for src in expressions:
        for name in free_names(src):
            if name not in names:
                names.append(name)
    return names


def _scalar_value(text: str, want_complex: bool):
    try:
        if want_complex:
            return parse_complex_literal(text)
        return float(text)
    except ValueError as err:
        raise UsageError(f"bad starting point {text!r}: {err}") from None


def _format_root(root) -> str:
    if isinstance(root, complex):
        return format_complex_literal(root)
    if isinstance(root, np.ndarray):
        return "(" + ", ".join(repr(float(v)) for v in root) + ")"
    return repr(root)


def cmd_solve(args) -> int:
    method = _parse_method(args.method)
    config = _config_from_args(args)
    expressions = args.expr
    if not expressions:
        raise UsageError("--expr is required")
    variables = _infer_variable(expressions, args.vars.split(",") if args.vars else [])
    if not variables:
        raise UsageError("the expression has no variable; declare one with --vars")

    is_system = len(expressions) > 1
    if is_system and args.complex:
        raise UsageError("--complex applies to single-equation problems only")
    if not is_system and len(variables) != 1:
        raise UsageError(f"one equation but {len(variables)} variables: {variables}")
    if is_system and len(expressions) != len(variables):
        raise UsageError(f"{len(expressions)} equations need exactly "
                         f"{len(expressions)} variables, got {len(variables)}")

    try:
        trees = [parse(src, variables) for src in expressions]
    except ParseError as err:
        raise UsageError(f"expression error: {err}") from None

    if is_system:
        report = _solve_system_args(args, method, config, expressions, variables)
    elif args.complex:
        report = _solve_complex_args(args, method, config, trees[0], variables[0])
    else:
        report = _solve_real_args(args, method, config, trees[0], variables[0])

    print(f"root: {_format_root(report.root)}")
    print(f"status: {report.status.value}")
    print(f"iterations: {report.iterations}")
    print(f"nfe: {report.nfe}")
    print(f"coc: {'not defined' if report.coc is None else repr(report.coc)}")
    if args.trace:
        print("trace:")
        for k, (point, residual, nfe) in enumerate(zip(
                report.trace.iterates, report.trace.residual_norms,
                report.trace.nfe_at_step)):
            marker = "seed" if k < report.trace.seed_count else f"it{k - report.trace.seed_count}"
            print(f"  {marker:>6s} x={_format_root(point)} residual={residual!r} nfe={nfe}")
    return 0 if report.status is Status.CONVERGED else 2


def _solve_real_args(args, method, config, tree, var):
    if args.x0 is None:
        raise UsageError("--x0 is required")
    x0 = _scalar_value(args.x0, False)
    x1 = _scalar_value(args.x1, False) if args.x1 is not None else None
    df = None
    if args.derivative:
        try:
            dtree = parse(args.derivative, [var])
        except ParseError as err:
            raise UsageError(f"derivative error: {err}") from None
        df = lambda x: eval_real(dtree, {var: x})
    if method in (Method.NEWTON, Method.WFM) and df is None:
        raise UsageError(f"method {method.value} requires --derivative")
    if method in (Method.SECANT, Method.FDWFM) and x1 is None:
        raise UsageError(f"method {method.value} requires --x1")
    if method is Method.BROYDEN:
        raise UsageError("broyden applies to systems; use fdwfm or secant for scalars")
    f = lambda x: eval_real(tree, {var: x})
    try:
        problem = ScalarProblem(f=f, x0=x0, x1=x1, df=df)
    except ValueError as err:
        raise UsageError(str(err)) from None
    return solve_scalar(problem, method, config)


def _solve_complex_args(args, method, config, tree, var):
    if args.x0 is None:
        raise UsageError("--x0 is required")
    z0 = _scalar_value(args.x0, True)
    z1 = _scalar_value(args.x1, True) if args.x1 is not None else None
    df = None
    if args.derivative:
        try:
            dtree = parse(args.derivative, [var])
        except ParseError as err:
            raise UsageError(f"derivative error: {err}") from None
        df = lambda z: eval_complex(dtree, {var: z})
    if method in (Method.NEWTON, Method.WFM) and df is None:
        raise UsageError(f"method {method.value} requires --derivative")
    if method in (Method.SECANT, Method.FDWFM) and z1 is None:
        raise UsageError(f"method {method.value} requires --x1")
    if method is Method.BROYDEN:
        raise UsageError("broyden applies to systems")
    f = lambda z: eval_complex(tree, {var: z})
    try:
        problem = ComplexProblem(f=f, z0=z0, z1=z1, df=df)
    except ValueError as err:
        raise UsageError(str(err)) from None
    return solve_complex(problem, method, config)


def _solve_system_args(args, method, config, expressions, variables):
    if method in (Method.SECANT,):
        raise UsageError("secant applies to one-dimensional problems; use broyden")
    if args.x0 is None:
        raise UsageError("--x0 is required")
    try:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    except ValueError as err:
        raise UsageError(f"bad --x0: {err}") from None
    if x0.size != len(variables):
        raise UsageError(f"--x0 has {x0.size} components, expected {len(variables)}")

    trees = [parse(src, variables) for src in expressions]

    def F(v):
        bindings = dict(zip(variables, v))
        return np.array([eval_real(t, bindings) for t in trees])

    J = None
    if args.jacobian:
        rows = [cell.split(",") for cell in args.jacobian.split(";")]
        n = len(variables)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise UsageError(f"--jacobian must give {n} rows of {n} comma-separated entries")
        try:
            jtrees = [[parse(cell.strip(), variables) for cell in row] for row in rows]
        except ParseError as err:
            raise UsageError(f"jacobian error: {err}") from None

        def J(v):
            bindings = dict(zip(variables, v))
            return np.array([[eval_real(t, bindings) for t in row] for row in jtrees])

    if method in (Method.NEWTON, Method.WFM) and J is None:
        raise UsageError(f"method {method.value} requires --jacobian")
    problem = SystemProblem(F=F, x0=x0, jacobian=J)
    return solve_system(problem, method, config)


# ---------------------------------------------------------------------------
# bench / report


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args) -> int:
    config = _config_from_args(args)
    if args.problems and args.tables:
        raise UsageError("--tables and --problems are mutually exclusive")
    if args.problems:
        problems = load_problems(args.problems)
    elif args.tables:
        problems = []
        for token in args.tables.split(","):
            token = token.strip()
            if token == "all":
                problems = builtin_corpus()
                break
            try:
                number = int(token)
            except ValueError:
                raise UsageError(f"bad table number {token!r}") from None
            selected = corpus_table(number)
            if not selected:
                raise UsageError(f"no corpus table {number} (tables run 1-7)")
            problems.extend(selected)
    else:
        problems = builtin_corpus()

    methods = [_parse_method(tok) for tok in args.methods.split(",") if tok.strip()]
    if not methods:
        raise UsageError("--methods must name at least one method")

    jobs = args.jobs
    if jobs is None:
        jobs = int(os.environ.get("FDWFM_JOBS", 0)) or (os.cpu_count() or 1)

    _log(f"running {len(problems)} problems x {len(methods)} methods (jobs={jobs})")
    rows = run_comparison(problems, methods, config, jobs=jobs)
    _emit(render_payload(payload_from_rows(rows), args.format), args.out)

    failed = [
        (row.problem.id, name)
        for row in rows
        for name, result in row.results.items()
        if result.report is not None and result.report.status is not Status.CONVERGED
    ]
    if failed:
        _log(f"{len(failed)} non-converged runs: " +
             ", ".join(f"{pid}/{name}" for pid, name in failed[:8]) +
             (" ..." if len(failed) > 8 else ""))
    if args.strict and failed:
        return 3
    return 0


def cmd_report(args) -> int:
    with open(args.input, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema") != "fdwfm-report/1":
        raise UsageError(f"unrecognized report schema {payload.get('schema')!r}")
    _emit(render_payload(payload, args.format), args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdwfm",
        description="Derivative-free nonlinear root finding and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one problem from expressions")
    p_solve.add_argument("--method", required=True,
                         help="secant | newton | wfm | fdwfm | broyden")
    p_solve.add_argument("--expr", action="append", default=[],
                         help="equation text; repeat for systems")
    p_solve.add_argument("--vars", default=None,
                         help="comma-separated variable names (inferred when omitted)")
    p_solve.add_argument("--complex", action="store_true",
                         help="solve over the complex numbers")
    p_solve.add_argument("--x0", default=None, help="first starting point")
    p_solve.add_argument("--x1", default=None,
                         help="second starting point (secant/fdwfm)")
    p_solve.add_argument("--derivative", default=None,
                         help="derivative expression (newton/wfm, scalar)")
    p_solve.add_argument("--jacobian", default=None,
                         help="Jacobian rows 'a,b;c,d' (newton/wfm, systems)")
    p_solve.add_argument("--trace", action="store_true", help="print the full trace")
    _add_config_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run benchmark problems, emit a report")
    p_bench.add_argument("--tables", default=None,
                         help="comma-separated corpus tables (1-7) or 'all'")
    p_bench.add_argument("--problems", default=None, help="problem file path")
    p_bench.add_argument("--methods", default="secant,newton,wfm,fdwfm,broyden",
                         help="comma-separated method list")
    p_bench.add_argument("--format", default="markdown", choices=list(FORMATS))
    p_bench.add_argument("--out", default=None, help="write the report here")
    p_bench.add_argument("--strict", action="store_true",
                         help="exit 3 when any run fails to converge")
    p_bench.add_argument("--jobs", type=int, default=None,
                         help="parallel problems (default: FDWFM_JOBS or CPU count)")
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_report = sub.add_parser("report", help="re-render a saved JSON report")
    p_report.add_argument("--in", dest="input", required=True, help="JSON report path")
    p_report.add_argument("--format", default="markdown", choices=list(FORMATS))
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_err:
        return 1 if exit_err.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as err:
        _log(f"error: {err}")
        return 1
    except (ParseError, FormatError, ValidationError) as err:
        _log(f"error: {err}")
        return 1
    except OSError as err:
        _log(f"i/o error: {err}")
        return 1


def console_main() -> None:
    sys.exit(main())
