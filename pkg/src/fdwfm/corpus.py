"""Benchmark problem corpus: the built-in problem set, a loader for
user-supplied problem files, and the typed problem record.

Problem files are line-oriented text (see docs/problem-format.md): each
problem is a ``problem <id>`` .. ``end`` block of ``key value`` lines.  The
built-in corpus ships as such a file, so external tools can read the same
data without running any Python.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

import numpy as np

from . import expr as expr_mod
from .complex_scalar import ComplexProblem
from .expr import EvalError, ParseError
from .scalar import Method, ScalarProblem
from .systems import SystemProblem

# Residual allowed at a stored expected root (loose: published roots are
# often given to 6-8 digits).
ROOT_RESIDUAL_TOL = 1e-4

FLAG_NAMES = frozenset({
    "source_sign_typo",            # a sign in the published value is wrong
    "source_uncertain",            # corrupted/garbled source text, best-effort reading
    "source_values_unverifiable",  # published values fail any residual check
})


class FormatError(Exception):
    """Problem file does not follow the block/key-value format."""

    def __init__(self, message: str, path: str = "<string>", line: int = 0):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class ValidationError(Exception):
    """A parsed problem violates a corpus invariant."""


class ProblemKind(enum.Enum):
    REAL_SCALAR = "real"
    COMPLEX_SCALAR = "complex"
    SYSTEM = "system"


@dataclass(frozen=True)
class RefMetrics:
    """Iteration count, convergence-order estimate and evaluation count
    reported by the corpus source for one method."""

    iterations: int
    coc: Optional[float] = None
    nfe: Optional[int] = None


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark problem: expressions, starting points, expected root,
    reference metrics and data-quality flags."""

    id: str
    kind: ProblemKind
    expressions: tuple
    variables: tuple
    x0: object
    x1: object = None
    expected_root: object = None
    derivative: Optional[str] = None
    jacobian: Optional[tuple] = None  # n rows of n expression strings
    reference_metrics: dict = field(default_factory=dict)
    flags: frozenset = frozenset()
    note: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def is_scalar(self) -> bool:
        return self.kind in (ProblemKind.REAL_SCALAR, ProblemKind.COMPLEX_SCALAR)

    # -- callables ---------------------------------------------------------

    def _asts(self):
        return [expr_mod.parse(src, self.variables) for src in self.expressions]

    def scalar_callables(self):
        """(f, df) closures for a real scalar problem; df is None when the
        corpus carries no derivative expression."""
        tree = self._asts()[0]
        name = self.variables[0]
        f = lambda x: expr_mod.eval_real(tree, {name: x})
        df = None
        if self.derivative is not None:
            dtree = expr_mod.parse(self.derivative, self.variables)
            df = lambda x: expr_mod.eval_real(dtree, {name: x})
        return f, df

    def complex_callables(self):
        tree = self._asts()[0]
        name = self.variables[0]
        f = lambda z: expr_mod.eval_complex(tree, {name: z})
        df = None
        if self.derivative is not None:
            dtree = expr_mod.parse(self.derivative, self.variables)
            df = lambda z: expr_mod.eval_complex(dtree, {name: z})
        return f, df

    def system_callables(self):
        """(F, J) closures mapping numpy vectors; J is None without a stored
        Jacobian."""
        trees = self._asts()
        names = self.variables

        def F(v):
            bindings = dict(zip(names, v))
            return np.array([expr_mod.eval_real(t, bindings) for t in trees])

        J = None
        if self.jacobian is not None:
            jtrees = [[expr_mod.parse(src, names) for src in row] for row in self.jacobian]

            def J(v):
                bindings = dict(zip(names, v))
                return np.array([[expr_mod.eval_real(t, bindings) for t in row]
                                 for row in jtrees])

        return F, J

    def make_problem(self):
        """Fresh solver-facing problem object for one run."""
        if self.kind is ProblemKind.REAL_SCALAR:
            f, df = self.scalar_callables()
            return ScalarProblem(f=f, x0=self.x0, x1=self.x1, df=df)
        if self.kind is ProblemKind.COMPLEX_SCALAR:
            f, df = self.complex_callables()
            return ComplexProblem(f=f, z0=self.x0, z1=self.x1, df=df)
        F, J = self.system_callables()
        return SystemProblem(F=F, x0=np.asarray(self.x0, dtype=float), jacobian=J)

    def residual_at(self, point) -> float:
        """Euclidean residual of the problem's equations at ``point``."""
        if self.kind is ProblemKind.REAL_SCALAR:
            f, _ = self.scalar_callables()
            return abs(f(float(point)))
        if self.kind is ProblemKind.COMPLEX_SCALAR:
            f, _ = self.complex_callables()
            return abs(f(complex(point)))
        F, _ = self.system_callables()
        return float(np.linalg.norm(F(np.asarray(point, dtype=float))))


# ---------------------------------------------------------------------------
# Point literals (shared with the CLI)


def parse_complex_literal(text: str) -> complex:
    """Parse ``a+bi`` (also ``a``, ``bi``, ``i``, ``-i``); no spaces."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty complex literal")
    if not s.endswith("i"):
        return complex(float(s), 0.0)
    body = s[:-1]
    re_part, im_part = "", body
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            re_part, im_part = body[:k], body[k:]
            break
    if im_part in ("", "+"):
        imag = 1.0
    elif im_part == "-":
        imag = -1.0
    else:
        imag = float(im_part)
    real = float(re_part) if re_part else 0.0
    return complex(real, imag)


def format_complex_literal(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def _parse_point(kind: ProblemKind, text: str, what: str, n: int):
    parts = text.split()
    try:
        if kind is ProblemKind.REAL_SCALAR:
            if len(parts) != 1:
                raise ValueError("expected one number")
            return float(parts[0])
        if kind is ProblemKind.COMPLEX_SCALAR:
            if len(parts) != 1:
                raise ValueError("expected one complex literal")
            return parse_complex_literal(parts[0])
        values = tuple(float(p) for p in parts)
    except ValueError as err:
        raise ValidationError(f"{what}: {err}") from None
    if len(values) != n:
        raise ValidationError(f"{what} has {len(values)} components, expected {n}")
    return values


# ---------------------------------------------------------------------------
# File loader

_SINGLE_KEYS = ("kind", "vars", "x0", "x1", "root", "deriv", "flags", "note")
_MULTI_KEYS = ("eq", "jac", "ref")
_METHOD_NAMES = {m.value for m in Method}


def _parse_blocks(text: str, path: str):
    """Split file text into (id, {key: value(s)}, line) raw blocks."""
    blocks = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if key == "problem":
            if current is not None:
                raise FormatError("'problem' before previous block ended", path, lineno)
            if not value:
                raise FormatError("'problem' needs an id", path, lineno)
            current = (value, {}, lineno)
            continue
        if current is None:
            raise FormatError(f"{key!r} outside a problem block", path, lineno)
        if key == "end":
            blocks.append(current)
            current = None
            continue
        _, fields, _ = current
        if key in _MULTI_KEYS:
            fields.setdefault(key, []).append((value, lineno))
        elif key in _SINGLE_KEYS:
            if key in fields:
                raise FormatError(f"duplicate key {key!r}", path, lineno)
            if not value:
                raise FormatError(f"{key!r} needs a value", path, lineno)
            fields[key] = (value, lineno)
        else:
            raise FormatError(f"unknown key {key!r}", path, lineno)
    if current is not None:
        raise FormatError(f"problem {current[0]!r} has no 'end'", path, current[2])
    return blocks


def _build_problem(pid: str, fields: dict, path: str, first_line: int) -> ProblemSpec:
    def take(key, default=None):
        return fields[key][0] if key in fields else default

    kind_text = take("kind")
    if kind_text is None:
        raise FormatError(f"problem {pid!r} has no 'kind'", path, first_line)
    try:
        kind = ProblemKind(kind_text)
    except ValueError:
        raise FormatError(f"unknown kind {kind_text!r}", path, fields["kind"][1]) from None

    variables = tuple(take("vars", "").split())
    if not variables:
        raise FormatError(f"problem {pid!r} has no 'vars'", path, first_line)
    expressions = tuple(v for v, _ in fields.get("eq", []))
    if not expressions:
        raise FormatError(f"problem {pid!r} has no 'eq'", path, first_line)

    jacobian = None
    if "jac" in fields:
        jacobian = tuple(tuple(cell.strip() for cell in v.split(";")) for v, _ in fields["jac"])

    flags = frozenset(take("flags", "").split())

    refs = {}
    for value, lineno in fields.get("ref", []):
        parts = value.split()
        if len(parts) not in (3, 4):
            raise FormatError("ref needs: method iterations coc [nfe]", path, lineno)
        method, iters, coc = parts[0], parts[1], parts[2]
        if method not in _METHOD_NAMES:
            raise FormatError(f"unknown method {method!r} in ref", path, lineno)
        try:
            refs[method] = RefMetrics(
                iterations=int(iters),
                coc=None if coc == "nd" else float(coc),
                nfe=int(parts[3]) if len(parts) == 4 else None,
            )
        except ValueError as err:
            raise FormatError(f"bad ref numbers: {err}", path, lineno) from None

    n = len(variables)
    x0_text = take("x0")
    if x0_text is None:
        raise FormatError(f"problem {pid!r} has no 'x0'", path, first_line)
    x0 = _parse_point(kind, x0_text, f"{pid}: x0", n)
    x1 = _parse_point(kind, take("x1"), f"{pid}: x1", n) if "x1" in fields else None
    root = _parse_point(kind, take("root"), f"{pid}: root", n) if "root" in fields else None

    spec = ProblemSpec(
        id=pid, kind=kind, expressions=expressions, variables=variables,
        x0=x0, x1=x1, expected_root=root,
        derivative=take("deriv"), jacobian=jacobian,
        reference_metrics=refs, flags=flags, note=take("note"),
    )
    validate_problem(spec)
    return spec


def validate_problem(spec: ProblemSpec) -> None:
    """Enforce corpus invariants; raises ValidationError naming the breach."""
    pid = spec.id
    if spec.is_scalar:
        if len(spec.variables) != 1:
            raise ValidationError(f"{pid}: scalar problems take exactly one variable")
        if len(spec.expressions) != 1:
            raise ValidationError(f"{pid}: scalar problems take exactly one expression")
        if spec.jacobian is not None:
            raise ValidationError(f"{pid}: 'jac' only applies to systems")
    else:
        if len(spec.expressions) != spec.n:
            raise ValidationError(
                f"{pid}: {len(spec.expressions)} expressions for {spec.n} variables")
        if spec.x1 is not None:
            raise ValidationError(f"{pid}: 'x1' only applies to scalar problems")
        if spec.derivative is not None:
            raise ValidationError(f"{pid}: 'deriv' only applies to scalar problems")
        if spec.jacobian is not None:
            if len(spec.jacobian) != spec.n or any(len(r) != spec.n for r in spec.jacobian):
                raise ValidationError(f"{pid}: Jacobian must be {spec.n}x{spec.n}")
    if spec.x1 is not None and spec.x0 == spec.x1:
        raise ValidationError(f"{pid}: x0 and x1 must be distinct")
    unknown = spec.flags - FLAG_NAMES
    if unknown:
        raise ValidationError(f"{pid}: unknown flags {sorted(unknown)}")

    sources = list(spec.expressions)
    if spec.derivative is not None:
        sources.append(spec.derivative)
    if spec.jacobian is not None:
        sources.extend(cell for row in spec.jacobian for cell in row)
    for src in sources:
        try:
            expr_mod.parse(src, spec.variables)
        except ParseError as err:
            raise ValidationError(f"{pid}: expression does not parse: {err}") from None

    if spec.expected_root is not None and "source_values_unverifiable" not in spec.flags:
        try:
            residual = spec.residual_at(spec.expected_root)
        except EvalError as err:
            raise ValidationError(f"{pid}: expected_root not evaluable: {err}") from None
        if not (residual <= ROOT_RESIDUAL_TOL):
            raise ValidationError(
                f"{pid}: residual {residual:.3e} at expected_root exceeds "
                f"{ROOT_RESIDUAL_TOL:g} (flag source_values_unverifiable to skip)")


def load_problems(path) -> list:
    """Parse and validate a problem file; returns a list of ProblemSpec."""
    path = str(path)
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return load_problems_text(text, path)


def load_problems_text(text: str, path: str = "<string>") -> list:
    problems = []
    seen = set()
    for pid, fields, first_line in _parse_blocks(text, path):
        if pid in seen:
            raise ValidationError(f"duplicate problem id {pid!r}")
        seen.add(pid)
        problems.append(_build_problem(pid, fields, path, first_line))
    return problems


@lru_cache(maxsize=1)
def _builtin() -> tuple:
    text = resources.files("fdwfm").joinpath("data/builtin.problems").read_text("utf-8")
    return tuple(load_problems_text(text, "builtin.problems"))


def builtin_corpus() -> list:
    """The built-in benchmark problems (tables 1-7), freshly listed."""
    return list(_builtin())


def corpus_table(number: int) -> list:
    """Problems of one corpus table (1-7)."""
    prefix = f"table{number}/"
    return [p for p in _builtin() if p.id.startswith(prefix)]
