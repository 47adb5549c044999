"""Parse and evaluate text expressions over real and complex scalars.

The grammar (documented in docs/grammar.md) covers the usual calculator
surface: ``+ - * /``, right-associative ``^``, unary minus, parentheses and
the unary calls sin, cos, tan, exp, ln, sqrt, abs.  ``pi`` and ``e`` are
constants and ``i`` is the imaginary unit unless declared as a variable.
Implicit multiplication is not supported; write ``2*x``, not ``2x``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}

# Exponents up to this size with integral constant values are evaluated by
# repeated multiplication; larger or fractional exponents go through pow.
MAX_UNROLLED_POWER = 32


class ParseError(Exception):
    """Syntax or name error, carrying the offending position in the source."""

    def __init__(self, message: str, source: str, pos: int):
        super().__init__(f"{message} at position {pos}: {source!r}")
        self.pos = pos


class EvalError(Exception):
    """Domain violation (real mode) or overflow during evaluation."""


# ---------------------------------------------------------------------------
# AST nodes


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class ImaginaryUnit:
    pass


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # only "neg"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # add | sub | mul | div | pow
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"


Expr = Union[Constant, ImaginaryUnit, Variable, Unary, Binary, Call]


# ---------------------------------------------------------------------------
# Tokenizer

_OPERATORS = "+-*/^()"


def _tokenize(source: str):
    """Yield (kind, text, pos) tokens; kinds are num, name, op."""
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPERATORS:
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE" and (
                j + 1 < n and (source[j + 1].isdigit()
                               or (source[j + 1] in "+-" and j + 2 < n and source[j + 2].isdigit()))
            ):
                j += 2
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", source, i) from None
            tokens.append(("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("name", source[i:j], i))
            i = j
            continue
        raise ParseError(f"unknown token {c!r}", source, i)
    return tokens


# ---------------------------------------------------------------------------
# Precedence-climbing parser.  Binding powers: + - (10) < * / (20) <
# unary minus (30) < ^ (40, right-associative).

_BIN_POWER = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_POWER = 30
_OP_NAME = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.source, len(self.source))
        self.pos += 1
        return tok

    def expect(self, text: str):
        tok = self.next()
        if tok[0] != "op" or tok[1] != text:
            raise ParseError(f"expected {text!r}, found {tok[1]!r}", self.source, tok[2])

    def parse(self) -> Expr:
        node = self.expression(0)
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected trailing token {tok[1]!r}", self.source, tok[2])
        return node

    def expression(self, min_power: int) -> Expr:
        left = self.atom()
        while True:
            tok = self.peek()
            if tok is None or tok[0] != "op" or tok[1] not in _BIN_POWER:
                return left
            power = _BIN_POWER[tok[1]]
            if power < min_power:
                return left
            self.next()
            # right-associative ^ re-enters at its own power; the exponent may
            # start with a unary minus (x^-2)
            next_min = power if tok[1] == "^" else power + 1
            right = self.expression(next_min)
            left = Binary(_OP_NAME[tok[1]], left, right)

    def atom(self) -> Expr:
        tok = self.next()
        kind, text, pos = tok
        if kind == "op" and text == "-":
            return Unary("neg", self.expression(_UNARY_POWER))
        if kind == "op" and text == "+":
            return self.expression(_UNARY_POWER)
        if kind == "op" and text == "(":
            node = self.expression(0)
            self.expect(")")
            return node
        if kind == "num":
            return Constant(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return Call(text, arg)
            if text in self.variables:
                return Variable(text)
            if text == "i":
                return ImaginaryUnit()
            if text in CONSTANTS:
                return Constant(CONSTANTS[text])
            raise ParseError(f"unknown identifier {text!r}", self.source, pos)
        raise ParseError(f"unexpected token {text!r}", self.source, pos)


def parse(source: str, variables: Sequence[str] = ()) -> Expr:
    """Parse ``source`` into an AST; names outside ``variables`` must be
    builtin constants or functions."""
    if not source or not source.strip():
        raise ParseError("empty expression", source, 0)
    return _Parser(source, variables).parse()


def free_names(source: str) -> list[str]:
    """Identifiers in ``source`` that are not builtin functions or constants,
    in first-appearance order.  Used by the CLI to infer the variable name."""
    seen: list[str] = []
    for kind, text, _ in _tokenize(source):
        if kind == "name" and text not in FUNCTIONS and text not in CONSTANTS \
                and text != "i" and text not in seen:
            seen.append(text)
    return seen


# ---------------------------------------------------------------------------
# Evaluation

_REAL_CALLS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt, "abs": abs,
}
_COMPLEX_CALLS = {
    "sin": cmath.sin, "cos": cmath.cos, "tan": cmath.tan,
    "exp": cmath.exp, "ln": cmath.log, "sqrt": cmath.sqrt, "abs": abs,
}


def _int_power(base, exponent: int):
    result = base ** 0  # 1.0 or (1+0j), matching the operand type
    for _ in range(exponent):
        result = result * base
    return result


def _eval(node: Expr, bindings: Mapping[str, complex], calls, powfn):
    if isinstance(node, Constant):
        return node.value
    if isinstance(node, Variable):
        return bindings[node.name]
    if isinstance(node, ImaginaryUnit):
        return 1j
    if isinstance(node, Unary):
        return -_eval(node.operand, bindings, calls, powfn)
    if isinstance(node, Call):
        arg = _eval(node.arg, bindings, calls, powfn)
        try:
            return calls[node.name](arg)
        except (ValueError, OverflowError) as err:
            raise EvalError(f"{node.name}: {err}") from err
    if isinstance(node, Binary):
        if node.op == "pow":
            # e^w is exp(w); pow would lose ~|w|*eps of relative accuracy
            if isinstance(node.left, Constant) and node.left.value == math.e:
                arg = _eval(node.right, bindings, calls, powfn)
                try:
                    return calls["exp"](arg)
                except (ValueError, OverflowError) as err:
                    raise EvalError(f"exp: {err}") from err
            left = _eval(node.left, bindings, calls, powfn)
            # exact repeated multiplication for small integer exponents
            if isinstance(node.right, Constant):
                exponent = node.right.value
                if exponent == int(exponent) and 0 <= exponent <= MAX_UNROLLED_POWER:
                    return _int_power(left, int(exponent))
            right = _eval(node.right, bindings, calls, powfn)
            try:
                return powfn(left, right)
            except (ValueError, OverflowError) as err:
                raise EvalError(f"pow: {err}") from err
        left = _eval(node.left, bindings, calls, powfn)
        right = _eval(node.right, bindings, calls, powfn)
        try:
            if node.op == "add":
                return left + right
            if node.op == "sub":
                return left - right
            if node.op == "mul":
                return left * right
            return left / right
        except (ZeroDivisionError, OverflowError) as err:
            raise EvalError(f"{node.op}: {err}") from err
    raise TypeError(f"not an expression node: {node!r}")


def _real_pow(base, exponent):
    result = math.pow(base, exponent)
    return result


def _complex_pow(base, exponent):
    return complex(base) ** complex(exponent)


def eval_real(expr: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate over the reals in IEEE double precision.

    Raises EvalError on domain violations (ln of a negative number, sqrt of a
    negative number, fractional power of a negative base) and on overflow.
    """
    value = _eval(expr, bindings, _REAL_CALLS, _real_pow)
    if isinstance(value, complex):
        raise EvalError("complex value in real evaluation")
    return float(value)


def eval_complex(expr: Expr, bindings: Mapping[str, complex]) -> complex:
    """Evaluate over the complexes; ln, sqrt and pow use principal branches."""
    coerced = {name: complex(value) for name, value in bindings.items()}
    return complex(_eval(expr, coerced, _COMPLEX_CALLS, _complex_pow))


# ---------------------------------------------------------------------------
# Canonical printer (round-trips through parse structurally)

_PRINT_OP = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_NODE_POWER = {"add": 10, "sub": 10, "mul": 20, "div": 20, "pow": 40}


def _print(node: Expr, min_power: int) -> str:
    """Render ``node``, parenthesizing it when its binding power is below
    ``min_power`` (the context's requirement)."""
    if isinstance(node, Constant):
        value = node.value
        if value == int(value) and abs(value) < 1e16:
            return str(int(value))
        return repr(value)
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, ImaginaryUnit):
        return "i"
    if isinstance(node, Call):
        return f"{node.name}({_print(node.arg, 0)})"
    if isinstance(node, Unary):
        text = f"-{_print(node.operand, _UNARY_POWER)}"
        return f"({text})" if _UNARY_POWER < min_power else text
    if isinstance(node, Binary):
        power = _NODE_POWER[node.op]
        if node.op == "pow":  # right-associative
            left, right = _print(node.left, power + 1), _print(node.right, power)
        else:
            left, right = _print(node.left, power), _print(node.right, power + 1)
        text = f"{left}{_PRINT_OP[node.op]}{right}"
        return f"({text})" if power < min_power else text
    raise TypeError(f"not an expression node: {node!r}")


def to_source(expr: Expr) -> str:
    """Render an AST back to parseable text with minimal parentheses."""
    return _print(expr, 0)
